"""Command-line interface: ``spt-sim <command> [options]``.

Every command writes one artifact (CSV or JSON) plus ``<output>.manifest.json``
holding the full configuration, the package version and the wall time.
Output ``-`` writes the artifact to stdout without a manifest.

Exit status: 0 success, 1 invalid input, 2 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .analytic import (
    Phase,
    classify_phase,
    ground_state_np,
    ground_state_sp,
    serializable,
    zpf_formulas,
    ZPF_VARIANTS,
)
from .errors import NumericError, SptError, ValidationError
from .groundstate import AdiabaticSchedule, adiabatic_prepare, hs_ground_state, measured_order_parameter
from .linalg import QuantumState
from .model import PARAM_FIELDS, ModelParams, param_diagnostics, squeezed_frame
from .noise import NoiseParams, apply_all_qubits
from .observables import entanglement_entropy, wigner, zpf
from .sweep import AxisSpec, MPolicy, fit_scaling_exponent, run_sweep, worker_count

COMMANDS = ("phase", "ground-state", "adiabatic", "zpf", "wigner", "sweep", "scaling", "noise-study")
FORMATS = ("csv", "json")
CONFIG_KEYS = ("command", "params", "options", "output", "format")

WIGNER_STATES = ("auto", "ground_s", "np", "plus", "minus", "cat_even", "cat_odd")


# ------------------------------------------------------------------ option parsing

def _float_list(v) -> list[float]:
    if isinstance(v, str):
        v = [s for s in v.split(",") if s.strip()]
    return [float(x) for x in v]


def _range(v) -> tuple[float, float]:
    lo, hi = _float_list(v)
    if not hi > lo:
        raise ValueError("range upper bound must exceed the lower bound")
    return lo, hi


def _axis(v) -> AxisSpec:
    """``name:start:stop:num`` or ``name=v1,v2,...``."""
    if isinstance(v, dict):
        return AxisSpec(v["name"], tuple(v["values"]))
    if "=" in v:
        name, vals = v.split("=", 1)
        return AxisSpec(name.strip(), tuple(_float_list(vals)))
    name, start, stop, num = v.split(":")
    return AxisSpec.linspace(name.strip(), float(start), float(stop), int(num))


def _policy(v) -> MPolicy:
    """``fixed:M`` or ``scaled:M_MIN:FACTOR``."""
    if isinstance(v, dict):
        return MPolicy(**v)
    parts = v.split(":")
    if parts[0] == "fixed" and len(parts) == 2:
        return MPolicy.fixed(int(parts[1]))
    if parts[0] == "scaled" and len(parts) == 3:
        return MPolicy(kind="scaled", m_min=int(parts[1]), factor=float(parts[2]))
    raise ValueError("expected fixed:M or scaled:M_MIN:FACTOR")


def _choice(options):
    def conv(v):
        if v not in options:
            raise ValueError(f"expected one of {options}")
        return v
    return conv


def _pos_int(v) -> int:
    if isinstance(v, bool) or float(v) != int(float(v)) or int(float(v)) < 1:
        raise ValueError("expected a positive integer")
    return int(float(v))


def _nonneg_float(v) -> float:
    x = float(v)
    if not math.isfinite(x) or x < 0:
        raise ValueError("expected a finite number >= 0")
    return x


def _bool(v) -> bool:
    if isinstance(v, bool):
        return v
    if str(v).lower() in ("1", "true", "yes"):
        return True
    if str(v).lower() in ("0", "false", "no"):
        return False
    raise ValueError("expected a boolean")


def _order(v) -> list[str]:
    if isinstance(v, str):
        v = v.split(",")
    return [_choice(("pd", "gad"))(s.strip()) for s in v]


# option name -> (converter, default, help)
OPTIONS: dict[str, dict[str, tuple]] = {
    "phase": {},
    "ground-state": {},
    "zpf": {},
    "adiabatic": {
        "steps": (_pos_int, 200, "number of ramp steps L"),
        "dt": (_nonneg_float, 0.5, "step duration in units of 1/omega"),
        "ramp": (_choice(("linear", "smoothstep")), "linear", "ramp shape"),
    },
    "wigner": {
        "state": (_choice(WIGNER_STATES), "auto", "which state to transform"),
        "x_range": (_range, None, "x axis bounds LO,HI"),
        "p_range": (_range, None, "p axis bounds LO,HI"),
        "points": (_pos_int, 101, "grid points per axis"),
        "method": (_choice(("weyl", "displaced")), "weyl", "evaluation route"),
    },
    "sweep": {
        "axis1": (_axis, None, "first axis, name:start:stop:num or name=v1,v2"),
        "axis2": (_axis, None, "second axis (default: the template ratio)"),
        "m_policy": (_policy, "scaled:32:8", "fixed:M or scaled:M_MIN:FACTOR"),
        "analytic_only": (_bool, False, "skip exact diagonalisation"),
    },
    "scaling": {
        "ratios": (_float_list, "10,20,50,100,200", "comma-separated Omega/omega values"),
        "m_policy": (_policy, "scaled:32:8", "fixed:M or scaled:M_MIN:FACTOR"),
    },
    "noise-study": {
        "t1": (_float_list, None, "T1 per qubit (qubit 1 = spin), or one value for all"),
        "t2": (_float_list, None, "T2 per qubit"),
        "dt": (_nonneg_float, None, "exposure time"),
        "p_gad": (float, 0.5, "GAD excited-population parameter"),
        "order": (_order, "pd,gad", "channel order per qubit"),
    },
}

REQUIRED_OPTIONS = {"sweep": ("axis1",), "noise-study": ("t1", "t2", "dt")}


@dataclass
class Diagnostic:
    level: str          # "error" or "warning"
    message: str

    def __str__(self):
        return f"{self.level}: {self.message}"


@dataclass
class RunConfig:
    command: str
    params: ModelParams
    options: dict = field(default_factory=dict)
    output: str = "-"
    format: str = "json"

    def to_dict(self) -> dict:
        opts = {}
        for k, v in self.options.items():
            if isinstance(v, AxisSpec):
                v = {"name": v.name, "values": list(v.values)}
            elif isinstance(v, MPolicy):
                v = v.describe()
            elif isinstance(v, tuple):
                v = list(v)
            opts[k] = v
        return {"command": self.command, "params": self.params.to_dict(), "options": opts,
                "output": self.output, "format": self.format}


def validate(config: dict) -> list[Diagnostic]:
    """Every problem with a raw configuration mapping, errors and warnings together."""
    out: list[Diagnostic] = []
    if not isinstance(config, dict):
        return [Diagnostic("error", "configuration must be a JSON object")]
    for key in config:
        if key not in CONFIG_KEYS:
            out.append(Diagnostic("error", f"{key}: unknown configuration field"))
    for key in ("command", "params", "output"):
        if key not in config:
            out.append(Diagnostic("error", f"{key}: required field missing"))
    cmd = config.get("command")
    if cmd is not None and cmd not in COMMANDS:
        out.append(Diagnostic("error", f"command: must be one of {COMMANDS}, got {cmd!r}"))
    fmt = config.get("format", "json")
    if fmt not in FORMATS:
        out.append(Diagnostic("error", f"format: must be one of {FORMATS}, got {fmt!r}"))
    out_path = config.get("output")
    if out_path is not None and out_path != "-":
        parent = os.path.dirname(os.path.abspath(str(out_path)))
        if not os.path.isdir(parent) or not os.access(parent, os.W_OK):
            out.append(Diagnostic("error", f"output: directory {parent} is not writable"))
    params = config.get("params", {})
    if not isinstance(params, dict):
        out.append(Diagnostic("error", "params: must be an object"))
        params = {}
    problems = param_diagnostics(params)
    out.extend(Diagnostic("error", f"params.{msg}") for msg in problems)
    if not problems:
        p = ModelParams(**params)
        # scaling and sweep replace the template coupling, so its phase is irrelevant
        if p.stiffness <= 0 and cmd not in ("scaling", "sweep"):
            out.append(Diagnostic("warning", "parameter point is UNSTABLE (UP)"))
    options = config.get("options", {}) or {}
    if not isinstance(options, dict):
        out.append(Diagnostic("error", "options: must be an object"))
        options = {}
    if cmd in OPTIONS:
        table = OPTIONS[cmd]
        for k, v in options.items():
            if k not in table:
                out.append(Diagnostic("error", f"options.{k}: not an option of {cmd!r}"))
                continue
            if v is None:
                continue
            try:
                table[k][0](v)
            except (ValueError, TypeError, KeyError, ValidationError) as exc:
                out.append(Diagnostic("error", f"options.{k}: {exc}"))
        for k in REQUIRED_OPTIONS.get(cmd, ()):
            if options.get(k) is None and table[k][1] is None:
                out.append(Diagnostic("error", f"options.{k}: required for {cmd!r}"))
    return out


def build_config(raw: dict) -> RunConfig:
    diags = [d for d in validate(raw) if d.level == "error"]
    if diags:
        raise ValidationError("; ".join(d.message for d in diags))
    table = OPTIONS[raw["command"]]
    opts = {}
    given = raw.get("options", {}) or {}
    for name, (conv, default, _) in table.items():
        v = given.get(name)
        if v is None:
            v = default
        opts[name] = conv(v) if v is not None else None
    return RunConfig(raw["command"], ModelParams(**raw["params"]), opts,
                     raw["output"], raw.get("format", "json"))


# ------------------------------------------------------------------ commands
# each returns a (csv_rows, json_obj) pair; rows[0] is the header

def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    return serializable(obj)


def _single_row(obj: dict):
    keys = list(obj)
    return [keys, [obj[k] for k in keys]]


def cmd_phase(cfg: RunConfig):
    rep = classify_phase(cfg.params).to_dict()
    return _single_row(rep), rep


def _require_stable(p: ModelParams):
    if not squeezed_frame(p).stable:
        raise ValidationError("parameter point is UNSTABLE (UP); no ground state exists")


def cmd_ground_state(cfg: RunConfig):
    p = cfg.params
    _require_stable(p)
    fr = squeezed_frame(p)
    gs = hs_ground_state(p)
    rep = classify_phase(p)
    out = {
        "energy": gs.energy / p.omega,
        "gap": gs.gap / p.omega,
        "near_degenerate": gs.near_degenerate,
        "phi_numeric": measured_order_parameter(p, gs.state),
        "phi_analytic": rep.phi,
        "entropy_bits": entanglement_entropy(gs.state),
        "zpf": math.exp(-fr.r_tilde) * zpf(gs.state),
        "phase_analytic": rep.phase.value,
        "boson_dim": p.boson_dim,
    }
    out = _jsonable(out)
    return _single_row(out), out


def cmd_zpf(cfg: RunConfig):
    p = cfg.params
    _require_stable(p)
    fr = squeezed_frame(p)
    gs = hs_ground_state(p)
    # S^dag x S = exp(-r) x, so the original-frame ZPF is a rescaling
    out = {"zpf_numeric": math.exp(-fr.r_tilde) * zpf(gs.state)}
    for variant in ZPF_VARIANTS:
        try:
            out[f"zpf_{variant}"] = zpf_formulas(p, variant)
        except SptError:
            out[f"zpf_{variant}"] = None
    out = _jsonable(out)
    return _single_row(out), out


def cmd_adiabatic(cfg: RunConfig):
    o = cfg.options
    res = adiabatic_prepare(cfg.params, AdiabaticSchedule(o["steps"], o["dt"], o["ramp"]))
    rows = [["l", "s", "energy", "fidelity"]]
    rows += [[l, float(s), float(e), float(f)] for l, (s, e, f) in
             enumerate(zip(res.s_values, res.energy_trace, res.fidelity_trace))]
    obj = {"final_fidelity": res.final_fidelity, "meta": res.meta,
           "trace": [dict(zip(rows[0], r)) for r in rows[1:]]}
    return rows, _jsonable(obj)


def _wigner_state(p: ModelParams, which: str) -> tuple[QuantumState, str]:
    _require_stable(p)
    rep = classify_phase(p)
    if which == "auto":
        which = "np" if rep.phase is Phase.NP else "cat_even"
    if which == "ground_s":
        return hs_ground_state(p).state, "squeezed"
    if which == "np":
        return ground_state_np(p), "original"
    branch = {"plus": "+", "minus": "-"}.get(which, which)
    return ground_state_sp(p, branch=branch), "original"


def cmd_wigner(cfg: RunConfig):
    o = cfg.options
    state, frame = _wigner_state(cfg.params, o["state"])
    xs = np.linspace(*o["x_range"], o["points"]) if o["x_range"] else None
    ps = np.linspace(*o["p_range"], o["points"]) if o["p_range"] else None
    grid = wigner(state, xs, ps, points=o["points"], method=o["method"])
    meta = {**grid.meta, "frame": frame, "normalization": grid.normalization()}
    rows = [["x", "p", "W"]]
    for i, x in enumerate(grid.x_axis):
        for j, pv in enumerate(grid.p_axis):
            rows.append([float(x), float(pv), float(grid.values[i, j])])
    obj = json.loads(grid.to_json())
    obj["meta"] = _jsonable(meta)
    return rows, obj


def cmd_sweep(cfg: RunConfig):
    o = cfg.options
    grid = run_sweep(cfg.params, o["axis1"], o["axis2"], o["m_policy"], numeric=not o["analytic_only"])
    rows = list(csv.reader(io.StringIO(grid.to_csv())))
    return rows, json.loads(grid.to_json())


def cmd_scaling(cfg: RunConfig):
    o = cfg.options
    fit = fit_scaling_exponent(cfg.params, o["ratios"], o["m_policy"])
    rows = [["ratio", "phi"]] + [[r, v] for r, v in zip(fit.ratios, fit.phi_at_critical)]
    return rows, _jsonable(fit.to_dict())


def cmd_noise_study(cfg: RunConfig):
    p = cfg.params
    o = cfg.options
    _require_stable(p)
    n_boson = int(round(math.log2(p.boson_dim)))
    if 2 ** n_boson != p.boson_dim:
        raise ValidationError(f"noise-study needs boson_dim = 2**N, got {p.boson_dim}")
    # a single time applies to every qubit
    t1, t2 = (v[0] if len(v) == 1 else v for v in (o["t1"], o["t2"]))
    noise = NoiseParams(n_boson + 1, t1, t2, o["dt"], o["p_gad"], tuple(o["order"]))
    gs = hs_ground_state(p)
    noisy = apply_all_qubits(gs.state.to_density(), noise)
    rho = noisy.data
    out = {
        "phi_clean": measured_order_parameter(p, gs.state),
        "phi_noisy": measured_order_parameter(p, noisy),
        "fidelity": float(np.vdot(gs.state.data, rho @ gs.state.data).real),
        "purity": float(np.real(np.trace(rho @ rho))),
        "order": list(noise.order),
        "n_qubits": noise.n_qubits,
    }
    out = _jsonable(out)
    return _single_row({k: (",".join(v) if isinstance(v, list) else v) for k, v in out.items()}), out


HANDLERS = {
    "phase": cmd_phase,
    "ground-state": cmd_ground_state,
    "zpf": cmd_zpf,
    "adiabatic": cmd_adiabatic,
    "wigner": cmd_wigner,
    "sweep": cmd_sweep,
    "scaling": cmd_scaling,
    "noise-study": cmd_noise_study,
}


# ------------------------------------------------------------------ output

def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def render(rows, obj, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(obj, sort_keys=True, indent=2) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for r in rows:
        w.writerow([_cell(v) for v in r])
    return buf.getvalue()


def atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def run(cfg: RunConfig, stdout=None) -> str:
    """Execute one command and write its artifact (and manifest). Returns the artifact text."""
    start = time.perf_counter()
    rows, obj = HANDLERS[cfg.command](cfg)
    text = render(rows, obj, cfg.format)
    if cfg.output == "-":
        (stdout or sys.stdout).write(text)
        return text
    atomic_write(cfg.output, text)
    manifest = {
        "config": cfg.to_dict(),
        "version": __version__,
        "threads": worker_count(),
        "wall_time_s": time.perf_counter() - start,
    }
    atomic_write(cfg.output + ".manifest.json", json.dumps(manifest, sort_keys=True, indent=2) + "\n")
    return text


# ------------------------------------------------------------------ argument parsing

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(message)


def make_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="spt-sim", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    for cmd in COMMANDS:
        sp = sub.add_parser(cmd)
        sp.add_argument("--config", help="JSON config file (flags override it)")
        sp.add_argument("--output", help="artifact path, '-' for stdout (default)")
        sp.add_argument("--format", choices=FORMATS)
        for name in PARAM_FIELDS:
            conv = int if name == "boson_dim" else float
            sp.add_argument("--" + name.replace("_", "-"), type=conv, dest=f"param_{name}")
        for name, (_, default, helptext) in OPTIONS[cmd].items():
            flag = "--" + name.replace("_", "-")
            if name == "analytic_only":
                sp.add_argument(flag, action="store_const", const=True, dest=f"opt_{name}", help=helptext)
            elif name == "dt" and cmd == "noise-study":
                sp.add_argument(flag, dest=f"opt_{name}", help=helptext)
            else:
                sp.add_argument(flag, dest=f"opt_{name}", help=f"{helptext} (default {default})")
        if cmd == "noise-study":
            sp.add_argument("--noise-config", help="NoiseParams JSON file (t1, t2, dt, p_gad, order)")
    return parser


def _load_json(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read {path}: {exc}") from exc


def raw_config_from_args(args: argparse.Namespace) -> dict:
    raw: dict = {}
    if args.config:
        loaded = _load_json(args.config)
        # a manifest carries the config under "config"
        if isinstance(loaded, dict) and "config" in loaded and "version" in loaded:
            loaded = loaded["config"]
        if not isinstance(loaded, dict):
            raise ValidationError("config file must hold a JSON object")
        raw = dict(loaded)
    if raw.get("command") not in (None, args.command):
        raise ValidationError(f"config file is for command {raw['command']!r}, not {args.command!r}")
    raw["command"] = args.command
    params = dict(raw.get("params", {}) or {})
    for name in PARAM_FIELDS:
        v = getattr(args, f"param_{name}")
        if v is not None:
            params[name] = v
    raw["params"] = params
    options = dict(raw.get("options", {}) or {})
    if getattr(args, "noise_config", None):
        noise = _load_json(args.noise_config)
        if not isinstance(noise, dict):
            raise ValidationError("noise config must hold a JSON object")
        noise = {k: v for k, v in noise.items() if k != "n_qubits"}
        options.update(noise)
    for name in OPTIONS[args.command]:
        v = getattr(args, f"opt_{name}")
        if v is not None:
            options[name] = v
    raw["options"] = options
    if args.output is not None:
        raw["output"] = args.output
    raw.setdefault("output", "-")
    if args.format is not None:
        raw["format"] = args.format
    raw.setdefault("format", "json")
    return raw


def main(argv=None) -> int:
    try:
        args = make_parser().parse_args(argv)
        if args.command is None:
            raise ValidationError("a command is required: " + ", ".join(COMMANDS))
        raw = raw_config_from_args(args)
        diags = validate(raw)
        for d in diags:
            print(str(d), file=sys.stderr)
        if any(d.level == "error" for d in diags):
            return 1
        run(build_config(raw))
        return 0
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
