"""Parameter sweeps, critical-point detection and power-law fits."""
from __future__ import annotations

import csv
import io
import json
import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import stats

from . import __version__
from .analytic import Phase, classify_phase, critical_coupling
from .errors import FitError, SptError, ValidationError
from .groundstate import hs_ground_state, measured_order_parameter
from .model import ModelParams
from .observables import entanglement_entropy

SWEEPABLE = ("omega", "ratio", "lambda_tilde", "alpha", "xi_over_omega")


def worker_count(default: int | None = None) -> int:
    """Pool size from ``SPT_SIM_THREADS``, else ``default``, else the CPU count (max 8)."""
    env = os.environ.get("SPT_SIM_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError as exc:
            raise ValidationError(f"SPT_SIM_THREADS must be an integer, got {env!r}") from exc
        if n < 1:
            raise ValidationError("SPT_SIM_THREADS must be >= 1")
        return n
    if default:
        return default
    return max(1, min(8, os.cpu_count() or 1))


def parallel_map(fn: Callable, items: Sequence, workers: int | None = None) -> list:
    """``[fn(x) for x in items]`` on a bounded thread pool, results in input order."""
    workers = worker_count(workers)
    if workers == 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


@dataclass(frozen=True)
class AxisSpec:
    name: str
    values: tuple[float, ...]

    def __post_init__(self):
        if self.name not in SWEEPABLE:
            raise ValidationError(f"axis name must be one of {SWEEPABLE}, got {self.name!r}")
        vals = tuple(float(v) for v in np.atleast_1d(self.values))
        if not vals:
            raise ValidationError(f"axis {self.name!r} has no points")
        object.__setattr__(self, "values", vals)

    @classmethod
    def linspace(cls, name: str, start: float, stop: float, num: int) -> "AxisSpec":
        return cls(name, tuple(np.linspace(start, stop, int(num))))

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True)
class MPolicy:
    """Boson truncation per point: ``fixed`` at ``m``, or ``scaled`` as
    ``max(m_min, round(factor * sqrt(ratio)))``."""

    kind: str = "scaled"
    m: int = 32
    m_min: int = 32
    factor: float = 8.0

    def __post_init__(self):
        if self.kind not in ("fixed", "scaled"):
            raise ValidationError(f"M policy kind must be 'fixed' or 'scaled', got {self.kind!r}")
        if self.m < 2 or self.m_min < 2 or self.factor <= 0:
            raise ValidationError("M policy needs m >= 2, m_min >= 2 and factor > 0")

    @classmethod
    def fixed(cls, m: int) -> "MPolicy":
        return cls(kind="fixed", m=int(m))

    def __call__(self, p: ModelParams) -> int:
        if self.kind == "fixed":
            return self.m
        return max(self.m_min, int(round(self.factor * math.sqrt(p.ratio))))

    def describe(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class SweepRecord:
    axis1: float
    axis2: float
    phase: str
    phi_analytic: float | None = None
    phi_numeric: float | None = None
    gap: float | None = None
    entropy: float | None = None
    r_tilde: float | None = None
    lambda_tilde_s: float | None = None
    m_used: int | None = None
    error: str | None = None


CSV_COLUMNS = ("axis1", "axis2", "phase", "phi_analytic", "phi_numeric", "gap", "entropy",
               "r_tilde", "lambda_tilde_s", "m_used")


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def evaluate_point(p: ModelParams, numeric: bool = True, a1: float = 0.0, a2: float = 0.0) -> SweepRecord:
    """Analytic report plus exact squeezed-frame ground-state observables at one point."""
    try:
        rep = classify_phase(p)
    except SptError as exc:
        return SweepRecord(a1, a2, "ERROR", m_used=p.boson_dim, error=str(exc))
    if rep.phase is Phase.UP:
        return SweepRecord(a1, a2, "UP", m_used=p.boson_dim)
    base = dict(axis1=a1, axis2=a2, phase=rep.phase.value, phi_analytic=float(rep.phi),
                r_tilde=float(rep.r_tilde), lambda_tilde_s=float(rep.lambda_tilde_s), m_used=p.boson_dim)
    if not numeric:
        return SweepRecord(**base)
    try:
        gs = hs_ground_state(p)
        return SweepRecord(**base, phi_numeric=measured_order_parameter(p, gs.state),
                           gap=gs.gap / p.omega, entropy=entanglement_entropy(gs.state))
    except SptError as exc:
        return SweepRecord(**base, error=str(exc))


@dataclass(frozen=True)
class SweepGrid:
    """Records in row-major order: ``records[i * len(axis2) + j]`` is ``(axis1[i], axis2[j])``."""

    axis1: AxisSpec
    axis2: AxisSpec
    records: tuple[SweepRecord, ...]
    template: ModelParams
    m_policy: MPolicy
    meta: dict = field(default_factory=dict)

    def record(self, i: int, j: int = 0) -> SweepRecord:
        return self.records[i * len(self.axis2) + j]

    def column(self, name: str, j: int = 0) -> np.ndarray:
        """Values of ``name`` along axis1 at axis2 index ``j`` (None becomes NaN)."""
        vals = [getattr(self.record(i, j), name) for i in range(len(self.axis1))]
        return np.array([np.nan if v is None else v for v in vals], dtype=float)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.records:
            w.writerow([_fmt(getattr(r, c)) for c in CSV_COLUMNS])
        return buf.getvalue()

    def metadata(self) -> dict:
        return {
            "axis1": {"name": self.axis1.name, "values": list(self.axis1.values)},
            "axis2": {"name": self.axis2.name, "values": list(self.axis2.values)},
            "template": self.template.to_dict(),
            "m_policy": self.m_policy.describe(),
            "version": __version__,
            **self.meta,
        }

    def to_json(self) -> str:
        return json.dumps({"metadata": self.metadata(),
                           "records": [asdict(r) for r in self.records]}, sort_keys=True)


def run_sweep(template: ModelParams, axis1: AxisSpec, axis2: AxisSpec | None = None,
              m_policy: MPolicy | None = None, numeric: bool = True,
              workers: int | None = None) -> SweepGrid:
    """Evaluate every grid point; failures are stored in the record, not raised."""
    if axis2 is None:
        axis2 = AxisSpec("ratio", (template.ratio,))
    if axis1.name == axis2.name:
        raise ValidationError("the two sweep axes must name different parameters")
    m_policy = m_policy or MPolicy()
    points = []
    for v1 in axis1.values:
        for v2 in axis2.values:
            p = template.replace(**{axis1.name: v1, axis2.name: v2})
            points.append((p.replace(boson_dim=m_policy(p)), v1, v2))
    records = parallel_map(lambda t: evaluate_point(t[0], numeric, t[1], t[2]), points, workers)
    return SweepGrid(axis1, axis2, tuple(records), template, m_policy, {"numeric": numeric})


@dataclass(frozen=True)
class ScalingFit:
    ratios: tuple[float, ...]
    phi_at_critical: tuple[float, ...]
    gamma: float
    stderr: float
    r_squared: float
    intercept: float
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def fit_power_law(x, y, min_points: int = 4) -> ScalingFit:
    """Least-squares slope of ``ln y`` against ``ln x``; nonpositive ``y`` are dropped with a warning."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValidationError("x and y must have the same length")
    if np.any(np.diff(x) <= 0):
        raise ValidationError("x values must be strictly increasing")
    ok = (y > 0) & np.isfinite(y)
    if not ok.all():
        warnings.warn(f"dropping {int((~ok).sum())} nonpositive or non-finite points from the fit")
    if ok.sum() < min_points:
        raise FitError(f"only {int(ok.sum())} usable points; need at least {min_points}")
    res = stats.linregress(np.log(x[ok]), np.log(y[ok]))
    return ScalingFit(tuple(x[ok]), tuple(y[ok]), float(res.slope), float(res.stderr),
                      float(res.rvalue ** 2), float(res.intercept))


def fit_scaling_exponent(template: ModelParams, ratios, m_policy: MPolicy | None = None,
                         workers: int | None = None) -> ScalingFit:
    """Fit ``Phi(lambda_c) ~ (Omega/omega)**gamma`` from exact ground states."""
    ratios = [float(r) for r in ratios]
    if len(ratios) < 4:
        raise ValidationError("need at least 4 ratios")
    lc = critical_coupling(template.alpha, template.xi_over_omega)
    if lc is None:
        raise ValidationError(
            f"no critical coupling for alpha={template.alpha}, xi/omega={template.xi_over_omega}")
    m_policy = m_policy or MPolicy()
    base = template.replace(lambda_tilde=lc)

    def phi_at(r):
        p = base.replace(ratio=r)
        p = p.replace(boson_dim=m_policy(p))
        return measured_order_parameter(p, hs_ground_state(p).state)

    phis = parallel_map(phi_at, ratios, workers)
    fit = fit_power_law(ratios, phis)
    return ScalingFit(fit.ratios, fit.phi_at_critical, fit.gamma, fit.stderr, fit.r_squared,
                      fit.intercept, {"lambda_tilde_c": lc, "m_policy": m_policy.describe(),
                                      "m_used": [m_policy(base.replace(ratio=r)) for r in fit.ratios]})


@dataclass(frozen=True)
class CriticalPoint:
    value: float | None
    uncertainty: float
    method: str

    @property
    def found(self) -> bool:
        return self.value is not None


DETECTORS = ("curvature", "derivative")


def detect_critical_point(lambdas, phis, method: str = "curvature", min_range: float = 0.02) -> CriticalPoint:
    """Locate the transition along a coupling slice.

    ``curvature`` picks the largest ``|d2 Phi/d lambda^2|`` (the kink where
    Phi leaves zero); ``derivative`` picks the largest ``|d Phi/d lambda|``
    by central differences.  Slices whose Phi varies by less than
    ``min_range`` have no transition and return ``value=None``.  The
    uncertainty is one grid step.
    """
    if method not in DETECTORS:
        raise ValidationError(f"method must be one of {DETECTORS}, got {method!r}")
    lam = np.asarray(lambdas, dtype=float)
    phi = np.asarray(phis, dtype=float)
    if lam.shape != phi.shape or lam.size < 20:
        raise ValidationError("need matching slices with at least 20 points")
    if np.any(np.diff(lam) <= 0):
        raise ValidationError("coupling values must be strictly increasing")
    if not np.all(np.isfinite(phi)):
        raise ValidationError("slice contains non-finite order parameters (unstable points?)")
    step = float(np.max(np.diff(lam)))
    if np.ptp(phi) < min_range:
        return CriticalPoint(None, step, method)
    if method == "derivative":
        score = np.abs(np.gradient(phi, lam))
        i = int(np.argmax(score))
    else:
        h1 = np.diff(lam)
        d1 = np.diff(phi) / h1
        d2 = np.abs(np.diff(d1) / (0.5 * (h1[1:] + h1[:-1])))
        i = int(np.argmax(d2)) + 1
    return CriticalPoint(float(lam[i]), step, method)
