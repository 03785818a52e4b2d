"""Exact ground states and the adiabatic preparation protocol."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from . import tolerances as tol
from .errors import NumericError, PreconditionError, ValidationError
from .linalg import (
    SIGMA_Y,
    QuantumState,
    as_operator,
    destroy,
    eig_hermitian,
    kron_all,
)
from .model import ModelParams, build_hs, squeezed_frame


def _fix_phase(vec: np.ndarray) -> np.ndarray:
    # make the largest component real and positive so results are reproducible
    k = int(np.argmax(np.abs(vec)))
    return vec * (abs(vec[k]) / vec[k])


@dataclass(frozen=True)
class GroundState:
    """Lowest eigenpair of a Hamiltonian.

    Unpacks as ``energy, state, gap``.  When the gap is below
    ``1e-8 * ||H||`` the result is flagged ``near_degenerate``; the first
    excited vector is always kept in ``excited`` so callers can form the
    two-dimensional ground projector.
    """

    energy: float
    state: QuantumState
    gap: float
    near_degenerate: bool
    excited: QuantumState | None = None

    def __iter__(self):
        return iter((self.energy, self.state, self.gap))


def exact_ground_state(h, dims=None) -> GroundState:
    """Diagonalise ``h`` and return its ground state with the spectral gap."""
    h = as_operator(h)
    dims = tuple(dims) if dims else (h.shape[0],)
    evals, evecs = eig_hermitian(h)
    g = QuantumState.pure(_fix_phase(evecs[:, 0]), dims, normalize=True)
    if h.shape[0] == 1:
        return GroundState(float(evals[0]), g, math.inf, False, None)
    gap = float(evals[1] - evals[0])
    scale = max(float(np.max(np.abs(evals))), 1e-300)
    e1 = QuantumState.pure(_fix_phase(evecs[:, 1]), dims, normalize=True)
    return GroundState(float(evals[0]), g, gap, gap < 1e-8 * scale, e1)


def hs_ground_state(p: ModelParams) -> GroundState:
    """Exact ground state of the squeezed-frame Hamiltonian at ``p``."""
    return exact_ground_state(build_hs(p), dims=(p.boson_dim, 2))


def ground_fidelity(gs: GroundState, psi: np.ndarray, omega: float = 1.0) -> float:
    """Overlap of ``psi`` with the ground space.

    Uses the two lowest eigenvectors when the gap is below
    ``SP_DEGENERACY_GAP * omega``, otherwise the ground vector alone.
    """
    f = abs(np.vdot(gs.state.data, psi)) ** 2
    if gs.excited is not None and gs.gap < tol.SP_DEGENERACY_GAP * omega:
        f += abs(np.vdot(gs.excited.data, psi)) ** 2
    return float(f)


RAMPS = ("linear", "smoothstep")


@dataclass(frozen=True)
class AdiabaticSchedule:
    """Interpolation ``H(l) = (1 - s(l)) H0 + s(l) H_s`` over ``steps`` steps of length ``dt``."""

    steps: int = 200
    dt: float = 0.5
    ramp: str = "linear"

    def __post_init__(self):
        if not isinstance(self.steps, (int, np.integer)) or self.steps < 1:
            raise ValidationError(f"steps must be a positive integer, got {self.steps!r}")
        if not (isinstance(self.dt, (int, float)) and math.isfinite(self.dt) and self.dt >= 0):
            raise ValidationError(f"dt must be a finite number >= 0, got {self.dt!r}")
        if self.ramp not in RAMPS:
            raise ValidationError(f"ramp must be one of {RAMPS}, got {self.ramp!r}")

    def s(self, l: int) -> float:
        x = l / self.steps
        if self.ramp == "linear":
            return x
        return x * x * (3.0 - 2.0 * x)


def initial_hamiltonian(n_qubits: int, omega: float = 1.0) -> np.ndarray:
    """``omega * sum_i sigma_y^(i)`` over ``n_qubits`` qubits."""
    eye = np.eye(2, dtype=complex)
    out = np.zeros((2 ** n_qubits, 2 ** n_qubits), dtype=complex)
    for i in range(n_qubits):
        factors = [eye] * n_qubits
        factors[i] = SIGMA_Y
        out += kron_all(*factors)
    return omega * out


def initial_ground_state(n_qubits: int) -> np.ndarray:
    """Product of ``(|0> - i|1>)/sqrt(2)``, the ``sigma_y = -1`` eigenstate of each qubit."""
    single = np.array([1.0, -1.0j]) / math.sqrt(2.0)
    out = np.array([1.0 + 0j])
    for _ in range(n_qubits):
        out = np.kron(out, single)
    return out


@dataclass(frozen=True)
class PreparationResult:
    final_state: QuantumState
    s_values: np.ndarray
    fidelity_trace: np.ndarray
    energy_trace: np.ndarray
    final_fidelity: float
    meta: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["l", "s", "energy", "fidelity"])
        for l, (s, e, f) in enumerate(zip(self.s_values, self.energy_trace, self.fidelity_trace)):
            w.writerow([l, repr(float(s)), repr(float(e)), repr(float(f))])
        return buf.getvalue()


def adiabatic_prepare(p: ModelParams, sched: AdiabaticSchedule) -> PreparationResult:
    """Simulate the adiabatic ramp from ``H0 = omega * sum sigma_y`` to ``H_s``.

    ``boson_dim`` must be a power of two, ``2**N``; ``H0`` then acts on the
    ``N`` mapping qubits and the two-level system.  Each step applies
    ``exp(-i H(l) dt)`` for ``l = 1 .. L``.  Traces include ``l = 0``.
    """
    m = p.boson_dim
    n_boson = int(round(math.log2(m)))
    if 2 ** n_boson != m:
        raise ValidationError(f"adiabatic_prepare needs boson_dim = 2**N, got {m}")
    if not squeezed_frame(p).stable:
        raise PreconditionError("squeezed frame is unstable; no ground state to prepare")
    n_total = n_boson + 1
    h0 = initial_hamiltonian(n_total, p.omega)
    h1 = build_hs(p)
    dims = (m, 2)

    psi = initial_ground_state(n_total)
    steps = sched.steps
    s_vals = np.array([sched.s(l) for l in range(steps + 1)])
    fid = np.empty(steps + 1)
    energy = np.empty(steps + 1)
    fid[0] = 1.0
    energy[0] = float(np.vdot(psi, h0 @ psi).real)
    for l in range(1, steps + 1):
        h = (1.0 - s_vals[l]) * h0 + s_vals[l] * h1
        evals, evecs = eig_hermitian(h)
        psi = (evecs * np.exp(-1j * evals * sched.dt)) @ (evecs.conj().T @ psi)
        drift = abs(np.linalg.norm(psi) - 1.0)
        if drift > tol.NORM_DRIFT:
            raise NumericError(f"norm drift {drift:.2e} at step {l}")
        energy[l] = float(np.vdot(psi, h @ psi).real)
        f = abs(np.vdot(evecs[:, 0], psi)) ** 2
        if evals[1] - evals[0] < tol.SP_DEGENERACY_GAP * p.omega:
            f += abs(np.vdot(evecs[:, 1], psi)) ** 2
        fid[l] = f
    gs = hs_ground_state(p)
    final = QuantumState.pure(psi, dims, normalize=True)
    return PreparationResult(
        final_state=final,
        s_values=s_vals,
        fidelity_trace=fid,
        energy_trace=energy,
        final_fidelity=ground_fidelity(gs, final.data, p.omega),
        meta={"steps": steps, "dt": sched.dt, "ramp": sched.ramp},
    )


def sudden_quench_fidelity(p: ModelParams) -> float:
    """``|<G_s|G_0>|^2``, the fidelity of an instantaneous switch."""
    n_total = int(round(math.log2(p.boson_dim))) + 1
    gs = hs_ground_state(p)
    return ground_fidelity(gs, initial_ground_state(n_total), p.omega)


def _boson_moments(state: QuantumState) -> tuple[float, complex]:
    """``<a^dag a>`` and ``<a^2>`` of the boson factor (first subsystem)."""
    m = state.dims[0]
    rest = state.dim // m
    a = destroy(m)
    n_op = np.kron(a.conj().T @ a, np.eye(rest))
    a2 = np.kron(a @ a, np.eye(rest))
    if state.is_pure:
        v = state.data
        return float(np.vdot(v, n_op @ v).real), complex(np.vdot(v, a2 @ v))
    rho = state.data
    return float(np.trace(rho @ n_op).real), complex(np.trace(rho @ a2))


def measured_order_parameter(p: ModelParams, state_s: QuantumState) -> float:
    """Order parameter from squeezed-frame expectations.

    ``(omega/Omega) [cosh(2r) <n>_s - sinh(2r) Re<a^2>_s + sinh(r)**2]``,
    which is ``(omega/Omega) <S^dag a^dag a S>`` for ``r = r_tilde``.
    """
    fr = squeezed_frame(p)
    if not fr.stable:
        raise PreconditionError("order parameter is undefined in the unstable phase")
    n, a2 = _boson_moments(state_s)
    r = fr.r_tilde
    # <a^dag^2> + <a^2> = 2 Re <a^2>
    bracket = math.cosh(2 * r) * n - 0.5 * math.sinh(2 * r) * (2.0 * a2.real) + math.sinh(r) ** 2
    return p.omega / p.Omega * bracket
