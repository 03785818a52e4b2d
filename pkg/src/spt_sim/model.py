"""Hamiltonians of the Rabi model with the A² and antisqueezing terms.

All operators act on boson ⊗ spin with the boson truncated to ``boson_dim``
Fock levels.  Energies are in the same units as ``omega``.
"""
from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass
from typing import Any, Mapping

import numpy as np

from . import tolerances as tol
from .errors import PreconditionError, RangeError, ValidationError
from .linalg import (
    SIGMA_X,
    SIGMA_Z,
    destroy,
    expm_antihermitian,
    kron,
)

PARAM_FIELDS = ("omega", "ratio", "lambda_tilde", "alpha", "xi_over_omega", "boson_dim")


def param_diagnostics(values: Mapping[str, Any]) -> list[str]:
    """Every problem with a raw parameter mapping, not just the first."""
    problems = []
    for key in values:
        if key not in PARAM_FIELDS:
            problems.append(f"{key}: unknown parameter")
    checks = {
        "omega": lambda v: v > 0,
        "ratio": lambda v: v > 0,
        "lambda_tilde": lambda v: v >= 0,
        "alpha": lambda v: v >= 0,
        "xi_over_omega": lambda v: True,
        "boson_dim": lambda v: v >= 2,
    }
    bounds = {
        "omega": "must be > 0",
        "ratio": "must be > 0",
        "lambda_tilde": "must be >= 0",
        "alpha": "must be >= 0",
        "xi_over_omega": "",
        "boson_dim": "must be an integer >= 2",
    }
    for name, ok in checks.items():
        if name not in values:
            continue
        v = values[name]
        if isinstance(v, bool) or not isinstance(v, (int, float, np.integer, np.floating)):
            problems.append(f"{name}: expected a number, got {v!r}")
            continue
        if not math.isfinite(float(v)):
            problems.append(f"{name}: must be finite")
            continue
        if name == "boson_dim" and float(v) != int(v):
            problems.append(f"{name}: {bounds[name]}, got {v!r}")
            continue
        if not ok(v):
            problems.append(f"{name}: {bounds[name]}, got {v!r}")
    return problems


@dataclass(frozen=True)
class ModelParams:
    """Physical parameters of one model point.

    ``ratio`` is Omega/omega, ``lambda_tilde`` the scaled coupling
    ``2 lambda / sqrt(Omega omega)`` and ``xi_over_omega`` the antisqueezing
    strength.  ``boson_dim`` is the Fock truncation M.
    """

    omega: float = 1.0
    ratio: float = 1.0
    lambda_tilde: float = 0.0
    alpha: float = 0.0
    xi_over_omega: float = 0.0
    boson_dim: int = 32

    def __post_init__(self):
        problems = param_diagnostics(dataclasses.asdict(self))
        if problems:
            raise ValidationError("; ".join(problems))
        object.__setattr__(self, "boson_dim", int(self.boson_dim))

    @property
    def Omega(self) -> float:
        return self.ratio * self.omega

    @property
    def lam(self) -> float:
        """Absolute coupling ``lambda``."""
        return self.lambda_tilde * math.sqrt(self.Omega * self.omega) / 2.0

    @property
    def xi(self) -> float:
        return self.xi_over_omega * self.omega

    @property
    def stiffness(self) -> float:
        """``1 + alpha*lambda_tilde**2 - 4 xi/omega``; the frame is stable iff positive."""
        return 1.0 + self.alpha * self.lambda_tilde ** 2 - 4.0 * self.xi_over_omega

    def replace(self, **changes) -> "ModelParams":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, values: Mapping[str, Any]) -> "ModelParams":
        problems = param_diagnostics(values)
        if problems:
            raise ValidationError("; ".join(problems))
        return cls(**values)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ModelParams":
        values = json.loads(text)
        if not isinstance(values, dict):
            raise ValidationError("ModelParams JSON must be an object")
        return cls.from_dict(values)


@dataclass(frozen=True)
class SqueezedFrame:
    """Parameters after the squeezing transformation S(r_tilde).

    When ``stable`` is false every numeric field is ``None``.
    """

    stable: bool
    r_tilde: float | None = None
    omega_s: float | None = None
    lambda_s: float | None = None
    c_s: float | None = None
    lambda_tilde_s: float | None = None


def squeezed_frame(p: ModelParams) -> SqueezedFrame:
    k = p.stiffness
    if k <= 0:
        return SqueezedFrame(stable=False)
    r = 0.25 * math.log(k)
    omega_s = p.omega * math.exp(2 * r)
    lambda_s = p.lam * math.exp(-r)
    c_s = (math.exp(2 * r) - 1.0) * p.omega / 2.0
    return SqueezedFrame(
        stable=True,
        r_tilde=r,
        omega_s=omega_s,
        lambda_s=lambda_s,
        c_s=c_s,
        lambda_tilde_s=p.lambda_tilde * math.exp(-2 * r),
    )


def quadrature_sq(dim: int) -> np.ndarray:
    """``(a + a^dagger)^2`` on ``dim`` levels (truncated product, not truncated square)."""
    a = destroy(dim)
    x = a + a.conj().T
    return x @ x


def parity_operator(dim: int) -> np.ndarray:
    """``exp(i pi N)`` with ``N = a^dagger a ⊗ 1 + 1 ⊗ (sigma_z + 1)/2``."""
    n_boson = np.arange(dim)
    n_spin = np.array([1, 0])          # (sigma_z + 1)/2 on |up>, |down>
    total = (n_boson[:, None] + n_spin[None, :]).ravel()
    return np.diag((-1.0) ** total).astype(complex)


def _spin_boson(omega_b: float, big_omega: float, coupling: float, dim: int) -> np.ndarray:
    a = destroy(dim)
    eye_m = np.eye(dim, dtype=complex)
    h = big_omega / 2 * kron(eye_m, SIGMA_Z)
    h = h + omega_b * kron(a.conj().T @ a, np.eye(2))
    h = h + coupling * kron(a + a.conj().T, SIGMA_X)
    return h


def build_rabi(p: ModelParams) -> np.ndarray:
    """Rabi Hamiltonian ``(Omega/2) sigma_z + omega a^dag a + lambda (a + a^dag) sigma_x``."""
    return _spin_boson(p.omega, p.Omega, p.lam, p.boson_dim)


def build_a2_term(p: ModelParams) -> np.ndarray:
    coeff = p.alpha * p.lam ** 2 / p.Omega
    return coeff * kron(quadrature_sq(p.boson_dim), np.eye(2))


def build_antisqueezing_term(p: ModelParams) -> np.ndarray:
    return -p.xi * kron(quadrature_sq(p.boson_dim), np.eye(2))


def build_total(p: ModelParams) -> np.ndarray:
    return build_rabi(p) + build_a2_term(p) + build_antisqueezing_term(p)


def build_hs(p: ModelParams, include_constant: bool = True) -> np.ndarray:
    """Squeezed-frame Hamiltonian with rescaled ``omega_s`` and ``lambda_s``.

    The constant ``C_s`` is included by default so that the spectra of this
    operator and of :func:`build_total` coincide.
    """
    fr = squeezed_frame(p)
    if not fr.stable:
        raise PreconditionError(
            f"squeezed frame is unstable (1 + alpha*lt^2 - 4 xi/omega = {p.stiffness:.6g} <= 0)"
        )
    h = _spin_boson(fr.omega_s, p.Omega, fr.lambda_s, p.boson_dim)
    if include_constant:
        h = h + fr.c_s * np.eye(h.shape[0])
    return h


def squeezing_operator(r: float, dim: int) -> np.ndarray:
    """``S(r) = exp[r (a^2 - a^dag^2) / 2]`` on ``dim`` Fock levels."""
    if abs(r) > tol.SQUEEZE_MAX_R:
        raise RangeError(
            f"|r| = {abs(r):.3f} exceeds {tol.SQUEEZE_MAX_R}; truncated squeezing is unreliable there. "
            "Work in the squeezed frame (build_hs) instead."
        )
    if r == 0:
        return np.eye(dim, dtype=complex)
    a = destroy(dim)
    ad = a.conj().T
    return expm_antihermitian(0.5 * r * (a @ a - ad @ ad))


def displacement_operator(beta: complex, dim: int) -> np.ndarray:
    """``D(beta) = exp(beta a^dag - beta* a)`` on ``dim`` Fock levels."""
    if abs(beta) ** 2 > dim / 4:
        raise RangeError(
            f"|beta|^2 = {abs(beta) ** 2:.3f} exceeds dim/4 = {dim / 4}; increase the truncation"
        )
    if beta == 0:
        return np.eye(dim, dtype=complex)
    a = destroy(dim)
    return expm_antihermitian(beta * a.conj().T - np.conj(beta) * a)


def truncated_squeezing_fidelity(r: float, dim: int, reference_dim: int = 1024) -> float:
    """Vacuum fidelity ``<0|S_ref^dag(r) S_dim(r)|0>`` of a truncated squeezer.

    ``S_dim`` is built on ``dim`` levels and embedded in the
    ``reference_dim``-level space of the reference operator.
    """
    if dim > reference_dim:
        raise ValidationError("dim must not exceed reference_dim")
    small = squeezing_operator(r, dim)[:, 0]
    ref = squeezing_operator(r, reference_dim)[:, 0]
    return float(np.real(np.vdot(ref[:dim], small)))


def build_nmr_hamiltonian(shifts, couplings) -> np.ndarray:
    """Weak-coupling NMR Hamiltonian ``sum_i pi w_i Z_i + sum_{i<j} (pi/2) J_ij Z_i Z_j``.

    Spin 1 is the leftmost tensor factor.  The result is diagonal.
    """
    shifts = np.asarray(shifts, dtype=float).ravel()
    n = shifts.size
    couplings = np.asarray(couplings, dtype=float)
    if couplings.shape != (n, n):
        raise ValidationError(f"couplings must have shape ({n}, {n}), got {couplings.shape}")
    if not np.allclose(couplings, couplings.T, atol=0.0, rtol=0.0) or np.any(np.diag(couplings) != 0):
        raise ValidationError("couplings must be symmetric with a zero diagonal")
    # z-eigenvalue of spin i in each computational basis state, spin 1 most significant
    bits = (np.arange(2 ** n)[:, None] >> np.arange(n - 1, -1, -1)[None, :]) & 1
    z = 1.0 - 2.0 * bits
    diag = np.pi * z @ shifts
    for i in range(n):
        for j in range(i + 1, n):
            diag = diag + 0.5 * np.pi * couplings[i, j] * z[:, i] * z[:, j]
    return np.diag(diag).astype(complex)
