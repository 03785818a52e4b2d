"""Closed-form results in the classical oscillator limit Omega/omega -> infinity.

Phase labels follow the squeezed-frame coupling ``lt_s = lambda_tilde *
exp(-2 r_tilde)``: the normal phase has ``lt_s < 1``, the superradiant phase
``lt_s > 1``, and the unstable phase has a non-positive stiffness
``1 + alpha*lt**2 - 4 xi/omega``.

Quantities that diverge at the critical coupling are returned as the
:data:`DIVERGENT` marker instead of a floating-point infinity.
"""
from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass

import numpy as np

from . import tolerances as tol
from .errors import PreconditionError, RangeError, ValidationError
from .linalg import SPIN_DOWN, SPIN_UP, QuantumState
from .model import ModelParams, displacement_operator, squeezed_frame, squeezing_operator


class Phase(str, enum.Enum):
    NP = "NP"
    SP = "SP"
    UP = "UP"


class _Divergent:
    """Tag for a closed form evaluated exactly at its singularity."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "DIVERGENT"

    def __str__(self):
        return "divergent"

    def __reduce__(self):
        return (_Divergent, ())


DIVERGENT = _Divergent()


def is_divergent(x) -> bool:
    return x is DIVERGENT


def serializable(x):
    """Map DIVERGENT to the string "divergent" and numpy scalars to Python floats."""
    if x is DIVERGENT:
        return "divergent"
    if isinstance(x, enum.Enum):
        return x.value
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, float) and not math.isfinite(x):
        return "divergent"
    return x


@dataclass(frozen=True)
class PhaseReport:
    """Limit-formula summary of one parameter point.

    Energies are in units of omega.  ``e_g`` is the finite part of the ground
    energy; the part proportional to Omega is ``e_g_spin_coeff * Omega``.
    ``beta_abs`` uses the ``ratio`` of the parameters it was built from.
    Fields that do not apply (UP, or the other phase's squeezing) are None.
    """

    phase: Phase
    stiffness: float
    at_critical: bool = False
    r_tilde: float | None = None
    lambda_tilde_s: float | None = None
    omega_e: float | None = None
    e_g: float | None = None
    e_g_spin_coeff: float | None = None
    beta_abs: float | None = None
    theta: float | None = None
    phi: float | None = None
    l_np: object = None
    l_sp: object = None

    def to_dict(self) -> dict:
        return {k: serializable(v) for k, v in asdict(self).items()}


def _require_stable(p: ModelParams):
    fr = squeezed_frame(p)
    if not fr.stable:
        raise PreconditionError(
            f"parameter point is in the unstable phase (stiffness {p.stiffness:.6g} <= 0)"
        )
    return fr


def _side(p: ModelParams) -> int:
    """-1 in NP, +1 in SP, 0 exactly at the boundary (stable points only)."""
    lt2 = p.lambda_tilde ** 2
    k = p.stiffness
    if abs(lt2 - k) <= tol.CRITICAL_RTOL * k:
        return 0
    return 1 if lt2 > k else -1


def critical_coupling(alpha: float, xi_over_omega: float) -> float | None:
    """Positive root of ``lt**2 = 1 + alpha lt**2 - 4 xi/omega``, or None."""
    if alpha < 0:
        raise ValidationError("alpha must be >= 0")
    if alpha == 1.0:
        # lt drops out; either every lt is critical (xi/omega = 1/4) or none is
        return None
    rad = (4.0 * xi_over_omega - 1.0) / (alpha - 1.0)
    if rad <= 0:
        return None
    return math.sqrt(rad)


def unstable_boundary(alpha: float, xi_over_omega: float) -> float | None:
    """Coupling below which the stiffness is negative: ``sqrt((4 xi/omega - 1)/alpha)``."""
    if xi_over_omega <= 0.25:
        return None
    if alpha <= 0:
        return math.inf
    return math.sqrt((4.0 * xi_over_omega - 1.0) / alpha)


def excitation_energy(p: ModelParams) -> float:
    """Lowest excitation energy (absolute units); 0 exactly at criticality."""
    fr = _require_stable(p)
    side = _side(p)
    if side == 0:
        return 0.0
    lts = fr.lambda_tilde_s
    if side < 0:
        return fr.omega_s * math.sqrt(max(0.0, 1.0 - lts ** 2))
    return fr.omega_s * math.sqrt(max(0.0, 1.0 - lts ** -4))


def order_parameter_limit(p: ModelParams, include_frame_factor: bool = True) -> float:
    """Limit value of ``(omega/Omega) <a^dag a>`` in the ground state.

    With ``include_frame_factor`` (default) the superradiant value is
    ``exp(-4 r) (lt_s**2 - lt_s**-2) / 4``, which is the occupation in the
    original frame.  Without it the bare ``(lt_s**2 - lt_s**-2) / 4`` is
    returned.
    """
    fr = _require_stable(p)
    if _side(p) <= 0:
        return 0.0
    lts = fr.lambda_tilde_s
    bare = 0.25 * (lts ** 2 - lts ** -2)
    return math.exp(-4 * fr.r_tilde) * bare if include_frame_factor else bare


def displacement_and_angle(p: ModelParams) -> tuple[float, float]:
    """Displacement ``|beta|`` and spin rotation angle ``theta`` in the SP.

    ``|beta| = sqrt(Omega (lt_s**2 - lt_s**-2) / (4 omega_s))`` and
    ``tan(2 theta) = -4 lambda_s |beta| / Omega`` with ``2 theta`` in
    ``(-pi/2, 0]``.  Allowed on the boundary, where both vanish.
    """
    fr = _require_stable(p)
    side = _side(p)
    if side < 0:
        raise PreconditionError("displacement_and_angle requires the superradiant phase")
    if side == 0:
        return 0.0, 0.0
    lts = fr.lambda_tilde_s
    beta = math.sqrt(max(0.0, p.Omega * (lts ** 2 - lts ** -2) / (4.0 * fr.omega_s)))
    theta = 0.5 * math.atan(-4.0 * fr.lambda_s * beta / p.Omega)
    return beta, theta


def _secondary_squeezing(p: ModelParams, fr) -> tuple[object, object]:
    side = _side(p)
    lts = fr.lambda_tilde_s
    if side < 0:
        return 0.25 * math.log(1.0 - lts ** 2), None
    if side > 0:
        return None, 0.25 * math.log(1.0 - lts ** -4)
    return DIVERGENT, DIVERGENT


def classify_phase(p: ModelParams) -> PhaseReport:
    """Phase label and closed-form quantities at ``p`` (Omega/omega only enters ``beta_abs``)."""
    k = p.stiffness
    if k <= 0:
        return PhaseReport(phase=Phase.UP, stiffness=k)
    fr = squeezed_frame(p)
    side = _side(p)
    lts = fr.lambda_tilde_s
    l_np, l_sp = _secondary_squeezing(p, fr)
    omega_e = excitation_energy(p) / p.omega
    ws = fr.omega_s / p.omega
    cs = fr.c_s / p.omega
    if side <= 0:
        e_g = ws / 2 * (math.sqrt(max(0.0, 1.0 - lts ** 2)) - 1.0) + cs
        return PhaseReport(
            phase=Phase.NP, stiffness=k, at_critical=side == 0, r_tilde=fr.r_tilde,
            lambda_tilde_s=lts, omega_e=omega_e, e_g=e_g, e_g_spin_coeff=-0.5,
            beta_abs=0.0, theta=0.0, phi=0.0, l_np=l_np, l_sp=l_sp,
        )
    beta, theta = displacement_and_angle(p)
    e_g = ws / 2 * (math.sqrt(1.0 - lts ** -4) - 1.0) + cs
    return PhaseReport(
        phase=Phase.SP, stiffness=k, r_tilde=fr.r_tilde, lambda_tilde_s=lts,
        omega_e=omega_e, e_g=e_g, e_g_spin_coeff=-0.25 * (lts ** 2 + lts ** -2),
        beta_abs=beta, theta=theta, phi=order_parameter_limit(p), l_np=l_np, l_sp=l_sp,
    )


def _check_tail(vec: np.ndarray, what: str):
    dim = vec.shape[0]
    tail = float(np.sum(np.abs(vec[(3 * dim) // 4:]) ** 2))
    if tail > tol.NORM_LOSS:
        raise RangeError(
            f"{what}: weight {tail:.2e} in the top quarter of {dim} Fock levels; increase boson_dim"
        )


def spin_branch(lambda_tilde_s: float, sign: int) -> np.ndarray:
    """Rotated spin-down state paired with the displacement ``sign*|beta|``.

    Amplitudes are ``sqrt((1 + lt_s**-2)/2)`` on down and
    ``-sign*sqrt((1 - lt_s**-2)/2)`` on up; the relative sign makes
    ``<sigma_x>`` oppose the displaced field so that the state minimises
    ``(Omega/2) sigma_z + 2 lambda_s beta sigma_x``.
    """
    inv = lambda_tilde_s ** -2
    down = math.sqrt((1.0 + inv) / 2.0)
    up = math.sqrt(max(0.0, (1.0 - inv) / 2.0))
    return down * SPIN_DOWN - sign * up * SPIN_UP


def ground_state_np(p: ModelParams, dim: int | None = None) -> QuantumState:
    """``S(r_tilde + l_np)|0> ⊗ |down>`` on ``dim`` (default ``p.boson_dim``) levels."""
    dim = dim or p.boson_dim
    fr = _require_stable(p)
    if _side(p) >= 0:
        raise PreconditionError("ground_state_np requires the normal phase (off the boundary)")
    r_np = fr.r_tilde + 0.25 * math.log(1.0 - fr.lambda_tilde_s ** 2)
    boson = squeezing_operator(r_np, dim)[:, 0]
    _check_tail(boson, "normal-phase ground state")
    return QuantumState.pure(np.kron(boson, SPIN_DOWN), (dim, 2), normalize=True)


SP_BRANCHES = ("+", "-", "cat_even", "cat_odd")


def ground_state_sp(p: ModelParams, dim: int | None = None, branch: str = "+",
                    exact_lsp: bool = False) -> QuantumState:
    """Superradiant ground states.

    ``branch`` is ``"+"`` / ``"-"`` for the symmetry-broken states
    ``S(r) D(±|beta|) |0> ⊗ spin_branch(±)``, or ``"cat_even"`` /
    ``"cat_odd"`` for the boson-only squeezed cat states
    ``S(r) (D(|beta|) ± D(-|beta|)) |0>`` (normalised).  With ``exact_lsp``
    the vacuum is first squeezed by ``l_sp``.
    """
    if branch not in SP_BRANCHES:
        raise ValidationError(f"branch must be one of {SP_BRANCHES}, got {branch!r}")
    dim = dim or p.boson_dim
    fr = _require_stable(p)
    if _side(p) <= 0:
        raise PreconditionError("ground_state_sp requires the superradiant phase (off the boundary)")
    beta, _ = displacement_and_angle(p)
    vac = np.zeros(dim, dtype=complex)
    vac[0] = 1.0
    if exact_lsp:
        vac = squeezing_operator(0.25 * math.log(1.0 - fr.lambda_tilde_s ** -4), dim)[:, 0]
    s = squeezing_operator(fr.r_tilde, dim)
    plus = s @ (displacement_operator(beta, dim) @ vac)
    minus = s @ (displacement_operator(-beta, dim) @ vac)
    if branch in ("+", "-"):
        sign = 1 if branch == "+" else -1
        boson = plus if sign > 0 else minus
        _check_tail(boson, "superradiant ground state")
        vec = np.kron(boson, spin_branch(fr.lambda_tilde_s, sign))
        return QuantumState.pure(vec, (dim, 2), normalize=True)
    boson = plus + minus if branch == "cat_even" else plus - minus
    _check_tail(boson / np.linalg.norm(boson), "squeezed cat state")
    return QuantumState.pure(boson, (dim,), normalize=True)


ZPF_VARIANTS = ("rabi", "with_a2", "with_a2_and_as")


def zpf_formulas(p: ModelParams, variant: str = "with_a2_and_as"):
    """Closed-form zero-point fluctuation of the ground state.

    ``rabi`` ignores ``alpha`` and ``xi``; ``with_a2`` ignores ``xi``;
    ``with_a2_and_as`` uses every term.  The normal/superradiant branch is
    chosen from the phase of the corresponding model, so for a reversed
    transition the superradiant branch applies below the critical coupling.
    Returns :data:`DIVERGENT` at the critical point.
    """
    if variant not in ZPF_VARIANTS:
        raise ValidationError(f"variant must be one of {ZPF_VARIANTS}, got {variant!r}")
    if variant == "rabi":
        q = p.replace(alpha=0.0, xi_over_omega=0.0)
    elif variant == "with_a2":
        q = p.replace(xi_over_omega=0.0)
    else:
        q = p
    if variant == "with_a2":
        rad = 1.0 + (q.alpha - 1.0) * q.lambda_tilde ** 2
        if rad == 0:
            return DIVERGENT
        if rad < 0:
            raise PreconditionError("no stable normal phase for these parameters (1 + (alpha-1) lt^2 < 0)")
        return 0.5 * rad ** -0.25
    fr = _require_stable(q)
    side = _side(q)
    if side == 0:
        return DIVERGENT
    lts = fr.lambda_tilde_s
    inner = 1.0 - lts ** 2 if side < 0 else 1.0 - lts ** -4
    if inner <= 0:
        return DIVERGENT
    return 0.5 * inner ** -0.25 * q.stiffness ** -0.25
