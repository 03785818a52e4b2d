"""Expectation values, quadrature moments, entropy and Wigner functions.

The quadrature is ``x = (a + a^dagger)/2`` and the phase-space point is
``alpha = x + i p``, so a coherent state ``|beta>`` sits at
``(Re beta, Im beta)`` and the vacuum Wigner function peaks at ``2/pi``.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import tolerances as tol
from .errors import NumericError, PreconditionError, ValidationError
from .linalg import QuantumState, as_operator, destroy, expm_antihermitian, partial_trace
from .model import quadrature_sq


def expectation(state: QuantumState, op) -> complex:
    """``<psi|O|psi>`` for pure states, ``Tr(rho O)`` for density matrices."""
    op = as_operator(op)
    if op.shape[0] != state.dim:
        raise ValidationError(f"operator dimension {op.shape[0]} does not match state dimension {state.dim}")
    if state.is_pure:
        v = state.data
        return complex(np.vdot(v, op @ v))
    return complex(np.einsum("ij,ji->", state.data, op))


def real_expectation(state: QuantumState, op) -> float:
    """Expectation of a Hermitian operator; a residual imaginary part above ``IMAG_ATOL`` is an error."""
    val = expectation(state, op)
    if abs(val.imag) > tol.IMAG_ATOL * max(1.0, abs(val.real)):
        raise NumericError(f"expectation has imaginary part {val.imag:.3e}; operator not Hermitian?")
    return val.real


def boson_density(state: QuantumState) -> np.ndarray:
    """Density matrix of the boson factor (the first subsystem)."""
    if len(state.dims) == 1:
        return state.matrix()
    if len(state.dims) == 2:
        return partial_trace(state, keep=0).data
    raise ValidationError(f"expected a boson or boson⊗spin state, got dims {state.dims}")


class QuadratureMoments(NamedTuple):
    a: complex
    a2: complex
    n: float
    x: float
    x2: float


def _moments_direct(rho: np.ndarray) -> QuadratureMoments:
    m = rho.shape[0]
    a = destroy(m)
    tr = lambda op: complex(np.einsum("ij,ji->", rho, op))
    x_op = 0.5 * (a + a.conj().T)
    return QuadratureMoments(
        a=tr(a),
        a2=tr(a @ a),
        n=tr(a.conj().T @ a).real,
        x=tr(x_op).real,
        x2=0.25 * tr(quadrature_sq(m)).real,
    )


def _moments_decomposed(rho: np.ndarray) -> tuple[float, float]:
    """``<x>`` and ``<x^2>`` from sums over the first and second off-diagonals.

    ``<a + a^dag> = 2 Re sum_n sqrt(n+1) rho[n+1, n]`` and
    ``<a^2 + a^dag^2> = 2 Re sum_n sqrt((n+1)(n+2)) rho[n+2, n]``; the
    diagonal part uses ``a^dag a + a a^dag`` with the truncated ``a a^dag``.
    """
    m = rho.shape[0]
    n = np.arange(m)
    first = 2.0 * np.sum(np.sqrt(n[:-1] + 1.0) * np.diagonal(rho, -1)).real
    second = 2.0 * np.sum(np.sqrt((n[:-2] + 1.0) * (n[:-2] + 2.0)) * np.diagonal(rho, -2)).real if m > 2 else 0.0
    pops = np.diagonal(rho).real
    upper = n + 1.0
    upper[-1] = 0.0      # a a^dag loses the top level under truncation
    diag_part = float(np.sum(pops * (n + upper)))
    return 0.5 * first, 0.25 * (second + diag_part)


def quadrature_moments(state: QuantumState) -> QuadratureMoments:
    """``<a>, <a^2>, <a^dag a>, <x>, <x^2>`` of the boson factor.

    The ``x`` moments are computed both from the operator matrices and from
    the off-diagonal decomposition; a disagreement above ``1e-10`` raises
    :class:`NumericError`.
    """
    rho = boson_density(state)
    direct = _moments_direct(rho)
    x_dec, x2_dec = _moments_decomposed(rho)
    if abs(direct.x - x_dec) > 1e-10 or abs(direct.x2 - x2_dec) > 1e-10 * max(1.0, abs(direct.x2)):
        raise NumericError("direct and decomposed quadrature moments disagree")
    return direct


def zpf(state: QuantumState) -> float:
    """``sqrt(<x^2> - <x>^2)`` of the boson factor."""
    mom = quadrature_moments(state)
    var = mom.x2 - mom.x ** 2
    if var < -tol.VARIANCE_CLAMP:
        raise NumericError(f"negative quadrature variance {var:.3e}")
    return math.sqrt(max(var, 0.0))


def _entropy_bits(probs: np.ndarray) -> float:
    probs = probs[probs > 1e-300]
    return float(-np.sum(probs * np.log2(probs)) + 0.0)


def entanglement_entropy(state: QuantumState, keep: int = 0) -> float:
    """Von Neumann entropy (bits) of one factor of a pure bipartite state."""
    if not state.is_pure:
        raise PreconditionError("entanglement_entropy needs a pure state")
    if len(state.dims) != 2:
        raise PreconditionError(f"entanglement_entropy needs two factors, got dims {state.dims}")
    red = partial_trace(state, keep=keep).data
    probs = np.clip(np.linalg.eigvalsh(red), 0.0, None)
    return _entropy_bits(probs / probs.sum())


def schmidt_entropy(state: QuantumState) -> float:
    """Same entropy from the singular values of the coefficient matrix."""
    if not state.is_pure or len(state.dims) != 2:
        raise PreconditionError("schmidt_entropy needs a pure bipartite state")
    sv = np.linalg.svd(state.data.reshape(state.dims), compute_uv=False)
    probs = sv ** 2
    return _entropy_bits(probs / probs.sum())


def readout_operators(dim: int) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic shifts ``U1 = sum |n><n+1| + |M-1><0|`` and ``U2 = U1 @ U1``."""
    if dim < 3:
        raise ValidationError(f"readout operators need dim >= 3, got {dim}")
    u1 = np.zeros((dim, dim), dtype=complex)
    idx = np.arange(dim)
    u1[idx, (idx + 1) % dim] = 1.0
    u2 = np.zeros((dim, dim), dtype=complex)
    u2[idx, (idx + 2) % dim] = 1.0
    return u1, u2


# ---------------------------------------------------------------- Wigner

@dataclass(frozen=True)
class WignerGrid:
    """``values[i, j] = W(x_axis[i], p_axis[j])``."""

    x_axis: np.ndarray
    p_axis: np.ndarray
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def cell_area(self) -> float:
        dx = self.x_axis[1] - self.x_axis[0] if self.x_axis.size > 1 else 1.0
        dp = self.p_axis[1] - self.p_axis[0] if self.p_axis.size > 1 else 1.0
        return float(dx * dp)

    def normalization(self) -> float:
        return float(self.values.sum() * self.cell_area)

    def midline(self, x0: float = 0.0) -> np.ndarray:
        """``W(x0, p)`` along the p axis at the grid column nearest ``x0``."""
        i = int(np.argmin(np.abs(self.x_axis - x0)))
        return self.values[i, :]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "p", "W"])
        for i, x in enumerate(self.x_axis):
            for j, p in enumerate(self.p_axis):
                w.writerow([repr(float(x)), repr(float(p)), repr(float(self.values[i, j]))])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps({
            "x_axis": [float(v) for v in self.x_axis],
            "p_axis": [float(v) for v in self.p_axis],
            "values": [float(v) for v in self.values.ravel()],
            "shape": list(self.values.shape),
            "layout": "row-major, rows indexed by x",
            "meta": self.meta,
        }, sort_keys=True)


def sign_changes(values, rel_threshold: float = 1e-3) -> int:
    """Number of sign alternations, ignoring entries below ``rel_threshold * max|v|``."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        return 0
    cut = rel_threshold * float(np.max(np.abs(v)))
    signs = np.sign(v[np.abs(v) > cut])
    return int(np.count_nonzero(signs[1:] != signs[:-1]))


def default_axes(state: QuantumState, points: int = 101) -> tuple[np.ndarray, np.ndarray]:
    """Square-ish grid covering ``max(5 sigma, |mean| + 3 sigma)`` along each quadrature."""
    rho = boson_density(state)
    a = destroy(rho.shape[0])
    tr = lambda op: complex(np.einsum("ij,ji->", rho, op))
    p_op = (a - a.conj().T) / 2j
    x_op = (a + a.conj().T) / 2
    halves = []
    for op in (x_op, p_op):
        mean = tr(op).real
        var = max(tr(op @ op).real - mean ** 2, 0.0)
        sd = max(math.sqrt(var), 0.5)
        halves.append(max(5 * sd, abs(mean) + 3 * sd))
    hx, hp = halves
    return np.linspace(-hx, hx, points), np.linspace(-hp, hp, points)


def hermite_functions(n_levels: int, x) -> np.ndarray:
    """Position wavefunctions ``<x|n>`` for ``x = (a + a^dagger)/2``, shape ``(n_levels, len(x))``.

    Uses the three-term recurrence with a running per-point scale so that
    the Gaussian factor cannot underflow before the polynomial grows.
    """
    x = np.asarray(x, dtype=float)
    xi = math.sqrt(2.0) * x
    out = np.empty((n_levels, x.size))
    log_scale = -0.5 * xi ** 2 - 0.25 * math.log(math.pi) + 0.25 * math.log(2.0)
    prev = np.zeros_like(xi)
    cur = np.ones_like(xi)
    out[0] = np.exp(log_scale)
    for n in range(1, n_levels):
        nxt = math.sqrt(2.0 / n) * xi * cur - math.sqrt((n - 1.0) / n) * prev
        prev, cur = cur, nxt
        big = np.abs(cur) > 1e150
        if big.any():
            cur[big] *= 1e-150
            prev[big] *= 1e-150
            log_scale[big] += 150 * math.log(10.0)
        out[n] = cur * np.exp(log_scale)
    return out


def _wigner_weyl(rho: np.ndarray, x_axis: np.ndarray, p_axis: np.ndarray) -> np.ndarray:
    """``W(x, p) = (2/pi) int dy <x-y|rho|x+y> exp(4 i p y)`` by the trapezoid rule.

    Equal to the displaced-parity form for any state inside the truncated
    space; the integrand is smooth and compactly supported, so a grid
    finer than its Nyquist spacing converges spectrally.
    """
    m = rho.shape[0]
    evals, evecs = np.linalg.eigh(0.5 * (rho + rho.conj().T))
    keep = evals > 1e-14 * evals.max()
    weights, comps = evals[keep], evecs[:, keep]
    support = math.sqrt(m + 0.5) + 4.0
    k_max = 4.0 * math.sqrt(m + 1.0) + 4.0 * float(np.max(np.abs(p_axis)))
    dy = 0.5 * math.pi / k_max
    y = np.arange(-support, support + dy / 2, dy)
    phase = np.exp(4j * np.outer(y, p_axis)) * dy
    out = np.zeros((x_axis.size, p_axis.size))
    for i, x in enumerate(x_axis):
        plus = hermite_functions(m, x + y)
        minus = hermite_functions(m, x - y)
        # psi_k(x - y) * conj(psi_k(x + y)) summed over mixture components
        prod = np.einsum("k,kj,kj->j", weights, comps.T @ minus, (comps.T @ plus).conj())
        out[i] = (2.0 / math.pi) * np.real(prod @ phase)
    return out


def _wigner_displaced(rho: np.ndarray, x_axis: np.ndarray, p_axis: np.ndarray, pad: int) -> tuple[np.ndarray, float]:
    """``(2/pi) Tr[rho D(alpha) Pi D^dag(alpha)]`` with explicit displacement matrices.

    ``rho`` is embedded in ``dim + pad`` levels; the returned leak is the
    largest trace lost by ``D^dag rho D`` at the top of that space.
    """
    m = rho.shape[0]
    big = m + pad
    rho_big = np.zeros((big, big), dtype=complex)
    rho_big[:m, :m] = rho
    a = destroy(big)
    parity = (-1.0) ** np.arange(big)
    out = np.empty((x_axis.size, p_axis.size))
    leak = 0.0
    for i, x in enumerate(x_axis):
        for j, p in enumerate(p_axis):
            al = complex(x, p)
            d = expm_antihermitian(al * a.conj().T - np.conj(al) * a)
            moved = d.conj().T @ rho_big @ d
            pops = np.diagonal(moved).real
            leak = max(leak, float(pops[-max(1, big // 10):].sum()))
            out[i, j] = 2.0 / np.pi * float(np.sum(parity * pops))
    return out, leak


WIGNER_METHODS = ("weyl", "displaced")


def wigner(state: QuantumState, x_axis=None, p_axis=None, points: int = 101,
           method: str = "weyl", pad: int = 32) -> WignerGrid:
    """Wigner function ``W(alpha) = (2/pi) Tr[rho D(alpha) Pi D^dag(alpha)]``.

    Parameters
    ----------
    state
        Boson state, or boson⊗spin state (the spin is traced out).
    x_axis, p_axis
        Uniform grids; defaults from :func:`default_axes`.
    method
        ``"weyl"`` (default, transform of the position representation) or
        ``"displaced"`` (explicit ``D(alpha)`` on ``dim + pad`` levels,
        slow; meant as a cross-check).
    """
    if method not in WIGNER_METHODS:
        raise ValidationError(f"method must be one of {WIGNER_METHODS}, got {method!r}")
    rho = boson_density(state)
    if x_axis is None or p_axis is None:
        dx, dp = default_axes(state, points)
        x_axis = dx if x_axis is None else x_axis
        p_axis = dp if p_axis is None else p_axis
    x_axis = np.asarray(x_axis, dtype=float)
    p_axis = np.asarray(p_axis, dtype=float)
    for ax in (x_axis, p_axis):
        if ax.ndim != 1 or ax.size < 2 or not np.allclose(np.diff(ax), ax[1] - ax[0], rtol=1e-9, atol=1e-12):
            raise ValidationError("Wigner axes must be uniform 1-D grids with at least two points")
    meta: dict = {"method": method, "boson_dim": int(rho.shape[0]), "warnings": []}
    top = max(1, rho.shape[0] // 10)
    tail = float(np.diagonal(rho).real[-top:].sum())
    if tail > tol.WIGNER_TAIL_WARN:
        meta["warnings"].append(f"state weight {tail:.3g} in the top {top} Fock levels; truncation may distort W")
    if method == "weyl":
        values = _wigner_weyl(rho, x_axis, p_axis)
    else:
        values, leak = _wigner_displaced(rho, x_axis, p_axis, pad)
        if leak > tol.WIGNER_TAIL_WARN:
            meta["warnings"].append(f"displaced state leaks {leak:.3g} into the top levels")
    return WignerGrid(x_axis, p_axis, np.asarray(values, dtype=float), meta)
