"""Dense complex linear algebra used by every other module.

Operators are plain ``numpy`` complex arrays of shape ``(dim, dim)``.  States
carry their subsystem dimensions in :class:`QuantumState` because the partial
trace, entropy and noise channels need them.

Tensor order is boson ⊗ spin everywhere.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from typing import Mapping, Sequence

import numpy as np

from . import tolerances as tol
from .errors import CapacityError, NumericError, UnsupportedShapeError, ValidationError

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
# |0> = spin up, |1> = spin down
SPIN_UP = np.array([1, 0], dtype=complex)
SPIN_DOWN = np.array([0, 1], dtype=complex)


def as_operator(m) -> np.ndarray:
    """Return ``m`` as a square complex array, or raise ValidationError."""
    arr = np.asarray(m, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 1:
        raise ValidationError(f"operator must be a non-empty square matrix, got shape {arr.shape}")
    return arr


def is_hermitian(m: np.ndarray, rtol: float = tol.HERMITIAN_RTOL) -> bool:
    m = np.asarray(m)
    scale = float(np.max(np.abs(m))) if m.size else 0.0
    if scale == 0.0:
        return True
    return float(np.max(np.abs(m - m.conj().T))) <= rtol * scale


def kron(a, b, max_dim: int = tol.MAX_DIM) -> np.ndarray:
    """Kronecker product with a capacity guard.

    Entry ``(i*dimB + k, j*dimB + l)`` equals ``a[i, j] * b[k, l]``.
    """
    a = as_operator(a)
    b = as_operator(b)
    dim = a.shape[0] * b.shape[0]
    if dim > max_dim:
        raise CapacityError(f"kron dimension {dim} exceeds the limit {max_dim}")
    return np.kron(a, b)


def kron_all(*ops, max_dim: int = tol.MAX_DIM) -> np.ndarray:
    return reduce(lambda x, y: kron(x, y, max_dim=max_dim), ops)


def eig_hermitian(h, check: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a Hermitian matrix.

    Parameters
    ----------
    h : array_like
        Hermitian matrix.
    check : bool
        If true, verify the residual and orthonormality bounds and raise
        :class:`NumericError` when they are violated.

    Returns
    -------
    evals : ndarray
        Real eigenvalues in ascending order.
    evecs : ndarray
        Eigenvectors as columns.
    """
    h = as_operator(h)
    if not is_hermitian(h):
        raise ValidationError("eig_hermitian requires a Hermitian matrix")
    try:
        evals, evecs = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise NumericError(f"Hermitian eigensolver did not converge: {exc}") from exc
    if check:
        _check_eigensystem(h, evals, evecs)
    return evals, evecs


def _check_eigensystem(h, evals, evecs):
    hnorm = max(np.linalg.norm(h, 2), 1.0)
    resid = np.linalg.norm(h @ evecs - evecs * evals, axis=0).max()
    if resid > tol.EIG_RESIDUAL_RTOL * hnorm:
        raise NumericError(f"eigen residual {resid:.3e} exceeds bound")
    ortho = np.abs(evecs.conj().T @ evecs - np.eye(len(evals))).max()
    if ortho > tol.ORTHONORMAL_ATOL:
        raise NumericError(f"eigenvectors not orthonormal (deviation {ortho:.3e})")


def jacobi_eigh(h, rtol: float = 1e-14, max_sweeps: int = tol.JACOBI_MAX_SWEEPS):
    """Cyclic Jacobi eigensolver for small complex Hermitian matrices.

    Independent of LAPACK; used to cross-check :func:`eig_hermitian`.
    Each rotation first removes the phase of the pivot ``h[p, q]`` and then
    applies a real Givens rotation that zeroes it.
    """
    a = as_operator(h).copy()
    n = a.shape[0]
    if n > tol.JACOBI_MAX_DIM:
        raise CapacityError(f"Jacobi oracle limited to dim <= {tol.JACOBI_MAX_DIM}, got {n}")
    if not is_hermitian(a):
        raise ValidationError("jacobi_eigh requires a Hermitian matrix")
    v = np.eye(n, dtype=complex)
    scale = max(np.linalg.norm(a), 1e-300)
    for sweep in range(1, max_sweeps + 1):
        off = np.sqrt(np.sum(np.abs(a) ** 2) - np.sum(np.abs(np.diag(a)) ** 2))
        if off <= rtol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                mag = abs(apq)
                if mag <= 1e-300:
                    continue
                phase = apq / mag
                theta = (a[q, q].real - a[p, p].real) / (2.0 * mag)
                t = (1.0 if theta >= 0 else -1.0) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                # columns p, q of the unitary: phase fix diag(1, conj(phase)) then rotation
                u = np.array([[c, s], [-s * np.conj(phase), c * np.conj(phase)]])
                idx = [p, q]
                a[:, idx] = a[:, idx] @ u
                a[idx, :] = u.conj().T @ a[idx, :]
                a[q, p] = 0.0
                a[p, q] = 0.0
                v[:, idx] = v[:, idx] @ u
    else:
        off = np.sqrt(np.sum(np.abs(a) ** 2) - np.sum(np.abs(np.diag(a)) ** 2))
        if off > rtol * scale:
            raise NumericError(f"Jacobi eigensolver did not converge after {max_sweeps} sweeps")
    evals = np.diag(a).real
    order = np.argsort(evals, kind="stable")
    return evals[order], v[:, order]


def expm_hermitian_generator(h, t: float) -> np.ndarray:
    """Return ``exp(-i h t)`` computed from the eigen-decomposition of ``h``."""
    evals, evecs = eig_hermitian(h)
    return (evecs * np.exp(-1j * evals * t)) @ evecs.conj().T


def expm_antihermitian(g) -> np.ndarray:
    """``exp(g)`` for anti-Hermitian ``g`` (so ``i g`` is Hermitian)."""
    g = as_operator(g)
    return expm_hermitian_generator(1j * g, 1.0)


def destroy(dim: int) -> np.ndarray:
    """Truncated annihilation operator, ``<m|a|n> = sqrt(n) delta_{m,n-1}``."""
    if dim < 1:
        raise ValidationError("boson dimension must be >= 1")
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1).astype(complex)


def number_diag(dim: int) -> np.ndarray:
    return np.diag(np.arange(dim, dtype=float)).astype(complex)


@dataclass(frozen=True, eq=False)
class QuantumState:
    """A pure state vector or a density matrix with subsystem dimensions.

    ``kind`` is ``"pure"`` or ``"density"``; ``dims`` lists the factor
    dimensions (boson first, then spin).  ``meta`` carries provenance such
    as the channel order applied by the noise module.
    """

    kind: str
    dims: tuple[int, ...]
    data: np.ndarray
    meta: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("pure", "density"):
            raise ValidationError(f"unknown state kind {self.kind!r}")
        dims = tuple(int(d) for d in self.dims)
        if not dims or any(d < 1 for d in dims):
            raise ValidationError(f"invalid subsystem dimensions {self.dims}")
        object.__setattr__(self, "dims", dims)
        data = np.asarray(self.data, dtype=complex)
        object.__setattr__(self, "data", data)
        total = int(np.prod(dims))
        if self.kind == "pure" and data.shape != (total,):
            raise ValidationError(f"pure state needs shape ({total},), got {data.shape}")
        if self.kind == "density" and data.shape != (total, total):
            raise ValidationError(f"density matrix needs shape ({total}, {total}), got {data.shape}")

    @classmethod
    def pure(cls, vec, dims: Sequence[int] | None = None, normalize: bool = False, **meta):
        vec = np.asarray(vec, dtype=complex).ravel()
        if normalize:
            norm = np.linalg.norm(vec)
            if norm == 0:
                raise ValidationError("cannot normalise the zero vector")
            vec = vec / norm
        state = cls("pure", tuple(dims) if dims else (vec.size,), vec, dict(meta))
        state.validate()
        return state

    @classmethod
    def density(cls, mat, dims: Sequence[int] | None = None, **meta):
        mat = np.asarray(mat, dtype=complex)
        state = cls("density", tuple(dims) if dims else (mat.shape[0],), mat, dict(meta))
        state.validate()
        return state

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims))

    @property
    def is_pure(self) -> bool:
        return self.kind == "pure"

    def validate(self) -> None:
        if self.is_pure:
            norm = np.linalg.norm(self.data)
            if abs(norm - 1.0) > tol.NORM_ATOL:
                raise ValidationError(f"pure state norm {norm:.12f} differs from 1")
            return
        rho = self.data
        if not is_hermitian(rho, rtol=1e-10):
            raise ValidationError("density matrix is not Hermitian")
        tr = np.trace(rho).real
        if abs(tr - 1.0) > tol.TRACE_ATOL:
            raise ValidationError(f"density matrix trace {tr:.12f} differs from 1")
        lo = np.linalg.eigvalsh(rho).min()
        if lo < -tol.PSD_ATOL:
            raise ValidationError(f"density matrix has negative eigenvalue {lo:.3e}")

    def to_density(self) -> "QuantumState":
        if not self.is_pure:
            return self
        return QuantumState("density", self.dims, np.outer(self.data, self.data.conj()), dict(self.meta))

    def matrix(self) -> np.ndarray:
        """Density matrix of the state (outer product for pure states)."""
        return self.to_density().data

    def with_meta(self, **meta) -> "QuantumState":
        merged = dict(self.meta)
        merged.update(meta)
        return QuantumState(self.kind, self.dims, self.data, merged)


def partial_trace(state: QuantumState, keep: int) -> QuantumState:
    """Reduced density matrix of factor ``keep`` of a bipartite state."""
    if len(state.dims) != 2:
        raise UnsupportedShapeError(f"partial_trace supports two factors, got dims {state.dims}")
    if keep not in (0, 1):
        raise ValidationError(f"keep must be 0 or 1, got {keep}")
    d0, d1 = state.dims
    if state.is_pure:
        psi = state.data.reshape(d0, d1)
        red = psi @ psi.conj().T if keep == 0 else psi.T @ psi.conj()
    else:
        rho = state.data.reshape(d0, d1, d0, d1)
        red = np.einsum("ijkj->ik", rho) if keep == 0 else np.einsum("ijil->jl", rho)
    red = 0.5 * (red + red.conj().T)
    return QuantumState("density", (state.dims[keep],), red)
