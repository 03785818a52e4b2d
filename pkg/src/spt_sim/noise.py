"""Per-qubit decoherence channels and the pseudo-pure state.

Qubit ``i`` (1-based) carries binary weight ``2**(i-1)`` in the register
index, so for a boson⊗spin register of ``2**N * 2`` levels qubit 1 is the
spin and qubits ``2..N+1`` are the mapping qubits.  Bit value 0 is spin up.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import tolerances as tol
from .errors import ValidationError
from .linalg import SIGMA_Z, QuantumState

CHANNELS = ("pd", "gad")


def _as_tuple(values, n: int, name: str) -> tuple[float, ...]:
    if np.isscalar(values):
        values = [values] * n
    out = tuple(float(v) for v in values)
    if len(out) != n:
        raise ValidationError(f"{name} needs {n} entries, got {len(out)}")
    if any(not math.isfinite(v) or v <= 0 for v in out):
        raise ValidationError(f"{name} entries must be finite and > 0")
    return out


@dataclass(frozen=True)
class NoiseParams:
    """Relaxation (``t1``) and dephasing (``t2``) times per qubit and an exposure ``dt``.

    There are no default times: values must come from the hardware being
    modelled.  ``dt = 0`` is allowed and gives identity channels.
    """

    n_qubits: int
    t1: tuple[float, ...]
    t2: tuple[float, ...]
    dt: float
    p_gad: float = 0.5
    order: tuple[str, ...] = ("pd", "gad")

    def __post_init__(self):
        if not isinstance(self.n_qubits, (int, np.integer)) or self.n_qubits < 1:
            raise ValidationError(f"n_qubits must be a positive integer, got {self.n_qubits!r}")
        object.__setattr__(self, "t1", _as_tuple(self.t1, self.n_qubits, "t1"))
        object.__setattr__(self, "t2", _as_tuple(self.t2, self.n_qubits, "t2"))
        if not (math.isfinite(self.dt) and self.dt >= 0):
            raise ValidationError(f"dt must be finite and >= 0, got {self.dt!r}")
        if not 0.0 <= self.p_gad <= 1.0:
            raise ValidationError(f"p_gad must lie in [0, 1], got {self.p_gad!r}")
        order = tuple(self.order)
        if not order or any(c not in CHANNELS for c in order):
            raise ValidationError(f"order must be a non-empty sequence drawn from {CHANNELS}")
        object.__setattr__(self, "order", order)

    def pd_probability(self, qubit: int) -> float:
        """``p_i = (1 - exp(-dt/T2_i)) / 2``."""
        return 0.5 * (1.0 - math.exp(-self.dt / self.t2[qubit - 1]))

    def eta(self, qubit: int) -> float:
        """``eta_i = 1 - exp(-dt/T1_i)``."""
        return 1.0 - math.exp(-self.dt / self.t1[qubit - 1])

    def to_dict(self) -> dict:
        return {"n_qubits": self.n_qubits, "t1": list(self.t1), "t2": list(self.t2),
                "dt": self.dt, "p_gad": self.p_gad, "order": list(self.order)}

    @classmethod
    def from_json(cls, text: str) -> "NoiseParams":
        raw = json.loads(text)
        if not isinstance(raw, dict):
            raise ValidationError("NoiseParams JSON must be an object")
        allowed = {"n_qubits", "t1", "t2", "dt", "p_gad", "order"}
        unknown = sorted(set(raw) - allowed)
        missing = sorted({"n_qubits", "t1", "t2", "dt"} - set(raw))
        if unknown or missing:
            raise ValidationError(f"NoiseParams JSON: unknown keys {unknown}, missing keys {missing}")
        return cls(**raw)


def _check_qubit(rho: QuantumState, qubit: int) -> int:
    n = int(round(math.log2(rho.dim)))
    if 2 ** n != rho.dim:
        raise ValidationError(f"register dimension {rho.dim} is not a power of two")
    if not 1 <= qubit <= n:
        raise ValidationError(f"qubit index {qubit} out of range 1..{n}")
    return n


def _apply_local(rho: np.ndarray, kraus: Sequence[np.ndarray], qubit: int, n: int) -> np.ndarray:
    """``sum_k K rho K^dag`` with ``K`` acting on ``qubit`` (weight ``2**(qubit-1)``)."""
    # axis order of the reshaped tensor: most significant bit first
    axis = n - qubit
    shape = (2,) * n
    t = rho.reshape(shape + shape)
    out = np.zeros_like(t)
    for k in kraus:
        left = np.moveaxis(np.tensordot(k, t, axes=([1], [axis])), 0, axis)
        both = np.moveaxis(np.tensordot(left, k.conj(), axes=([n + axis], [1])), -1, n + axis)
        out += both
    return out.reshape(rho.shape)


def _result(rho: QuantumState, data: np.ndarray, record: str) -> QuantumState:
    data = 0.5 * (data + data.conj().T)
    applied = list(rho.meta.get("channels", [])) + [record]
    return QuantumState("density", rho.dims, data, {**rho.meta, "channels": applied})


def pd_kraus(p: float) -> list[np.ndarray]:
    return [math.sqrt(1.0 - p) * np.eye(2, dtype=complex), math.sqrt(p) * SIGMA_Z]


def phase_damping(rho: QuantumState, noise: NoiseParams, qubit: int) -> QuantumState:
    """``(1 - p_i) rho + p_i Z_i rho Z_i``."""
    n = _check_qubit(rho, qubit)
    p = noise.pd_probability(qubit)
    data = _apply_local(rho.matrix(), pd_kraus(p), qubit, n)
    return _result(rho, data, f"pd{qubit}")


def gad_kraus(p: float, eta: float) -> list[np.ndarray]:
    """Generalized amplitude damping Kraus set; completeness is asserted."""
    e1 = math.sqrt(p) * np.array([[1, 0], [0, math.sqrt(1 - eta)]], dtype=complex)
    e2 = math.sqrt(1 - p) * np.array([[0, 0], [math.sqrt(eta), 0]], dtype=complex)
    e3 = math.sqrt(1 - p) * np.array([[math.sqrt(1 - eta), 0], [0, 1]], dtype=complex)
    e4 = math.sqrt(p) * np.array([[0, math.sqrt(eta)], [0, 0]], dtype=complex)
    ks = [e1, e2, e3, e4]
    total = sum(k.conj().T @ k for k in ks)
    if np.max(np.abs(total - np.eye(2))) > tol.KRAUS_COMPLETENESS_ATOL:
        raise AssertionError("GAD Kraus operators are not complete")
    return ks


def generalized_amplitude_damping(rho: QuantumState, noise: NoiseParams, qubit: int) -> QuantumState:
    n = _check_qubit(rho, qubit)
    ks = gad_kraus(noise.p_gad, noise.eta(qubit))
    data = _apply_local(rho.matrix(), ks, qubit, n)
    return _result(rho, data, f"gad{qubit}")


def apply_all_qubits(rho: QuantumState, noise: NoiseParams) -> QuantumState:
    """Apply the channels of ``noise.order`` to qubit 1, then qubit 2, and so on."""
    n = _check_qubit(rho, 1)
    if n != noise.n_qubits:
        raise ValidationError(f"state has {n} qubits but NoiseParams has {noise.n_qubits}")
    out = rho.to_density()
    for q in range(1, n + 1):
        for ch in noise.order:
            out = phase_damping(out, noise, q) if ch == "pd" else generalized_amplitude_damping(out, noise, q)
    return out.with_meta(order=list(noise.order))


@dataclass(frozen=True)
class PseudoPureState:
    epsilon: float
    n_qubits: int

    def __post_init__(self):
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValidationError(f"epsilon must lie in [0, 1], got {self.epsilon!r}")
        if not isinstance(self.n_qubits, (int, np.integer)) or self.n_qubits < 1:
            raise ValidationError("n_qubits must be a positive integer")

    @property
    def dim(self) -> int:
        return 2 ** self.n_qubits

    def matrix(self) -> np.ndarray:
        rho = (1.0 - self.epsilon) / self.dim * np.eye(self.dim, dtype=complex)
        rho[0, 0] += self.epsilon
        return rho

    def state(self) -> QuantumState:
        return QuantumState.density(self.matrix(), (self.dim,))


def pseudo_pure(epsilon: float, n_qubits: int) -> PseudoPureState:
    """``((1 - eps)/2**n) I + eps |0..0><0..0|``."""
    return PseudoPureState(float(epsilon), n_qubits)
