"""Binary spin-to-oscillator mapping.

``N`` qubits encode the Fock levels ``0 .. 2**N - 1``: level ``n`` is the
computational basis state whose bits spell ``n``, with qubit ``i``
(``i = 1..N``) carrying weight ``2**(i-1)``.  Bit value 1 is spin down
(``sigma_z = -1``).  In matrix form qubit ``N`` is the leftmost Kronecker
factor, so the row index of a basis state is exactly ``n``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .linalg import SIGMA_Z, kron_all

# single-bit transition operators in the {|0>, |1>} basis
_BIT_RAISE = np.array([[0, 0], [1, 0]], dtype=complex)   # |1><0|
_BIT_LOWER = np.array([[0, 1], [0, 0]], dtype=complex)   # |0><1|
_I2 = np.eye(2, dtype=complex)


@dataclass(frozen=True)
class MappingConfig:
    n_qubits: int

    def __post_init__(self):
        if not isinstance(self.n_qubits, (int, np.integer)) or not 1 <= self.n_qubits <= 11:
            raise ValidationError(f"n_qubits must be an integer in [1, 11], got {self.n_qubits!r}")

    @property
    def boson_dim(self) -> int:
        return 2 ** self.n_qubits


def qubit_operator(op: np.ndarray, qubit: int, n_qubits: int) -> np.ndarray:
    """Embed a single-qubit operator acting on qubit ``qubit`` (1-based)."""
    if not 1 <= qubit <= n_qubits:
        raise ValidationError(f"qubit index {qubit} out of range 1..{n_qubits}")
    factors = [_I2] * n_qubits
    # leftmost factor is qubit N
    factors[n_qubits - qubit] = np.asarray(op, dtype=complex)
    return kron_all(*factors)


def spin_sum_number_operator(cfg: MappingConfig) -> np.ndarray:
    """Number operator assembled as ``-sum_i 2**(i-2) sigma_z^(i) + (2**N - 1)/2``."""
    n = cfg.n_qubits
    out = (2 ** n - 1) / 2 * np.eye(cfg.boson_dim, dtype=complex)
    for i in range(1, n + 1):
        out -= 2.0 ** (i - 2) * qubit_operator(SIGMA_Z, i, n)
    return out


def number_operator(cfg: MappingConfig) -> np.ndarray:
    """``diag(0, 1, ..., 2**N - 1)``, checked against the spin-sum construction."""
    direct = np.diag(np.arange(cfg.boson_dim, dtype=float)).astype(complex)
    spin = spin_sum_number_operator(cfg)
    # every term is a multiple of 1/2, so the comparison is exact in floating point
    if not np.array_equal(direct, spin):
        raise AssertionError("spin-sum number operator disagrees with diag(0..2^N-1)")
    return direct


def ladder_words(cfg: MappingConfig) -> tuple[np.ndarray, np.ndarray]:
    """Increment / decrement operators ``A+`` and ``A-`` as sums of bit-flip words.

    Word ``k`` sets bit ``k`` from 0 to 1 and clears bits ``1..k-1`` from 1 to
    0, which is a binary increment whenever bits below ``k`` are all 1 and
    bit ``k`` is 0.  The top level has no successor, so ``A+`` annihilates it.
    """
    n = cfg.n_qubits
    a_plus = np.zeros((cfg.boson_dim, cfg.boson_dim), dtype=complex)
    for k in range(1, n + 1):
        factors = []
        for qubit in range(n, 0, -1):
            if qubit == k:
                factors.append(_BIT_RAISE)
            elif qubit < k:
                factors.append(_BIT_LOWER)
            else:
                factors.append(_I2)
        a_plus += kron_all(*factors)
    return a_plus, a_plus.conj().T.copy()


def _sqrt_diag(m: np.ndarray) -> np.ndarray:
    # number operators here are diagonal, so the square root is elementwise
    return np.diag(np.sqrt(np.clip(np.diag(m).real, 0.0, None))).astype(complex)


def annihilation_operator(cfg: MappingConfig) -> np.ndarray:
    """``a = A- sqrt(Sigma_z)`` built from the ladder words."""
    _, a_minus = ladder_words(cfg)
    return a_minus @ _sqrt_diag(number_operator(cfg))


def creation_operator(cfg: MappingConfig) -> np.ndarray:
    """``a^dagger = A+ sqrt(Sigma_z + 1)``, constructed independently of ``a``."""
    a_plus, _ = ladder_words(cfg)
    eye = np.eye(cfg.boson_dim, dtype=complex)
    return a_plus @ _sqrt_diag(number_operator(cfg) + eye)
