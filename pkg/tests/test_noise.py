import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_density
from spt_sim.errors import ValidationError
from spt_sim.linalg import QuantumState
from spt_sim.noise import (
    NoiseParams,
    apply_all_qubits,
    gad_kraus,
    generalized_amplitude_damping,
    pd_kraus,
    phase_damping,
    pseudo_pure,
)


def full_register(k, qubit, n):
    """Embed a one-qubit operator; qubit 1 is the rightmost (least significant) factor."""
    out = np.eye(1)
    for q in range(n, 0, -1):
        out = np.kron(out, k if q == qubit else np.eye(2))
    return out


def brute_channel(rho, kraus, qubit, n):
    return sum(full_register(k, qubit, n) @ rho @ full_register(k, qubit, n).conj().T for k in kraus)


def test_kraus_completeness():
    for p in (0.0, 0.2, 0.5):
        ks = pd_kraus(p)
        assert np.abs(sum(k.conj().T @ k for k in ks) - np.eye(2)).max() < 1e-12
    for p in (0.0, 0.3, 1.0):
        for eta in (0.0, 0.4, 1.0):
            ks = gad_kraus(p, eta)
            assert np.abs(sum(k.conj().T @ k for k in ks) - np.eye(2)).max() < 1e-12


def test_probabilities():
    nz = NoiseParams(2, t1=[4.0, 2.0], t2=1.0, dt=0.5)
    assert nz.pd_probability(1) == pytest.approx(0.5 * (1 - math.exp(-0.5)))
    assert nz.eta(2) == pytest.approx(1 - math.exp(-0.25))
    assert NoiseParams(1, 1.0, 1.0, dt=0.0).eta(1) == 0.0


@pytest.mark.parametrize("qubit", [1, 2, 3])
def test_local_application_matches_brute_force(rng, qubit):
    n = 3
    rho = QuantumState.density(random_density(rng, 8), (8,))
    nz = NoiseParams(n, t1=[3.0, 5.0, 7.0], t2=[1.0, 2.0, 0.5], dt=0.3, p_gad=0.3)
    out = phase_damping(rho, nz, qubit).data
    ref = brute_channel(rho.data, pd_kraus(nz.pd_probability(qubit)), qubit, n)
    assert np.abs(out - ref).max() < 1e-12
    out = generalized_amplitude_damping(rho, nz, qubit).data
    ref = brute_channel(rho.data, gad_kraus(0.3, nz.eta(qubit)), qubit, n)
    assert np.abs(out - ref).max() < 1e-12


def test_qubit_one_is_the_spin():
    # boson (2 levels) ⊗ spin: dephasing qubit 1 must only touch spin coherences
    n = 2
    plus = np.array([1, 1]) / math.sqrt(2)
    v = np.kron([1, 0], plus)
    rho = QuantumState.pure(v, (4,)).to_density()
    nz = NoiseParams(n, t1=1e9, t2=1.0, dt=1.0)
    out = phase_damping(rho, nz, 1).data
    assert out[0, 1] == pytest.approx(0.5 * math.exp(-1.0))
    boson_only = phase_damping(rho, nz, 2).data
    assert boson_only[0, 1] == pytest.approx(0.5)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2 ** 16), dt=st.floats(0, 5), p=st.floats(0, 1))
def test_trace_and_positivity_preserved(seed, dt, p):
    rng = np.random.default_rng(seed)
    rho = QuantumState.density(random_density(rng, 8), (8,))
    nz = NoiseParams(3, t1=[1.0, 2.0, 3.0], t2=[0.5, 1.0, 1.5], dt=dt, p_gad=p)
    out = apply_all_qubits(rho, nz)
    assert abs(np.trace(out.data) - 1) <= 1e-10
    assert np.linalg.eigvalsh(out.data).min() > -1e-10
    assert out.meta["channels"] == ["pd1", "gad1", "pd2", "gad2", "pd3", "gad3"]


def test_gad_fixed_point():
    nz = NoiseParams(1, t1=1.0, t2=1.0, dt=0.3, p_gad=0.5, order=("gad",))
    rho = QuantumState.pure([1, 0], (2,)).to_density()
    for _ in range(100):
        rho = apply_all_qubits(rho, nz)
    assert np.abs(rho.data - np.eye(2) / 2).max() < 1e-6


def test_gad_biased_fixed_point():
    nz = NoiseParams(1, t1=1.0, t2=1.0, dt=0.5, p_gad=0.8, order=("gad",))
    rho = QuantumState.pure([0, 1], (2,)).to_density()
    for _ in range(200):
        rho = apply_all_qubits(rho, nz)
    assert np.allclose(np.diagonal(rho.data).real, [0.8, 0.2], atol=1e-8)


def test_zero_exposure_is_identity(rng):
    rho = QuantumState.density(random_density(rng, 4), (4,))
    out = apply_all_qubits(rho, NoiseParams(2, 1.0, 1.0, dt=0.0, p_gad=0.5))
    assert np.abs(out.data - rho.data).max() < 1e-12


def test_validation():
    with pytest.raises(ValidationError):
        NoiseParams(2, t1=[1.0], t2=1.0, dt=0.1)
    with pytest.raises(ValidationError):
        NoiseParams(1, t1=-1.0, t2=1.0, dt=0.1)
    with pytest.raises(ValidationError):
        NoiseParams(1, 1.0, 1.0, dt=0.1, order=("ad",))
    rho = QuantumState.density(np.eye(4) / 4, (4,))
    with pytest.raises(ValidationError):
        apply_all_qubits(rho, NoiseParams(3, 1.0, 1.0, dt=0.1))
    with pytest.raises(ValidationError):
        phase_damping(rho, NoiseParams(2, 1.0, 1.0, dt=0.1), 3)


def test_json_roundtrip_and_strict_keys():
    nz = NoiseParams(2, t1=[1.0, 2.0], t2=[0.5, 0.6], dt=0.1, p_gad=0.4)
    assert NoiseParams.from_json(json.dumps(nz.to_dict())) == nz
    with pytest.raises(ValidationError):
        NoiseParams.from_json(json.dumps({**nz.to_dict(), "t3": 1}))
    with pytest.raises(ValidationError):
        NoiseParams.from_json(json.dumps({"n_qubits": 1, "t1": 1.0}))


def test_pseudo_pure():
    pp = pseudo_pure(0.1, 3)
    rho = pp.matrix()
    assert np.trace(rho) == pytest.approx(1.0)
    assert rho[0, 0] == pytest.approx(0.9 / 8 + 0.1)
    assert rho[5, 5] == pytest.approx(0.9 / 8)
    pp.state().validate()
    # traceless observables see eps times the pure-state value
    z = np.diag([1, -1, 1, -1, 1, -1, 1, -1])
    assert np.trace(rho @ z) == pytest.approx(0.1)
    with pytest.raises(ValidationError):
        pseudo_pure(1.5, 2)


def test_pd_closed_form_and_composition():
    nz = NoiseParams(1, t1=1.0, t2=2.0, dt=2.0)
    p = nz.pd_probability(1)
    assert p == pytest.approx((1 - math.exp(-1)) / 2)
    plus = QuantumState.pure(np.array([1, 1]) / math.sqrt(2), (2,)).to_density()
    once = phase_damping(plus, nz, 1)
    assert once.data[0, 1] == pytest.approx(0.5 * math.exp(-1))
    twice = phase_damping(once, nz, 1).data
    composed = brute_channel(plus.data, pd_kraus(2 * p - 2 * p * p), 1, 1)
    assert np.abs(twice - composed).max() < 1e-12


def test_gad_zero_eta_is_identity(rng):
    rho = QuantumState.density(random_density(rng, 4), (4,))
    nz = NoiseParams(2, t1=1e300, t2=1.0, dt=1.0, p_gad=0.3)
    assert nz.eta(1) == 0.0
    assert np.abs(generalized_amplitude_damping(rho, nz, 2).data - rho.data).max() < 1e-12


def test_pd_fixed_points_are_diagonal(rng):
    nz = NoiseParams(3, t1=1.0, t2=0.7, dt=0.4, order=("pd",))
    ground = QuantumState.pure(np.eye(8)[0], (8,)).to_density()
    assert np.abs(apply_all_qubits(ground, nz).data - ground.data).max() < 1e-15
    diag = QuantumState.density(np.diag(rng.dirichlet(np.ones(8))), (8,))
    assert np.abs(apply_all_qubits(diag, nz).data - diag.data).max() < 1e-15
    rho = QuantumState.density(random_density(rng, 8), (8,))
    assert np.abs(apply_all_qubits(rho, nz).data - rho.data).max() > 1e-3


def test_channels_on_different_qubits_commute(rng):
    rho = QuantumState.density(random_density(rng, 8), (8,))
    nz = NoiseParams(3, t1=[1.0, 2.0, 3.0], t2=[0.5, 1.0, 1.5], dt=0.3, p_gad=0.2)
    ab = generalized_amplitude_damping(phase_damping(rho, nz, 1), nz, 3).data
    ba = phase_damping(generalized_amplitude_damping(rho, nz, 3), nz, 1).data
    assert np.abs(ab - ba).max() < 1e-12


def test_pseudo_pure_limits():
    assert np.allclose(pseudo_pure(1.0, 2).matrix(), np.diag([1, 0, 0, 0]))
    assert np.allclose(pseudo_pure(0.0, 2).matrix(), np.eye(4) / 4)
    rho = pseudo_pure(1e-5, 4).matrix()
    z1 = full_register(np.diag([1, -1]), 1, 4)
    assert np.trace(rho @ z1).real == pytest.approx(1e-5, rel=1e-9)
