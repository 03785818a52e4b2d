import json
import math
import pickle

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st
from scipy.optimize import minimize_scalar

from spt_sim.analytic import (
    DIVERGENT,
    Phase,
    classify_phase,
    critical_coupling,
    displacement_and_angle,
    excitation_energy,
    ground_state_np,
    ground_state_sp,
    is_divergent,
    order_parameter_limit,
    spin_branch,
    unstable_boundary,
    zpf_formulas,
)
from spt_sim.errors import PreconditionError, RangeError, ValidationError
from spt_sim.groundstate import exact_ground_state
from spt_sim.linalg import SIGMA_X, SIGMA_Z, partial_trace
from spt_sim.model import ModelParams, build_hs, build_total, displacement_operator, squeezed_frame
from spt_sim.observables import quadrature_moments

LC = math.sqrt(0.4)


def test_critical_coupling_values():
    assert critical_coupling(1.1, 0.26) == pytest.approx(LC, rel=1e-12)
    assert critical_coupling(0.0, 0.0) == pytest.approx(1.0)
    assert critical_coupling(1.0, 0.26) is None
    assert critical_coupling(2.0, 0.1) is None
    assert unstable_boundary(1.1, 0.26) == pytest.approx(math.sqrt(0.04 / 1.1))
    assert unstable_boundary(1.1, 0.2) is None


def test_rabi_limits():
    np_point = ModelParams(lambda_tilde=0.5)
    assert excitation_energy(np_point) == pytest.approx(math.sqrt(0.75))
    sp_point = ModelParams(lambda_tilde=2.0)
    assert excitation_energy(sp_point) == pytest.approx(math.sqrt(1 - 1 / 16))
    assert order_parameter_limit(sp_point) == pytest.approx((4 - 0.25) / 4)
    assert order_parameter_limit(np_point) == 0.0


def test_reversed_transition_for_a2_and_antisqueezing():
    base = ModelParams(alpha=1.1, xi_over_omega=0.26)
    assert classify_phase(base.replace(lambda_tilde=0.1)).phase is Phase.UP
    assert classify_phase(base.replace(lambda_tilde=0.5)).phase is Phase.SP
    assert classify_phase(base.replace(lambda_tilde=0.7)).phase is Phase.NP
    assert classify_phase(base.replace(lambda_tilde=2.0)).phase is Phase.NP


def test_critical_point_report():
    rep = classify_phase(ModelParams(lambda_tilde=LC, alpha=1.1, xi_over_omega=0.26))
    assert rep.at_critical
    assert rep.omega_e == 0.0
    assert is_divergent(rep.l_np) and is_divergent(rep.l_sp)
    d = rep.to_dict()
    assert d["l_np"] == "divergent" and d["phase"] == "NP"
    json.dumps(d)


def test_superradiant_report_example():
    p = ModelParams(ratio=25, lambda_tilde=0.2, xi_over_omega=0.249)
    rep = classify_phase(p)
    assert rep.phase is Phase.SP
    assert rep.lambda_tilde_s == pytest.approx(math.sqrt(10))
    assert rep.phi == pytest.approx(250 * (10 - 0.1) / 4, rel=1e-10)
    assert order_parameter_limit(p, include_frame_factor=False) == pytest.approx((10 - 0.1) / 4)
    omega_s = math.sqrt(0.004)
    assert rep.beta_abs == pytest.approx(math.sqrt(25 * 9.9 / (4 * omega_s)))
    assert rep.theta == pytest.approx(-0.7353144528, abs=1e-9)
    assert rep.e_g_spin_coeff == pytest.approx(-0.25 * (10 + 0.1))


def test_theta_tends_to_minus_quarter_pi_deep_in_sp():
    _, theta = displacement_and_angle(ModelParams(ratio=50, lambda_tilde=20))
    assert -math.pi / 4 < theta < -0.7
    with pytest.raises(PreconditionError):
        displacement_and_angle(ModelParams(lambda_tilde=0.3))


def test_divergent_marker():
    assert repr(DIVERGENT) == "DIVERGENT"
    assert str(DIVERGENT) == "divergent"
    assert pickle.loads(pickle.dumps(DIVERGENT)) is DIVERGENT
    assert not is_divergent(float("inf"))


def test_unstable_point_rejected():
    p = ModelParams(lambda_tilde=0.1, alpha=1.1, xi_over_omega=0.26)
    assert classify_phase(p).phase is Phase.UP
    assert classify_phase(p).r_tilde is None
    for fn in (excitation_energy, order_parameter_limit, ground_state_np):
        with pytest.raises(PreconditionError):
            fn(p)


@settings(max_examples=50, deadline=None)
@given(lt=st.floats(0, 3), alpha=st.floats(0, 2), xi=st.floats(-0.5, 0.3))
def test_report_invariants(lt, alpha, xi):
    p = ModelParams(lambda_tilde=lt, alpha=alpha, xi_over_omega=xi)
    rep = classify_phase(p)
    if rep.phase is Phase.UP:
        assert p.stiffness <= 0
        return
    assert rep.omega_e >= 0
    assert rep.phi >= 0
    assert (rep.phase is Phase.SP) == (rep.lambda_tilde_s > 1 and not rep.at_critical)


def test_zpf_rabi_and_a2():
    assert zpf_formulas(ModelParams(lambda_tilde=0.0), "rabi") == pytest.approx(0.5)
    assert zpf_formulas(ModelParams(lambda_tilde=0.5), "rabi") == pytest.approx(0.5 * 0.75 ** -0.25)
    assert zpf_formulas(ModelParams(lambda_tilde=2.0), "rabi") == pytest.approx(0.5 * (15 / 16) ** -0.25)
    assert is_divergent(zpf_formulas(ModelParams(lambda_tilde=1.0), "rabi"))
    lts = np.linspace(0, 3, 61)
    vals = [zpf_formulas(ModelParams(lambda_tilde=x, alpha=1.1), "with_a2") for x in lts]
    assert max(vals) <= 0.5 + 1e-15
    with pytest.raises(ValidationError):
        zpf_formulas(ModelParams(), "bogus")


def test_zpf_full_diverges_at_critical():
    base = ModelParams(alpha=1.1, xi_over_omega=0.26)
    assert is_divergent(zpf_formulas(base.replace(lambda_tilde=LC)))
    prev = 0.0
    for d in (1e-5, 1e-6, 1e-7):
        lo = zpf_formulas(base.replace(lambda_tilde=LC - d))
        hi = zpf_formulas(base.replace(lambda_tilde=LC + d))
        assert lo > 10 and hi > 10
        assert min(lo, hi) > prev
        prev = min(lo, hi)


def test_spin_branch_minimises_energy():
    lts, beta, ls, big = 2.0, 3.0, 0.7, 10.0
    for sign in (1, -1):
        v = spin_branch(lts, sign)
        assert np.linalg.norm(v) == pytest.approx(1.0)
        assert np.real(np.vdot(v, SIGMA_X @ v)) * sign <= 0
    # the branch paired with +beta beats its mirror image for a positive coupling
    h = big / 2 * SIGMA_Z + 2 * ls * beta * SIGMA_X
    e = [np.real(np.vdot(spin_branch(lts, s), h @ spin_branch(lts, s))) for s in (1, -1)]
    assert e[0] < e[1]


def test_np_ground_state_matches_exact():
    for p in (ModelParams(ratio=2000, lambda_tilde=0.5, boson_dim=256),
              ModelParams(ratio=2000, lambda_tilde=0.5, alpha=1.1, xi_over_omega=0.1, boson_dim=256)):
        gs = exact_ground_state(build_total(p), (256, 2))
        fid = abs(np.vdot(ground_state_np(p).data, gs.state.data)) ** 2
        assert fid > 0.9999


def test_sp_ground_state_in_exact_ground_doublet():
    p = ModelParams(ratio=200, lambda_tilde=1.5, boson_dim=512)
    gs = exact_ground_state(build_total(p), (512, 2))
    assert gs.near_degenerate
    for branch in ("+", "-"):
        v = ground_state_sp(p, branch=branch).data
        fid = abs(np.vdot(v, gs.state.data)) ** 2 + abs(np.vdot(v, gs.excited.data)) ** 2
        assert fid > 0.995


def test_sp_ground_state_guards():
    with pytest.raises(PreconditionError):
        ground_state_sp(ModelParams(lambda_tilde=0.5))
    with pytest.raises(ValidationError):
        ground_state_sp(ModelParams(lambda_tilde=2.0), branch="x")
    with pytest.raises(RangeError):
        ground_state_sp(ModelParams(ratio=200, lambda_tilde=2.0, boson_dim=64))


def test_cat_parities():
    p = ModelParams(ratio=0.5, lambda_tilde=2.0, boson_dim=64)
    even = ground_state_sp(p, branch="cat_even").data
    odd = ground_state_sp(p, branch="cat_odd").data
    assert np.abs(even[1::2]).max() < 1e-12
    assert np.abs(odd[0::2]).max() < 1e-12


def test_vacuum_np_state():
    state = ground_state_np(ModelParams(boson_dim=8))
    expected = np.zeros(16)
    expected[1] = 1.0
    assert np.allclose(state.data, expected)


def test_np_state_reversed_transition_and_zpf():
    p = ModelParams(ratio=2000, lambda_tilde=1.0, alpha=1.1, xi_over_omega=0.26, boson_dim=256)
    state = ground_state_np(p)
    gs = exact_ground_state(build_total(p), (256, 2))
    assert abs(np.vdot(state.data, gs.state.data)) ** 2 >= 0.999
    assert quadrature_moments(state).x2 == pytest.approx(zpf_formulas(p) ** 2, abs=1e-6)


def test_displacement_variational_oracle():
    p = ModelParams(ratio=1, lambda_tilde=0.2, alpha=1.1, xi_over_omega=0.26, boson_dim=256)
    hs = build_hs(p)
    beta, _ = displacement_and_angle(p)

    def energy(b):
        # coherent boson, best spin state for it
        d = displacement_operator(b, 256)[:, 0]
        v = np.stack([np.kron(d, [1, 0]), np.kron(d, [0, 1])], axis=1)
        return np.linalg.eigvalsh(v.conj().T @ hs @ v)[0]

    res = minimize_scalar(energy, bounds=(0, 7.9), method="bounded", options={"xatol": 1e-9})
    assert res.x == pytest.approx(beta, abs=1e-5)
    big, _ = displacement_and_angle(p.replace(ratio=4))
    assert big == pytest.approx(2 * beta)


def test_sp_boundary_displacement_vanishes():
    beta, theta = displacement_and_angle(ModelParams(lambda_tilde=LC, alpha=1.1, xi_over_omega=0.26))
    assert beta == 0.0 and theta == 0.0


def test_sp_branch_moments_and_reflection():
    p = ModelParams(ratio=0.1, lambda_tilde=0.2, alpha=1.1, xi_over_omega=0.26, boson_dim=512)
    beta, _ = displacement_and_angle(p)
    plus = ground_state_sp(p, branch="+")
    minus = ground_state_sp(p, branch="-")
    r = squeezed_frame(p).r_tilde
    assert quadrature_moments(plus).a.real == pytest.approx(math.exp(-r) * beta, abs=1e-4)
    reflect = np.diag((-1.0) ** np.arange(512))
    rho_plus = partial_trace(plus, 0).data
    rho_minus = partial_trace(minus, 0).data
    assert np.abs(reflect @ rho_plus @ reflect - rho_minus).max() < 1e-6
    even = ground_state_sp(p, branch="cat_even").data
    odd = ground_state_sp(p, branch="cat_odd").data
    assert abs(np.vdot(even, odd)) < 1e-8


def test_zpf_variant_reductions():
    for lt in (0.0, 0.3, 0.7, 1.8):
        p = ModelParams(lambda_tilde=lt, alpha=1.1)
        assert zpf_formulas(p, "with_a2_and_as") == pytest.approx(zpf_formulas(p, "with_a2"), rel=1e-14)
    for lt in (0.0, 0.3, 0.7, 0.95):
        p = ModelParams(lambda_tilde=lt)
        assert zpf_formulas(p, "with_a2") == pytest.approx(zpf_formulas(p, "rabi"), rel=1e-14)


def test_gap_and_order_parameter_near_critical():
    base = ModelParams(alpha=1.1, xi_over_omega=0.26)
    eps = np.array([1e-2, 1e-3, 1e-4, 1e-5])
    for side in (-1, 1):
        gaps = [excitation_energy(base.replace(lambda_tilde=LC + side * e)) for e in eps]
        assert all(g > 0 for g in gaps)
        assert all(b < a for a, b in zip(gaps, gaps[1:]))
    phis = [order_parameter_limit(base.replace(lambda_tilde=LC - e)) for e in eps]
    assert all(f > 0 for f in phis)
    assert phis[-1] < 1e-3 and all(b < a for a, b in zip(phis, phis[1:]))


@settings(max_examples=60, deadline=None)
@given(lt=st.floats(0.2, 3.0))
def test_phase_boundary_matches_critical_coupling(lt):
    assume(abs(lt - LC) > 1e-9)
    rep = classify_phase(ModelParams(lambda_tilde=lt, alpha=1.1, xi_over_omega=0.26))
    assert rep.phase is (Phase.SP if lt < LC else Phase.NP)
