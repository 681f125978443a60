import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import tiny_instance
from newtondp import (
    GeneralizedJacobian,
    Identity,
    ScaledIdentity,
    SolverConfig,
    alpha_value_iteration,
    asymptotic_rate_prediction,
    brute_force_optimal,
    contraction_ratios,
    empirical_rate,
    kappa_sequence,
    policy_iteration,
    random_mdp,
    residual,
    spectral_radius_estimate,
    value_iteration,
)
from newtondp.bellman import b_differential_element
from newtondp.diagnostics import InsufficientDataError, global_rate_bound

traced = dict(record_trace=True)


def test_brute_force_m1(m1):
    v, pi = brute_force_optimal(m1)
    np.testing.assert_array_equal(v, [2.0])
    assert pi.tolist() == [0]


def test_brute_force_m2(m2, m2_expected):
    v, pi = brute_force_optimal(m2)
    np.testing.assert_allclose(v, m2_expected["optimal_value"], rtol=0, atol=1e-15)
    assert pi.tolist() == m2_expected["optimal_policy"]


def test_brute_force_is_fixed_point():
    for i in range(100):
        mdp = tiny_instance(i)
        v, _ = brute_force_optimal(mdp)
        assert np.abs(residual(mdp, v)).max() <= 1e-8


def test_contraction_ratios_vi_m1(m1):
    res = value_iteration(m1, [0.0], SolverConfig(**traced))
    r = contraction_ratios(res.trace, [2.0])
    finite = r[np.isfinite(r)]
    assert finite.size >= 30
    np.testing.assert_array_equal(finite, 0.5)


def test_contraction_ratios_saturate_to_nan(m1):
    res = policy_iteration(m1, [1], SolverConfig(**traced))
    r = contraction_ratios(res.trace, [2.0])
    assert r.tolist() == [0.0]
    res = value_iteration(m1, [2.0], SolverConfig(**traced))
    with pytest.raises(InsufficientDataError):
        contraction_ratios(res.trace, [2.0])


def test_pi_final_ratio_vanishes():
    for i in range(0, 100, 7):
        mdp = tiny_instance(i)
        v, _ = brute_force_optimal(mdp)
        res = policy_iteration(mdp, config=SolverConfig(**traced))
        if len(res.trace) < 2:
            continue
        r = contraction_ratios(res.trace, v)
        last = r[np.isfinite(r)]
        assert last.size == 0 or last[-1] <= 1e-6


def test_kappa_identity_is_gamma():
    for i in range(30):
        mdp = tiny_instance(i)
        res = value_iteration(mdp, config=SolverConfig(**traced))
        k = kappa_sequence(mdp, res.trace, Identity())
        np.testing.assert_allclose(k, mdp.gamma, rtol=0, atol=1e-12)


def test_kappa_generalized_jacobian_is_zero():
    for i in range(30):
        mdp = tiny_instance(i)
        res = policy_iteration(mdp, config=SolverConfig(**traced))
        assert np.all(kappa_sequence(mdp, res.trace, GeneralizedJacobian()) <= 1e-12)


@pytest.mark.parametrize("alpha", [1.0, 1.3, 2.0])
def test_kappa_scaled_identity_row_sum_oracle(alpha):
    for i in range(20):
        mdp = tiny_instance(i)
        rng = np.random.default_rng(i)
        theta = rng.uniform(-3, 3, mdp.n)
        J, _ = b_differential_element(mdp, theta)
        M = (alpha * np.eye(mdp.n) - J) / alpha
        oracle = max(sum(abs(x) for x in row) for row in M.tolist())
        got = ScaledIdentity(alpha).kappa(mdp, theta)
        assert got == pytest.approx(oracle, abs=1e-12)
        assert got == pytest.approx(global_rate_bound(mdp.gamma, alpha), abs=1e-12)


def test_asymptotic_rate_values():
    assert asymptotic_rate_prediction(0.4, 0.8) == pytest.approx(0.25, abs=1e-12)
    assert asymptotic_rate_prediction(0.4, 0.72) == pytest.approx(1 / 0.72 - 1, abs=1e-12)
    assert asymptotic_rate_prediction(0.4, 0.72) == pytest.approx(0.3889, abs=1e-4)
    assert asymptotic_rate_prediction(0.4, 1 - 1e-12) == pytest.approx(0.4, abs=1e-9)


@settings(max_examples=200, deadline=None)
@given(st.floats(0.01, 0.99), st.floats(0.0, 1.0, exclude_min=True, exclude_max=True))
def test_asymptotic_rate_beats_vi(gamma, u):
    lo = 1 / (1 + gamma)
    alpha = lo + u * (1 - lo)
    if not lo < alpha < 1:
        return
    assert asymptotic_rate_prediction(gamma, alpha) < gamma


def test_asymptotic_rate_continuous_at_switch():
    gamma = 0.4
    a = 1 - gamma / 2
    left = 1 / a - 1
    assert asymptotic_rate_prediction(gamma, a) == pytest.approx(left, abs=1e-12)


@pytest.mark.parametrize("alpha", [0.5, 0.71, 1.0, 1.5])
def test_asymptotic_rate_rejects_outside(alpha):
    with pytest.raises(ValueError):
        asymptotic_rate_prediction(0.4, alpha)


def test_spectral_radius_scalar():
    assert spectral_radius_estimate([[0.5]]) == pytest.approx(0.5, abs=1e-12)


def test_spectral_radius_known_matrix():
    A = np.array([[0.25, 0.125], [0.0, 0.375]])
    assert spectral_radius_estimate(A) == pytest.approx(0.375, abs=1e-6)


def test_spectral_radius_complex_pair():
    c, s = np.cos(0.3), np.sin(0.3)
    A = 0.7 * np.array([[c, -s], [s, c]])
    assert spectral_radius_estimate(A) == pytest.approx(0.7, abs=1e-6)


def test_spectral_radius_of_discounted_stochastic():
    for i in range(20):
        mdp = tiny_instance(i)
        v, pi = brute_force_optimal(mdp)
        p = np.array([mdp.row(s, pi[s]) for s in range(mdp.n)])
        assert spectral_radius_estimate(mdp.gamma * p) <= mdp.gamma + 1e-6


def test_spectral_radius_against_eigvals():
    rng = np.random.default_rng(5)
    for _ in range(10):
        A = rng.random((6, 6))
        est = spectral_radius_estimate(A)
        assert est == pytest.approx(np.abs(np.linalg.eigvals(A)).max(), rel=1e-6)


def test_empirical_rate_vi_m1(m1):
    res = value_iteration(m1, [0.0], SolverConfig(**traced))
    assert empirical_rate(res.trace, [2.0]) == pytest.approx(0.5, abs=1e-12)


def test_empirical_rate_vi_below_gamma():
    for i in range(0, 60, 3):
        mdp = tiny_instance(i)
        v, _ = brute_force_optimal(mdp)
        res = value_iteration(mdp, config=SolverConfig(**traced))
        try:
            rate = empirical_rate(res.trace, v)
        except InsufficientDataError:
            continue
        assert rate <= mdp.gamma + 1e-3


def test_empirical_rate_insufficient_data(m1):
    res = policy_iteration(m1, [1], SolverConfig(**traced))
    with pytest.raises(InsufficientDataError):
        empirical_rate(res.trace, [2.0])


def test_empirical_rate_matches_hand_computation():
    mdp = tiny_instance(11)
    v, _ = brute_force_optimal(mdp)
    res = value_iteration(mdp, config=SolverConfig(**traced))
    err = [max(abs(t - r) for t, r in zip(th, v)) for th in res.trace.thetas.tolist()]
    floor = 100 * np.finfo(float).eps * (1 + np.abs(v).max())
    ratios = [b / a for a, b in zip(err, err[1:]) if a > floor]
    tail = ratios[-max(3, int(np.ceil(0.5 * len(ratios)))):]
    expected = float(np.prod(tail) ** (1 / len(tail)))
    assert empirical_rate(res.trace, v) == pytest.approx(expected, rel=1e-9)


@pytest.mark.parametrize("alpha", [0.75, 0.8, 0.9])
def test_alpha_vi_tail_rate_within_prediction(alpha):
    mdp = random_mdp(50, 5, 0.4, 3)
    v = policy_iteration(mdp, config=SolverConfig(tol=1e-12)).theta
    res = alpha_value_iteration(mdp, alpha, config=SolverConfig(**traced), force=True)
    assert res.converged
    assert empirical_rate(res.trace, v) <= asymptotic_rate_prediction(0.4, alpha) + 0.05
