import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize_scalar

from annealcert.errors import PremiseError
from annealcert.guarantees import (SATURATED, GuaranteeSpec, TargetParams, alpha_for_value,
                                   ball_depth, confidence_lower_bound, density_ratio_bound,
                                   iterations_flat_top, iterations_uniform_general, j_bound,
                                   j_bound_value, log_inequality_check, optimal_delta,
                                   schedule_cost, schedule_level_count, sigma_for_j,
                                   value_imprecision_from_domain, vidyasagar_bounds,
                                   vidyasagar_value_bounds)

mp.mp.dps = 50
PEAKS_LR = 1.725 * 3 * math.sqrt(2)


# -- high-precision reference formulas (evaluated independently of the package) --

def mp_confidence(eps, alpha, delta, J):
    e, a, d = mp.mpf(eps), mp.mpf(alpha), mp.mpf(delta)
    return 1 / (1 + ((1 + d) / (e + 1 + d)) ** J * ((1 / a) * (1 + d) / (e + d) - 1) * (1 + d) / d)


def mp_j_bound(eps, alpha, sigma, delta):
    e, a, s, d = (mp.mpf(v) for v in (eps, alpha, sigma, delta))
    return (1 + e + d) / e * (mp.log(s / (1 - s)) + mp.log(1 / a) + 2 * mp.log((1 + d) / d))


def ball_volume_radius(beta, n):
    # radius r with pi^(n/2) r^n / Gamma(n/2 + 1) = beta
    return float((mp.mpf(beta) * mp.gamma(mp.mpf(n) / 2 + 1) / mp.pi ** (mp.mpf(n) / 2)) ** (mp.mpf(1) / n))


# -- ball_depth / Theorem 1 conversions ------------------------------------------

@pytest.mark.parametrize("beta", [1e-6, 0.01, 0.36, 1.0, 7.5, 1e4])
def test_ball_depth_low_dimensions(beta):
    assert ball_depth(beta, 1) == pytest.approx(beta / 2, rel=1e-13)
    assert ball_depth(beta, 2) == pytest.approx(math.sqrt(beta / math.pi), rel=1e-13)
    assert ball_depth(beta, 3) == pytest.approx((3 * beta / (4 * math.pi)) ** (1 / 3), rel=1e-13)


@pytest.mark.parametrize("n", [1, 2, 3, 5, 10, 40])
@pytest.mark.parametrize("beta", [1e-3, 0.5, 36.0])
def test_ball_depth_inverts_ball_volume(n, beta):
    assert ball_depth(beta, n) == pytest.approx(ball_volume_radius(beta, n), rel=1e-12)


def test_ball_depth_zero():
    assert ball_depth(0.0, 4) == 0.0


def test_value_imprecision_from_domain():
    assert value_imprecision_from_domain(0.2, 0.3, 0.0, 5.0, 3) == 0.2
    assert value_imprecision_from_domain(0.1, 0.2, 2.0, 3.0, 1) == pytest.approx(0.1 + 2.0 * 0.6 / 2)
    assert value_imprecision_from_domain(0.0, 0.01, 1.0, 36.0, 2) == pytest.approx(
        float(mp.sqrt(mp.mpf("0.36") / mp.pi)), rel=1e-13)


def test_alpha_for_value():
    assert alpha_for_value(2.0, 1.0, 2.0, 3) == 1.0
    assert alpha_for_value(0.05, 1.725, 3 * math.sqrt(2), 2) == pytest.approx(4.6675535018e-5, rel=1e-9)
    a2 = alpha_for_value(0.5, 1.0, 1.0, 2)
    a4 = alpha_for_value(0.5, 1.0, 1.0, 4)
    assert a4 == pytest.approx(a2 ** 2)
    assert alpha_for_value(10.0, 1.0, 1.0, 2) == 1.0


# -- confidence bound and J --------------------------------------------------------

def test_confidence_bound_trivial_case():
    assert confidence_lower_bound(1.0, 1.0, TargetParams(1, 1.0)) == 1.0


def test_confidence_bound_reported_pair():
    assert confidence_lower_bound(0.01, 0.01, TargetParams(1540, 0.15)) >= 0.99


def test_confidence_bound_against_high_precision():
    value = confidence_lower_bound(0.1, 0.1, TargetParams(50, 0.2))
    assert value == pytest.approx(0.18951176294647287, abs=1e-12)
    assert value == pytest.approx(0.1895, abs=1e-3)


@settings(max_examples=200, deadline=None)
@given(eps=st.floats(0.001, 1.0), alpha=st.floats(1e-4, 1.0), delta=st.floats(1e-3, 10.0),
       J=st.floats(1.0, 5000.0))
def test_confidence_bound_matches_mpmath(eps, alpha, delta, J):
    assert confidence_lower_bound(eps, alpha, TargetParams(J, delta)) == pytest.approx(
        float(mp_confidence(eps, alpha, delta, J)), rel=1e-9, abs=1e-300)


@settings(max_examples=100, deadline=None)
@given(eps=st.floats(0.01, 1.0), alpha=st.floats(1e-3, 0.99), delta=st.floats(0.01, 5.0))
def test_confidence_bound_increases_to_one(eps, alpha, delta):
    assume(alpha * (eps + delta) < 1 + delta)
    values = [confidence_lower_bound(eps, alpha, TargetParams(J, delta)) for J in (1, 2, 5, 20, 100)]
    assert all(b > a or b == 1.0 for a, b in zip(values, values[1:]))
    assert confidence_lower_bound(eps, alpha, TargetParams(1e6, delta)) == pytest.approx(1.0)


def test_j_bound_reported_pair():
    spec = GuaranteeSpec(0.01, 0.01, 0.99)
    j = j_bound(spec, 0.15)
    assert j == pytest.approx(1539.7902513147922, rel=1e-12)
    assert math.ceil(j) == 1540


def test_j_bound_trivial_terms_vanish():
    assert j_bound(GuaranteeSpec(1.0, 1.0, 0.5), 1.0) == pytest.approx(3 * 2 * math.log(2))
    assert j_bound(GuaranteeSpec(1.0, 1.0, 0.5), 1.0) == pytest.approx(4.159, abs=1e-3)


def test_j_bound_high_precision():
    j = j_bound(GuaranteeSpec(0.1, 0.1, 0.95), 0.2)
    assert j == pytest.approx(114.79705913801573, rel=1e-12)
    assert math.ceil(j) == 115


@settings(max_examples=200, deadline=None)
@given(eps=st.floats(0.001, 1.0), alpha=st.floats(1e-6, 1.0), sigma=st.floats(0.01, 0.999),
       delta=st.floats(1e-3, 100.0))
def test_corollary_consistency(eps, alpha, sigma, delta):
    spec = GuaranteeSpec(eps, alpha, sigma)
    J = math.ceil(j_bound(spec, delta))
    assume(J >= 1)
    assert confidence_lower_bound(eps, alpha, TargetParams(J, delta)) >= sigma * (1 - 1e-12)
    assert j_bound(spec, delta) == pytest.approx(float(mp_j_bound(eps, alpha, sigma, delta)),
                                                 rel=1e-10, abs=1e-9)


def test_j_bound_value_peaks_constants():
    j = j_bound_value(0.05, 0.99, 0.1, 1.725, 3 * math.sqrt(2), 2)
    e, s, d = mp.mpf("0.05"), mp.mpf("0.99"), mp.mpf("0.1")
    ref = (1 + e + d) / e * (mp.log(s / (1 - s)) + 2 * mp.log(mp.mpf("1.725") * 3 * mp.sqrt(2) / e)
                             + 2 * mp.log((1 + d) / d))
    assert j == pytest.approx(float(ref), rel=1e-12)
    assert j == pytest.approx(445.3536, abs=1e-3)


def test_j_bound_value_two_terms_vanish():
    eps, delta = 0.2, 0.3
    j = j_bound_value(eps, 0.5, delta, 0.4, 0.5, 3)
    assert j == pytest.approx((1 + eps + delta) / eps * 2 * math.log((1 + delta) / delta))


def test_j_bound_value_allows_negative_middle_term():
    small = j_bound_value(0.5, 0.9, 0.1, 0.1, 1.0, 2)
    assert small < j_bound_value(0.5, 0.9, 0.1, 1.0, 1.0, 2)


@settings(max_examples=200, deadline=None)
@given(eps=st.floats(0.001, 1.0), sigma=st.floats(0.01, 0.999), delta=st.floats(1e-3, 10.0),
       L=st.floats(0.5, 20.0), R=st.floats(0.5, 20.0), n=st.integers(1, 6))
def test_j_bound_value_is_alpha_substitution(eps, sigma, delta, L, R, n):
    assume(L * R > eps)
    alpha = alpha_for_value(eps, L, R, n)
    assume(alpha > 0)
    lhs = j_bound_value(eps, sigma, delta, L, R, n)
    rhs = j_bound(GuaranteeSpec(eps, alpha, sigma), delta)
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-9)


def test_sigma_for_j_inverts_value_bound():
    L, R, n, eps, delta = 1.725, 3 * math.sqrt(2), 2, 0.05, 0.1
    J = j_bound_value(eps, 0.99, delta, L, R, n)
    assert 1 - sigma_for_j(J, eps, delta, L, R, n) == pytest.approx(0.01, rel=1e-9)
    assert 1 - sigma_for_j(100, eps, delta, L, R, n) == pytest.approx(1 - 3e-5, abs=1e-5)


# -- optimal delta --------------------------------------------------------------------

def _f(spec, delta):
    return j_bound(spec, delta)


def _f_prime(spec, delta):
    e = spec.epsilon
    c = math.log(spec.sigma / (1 - spec.sigma)) + math.log(1 / spec.alpha)
    return (c + 2 * math.log((1 + delta) / delta) - 2 * (1 + e + delta) / (delta * (1 + delta))) / e


def _f_second(spec, delta):
    e = spec.epsilon
    return 2 * (1 + e + delta + 2 * e * delta) / (e * delta ** 2 * (1 + delta) ** 2)


def test_optimal_delta_reported_pair():
    delta, J = optimal_delta(GuaranteeSpec(0.01, 0.01, 0.99))
    assert delta == pytest.approx(0.15, abs=5e-3)
    assert math.ceil(J) == 1540


def test_optimal_delta_against_golden_section():
    spec = GuaranteeSpec(0.1, 0.1, 0.95)
    delta, J = optimal_delta(spec)
    golden = minimize_scalar(lambda d: _f(spec, d), bracket=(0.01, 0.5, 10.0), method="golden",
                             tol=1e-12)
    assert delta == pytest.approx(golden.x, abs=1e-6)
    assert J <= golden.fun + 1e-9


@pytest.mark.parametrize("d", [0.01, 0.1, 1.0, 10.0])
@pytest.mark.parametrize("spec", [GuaranteeSpec(0.01, 0.01, 0.99), GuaranteeSpec(0.5, 0.3, 0.6),
                                  GuaranteeSpec(1.0, 1.0, 0.51)])
def test_objective_is_convex(spec, d):
    assert _f_second(spec, d) > 0
    h = 1e-4 * d
    numeric = (_f(spec, d + h) - 2 * _f(spec, d) + _f(spec, d - h)) / h ** 2
    assert numeric == pytest.approx(_f_second(spec, d), rel=1e-3)


@settings(max_examples=100, deadline=None)
@given(eps=st.floats(0.001, 1.0), alpha=st.floats(1e-6, 1.0), sigma=st.floats(0.501, 0.9999))
def test_optimal_delta_stationary_and_minimal(eps, alpha, sigma):
    spec = GuaranteeSpec(eps, alpha, sigma)
    delta, J = optimal_delta(spec)
    assert abs(_f_prime(spec, delta)) <= 1e-8 * abs(J)
    grid = np.logspace(-4, 3, 1000)
    assert J <= min(_f(spec, d) for d in grid) * (1 + 1e-12)


def test_optimal_delta_needs_sigma_above_half():
    with pytest.raises(PremiseError):
        optimal_delta(GuaranteeSpec(0.1, 0.1, 0.5))


# -- iteration counts ---------------------------------------------------------------

def test_flat_top_iterations():
    rho = 0.9
    gamma = (1 - rho) / (2 * rho)
    assert iterations_flat_top(0.05, rho, gamma) == 59
    assert math.ceil(float(mp.log(mp.mpf("0.05")) / mp.log(mp.mpf("0.95")))) == 59


def test_flat_top_full_domain_needs_one_step():
    assert iterations_flat_top(1 - 1e-12, 0.9, 0.05) == 1


def test_flat_top_monotone_in_beta():
    ks = [iterations_flat_top(b, 0.8, 0.1) for b in np.linspace(0.01, 0.99, 50)]
    assert all(a >= b for a, b in zip(ks, ks[1:]))


def test_flat_top_premises():
    with pytest.raises(PremiseError):
        iterations_flat_top(0.1, 0.5, 2.0)
    with pytest.raises(PremiseError):
        iterations_flat_top(0.1, 0.8, 0.3)  # gamma >= (1 - rho) / rho


def test_uniform_general_iterations():
    assert iterations_uniform_general(TargetParams(1, 1.0), 0.5, 2.0).k == 0
    assert iterations_uniform_general(TargetParams(1, 1.0), 0.5, 2 * math.exp(-1)).k == 2
    ref = (mp.mpf("1.15") / mp.mpf("0.15")) ** 10 * mp.log(20)
    got = iterations_uniform_general(TargetParams(10, 0.15), 0.5, 0.1)
    assert got == (int(mp.ceil(ref)), False)
    assert got.k == 2101690742


def test_uniform_general_saturates():
    got = iterations_uniform_general(TargetParams(1540, 0.15), 0.98, 0.0102)
    assert got.saturated and got.k == SATURATED


def test_density_ratio_bound():
    assert density_ratio_bound(3.0, 3.0, 0.2) == 1.0
    assert density_ratio_bound(1.0, 0.0, 1.0) == pytest.approx(2.0)
    assert density_ratio_bound(5.0, 2.0, 0.1) == pytest.approx(11.0 ** 3)
    with pytest.raises(PremiseError):
        density_ratio_bound(1.0, 2.0, 0.1)


# -- schedules ----------------------------------------------------------------------------

def _loop_cost(kind, J, a=1.0):
    iters = samples = 0
    for i in range(1, J + 1):
        k = schedule_level_count(kind, i, a)
        iters += k
        samples += i * k
    return iters, samples


def test_logarithmic_schedule_small():
    assert schedule_cost("logarithmic", 1).iterations == 1
    c = schedule_cost("logarithmic", 3)
    assert c.iterations == 19
    assert (c.iterations, c.samples) == _loop_cost("logarithmic", 3)


def test_algebraic_schedule_small():
    assert schedule_cost("algebraic", 3, a=0.5).iterations == 15
    c = schedule_cost("algebraic", 1540, a=1.0)
    assert c.iterations == 1540
    assert c.samples == sum(range(1, 1541))


def test_level_counts_by_hand():
    # floor(e^i): 1, 2, 7, 20, 54
    assert [schedule_level_count("logarithmic", i) for i in range(1, 5)] == [1, 5, 13, 34]
    # a = 1/2: K_i = (i + 1)^2 - i^2
    assert [schedule_level_count("algebraic", i, 0.5) for i in range(1, 4)] == [3, 5, 7]


def test_level_counts_match_exponent_sequence():
    from annealcert.sampler import CoolingSchedule
    sched = CoolingSchedule("algebraic", 10**9, a=0.5)
    seq = [sched.exponent(k) for k in range(1, 400)]
    for i in range(1, 19):
        assert seq.count(i) == schedule_level_count("algebraic", i, 0.5)


def test_logarithmic_schedule_saturates():
    c = schedule_cost("logarithmic", 1540)
    assert c.saturated and c.iterations == SATURATED


def test_schedule_premises():
    with pytest.raises(PremiseError):
        schedule_cost("algebraic", 0)
    with pytest.raises(PremiseError):
        schedule_cost("algebraic", 5, a=0.0)


# -- competitor counts ---------------------------------------------------------------------

def test_vidyasagar_trivial_numerator():
    N, _ = vidyasagar_bounds(0.1, 0.5, 1 - 2 / math.e)
    assert N == 2


def test_vidyasagar_high_precision():
    assert vidyasagar_bounds(0.05, 0.01, 0.99) == (528, 2453)
    N = mp.ceil(mp.log(200) / mp.log(1 / mp.mpf("0.99")))
    M = mp.ceil(mp.log(4 * N / mp.mpf("0.01")) / (2 * mp.mpf("0.05") ** 2))
    assert (int(N), int(M)) == (528, 2453)


def test_vidyasagar_monotone_in_alpha():
    Ns = [vidyasagar_bounds(0.1, a, 0.9)[0] for a in np.linspace(0.5, 0.001, 40)]
    assert Ns == sorted(Ns)


def test_vidyasagar_value_bounds():
    N1, _ = vidyasagar_value_bounds(0.1, 0.99, 2.0, 1.0, 1)
    N2, _ = vidyasagar_value_bounds(0.1, 0.99, 2.0, 1.0, 2)
    log_two = math.log(200)
    assert N1 == math.ceil(20 * log_two)
    assert N2 == math.ceil(400 * log_two)
    assert vidyasagar_value_bounds(0.5, 0.99, 0.5, 1.0, 3)[0] == math.ceil(log_two)

    e, r = mp.mpf("0.05"), mp.mpf("0.99")
    lr = mp.mpf("1.725") * 3 * mp.sqrt(2)
    N = mp.ceil((lr / e) ** 2 * mp.log(2 / (1 - r)))
    M = mp.ceil((mp.log(4 / (1 - r)) + mp.log(mp.log(2 / (1 - r))) + 2 * mp.log(lr / e)) / (2 * e ** 2))
    assert vidyasagar_value_bounds(0.05, 0.99, 1.725, 3 * math.sqrt(2), 2) == (int(N), int(M))


def test_vidyasagar_value_premise():
    with pytest.raises(PremiseError):
        vidyasagar_value_bounds(0.1, 0.2, 1.0, 1.0, 1)


# -- misc -----------------------------------------------------------------------------------

def test_log_inequality():
    assert log_inequality_check(1e-12, 2.0)
    assert math.log(1.5) >= 1 / 3 and log_inequality_check(1.0, 2.0)
    rng = np.random.default_rng(0)
    for x, y in zip(rng.uniform(1e-9, 100, 2000), rng.uniform(1 + 1e-9, 100, 2000)):
        assert log_inequality_check(float(x), float(y))


def test_spec_validation():
    with pytest.raises(PremiseError):
        GuaranteeSpec(0.0, 0.1, 0.9)
    with pytest.raises(PremiseError):
        GuaranteeSpec(0.1, 0.1, 1.0)
    with pytest.raises(PremiseError):
        TargetParams(0.5, 0.1)
    s = GuaranteeSpec.from_rho(0.1, 0.1, 0.9)
    assert s.sigma == pytest.approx(0.95)
    with pytest.raises(PremiseError):
        GuaranteeSpec(0.1, 0.1, 0.95, rho=0.9, gamma=0.01)


@pytest.mark.parametrize("a", [1 / 3, 0.5, 1.0, 2.0, 0.4, 1.5, 3.0, 0.7, 2 / 7])
def test_power_floor_exact_at_perfect_powers(a):
    from fractions import Fraction
    from annealcert.guarantees import power_floor
    F = power_floor(1 / a)
    q = Fraction(1 / a).limit_denominator(100)
    for i in [*range(400), 999_999, 10 ** 6, 2 ** 40, 3 ** 30]:
        exact = mp.floor(mp.mpf(i) ** (mp.mpf(q.numerator) / q.denominator) + mp.mpf(10) ** -40)
        assert F(i) == int(exact), i


@pytest.mark.parametrize("a", [1 / 3, 0.5, 1.0, 2.0, 1.5, 3.0, 0.7])
def test_algebraic_samples_match_loop(a):
    for J in (1, 2, 3, 10, 57, 500):
        assert (schedule_cost("algebraic", J, a).iterations,
                schedule_cost("algebraic", J, a).samples) == _loop_cost("algebraic", J, a)
