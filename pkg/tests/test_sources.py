import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from secqos import sources
from secqos.errors import ParameterError
from secqos.sources import (
    ConstantRate,
    OnOffContinuousMmpp,
    OnOffDiscreteMarkov,
    OnOffDiscreteMmpp,
    OnOffMarkovFluid,
    effective_bandwidth,
    effective_bandwidth_mc_oracle,
)

DISC = OnOffDiscreteMarkov(p11=0.8, p22=0.8)
FLUID = OnOffMarkovFluid(alpha=1.0, beta=1.0)


# ---------------------------------------------------------------------------
# closed-form values and limits
# ---------------------------------------------------------------------------

def test_discrete_closed_form_frozen_value():
    # p11 = p22 = 0.8, theta = r = 1: ln((0.8 + 0.8e + sqrt((0.8 + 0.8e)^2
    # - 2.4e))/2), worked out once by hand
    got = effective_bandwidth(DISC, 1.0, 1.0)
    q = 0.8 + 0.8 * math.e
    expect = math.log(0.5 * (q + math.sqrt(q * q - 2.4 * math.e)))
    assert got == pytest.approx(expect, rel=1e-14)
    assert got == pytest.approx(0.8107664713466315, rel=1e-12)


def test_fluid_closed_form_frozen_value():
    # alpha = beta = theta = r = 1 lands on (sqrt(5) - 1)/2
    assert effective_bandwidth(FLUID, 1.0, 1.0) == pytest.approx(
        (math.sqrt(5.0) - 1.0) / 2.0, rel=1e-14
    )


def test_constant_source_is_its_rate():
    assert effective_bandwidth(ConstantRate(), 2.5, 0.7) == 0.7
    assert effective_bandwidth(ConstantRate(), 1e-9, 0.7) == 0.7


def test_zero_rate_gives_zero():
    for src in (DISC, FLUID, OnOffDiscreteMmpp(0.8, 0.8), OnOffContinuousMmpp(1.0, 1.0)):
        assert effective_bandwidth(src, 1.3, 0.0) == 0.0


def test_small_theta_limit_is_mean_rate():
    """a(theta -> 0, r) approaches P_on * r for every family."""
    for src in (
        DISC,
        FLUID,
        OnOffDiscreteMmpp(0.6, 0.9),
        OnOffContinuousMmpp(2.0, 0.5),
        OnOffDiscreteMarkov(0.3, 0.0),
    ):
        a = effective_bandwidth(src, 1e-7, 1.7)
        assert a == pytest.approx(sources.mean_rate(src, 1.7), rel=1e-4)


def test_large_theta_limit_is_peak_rate():
    # fixed-rate families approach the ON rate; MMPP grows without bound
    assert effective_bandwidth(DISC, 200.0, 1.3) == pytest.approx(1.3, rel=1e-3)
    assert effective_bandwidth(FLUID, 200.0, 1.3) == pytest.approx(1.3, rel=1e-2)
    assert effective_bandwidth(OnOffDiscreteMmpp(0.8, 0.8), 8.0, 1.0) > 100.0


def test_on_probability_and_burstiness_values():
    assert sources.on_probability(DISC) == pytest.approx(0.5)
    assert sources.on_probability(OnOffMarkovFluid(alpha=1.0, beta=9.0)) == pytest.approx(0.1)
    assert sources.burstiness_eta(0.8, 0.8) == pytest.approx(4.0)
    assert sources.burstiness_zeta(1.0, 9.0) == pytest.approx(1.8)
    assert sources.burstiness_zeta(2.0, 0.0) == 0.0


def test_parameter_validation():
    with pytest.raises(ParameterError):
        OnOffDiscreteMarkov(p11=1.2, p22=0.5)
    with pytest.raises(ParameterError):
        OnOffMarkovFluid(alpha=0.0, beta=1.0)
    with pytest.raises(ParameterError):
        effective_bandwidth(DISC, 0.0, 1.0)
    with pytest.raises(ParameterError):
        effective_bandwidth(DISC, 1.0, -0.1)
    with pytest.raises(ParameterError):
        # absorbing OFF state never produces traffic at a positive rate
        effective_bandwidth(OnOffDiscreteMarkov(p11=1.0, p22=0.5), 1.0, 1.0)


# ---------------------------------------------------------------------------
# property tests
# ---------------------------------------------------------------------------

@settings(max_examples=60, deadline=None)
@given(
    p11=st.floats(0.0, 0.99),
    p22=st.floats(0.0, 1.0),
    x=st.floats(1e-6, 300.0),
)
def test_disc_log_growth_matches_eigenvalue(p11, p22, x):
    """The stable closed form equals ln of the transfer-matrix Perron root."""
    m = np.array([[p11, 1.0 - p11], [1.0 - p22, p22]])
    m[:, 1] *= math.exp(min(x, 50.0))  # cap so the naive eig stays finite
    lam = max(np.linalg.eigvals(m).real)
    got = sources._disc_log_growth(min(x, 50.0), p11, p22)
    assert got == pytest.approx(math.log(lam), rel=1e-10, abs=1e-10)


@settings(max_examples=60, deadline=None)
@given(
    p11=st.floats(0.0, 0.99),
    p22=st.floats(0.0, 1.0),
    x=st.floats(1e-6, 300.0),
)
def test_disc_log_growth_matches_mpmath(p11, p22, x):
    """High-precision evaluation of the textbook form agrees to ~1e-11."""
    with mpmath.workdps(60):
        ex = mpmath.e**x
        q = p11 + p22 * ex
        disc = q * q - 4.0 * (p11 + p22 - 1.0) * ex
        expect = float(mpmath.log((q + mpmath.sqrt(disc)) / 2))
    got = sources._disc_log_growth(x, p11, p22)
    assert got == pytest.approx(expect, rel=1e-11, abs=1e-11)


@settings(max_examples=60, deadline=None)
@given(
    alpha=st.floats(0.01, 20.0),
    beta=st.floats(0.0, 20.0),
    x=st.floats(1e-6, 100.0),
)
def test_fluid_bracket_matches_eigenvalue(alpha, beta, x):
    g = np.array([[-alpha, alpha], [beta, -beta + x]])
    lam = max(np.linalg.eigvals(g).real)
    assert sources._fluid_bracket(x, alpha, beta) == pytest.approx(
        2.0 * lam, rel=1e-10, abs=1e-10
    )


@settings(max_examples=40, deadline=None)
@given(
    p11=st.floats(0.0, 0.95),
    p22=st.floats(0.0, 0.98),
    r=st.floats(0.01, 5.0),
    theta_lo=st.floats(0.05, 2.0),
    bump=st.floats(0.01, 3.0),
)
def test_effective_bandwidth_monotone_in_theta(p11, p22, r, theta_lo, bump):
    src = OnOffDiscreteMarkov(p11=p11, p22=p22)
    lo = effective_bandwidth(src, theta_lo, r)
    hi = effective_bandwidth(src, theta_lo + bump, r)
    assert hi >= lo - 1e-12
    assert sources.mean_rate(src, r) - 1e-12 <= lo <= r + 1e-12


# ---------------------------------------------------------------------------
# grounding the transfer matrices with naive simulation
# ---------------------------------------------------------------------------

def _naive_discrete_mgf(src, theta, r, horizon, paths, rng):
    """Brute-force E{exp(theta * A(t))} by simulating the plain chain."""
    p = sources.transition_matrix(src)
    state = (rng.random(paths) < sources.on_probability(src)).astype(np.int8)
    total = np.zeros(paths)
    for _ in range(horizon):
        if sources.is_mmpp(src):
            total += rng.poisson(r * state)
        else:
            total += r * state
        stay = np.where(state == 1, p[1, 1], p[0, 0])
        state = np.where(rng.random(paths) < stay, state, 1 - state).astype(np.int8)
    w = np.exp(theta * total)
    return float(w.mean()), float(w.std(ddof=1) / math.sqrt(paths))


@pytest.mark.parametrize("src", [DISC, OnOffDiscreteMmpp(0.7, 0.6)])
def test_transfer_matrix_against_naive_simulation(src):
    theta, r, horizon = 0.9, 0.7, 6
    rng = np.random.default_rng(42)
    mean, se = _naive_discrete_mgf(src, theta, r, horizon, 200_000, rng)
    m = sources._log_mgf_transfer(src, theta, r)
    pi = sources.stationary_distribution(src)
    exact = float(pi @ np.linalg.matrix_power(m, horizon) @ np.ones(2))
    assert abs(mean - exact) < 4.0 * se


def _naive_ctmc_mgf(src, theta, r, t_end, paths, rng):
    """Occupation-time MGF of the ON state via exact exponential holding times."""
    pot = r * (math.expm1(theta) if sources.is_mmpp(src) else theta)
    alpha, beta = src.alpha, src.beta
    p_on = sources.on_probability(src)
    weights = np.empty(paths)
    for k in range(paths):
        state = 1 if rng.random() < p_on else 0
        t = on_time = 0.0
        while t < t_end:
            hold = rng.exponential(1.0 / (beta if state else alpha))
            span = min(hold, t_end - t)
            if state:
                on_time += span
            t += span
            state = 1 - state
        weights[k] = math.exp(pot * on_time)
    return float(weights.mean()), float(weights.std(ddof=1) / math.sqrt(paths))


@pytest.mark.parametrize("src", [
    OnOffMarkovFluid(alpha=1.3, beta=1.3),
    OnOffContinuousMmpp(alpha=1.3, beta=1.3),
])
def test_continuous_transfer_against_naive_ctmc(src):
    """expm of the tilted generator equals the simulated Feynman-Kac average."""
    theta, r, t_end = 0.9, 0.7, 2
    rng = np.random.default_rng(7)
    mean, se = _naive_ctmc_mgf(src, theta, r, t_end, 20_000, rng)
    m = sources._log_mgf_transfer(src, theta, r)
    pi = sources.stationary_distribution(src)
    exact = float(pi @ np.linalg.matrix_power(m, t_end) @ np.ones(2))
    assert abs(mean - exact) < 4.0 * se


# ---------------------------------------------------------------------------
# the importance-sampling oracle
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("src,r", [
    (DISC, 1.0),
    (OnOffDiscreteMarkov(0.9, 0.2), 0.6),
    (FLUID, 1.0),
    (OnOffMarkovFluid(2.0, 0.7), 1.4),
    (OnOffDiscreteMmpp(0.8, 0.8), 0.5),
    (OnOffContinuousMmpp(1.0, 1.0), 0.5),
])
def test_oracle_matches_closed_form(src, r):
    est = effective_bandwidth_mc_oracle(src, 1.0, r, horizon=2000, paths=20_000, seed=11)
    exact = effective_bandwidth(src, 1.0, r)
    assert est.std_error < 1e-3
    assert abs(est.estimate - exact) <= 3.0 * est.std_error + 1e-12


def test_oracle_constant_source_exact():
    est = effective_bandwidth_mc_oracle(ConstantRate(), 0.7, 1.9)
    assert est.estimate == 1.9
    assert est.std_error == 0.0


def test_oracle_reproducible_and_thread_invariant():
    kw = dict(theta=0.8, r=0.9, horizon=1200, paths=30_000, seed=123)
    a = effective_bandwidth_mc_oracle(DISC, **kw, threads=1)
    b = effective_bandwidth_mc_oracle(DISC, **kw, threads=1)
    c = effective_bandwidth_mc_oracle(DISC, **kw, threads=4)
    assert a == b
    assert a.estimate == c.estimate
    assert a.std_error == c.std_error


def test_oracle_rejects_short_runs():
    with pytest.raises(ParameterError):
        effective_bandwidth_mc_oracle(DISC, 1.0, 1.0, horizon=10)
    with pytest.raises(ParameterError):
        effective_bandwidth_mc_oracle(DISC, 1.0, 1.0, paths=100)
