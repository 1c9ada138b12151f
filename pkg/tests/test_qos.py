import math

import numpy as np
import pytest

from secqos import qos, sources
from secqos.channel import FadingScenario, PowerSplit
from secqos.errors import ConfigError, ParameterError, SolverError
from secqos.qos import GaussLaguerre, MessageIndex, MonteCarlo

SC = FadingScenario()
SPLIT = PowerSplit(delta1=0.5, delta2=0.5)
GL = GaussLaguerre(nodes_per_axis=128)
DISC = sources.OnOffDiscreteMarkov(p11=0.8, p22=0.8)
FLUID = sources.OnOffMarkovFluid(alpha=1.0, beta=9.0)


def test_g_at_zero_snr_is_one():
    g = qos.g_value(MessageIndex.CONF1, 0.0, 1.0, SC, SPLIT, GL)
    assert g.value == 1.0
    assert qos.effective_capacity(MessageIndex.CONF1, 0.0, 1.0, SC, SPLIT, GL) == 0.0


def test_g_decreases_with_snr_and_stays_in_unit_interval():
    vals = [
        qos.g_value(MessageIndex.CONF1, snr, 1.0, SC, SPLIT, GL).value
        for snr in (0.1, 0.5, 1.0, 5.0)
    ]
    assert all(0.0 < v <= 1.0 for v in vals)
    assert all(b < a for a, b in zip(vals, vals[1:]))


def test_quadrature_matches_monte_carlo():
    mc = MonteCarlo(samples=2_000_000, seed=3)
    for stream in MessageIndex:
        exact = qos.g_value(stream, 1.0, 1.0, SC, SPLIT, GL)
        est = qos.g_value(stream, 1.0, 1.0, SC, SPLIT, mc)
        assert est.std_error > 0.0
        assert abs(est.value - exact.value) <= 3.5 * est.std_error


def test_quadrature_rejects_correlated_fading():
    rho = FadingScenario(power_correlation=0.4)
    with pytest.raises(ConfigError):
        qos.g_value(MessageIndex.CONF1, 1.0, 1.0, rho, SPLIT, GL)


def test_small_theta_capacity_is_mean_rate():
    """C_E(theta -> 0) approaches E{R_1}."""

    def rate1(z1, z2):
        on = z1 >= z2
        num = 1.0 + 0.5 * 1.0 * np.where(on, z1, z2)
        den = 1.0 + 0.5 * 1.0 * np.where(on, z2, z1)
        return np.where(on, np.log2(num / den), 0.0)

    mean, _ = qos.expect_over_fading(rate1, SC, GL)
    cap = qos.effective_capacity(MessageIndex.CONF1, 1.0, 1e-5, SC, SPLIT, GL)
    assert cap == pytest.approx(mean, rel=1e-3)


def test_capacity_decreases_with_theta():
    caps = [
        qos.effective_capacity(MessageIndex.CONF1, 1.0, th, SC, SPLIT, GL)
        for th in (0.25, 0.5, 1.0, 2.0, 4.0)
    ]
    assert all(b < a for a, b in zip(caps, caps[1:]))


# ---------------------------------------------------------------------------
# throughput closed forms
# ---------------------------------------------------------------------------

def test_constant_source_throughput_equals_capacity():
    g = 0.7
    assert qos.max_avg_arrival_rate_from_g(sources.ConstantRate(), g, 1.3) == (
        pytest.approx(-math.log(g) / 1.3, rel=1e-14)
    )


def test_always_on_chain_reduces_to_capacity():
    src = sources.OnOffDiscreteMarkov(p11=0.0, p22=1.0)
    g = 0.63
    assert qos.max_avg_arrival_rate_from_g(src, g, 0.8) == pytest.approx(
        -math.log(g) / 0.8, rel=1e-12
    )


def test_mmpp_throughput_is_scaled_chain_throughput():
    """Compressing arrivals into Poisson batches costs exactly theta/(e^theta-1)."""
    g, theta = 0.8, 1.7
    base = qos.max_avg_arrival_rate_from_g(DISC, g, theta)
    mmpp = qos.max_avg_arrival_rate_from_g(
        sources.OnOffDiscreteMmpp(p11=0.8, p22=0.8), g, theta
    )
    assert mmpp == pytest.approx(base * theta / math.expm1(theta), rel=1e-14)
    fl = qos.max_avg_arrival_rate_from_g(FLUID, g, theta)
    cm = qos.max_avg_arrival_rate_from_g(
        sources.OnOffContinuousMmpp(alpha=1.0, beta=9.0), g, theta
    )
    assert cm == pytest.approx(fl * theta / math.expm1(theta), rel=1e-14)


def test_from_g_validation_and_edges():
    assert qos.max_avg_arrival_rate_from_g(DISC, 1.0, 1.0) == 0.0
    with pytest.raises(ParameterError):
        qos.max_avg_arrival_rate_from_g(DISC, 0.0, 1.0)
    with pytest.raises(ParameterError):
        qos.max_avg_arrival_rate_from_g(DISC, 1.2, 1.0)
    with pytest.raises(ParameterError):
        qos.max_avg_arrival_rate_from_g(DISC, 0.5, 0.0)


@pytest.mark.parametrize("src", [
    DISC,
    FLUID,
    sources.OnOffDiscreteMarkov(0.95, 0.3),
    sources.OnOffMarkovFluid(0.4, 0.4),
    sources.OnOffDiscreteMmpp(0.8, 0.8),
    sources.OnOffContinuousMmpp(2.0, 1.0),
])
def test_closed_form_inverts_effective_bandwidth(src):
    """r_avg from the closed form and from bisecting a(theta, r) coincide.

    The capacity target comes from a Monte Carlo g so the check runs on an
    arbitrary (not hand-picked) value, with slight channel correlation.
    """
    theta = 0.9
    sc = FadingScenario(power_correlation=0.05)
    mc = MonteCarlo(samples=200_000, seed=17)
    g = qos.g_value(MessageIndex.CONF1, 1.2, theta, sc, SPLIT, mc).value
    r_avg = qos.max_avg_arrival_rate_from_g(src, g, theta)
    target = -math.log(g) / theta
    r_on = qos.solve_on_rate_bisection(src, target, theta)
    assert sources.mean_rate(src, r_on) == pytest.approx(r_avg, rel=1e-9)
    # and the solved rate really does hit the capacity
    assert sources.effective_bandwidth(src, theta, r_on) == pytest.approx(
        target, abs=1e-10
    )


def test_bisection_edges():
    assert qos.solve_on_rate_bisection(DISC, 0.0, 1.0) == 0.0
    assert qos.solve_on_rate_bisection(sources.ConstantRate(), 0.37, 1.0) == 0.37
    with pytest.raises(ParameterError):
        qos.solve_on_rate_bisection(DISC, -1.0, 1.0)
    with pytest.raises(SolverError):
        # no bracket can reach an astronomically large capacity target
        qos.solve_on_rate_bisection(DISC, 1e80, 1.0)


def test_throughput_sandwich():
    """0 <= r_avg <= C_E <= r_on for a bursty source."""
    theta, snr = 1.0, 1.0
    cap = qos.effective_capacity(MessageIndex.CONF1, snr, theta, SC, SPLIT, GL)
    r_avg = qos.max_avg_arrival_rate(DISC, MessageIndex.CONF1, snr, theta, SC, SPLIT, GL)
    r_on = r_avg / sources.on_probability(DISC)
    assert 0.0 < r_avg <= cap <= r_on


def test_throughput_monotone_in_snr_and_theta():
    grid = [0.2, 0.5, 1.0, 2.0]
    vals = [
        qos.max_avg_arrival_rate(DISC, MessageIndex.CONF1, s, 1.0, SC, SPLIT, GL)
        for s in grid
    ]
    assert all(b > a for a, b in zip(vals, vals[1:]))
    by_theta = [
        qos.max_avg_arrival_rate(DISC, MessageIndex.CONF1, 1.0, th, SC, SPLIT, GL)
        for th in (0.5, 1.0, 2.0)
    ]
    assert all(b < a for a, b in zip(by_theta, by_theta[1:]))


def test_throughput_decreases_with_correlation():
    # common random numbers: identical seeds isolate the effect of rho
    mc = MonteCarlo(samples=400_000, seed=21)
    lo = qos.max_avg_arrival_rate(
        DISC, MessageIndex.CONF1, 1.0, 1.0,
        FadingScenario(power_correlation=0.1), SPLIT, mc,
    )
    hi = qos.max_avg_arrival_rate(
        DISC, MessageIndex.CONF1, 1.0, 1.0,
        FadingScenario(power_correlation=0.5), SPLIT, mc,
    )
    assert hi < lo


def test_delay_exponent_is_theta_times_bandwidth():
    got = qos.delay_exponent(DISC, 1.2, 0.9)
    assert got == pytest.approx(
        1.2 * sources.effective_bandwidth(DISC, 1.2, 0.9), rel=1e-14
    )


def test_zero_snr_throughput_is_zero():
    assert qos.max_avg_arrival_rate(DISC, MessageIndex.CONF1, 0.0, 1.0, SC, SPLIT, GL) == 0.0
