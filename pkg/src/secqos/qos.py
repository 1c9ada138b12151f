"""Effective capacity and throughput limits of the three message streams.

The effective capacity of stream i at QoS exponent theta_i is

    C_E = -(1/theta_i) * ln E{exp(-theta_i * R_i(snr))},

the largest constant arrival rate the fluctuating service R_i supports under
an exponential queue-tail constraint.  For Markovian sources the maximum
average arrival rate r_avg follows from equating the source's effective
bandwidth with C_E; closed forms per source family are provided together
with a generic bisection inversion used as a cross-check oracle.

Expectations over the fading law are computed either by Monte Carlo (any
power correlation) or by two-dimensional Gauss-Laguerre quadrature split
over the z1 >= z2 / z1 < z2 wedges (independent exponentials only, i.e.
power_correlation = 0).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Union

import numpy as np
from scipy.special import roots_laguerre

from . import sources
from .channel import FadingSample, FadingScenario, PowerSplit, instantaneous_rates, sample_fading
from .errors import ConfigError, ParameterError, SolverError


class MessageIndex(enum.IntEnum):
    COMMON = 0
    CONF1 = 1
    CONF2 = 2


@dataclass(frozen=True)
class MonteCarlo:
    """Sample-mean expectations with reported standard error."""

    samples: int = 10**6
    seed: int = 0

    def __post_init__(self) -> None:
        if self.samples < 1:
            raise ParameterError("samples must be >= 1")


@dataclass(frozen=True)
class GaussLaguerre:
    """Deterministic tensor quadrature; valid only at power_correlation = 0."""

    nodes_per_axis: int = 128

    def __post_init__(self) -> None:
        if self.nodes_per_axis < 16:
            raise ParameterError("nodes_per_axis must be >= 16")


ExpectationMethod = Union[MonteCarlo, GaussLaguerre]


@dataclass(frozen=True)
class GValue:
    """E{exp(-theta_i R_i)} with its Monte Carlo standard error (0 for quadrature)."""

    value: float
    std_error: float


# ---------------------------------------------------------------------------
# expectation engine
# ---------------------------------------------------------------------------

@lru_cache(maxsize=8)
def _laguerre_nodes(n: int):
    x, w = roots_laguerre(n)
    return x, w


def _wedge_points(scenario: FadingScenario, n: int):
    """Quadrature points/weights for both wedges of the independent-exp law.

    E{h 1{z1>=z2}} = (m1/(m1+m2)) * E_{a,b}{h(b*mb + a*m1, b*mb)} with
    a, b standard exponentials and mb = m1*m2/(m1+m2); the other wedge is
    symmetric.  Returns concatenated (z1, z2, weight) arrays whose weights
    sum to 1.
    """
    m1, m2 = scenario.mean_z1, scenario.mean_z2
    mb = m1 * m2 / (m1 + m2)
    x, w = _laguerre_nodes(n)
    a = np.repeat(x, n)
    b = np.tile(x, n)
    ww = (np.repeat(w, n) * np.tile(w, n))
    z_low = b * mb
    z1 = np.concatenate([z_low + a * m1, z_low])
    z2 = np.concatenate([z_low, z_low + a * m2])
    weight = np.concatenate([ww * (m1 / (m1 + m2)), ww * (m2 / (m1 + m2))])
    return z1, z2, weight


_MC_CHUNK = 250_000


def expect_over_fading(
    fn: Callable[[np.ndarray, np.ndarray], np.ndarray],
    scenario: FadingScenario,
    method: ExpectationMethod,
):
    """Expectations of fn(z1, z2) over the fading law.

    ``fn`` returns either a (n,) array or a (k, n) stack of integrands; the
    result is (means, std_errors) of matching shape (scalars for a single
    integrand).  Gauss-Laguerre requires power_correlation = 0.
    """
    if isinstance(method, GaussLaguerre):
        if scenario.power_correlation != 0.0:
            raise ConfigError(
                "GaussLaguerre quadrature requires power_correlation = 0; "
                f"got {scenario.power_correlation} (use MonteCarlo instead)"
            )
        z1, z2, w = _wedge_points(scenario, method.nodes_per_axis)
        vals = np.atleast_2d(np.asarray(fn(z1, z2), dtype=float))
        means = vals @ w
        zeros = np.zeros_like(means)
        if means.shape[0] == 1:
            return float(means[0]), 0.0
        return means, zeros

    total = 0
    acc = None
    acc2 = None
    chunk_index = 0
    while total < method.samples:
        n = min(_MC_CHUNK, method.samples - total)
        rng = np.random.default_rng((method.seed, chunk_index))
        s = sample_fading(scenario, rng, size=n)
        vals = np.atleast_2d(np.asarray(fn(s.z1, s.z2), dtype=float))
        if acc is None:
            acc = vals.sum(axis=1)
            acc2 = (vals * vals).sum(axis=1)
        else:
            acc += vals.sum(axis=1)
            acc2 += (vals * vals).sum(axis=1)
        total += n
        chunk_index += 1
    means = acc / total
    variances = np.maximum(acc2 / total - means**2, 0.0)
    errs = np.sqrt(variances / total)
    if means.shape[0] == 1:
        return float(means[0]), float(errs[0])
    return means, errs


def gamma1_probability(scenario: FadingScenario, method: ExpectationMethod) -> float:
    """Pr{z1 >= z2}; exactly m1/(m1+m2) for independent exponentials."""
    if scenario.power_correlation == 0.0:
        return scenario.mean_z1 / (scenario.mean_z1 + scenario.mean_z2)
    mean, _ = expect_over_fading(
        lambda z1, z2: (z1 >= z2).astype(float), scenario, method
    )
    return mean


# ---------------------------------------------------------------------------
# effective capacity
# ---------------------------------------------------------------------------

def _stream_rate(i: MessageIndex, z1, z2, snr: float, split: PowerSplit):
    rates = instantaneous_rates(FadingSample(z1=z1, z2=z2), snr, split)
    return (rates.r0, rates.r1, rates.r2)[int(i)]


def g_value(
    i: MessageIndex,
    snr: float,
    theta_i: float,
    scenario: FadingScenario,
    split: PowerSplit,
    method: ExpectationMethod,
) -> GValue:
    """g_i(snr) = E{exp(-theta_i * R_i(snr))}, in (0, 1]."""
    if theta_i <= 0.0:
        raise ParameterError(f"theta must be > 0, got {theta_i}")
    if snr < 0.0:
        raise ParameterError(f"snr must be >= 0, got {snr}")
    if snr == 0.0:
        return GValue(value=1.0, std_error=0.0)
    mean, err = expect_over_fading(
        lambda z1, z2: np.exp(-theta_i * _stream_rate(i, z1, z2, snr, split)),
        scenario,
        method,
    )
    return GValue(value=mean, std_error=err)


def effective_capacity(
    i: MessageIndex,
    snr: float,
    theta_i: float,
    scenario: FadingScenario,
    split: PowerSplit,
    method: ExpectationMethod,
) -> float:
    """-(1/theta_i) ln g_i(snr), in bits/block; 0 at snr = 0."""
    g = g_value(i, snr, theta_i, scenario, split, method)
    return -math.log(g.value) / theta_i


# ---------------------------------------------------------------------------
# throughput: closed forms and the bisection cross-check
# ---------------------------------------------------------------------------

def max_avg_arrival_rate_from_g(
    source: sources.SourceModel, g: float, theta: float
) -> float:
    """Maximum average arrival rate given g = E{exp(-theta R)} of the service.

    This is the closed-form inversion of 'effective bandwidth = effective
    capacity' per source family; MMPP families scale their fixed-rate
    counterpart by theta/(e^theta - 1).
    """
    if not (0.0 < g <= 1.0):
        raise ParameterError(f"g must be in (0, 1], got {g}")
    if theta <= 0.0:
        raise ParameterError(f"theta must be > 0, got {theta}")
    if isinstance(source, sources.ConstantRate):
        return -math.log(g) / theta

    p_on = sources.on_probability(source)
    scale = theta / math.expm1(theta) if sources.is_mmpp(source) else 1.0
    if isinstance(source, (sources.OnOffDiscreteMarkov, sources.OnOffDiscreteMmpp)):
        p11, p22 = source.p11, source.p22
        num = 1.0 - p11 * g
        den = p22 * g + (1.0 - p11 - p22) * g * g
        value = (p_on / theta) * math.log(num / den)
    else:
        ln_g = math.log(g)
        value = -(p_on / theta) * (source.alpha + source.beta - ln_g) / (
            source.alpha - ln_g
        ) * ln_g
    return max(scale * value, 0.0)


def max_avg_arrival_rate(
    source: sources.SourceModel,
    i: MessageIndex,
    snr: float,
    theta_i: float,
    scenario: FadingScenario,
    split: PowerSplit,
    method: ExpectationMethod,
) -> float:
    """Throughput limit r_avg(snr, theta_i) of stream i for this source."""
    if snr == 0.0:
        return 0.0
    g = g_value(i, snr, theta_i, scenario, split, method)
    return max_avg_arrival_rate_from_g(source, g.value, theta_i)


def solve_on_rate_bisection(
    source: sources.SourceModel, target_capacity: float, theta: float
) -> float:
    """ON-state rate r with a(theta, r) = target_capacity, to 1e-12 absolute.

    Brackets [0, hi] by doubling hi, then bisects.  Serves as the generic
    oracle for the closed-form throughput expressions.
    """
    if target_capacity < 0.0:
        raise ParameterError("target capacity must be >= 0")
    if target_capacity == 0.0:
        return 0.0
    if isinstance(source, sources.ConstantRate):
        return target_capacity

    tol = 1e-12
    hi = max(target_capacity, 1.0)
    for _ in range(200):
        if sources.effective_bandwidth(source, theta, hi) >= target_capacity:
            break
        hi *= 2.0
    else:
        raise SolverError(
            f"no upper bracket: a(theta={theta}, r={hi}) still below "
            f"target {target_capacity}"
        )
    lo = 0.0
    mid = hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        resid = sources.effective_bandwidth(source, theta, mid) - target_capacity
        if abs(resid) <= tol:
            return mid
        if resid < 0.0:
            lo = mid
        else:
            hi = mid
    resid = sources.effective_bandwidth(source, theta, mid) - target_capacity
    if abs(resid) <= 10.0 * tol:
        return mid
    raise SolverError(
        f"bisection stalled on [{lo}, {hi}] with residual {resid:.3e}"
    )


def delay_exponent(source: sources.SourceModel, theta: float, r_on: float) -> float:
    """Decay rate of Pr{delay >= d}: theta * a(theta, r_on) (1/blocks)."""
    return theta * sources.effective_bandwidth(source, theta, r_on)
