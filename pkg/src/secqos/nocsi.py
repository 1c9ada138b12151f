"""Fixed-rate secure transmission when the transmitter has no CSI.

Without channel knowledge the transmitter sends the confidential message at
a fixed rate lam (bits/block) using the full power budget.  A block is
secure and decodable iff the instantaneous secrecy rate supports lam,

    z1 >= (2^lam - 1)/snr + 2^lam * z2,

so the service seen by the queue is an ON/OFF process: lam bits with the
secure-on probability p_on(snr, lam), zero otherwise.  For independent
exponential fading that probability is closed form,

    p_on = exp(-(2^lam - 1)/(m1*snr)) / (1 + gamma*2^lam),

with gamma = E{z2}/E{z1}.  Scaling the rate linearly with snr
(lam = a*snr/ln2) keeps the low-snr regime non-trivial; the energy per bit
is then minimized at a = m1, where it exceeds the full-CSI minimum by the
factor e*(1 + gamma).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from . import qos, sources
from .channel import FadingScenario
from .energy import LowSnrMetrics, MetricsMethod, _burstiness
from .errors import ParameterError, UnsupportedFamilyError

_LN2 = math.log(2.0)


@dataclass(frozen=True)
class FixedRatePolicy:
    """Fixed transmission rate, either absolute or scaled with snr.

    Exactly one of ``rate`` (bits/block, snr-independent) and
    ``coefficient`` (a > 0; rate = a*snr/ln2) must be given.  Only the
    scaled policy has a meaningful low-snr limit: at a fixed absolute rate
    the secure-on probability vanishes faster than any power of snr.
    """

    rate: Optional[float] = None
    coefficient: Optional[float] = None

    def __post_init__(self):
        if (self.rate is None) == (self.coefficient is None):
            raise ParameterError("give exactly one of rate= or coefficient=")
        value = self.rate if self.rate is not None else self.coefficient
        if not (value > 0.0 and math.isfinite(value)):
            raise ParameterError(f"policy value must be finite and > 0, got {value}")

    def rate_at(self, snr: float) -> float:
        if self.rate is not None:
            return self.rate
        return self.coefficient * snr / _LN2


def _require_independent(scenario: FadingScenario) -> None:
    if scenario.power_correlation != 0.0:
        raise ParameterError(
            "fixed-rate analysis assumes independent fading "
            f"(power_correlation = {scenario.power_correlation})"
        )


def _require_plain_chain(source: sources.SourceModel) -> None:
    if sources.is_mmpp(source):
        raise UnsupportedFamilyError(
            "MMPP arrivals are not supported without transmitter CSI"
        )


def secure_event(
    z1: Union[float, np.ndarray],
    z2: Union[float, np.ndarray],
    snr: float,
    rate: float,
) -> Union[bool, np.ndarray]:
    """Whether a fading draw supports rate bits/block securely at this snr."""
    lam = 2.0**rate
    out = np.asarray(z1) >= (lam - 1.0) / snr + lam * np.asarray(z2)
    return bool(out) if out.ndim == 0 else out


def secure_on_probability(snr: float, rate: float, scenario: FadingScenario) -> float:
    """Closed-form Pr{secure event} for independent exponential fading."""
    _require_independent(scenario)
    if snr <= 0.0:
        raise ParameterError(f"snr must be > 0, got {snr}")
    if rate < 0.0:
        raise ParameterError(f"rate must be >= 0, got {rate}")
    lam = 2.0**rate
    return math.exp(-(lam - 1.0) / (scenario.mean_z1 * snr)) / (
        1.0 + scenario.gamma * lam
    )


def nocsi_g(
    snr: float, policy: FixedRatePolicy, theta: float, scenario: FadingScenario
) -> float:
    """E{exp(-theta * R)} of the ON/OFF fixed-rate service."""
    if theta <= 0.0:
        raise ParameterError(f"theta must be > 0, got {theta}")
    if snr == 0.0:
        return 1.0
    rate = policy.rate_at(snr)
    p_on = secure_on_probability(snr, rate, scenario)
    return 1.0 - p_on * -math.expm1(-theta * rate)


def effective_capacity_nocsi(
    snr: float, policy: FixedRatePolicy, theta: float, scenario: FadingScenario
) -> float:
    return -math.log(nocsi_g(snr, policy, theta, scenario)) / theta


def nocsi_throughput(
    source: sources.SourceModel,
    snr: float,
    policy: FixedRatePolicy,
    theta: float,
    scenario: FadingScenario,
) -> float:
    """Largest supportable mean arrival rate under the fixed-rate service."""
    _require_plain_chain(source)
    if snr == 0.0:
        return 0.0
    g = nocsi_g(snr, policy, theta, scenario)
    return qos.max_avg_arrival_rate_from_g(source, g, theta)


# ---------------------------------------------------------------------------
# low-snr limits of the scaled policy
# ---------------------------------------------------------------------------

def _coefficient_of(policy: FixedRatePolicy) -> float:
    if policy.coefficient is None:
        raise ParameterError(
            "low-snr metrics require a snr-scaled policy (coefficient=...)"
        )
    return policy.coefficient


def nocsi_min_ebn0(policy: FixedRatePolicy, scenario: FadingScenario) -> float:
    """Minimum energy per bit (linear) of the scaled fixed-rate scheme.

    ln2 * (1 + gamma) * exp(a/m1) / a; independent of theta and of the
    arrival chain.
    """
    _require_independent(scenario)
    a = _coefficient_of(policy)
    m1 = scenario.mean_z1
    return _LN2 * (1.0 + scenario.gamma) * math.exp(a / m1) / a


def nocsi_wideband_slope(
    source: sources.SourceModel,
    policy: FixedRatePolicy,
    theta: float,
    scenario: FadingScenario,
) -> float:
    """Wideband slope of the scaled fixed-rate scheme for this source."""
    _require_independent(scenario)
    _require_plain_chain(source)
    if theta <= 0.0:
        raise ParameterError(f"theta must be > 0, got {theta}")
    a = _coefficient_of(policy)
    m1 = scenario.mean_z1
    gamma = scenario.gamma
    b = _burstiness(source)
    p0 = math.exp(-a / m1) / (1.0 + gamma)
    t = theta / _LN2
    denom = a / m1 + 2.0 * gamma / (1.0 + gamma) + t * (1.0 - p0 + b * p0)
    return 2.0 * p0 / denom


def nocsi_low_snr_metrics(
    source: sources.SourceModel,
    policy: FixedRatePolicy,
    theta: float,
    scenario: FadingScenario,
) -> LowSnrMetrics:
    return LowSnrMetrics(
        ebn0_min=nocsi_min_ebn0(policy, scenario),
        slope_s0=nocsi_wideband_slope(source, policy, theta, scenario),
        method=MetricsMethod.CLOSED_FORM,
    )


def best_coefficient(scenario: FadingScenario) -> float:
    """argmin_a of the minimum energy per bit: a = m1."""
    _require_independent(scenario)
    return scenario.mean_z1


def min_ebn0_over_coefficients(scenario: FadingScenario) -> float:
    """e * (1 + gamma) * ln2 / m1, attained at a = m1."""
    a = best_coefficient(scenario)
    return nocsi_min_ebn0(FixedRatePolicy(coefficient=a), scenario)


def csi_penalty(scenario: FadingScenario) -> float:
    """Linear Eb/N0 gap between the best fixed-rate scheme and full CSI.

    Full CSI attains ln2/m1 on the confidential stream; operating blind
    costs an extra (e*(1 + gamma) - 1)*ln2/m1.
    """
    _require_independent(scenario)
    return (math.e * (1.0 + scenario.gamma) - 1.0) * _LN2 / scenario.mean_z1
