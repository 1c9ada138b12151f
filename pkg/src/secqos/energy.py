"""Energy-per-bit curves, minimum energy per bit, and wideband slopes.

Conventions.  Throughput r_avg is in bits/block; the derivative formulas
work in nats, so each rate R_i enters through f_i = R_i * ln2.  The energy
per bit of stream i at a finite snr is

    Eb/N0 = weight_i * snr / r_avg,i(snr),

with the power-weighted numerators weight_1 = delta1*Pr(Gamma1),
weight_2 = delta2*Pr(Gamma2) and weight_0 = (1-delta1)Pr(Gamma1) +
(1-delta2)Pr(Gamma2).  The snr -> 0 limit gives the minimum energy per bit
weight_i / rdot(0); the wideband slope S0 = -2 rdot^2 ln2 / rddot captures
the first-order cost above that minimum.  Closed forms of both are provided
for every source family, together with a finite-difference estimator that
fits rdot and rddot from the throughput curve itself.

For independent exponential fading (power_correlation = 0) the closed forms
reduce to simple expressions in gamma = E{z2}/E{z1}; those shortcuts are
returned exactly.  The minimum energy per bit does not depend on theta or on
the chain parameters for the fixed-rate families, while the MMPP families
pay a factor (e^theta - 1)/theta.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Mapping, Sequence, Union

import numpy as np

from . import qos, sources
from .channel import FadingSample, FadingScenario, PowerSplit
from .errors import DomainError, FitError, ParameterError

_LN2 = math.log(2.0)

#: default snr stencil for the low-snr fit (below ~1e-4 noise dominates,
#: above ~1e-3 cubic terms bias the curvature estimate)
DEFAULT_FIT_SNRS = (1e-4, 2e-4, 4e-4, 8e-4)


class MetricsMethod(enum.Enum):
    CLOSED_FORM = "closed_form"
    NUMERIC_FIT = "numeric_fit"


@dataclass(frozen=True)
class FDerivatives:
    """Per-sample first/second derivative of f_i at snr = 0 (nats)."""

    fdot: Union[float, np.ndarray]
    fddot: Union[float, np.ndarray]


@dataclass(frozen=True)
class LowSnrMetrics:
    ebn0_min: float
    slope_s0: float
    method: MetricsMethod
    degenerate: bool = False

    @property
    def ebn0_min_db(self) -> float:
        return 10.0 * math.log10(self.ebn0_min)


@dataclass(frozen=True)
class EnergyPoint:
    snr: float
    r_avg: float
    eb_n0: float
    eb_n0_db: float


# ---------------------------------------------------------------------------
# per-sample derivatives
# ---------------------------------------------------------------------------

def f_derivatives(
    sample: FadingSample, split: PowerSplit, i: qos.MessageIndex
) -> FDerivatives:
    """Exact (fdot, fddot) of stream i at snr = 0 for one fading realization.

    On Gamma1 (z1 >= z2): fdot1 = delta1*(z1 - z2), fddot1 = -delta1^2*(z1^2 - z2^2),
    fdot0 = (1-delta1)*z2, fddot0 = -(1-delta1^2)*z2^2; stream 2 is zero there.
    Gamma2 swaps the roles of the receivers.
    """
    z1 = np.asarray(sample.z1, dtype=float)
    z2 = np.asarray(sample.z2, dtype=float)
    g1 = (z1 >= z2).astype(float)
    g2 = 1.0 - g1
    d1, d2 = split.delta1, split.delta2
    if i == qos.MessageIndex.CONF1:
        fdot = d1 * (z1 - z2) * g1
        fddot = -(d1**2) * (z1**2 - z2**2) * g1
    elif i == qos.MessageIndex.CONF2:
        fdot = d2 * (z2 - z1) * g2
        fddot = -(d2**2) * (z2**2 - z1**2) * g2
    else:
        fdot = (1.0 - d1) * z2 * g1 + (1.0 - d2) * z1 * g2
        fddot = -(1.0 - d1**2) * z2**2 * g1 - (1.0 - d2**2) * z1**2 * g2
    if fdot.ndim == 0:
        return FDerivatives(fdot=float(fdot), fddot=float(fddot))
    return FDerivatives(fdot=fdot, fddot=fddot)


def _stream_weight(i: qos.MessageIndex, split: PowerSplit, pr_g1: float) -> float:
    """Power-weighted Eb/N0 numerator (per unit snr) of stream i."""
    if i == qos.MessageIndex.CONF1:
        return split.delta1 * pr_g1
    if i == qos.MessageIndex.CONF2:
        return split.delta2 * (1.0 - pr_g1)
    return (1.0 - split.delta1) * pr_g1 + (1.0 - split.delta2) * (1.0 - pr_g1)


def _require_stream_power(i: qos.MessageIndex, split: PowerSplit) -> None:
    if i == qos.MessageIndex.CONF1 and split.delta1 == 0.0:
        raise DomainError("stream 1 carries no power (delta1 = 0)")
    if i == qos.MessageIndex.CONF2 and split.delta2 == 0.0:
        raise DomainError("stream 2 carries no power (delta2 = 0)")
    if i == qos.MessageIndex.COMMON and split.delta1 == 1.0 and split.delta2 == 1.0:
        raise DomainError("common stream carries no power (delta1 = delta2 = 1)")


def _burstiness(source: sources.SourceModel) -> float:
    if isinstance(source, sources.ConstantRate):
        return 0.0
    if isinstance(source, (sources.OnOffDiscreteMarkov, sources.OnOffDiscreteMmpp)):
        return sources.burstiness_eta(source.p11, source.p22)
    return sources.burstiness_zeta(source.alpha, source.beta)


def _mmpp_penalty(source: sources.SourceModel, theta: float) -> float:
    return math.expm1(theta) / theta if sources.is_mmpp(source) else 1.0


def low_snr_moments(
    i: qos.MessageIndex,
    scenario: FadingScenario,
    split: PowerSplit,
    method: qos.ExpectationMethod,
):
    """(E{fdot}, var{fdot}, E{fddot}, Pr(Gamma1)) over the fading law."""

    def stack(z1, z2):
        der = f_derivatives(FadingSample(z1=z1, z2=z2), split, i)
        return np.stack([
            der.fdot,
            np.asarray(der.fdot) ** 2,
            der.fddot,
            (np.asarray(z1) >= np.asarray(z2)).astype(float),
        ])

    means, _ = qos.expect_over_fading(stack, scenario, method)
    e_fdot, e_fdot_sq, e_fddot, pr_g1 = (float(v) for v in means)
    var_fdot = max(e_fdot_sq - e_fdot**2, 0.0)
    return e_fdot, var_fdot, e_fddot, pr_g1


# ---------------------------------------------------------------------------
# closed forms
# ---------------------------------------------------------------------------

def min_ebn0_closed_form(
    source: sources.SourceModel,
    i: qos.MessageIndex,
    theta_i: float,
    scenario: FadingScenario,
    split: PowerSplit,
    method: qos.ExpectationMethod,
) -> float:
    """Minimum energy per bit (linear) of stream i for this source family.

    Independent of theta and of the chain parameters for Constant, discrete
    Markov and Markov fluid sources; MMPP families pay (e^theta - 1)/theta.
    """
    if theta_i <= 0.0:
        raise ParameterError(f"theta must be > 0, got {theta_i}")
    _require_stream_power(i, split)
    penalty = _mmpp_penalty(source, theta_i)
    if scenario.power_correlation == 0.0:
        # independent exponentials: exact shortcuts in the marginal means
        m1, m2 = scenario.mean_z1, scenario.mean_z2
        if i == qos.MessageIndex.CONF1:
            base = _LN2 / m1
        elif i == qos.MessageIndex.CONF2:
            base = _LN2 / m2
        else:
            base = _LN2 * (m1 + m2) / (m1 * m2)
        return penalty * base
    e_fdot, _, _, pr_g1 = low_snr_moments(i, scenario, split, method)
    if e_fdot <= 0.0:
        raise DomainError("E{fdot(0)} vanished; minimum energy per bit undefined")
    weight = _stream_weight(i, split, pr_g1)
    return penalty * weight * _LN2 / e_fdot


def wideband_slope_closed_form(
    source: sources.SourceModel,
    i: qos.MessageIndex,
    theta_i: float,
    scenario: FadingScenario,
    split: PowerSplit,
    method: qos.ExpectationMethod,
) -> float:
    """Wideband slope S0 of stream i for this source family.

    General form 2 E{fdot}^2 / [ (theta/ln2)(var{fdot} + B E{fdot}^2)
    - E{fddot} ] with B the source burstiness (eta, zeta, or 0); MMPP
    families scale the whole slope by theta/(e^theta - 1).  For independent
    exponential fading the expression reduces to a function of
    gamma = E{z2}/E{z1} alone, which is what is returned on that path.
    """
    if theta_i <= 0.0:
        raise ParameterError(f"theta must be > 0, got {theta_i}")
    _require_stream_power(i, split)
    b = _burstiness(source)
    kappa = 1.0 / _mmpp_penalty(source, theta_i)
    t = theta_i / _LN2

    if scenario.power_correlation == 0.0:
        gamma = scenario.gamma
        if i == qos.MessageIndex.CONF1:
            return kappa * 2.0 / (t * (1.0 + 2.0 * gamma + b) + 4.0 * gamma + 2.0)
        if i == qos.MessageIndex.CONF2:
            return kappa * 2.0 / (t * (1.0 + 2.0 / gamma + b) + 4.0 / gamma + 2.0)
        if split.delta1 == split.delta2:
            d = split.delta1
            return kappa * 2.0 / (t * (1.0 + b) + 2.0 * (1.0 + d) / (1.0 - d))
        # unequal splits have no simplified common-message form; fall through

    e_fdot, var_fdot, e_fddot, _ = low_snr_moments(i, scenario, split, method)
    if e_fdot <= 0.0:
        raise DomainError("E{fdot(0)} vanished; wideband slope undefined")
    denom = t * (var_fdot + b * e_fdot**2) - e_fddot
    return kappa * 2.0 * e_fdot**2 / denom


# ---------------------------------------------------------------------------
# finite-snr curve and the numeric estimator
# ---------------------------------------------------------------------------

def energy_curve(
    source: sources.SourceModel,
    i: qos.MessageIndex,
    theta_i: float,
    scenario: FadingScenario,
    split: PowerSplit,
    method: qos.ExpectationMethod,
    snr_grid: Sequence[float],
) -> list[EnergyPoint]:
    """(snr, r_avg, Eb/N0) along an ascending positive snr grid."""
    grid = [float(s) for s in snr_grid]
    if not grid or any(s <= 0.0 for s in grid) or any(
        b <= a for a, b in zip(grid, grid[1:])
    ):
        raise ParameterError("snr_grid must be strictly positive and ascending")
    _require_stream_power(i, split)
    pr_g1 = qos.gamma1_probability(scenario, method)
    weight = _stream_weight(i, split, pr_g1)
    points = []
    for snr in grid:
        r_avg = qos.max_avg_arrival_rate(source, i, snr, theta_i, scenario, split, method)
        eb = weight * snr / r_avg if r_avg > 0.0 else math.inf
        db = 10.0 * math.log10(eb) if math.isfinite(eb) else math.inf
        points.append(EnergyPoint(snr=snr, r_avg=r_avg, eb_n0=eb, eb_n0_db=db))
    return points


def fit_low_snr_metrics(
    throughput_curve: Union[Mapping[float, float], Sequence[tuple]],
    numerator_weight: float,
    residual_tol: float = 1e-3,
) -> LowSnrMetrics:
    """Estimate (Eb/N0_min, S0) from a sampled low-snr throughput curve.

    Weighted least squares of r_avg ~ rdot*snr + rddot*snr^2/2 (no
    intercept, rows weighted by 1/snr so the fit is relative); returns
    weight/rdot and -2 rdot^2 ln2 / rddot.  A curve with no measurable
    curvature yields slope infinity with the ``degenerate`` flag set.
    """
    if isinstance(throughput_curve, Mapping):
        pairs = sorted(throughput_curve.items())
    else:
        pairs = sorted((float(s), float(r)) for s, r in throughput_curve)
    if len(pairs) < 4:
        raise FitError(f"need at least 4 curve points, got {len(pairs)}")
    s = np.array([p[0] for p in pairs])
    y = np.array([p[1] for p in pairs])
    if np.any(s <= 0.0):
        raise FitError("curve snr values must be positive")
    if np.any(np.diff(y) < 0.0):
        raise FitError("throughput curve is not nondecreasing; too noisy to fit")

    # rows scaled by 1/snr: fit y/s = rdot + rddot*s/2
    x = np.column_stack([np.ones_like(s), 0.5 * s])
    yy = y / s
    coef, *_ = np.linalg.lstsq(x, yy, rcond=None)
    rdot, rddot = float(coef[0]), float(coef[1])
    resid = yy - x @ coef
    rel_resid = float(np.sqrt(np.mean(resid**2)) / np.mean(yy))
    if rel_resid > residual_tol:
        raise FitError(
            f"fit residual {rel_resid:.2e} exceeds tolerance {residual_tol:.2e} "
            "(curve too noisy; increase samples or use quadrature)"
        )
    if rdot <= 0.0:
        raise FitError(f"fitted rdot(0) = {rdot:.3e} is not positive")

    ebn0 = numerator_weight / rdot
    # curvature below the resolvable floor -> infinite slope, flagged
    if rddot >= 0.0 or abs(rddot) * s.max() < 1e-6 * rdot:
        return LowSnrMetrics(
            ebn0_min=ebn0, slope_s0=math.inf,
            method=MetricsMethod.NUMERIC_FIT, degenerate=True,
        )
    s0 = -2.0 * rdot**2 * _LN2 / rddot
    return LowSnrMetrics(
        ebn0_min=ebn0, slope_s0=s0, method=MetricsMethod.NUMERIC_FIT,
    )


def numeric_low_snr_metrics(
    source: sources.SourceModel,
    i: qos.MessageIndex,
    theta_i: float,
    scenario: FadingScenario,
    split: PowerSplit,
    method: qos.ExpectationMethod,
    snr_points: Sequence[float] = DEFAULT_FIT_SNRS,
) -> LowSnrMetrics:
    """Convenience wrapper: build the low-snr curve and fit it."""
    _require_stream_power(i, split)
    curve = {
        snr: qos.max_avg_arrival_rate(source, i, snr, theta_i, scenario, split, method)
        for snr in snr_points
    }
    pr_g1 = qos.gamma1_probability(scenario, method)
    return fit_low_snr_metrics(curve, _stream_weight(i, split, pr_g1))
