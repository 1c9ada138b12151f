"""Broadcast fading channel: correlated Rayleigh sampling and per-block rates.

A transmitter sends a common message to two receivers plus one confidential
message per block.  With fading powers (z1, z2) the block belongs to region
Gamma1 when z1 >= z2 (receiver 1 gets the confidential slot, receiver 2 is
the eavesdropper) and to Gamma2 otherwise.  The confidential rate is the
instantaneous secrecy capacity under the power split delta_i; the common
rate is what the weaker receiver can decode under the residual power.

All rate formulas are in bits per block (log2).  Functions accept scalars or
numpy arrays for the fading powers and broadcast elementwise.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import ParameterError


class Region(enum.Enum):
    GAMMA1 = 1
    GAMMA2 = 2


@dataclass(frozen=True)
class FadingScenario:
    """Marginal means and power correlation of the two fading powers.

    Rayleigh is the only built-in family: z1, z2 are exponential with means
    (mean_z1, mean_z2) and corr(z1, z2) = power_correlation.
    """

    mean_z1: float = 1.0
    mean_z2: float = 1.0
    power_correlation: float = 0.0
    family: str = "rayleigh"

    def __post_init__(self) -> None:
        if not (self.mean_z1 > 0.0 and self.mean_z2 > 0.0):
            raise ParameterError("fading power means must be > 0")
        if not (0.0 <= self.power_correlation < 1.0):
            raise ParameterError(
                f"power_correlation must be in [0, 1), got {self.power_correlation}"
            )
        if self.family != "rayleigh":
            raise ParameterError(f"unsupported fading family {self.family!r}")

    @property
    def gamma(self) -> float:
        """Mean of z2 relative to z1 (the usual normalization has mean_z1 = 1)."""
        return self.mean_z2 / self.mean_z1


@dataclass(frozen=True)
class PowerSplit:
    """Fraction of transmit power on the confidential message per region."""

    delta1: float
    delta2: float

    def __post_init__(self) -> None:
        for name, d in (("delta1", self.delta1), ("delta2", self.delta2)):
            if not (0.0 <= d <= 1.0):
                raise ParameterError(f"{name} must be in [0, 1], got {d}")


@dataclass(frozen=True)
class FadingSample:
    """One (or a vector of) joint fading-power draw(s)."""

    z1: Union[float, np.ndarray]
    z2: Union[float, np.ndarray]


@dataclass(frozen=True)
class RealizationRates:
    """Instantaneous common/confidential rates for one fading realization.

    Exactly one of r1/r2 is nonzero (whichever receiver owns the block's
    confidential slot).  For array-valued samples ``region`` is a boolean
    array that is True on Gamma1.
    """

    r0: Union[float, np.ndarray]
    r1: Union[float, np.ndarray]
    r2: Union[float, np.ndarray]
    region: Union[Region, np.ndarray]


def sample_fading(
    scenario: FadingScenario,
    rng: np.random.Generator,
    size: Union[int, None] = None,
) -> FadingSample:
    """Draw (z1, z2) with the scenario's means and power correlation.

    The correlation is induced at the complex-gain level: h2 is built from
    the unit-variance version of h1 with gain correlation sqrt(rho), which
    gives power correlation rho for jointly circular Gaussian gains (checked
    empirically in the test suite).
    """
    n = 1 if size is None else size
    rho_gain = math.sqrt(scenario.power_correlation)
    h1 = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / math.sqrt(2.0)
    w = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / math.sqrt(2.0)
    h2 = rho_gain * h1 + math.sqrt(1.0 - rho_gain**2) * w
    z1 = scenario.mean_z1 * np.abs(h1) ** 2
    z2 = scenario.mean_z2 * np.abs(h2) ** 2
    if size is None:
        return FadingSample(z1=float(z1[0]), z2=float(z2[0]))
    return FadingSample(z1=z1, z2=z2)


def classify_region(sample: FadingSample) -> Union[Region, np.ndarray]:
    """Gamma1 iff z1 >= z2 (the boundary has zero probability and goes to Gamma1)."""
    if np.ndim(sample.z1) == 0 and np.ndim(sample.z2) == 0:
        return Region.GAMMA1 if sample.z1 >= sample.z2 else Region.GAMMA2
    return np.asarray(sample.z1) >= np.asarray(sample.z2)


def secrecy_rate_generic(z_main, z_eve, snr: float):
    """[log2(1 + snr*z_main) - log2(1 + snr*z_eve)]^+ in bits/block."""
    if snr <= 0.0:
        raise ParameterError(f"snr must be > 0, got {snr}")
    diff = np.log2(1.0 + snr * np.asarray(z_main)) - np.log2(1.0 + snr * np.asarray(z_eve))
    out = np.maximum(diff, 0.0)
    return float(out) if out.ndim == 0 else out


def instantaneous_rates(
    sample: FadingSample, snr: float, split: PowerSplit
) -> RealizationRates:
    """Common and confidential rates for one realization (bits/block)."""
    if snr <= 0.0:
        raise ParameterError(f"snr must be > 0, got {snr}")
    z1 = np.asarray(sample.z1, dtype=float)
    z2 = np.asarray(sample.z2, dtype=float)
    in_g1 = z1 >= z2
    # weaker power under the active split: z2 in Gamma1, z1 in Gamma2
    z_weak = np.where(in_g1, z2, z1)
    delta = np.where(in_g1, split.delta1, split.delta2)
    r0 = np.log2(1.0 + (1.0 - delta) * snr * z_weak / (1.0 + delta * snr * z_weak))
    # confidential stream: log2((1 + d*snr*z_strong) / (1 + d*snr*z_weak))
    z_strong = np.where(in_g1, z1, z2)
    conf = np.log2(1.0 + delta * snr * z_strong) - np.log2(1.0 + delta * snr * z_weak)
    r1 = np.where(in_g1, conf, 0.0)
    r2 = np.where(in_g1, 0.0, conf)
    if r0.ndim == 0:
        return RealizationRates(
            r0=float(r0),
            r1=float(r1),
            r2=float(r2),
            region=Region.GAMMA1 if bool(in_g1) else Region.GAMMA2,
        )
    return RealizationRates(r0=r0, r1=r1, r2=r2, region=in_g1)
