"""Secure throughput and energy-efficiency limits under delay QoS.

Building blocks: Markovian traffic models and their effective bandwidths
(`sources`), the fading broadcast channel with confidential and common
messages (`channel`), effective capacity and maximum arrival rates under a
QoS exponent (`qos`), low-snr energy metrics (`energy`), fixed-rate
operation without transmitter CSI (`nocsi`), and the buffer simulator that
validates the exponents (`simqueue`).
"""

from . import channel, energy, nocsi, qos, simqueue, sources
from .channel import FadingSample, FadingScenario, PowerSplit, Region
from .energy import (
    EnergyPoint,
    LowSnrMetrics,
    MetricsMethod,
    energy_curve,
    f_derivatives,
    fit_low_snr_metrics,
    min_ebn0_closed_form,
    numeric_low_snr_metrics,
    wideband_slope_closed_form,
)
from .errors import (
    ConfigError,
    DomainError,
    FitError,
    ParameterError,
    SecqosError,
    SolverError,
    UnsupportedFamilyError,
)
from .nocsi import (
    FixedRatePolicy,
    best_coefficient,
    csi_penalty,
    effective_capacity_nocsi,
    min_ebn0_over_coefficients,
    nocsi_low_snr_metrics,
    nocsi_min_ebn0,
    nocsi_throughput,
    nocsi_wideband_slope,
    secure_on_probability,
)
from .qos import (
    GaussLaguerre,
    MessageIndex,
    MonteCarlo,
    effective_capacity,
    expect_over_fading,
    g_value,
    max_avg_arrival_rate,
    max_avg_arrival_rate_from_g,
    solve_on_rate_bisection,
)
from .simqueue import (
    Calibration,
    CsiService,
    FixedRateService,
    SimConfig,
    SimReport,
    calibrate_on_rate,
    fit_qos_exponent,
    predict_delay_tail,
    run_buffer_sim,
    write_report_csv,
)
from .sources import (
    ConstantRate,
    OnOffContinuousMmpp,
    OnOffDiscreteMarkov,
    OnOffDiscreteMmpp,
    OnOffMarkovFluid,
    effective_bandwidth,
    effective_bandwidth_mc_oracle,
    mean_rate,
    on_probability,
)

__version__ = "0.1.0"
