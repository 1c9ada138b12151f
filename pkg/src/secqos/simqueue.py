"""Buffer simulation used to validate the QoS-exponent analysis.

The queue is driven block by block: the arrival chain is painted from
geometric sojourn times, the service is drawn from fresh fading (or from
the fixed-rate secure-ON event when the transmitter has no CSI), and the
buffer follows the Lindley recursion Q_k = max(Q_{k-1} + A_k - S_k, 0).
Everything is vectorized in fixed one-million-block chunks so a 1e7-block
run stays in tens of seconds; the chunking is part of the reproducibility
contract (same seed, same horizon -> bit-identical report).

Driving the queue at the critical ON rate r_on = r_avg*(theta)/P_on makes
the overflow tail decay with exponent theta, which is what
``fit_qos_exponent`` extracts from the threshold tallies:

    ln Pr{Q > q} ~ ln(sigma) - theta*q.

Continuous-time arrival chains are discretized per block (the ON/OFF state
is frozen over each block at its start-of-block value), which is the
resolution the queue itself operates at.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Union

import numpy as np

from . import nocsi, qos, sources
from .channel import FadingScenario, PowerSplit, sample_fading, instantaneous_rates
from .errors import FitError, ParameterError

_CHUNK_BLOCKS = 1_000_000
_ABSORBED = 2**62


# ---------------------------------------------------------------------------
# service specifications
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CsiService:
    """Per-block service from the full-CSI stream rates."""

    snr: float
    stream: qos.MessageIndex
    scenario: FadingScenario
    split: PowerSplit

    def __post_init__(self) -> None:
        if not (self.snr > 0.0 and math.isfinite(self.snr)):
            raise ParameterError(f"snr must be finite and > 0, got {self.snr}")


@dataclass(frozen=True)
class FixedRateService:
    """No-CSI service: ``rate`` bits whenever the block is securely decodable."""

    snr: float
    rate: float
    scenario: FadingScenario

    def __post_init__(self) -> None:
        if not (self.snr > 0.0 and math.isfinite(self.snr)):
            raise ParameterError(f"snr must be finite and > 0, got {self.snr}")
        if not (self.rate > 0.0 and math.isfinite(self.rate)):
            raise ParameterError(f"rate must be finite and > 0, got {self.rate}")


ServiceSpec = Union[CsiService, FixedRateService]


def service_g(service: ServiceSpec, theta: float, method=None) -> float:
    """E{exp(-theta * S)} of one service block."""
    if isinstance(service, CsiService):
        if method is None:
            if service.scenario.power_correlation == 0.0:
                method = qos.GaussLaguerre(nodes_per_axis=256)
            else:
                method = qos.MonteCarlo(samples=2_000_000, seed=917)
        return qos.g_value(
            service.stream, service.snr, theta, service.scenario,
            service.split, method,
        ).value
    p_on = nocsi.secure_on_probability(service.snr, service.rate, service.scenario)
    return 1.0 - p_on * -math.expm1(-theta * service.rate)


@dataclass(frozen=True)
class Calibration:
    on_rate: float
    avg_rate: float
    g: float


def calibrate_on_rate(
    source: sources.SourceModel,
    service: ServiceSpec,
    theta: float,
    method=None,
) -> Calibration:
    """Critical ON-state arrival rate for the target QoS exponent.

    r_on = r_avg*(theta) / P_on; driving the simulated queue at exactly this
    rate should reproduce a log-overflow slope of -theta.
    """
    g = service_g(service, theta, method)
    avg = qos.max_avg_arrival_rate_from_g(source, g, theta)
    on = avg / sources.on_probability(source)
    return Calibration(on_rate=on, avg_rate=avg, g=g)


# ---------------------------------------------------------------------------
# configuration and report
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SimConfig:
    source: sources.SourceModel
    service: ServiceSpec
    on_rate: float
    thresholds: tuple
    horizon: int = 10_000_000
    seed: int = 0
    delay_probe_spacing: int = 0
    delay_lookahead: int = 5_000

    def __post_init__(self) -> None:
        if not (self.on_rate > 0.0 and math.isfinite(self.on_rate)):
            raise ParameterError(f"on_rate must be finite and > 0, got {self.on_rate}")
        if self.horizon < 10**6:
            raise ParameterError(
                f"horizon must be at least 1e6 blocks, got {self.horizon}"
            )
        q = tuple(float(t) for t in self.thresholds)
        if not q or any(t < 0.0 for t in q) or any(b <= a for a, b in zip(q, q[1:])):
            raise ParameterError("thresholds must be nonempty, >= 0 and ascending")
        object.__setattr__(self, "thresholds", q)
        if self.delay_probe_spacing < 0:
            raise ParameterError("delay_probe_spacing must be >= 0")
        if self.delay_probe_spacing and self.delay_lookahead < 1:
            raise ParameterError("delay_lookahead must be >= 1")


@dataclass(frozen=True)
class SimReport:
    horizon: int
    seed: int
    on_rate: float
    thresholds: tuple
    counts: tuple
    occupancy: float
    mean_arrival: float
    mean_service: float
    final_queue: float
    crossings: Optional[tuple] = None
    delay_probe_spacing: int = 0
    delay_lookahead: int = 0
    delay_samples: Optional[np.ndarray] = field(default=None, repr=False)
    delay_censored: int = 0

    @property
    def probs(self) -> np.ndarray:
        return np.asarray(self.counts, dtype=float) / self.horizon

    @property
    def ln_probs(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(self.probs)

    def delay_tail(self, d: float) -> float:
        """Empirical Pr{virtual delay > d blocks} from the probe samples."""
        if self.delay_samples is None or not len(self.delay_samples):
            raise ParameterError("simulation ran without delay probes")
        if d >= self.delay_lookahead:
            raise ParameterError(
                f"d={d} is beyond the probe lookahead {self.delay_lookahead}"
            )
        return float(np.mean(self.delay_samples > d))


# ---------------------------------------------------------------------------
# internals
# ---------------------------------------------------------------------------

def _lindley(net: np.ndarray, q0: float):
    """Queue trajectory over one chunk given net inputs and starting level.

    Uses the running-minimum form of the Lindley recursion:
    Q_k = max(C_k - min_{0<=j<=k} C_j, q0 + C_k) with C the cumsum of net.
    """
    c = np.cumsum(net)
    floor = np.minimum(np.minimum.accumulate(c), 0.0)
    q = np.maximum(c - floor, q0 + c)
    return q, float(q[-1])


def _paint_states(rng, n, stay_off, stay_on, state, run):
    """Fill n blocks of the two-state chain; returns (int8 path, state, run).

    ``run`` is the number of blocks still owed to the current sojourn; the
    geometric sojourn lengths are drawn in alternating batches.  Memoryless
    sojourns mean starting each chunk mid-sojourn is exact.
    """
    out = np.empty(n, dtype=np.int8)
    stay = (stay_off, stay_on)
    pos = 0
    while pos < n:
        if run > 0:
            take = min(run, n - pos)
            out[pos : pos + take] = state
            pos += take
            run -= take
            if run == 0:
                state = 1 - state
            continue
        leave_here = 1.0 - stay[state]
        leave_other = 1.0 - stay[1 - state]
        if leave_here <= 0.0:
            run = _ABSORBED
            continue
        if leave_other <= 0.0:
            # the other state is absorbing: draw this sojourn alone
            run = int(rng.geometric(leave_here))
            continue
        need = n - pos
        mean_pair = 1.0 / leave_here + 1.0 / leave_other
        k = 2 * (max(8, int(1.25 * need / mean_pair)) + 4)
        p = np.empty(k)
        p[0::2] = leave_here
        p[1::2] = leave_other
        lengths = rng.geometric(p).astype(np.int64)
        cum = np.cumsum(lengths)
        j = int(np.searchsorted(cum, need, side="left"))
        if j >= k:
            j = k - 1  # batch fell short; consume it all and loop
        pattern = np.empty(j + 1, dtype=np.int8)
        pattern[0::2] = state
        pattern[1::2] = 1 - state
        take_lengths = lengths[: j + 1].copy()
        excess = int(cum[j]) - need
        if excess > 0:
            take_lengths[j] -= excess
        seg = np.repeat(pattern, take_lengths)
        out[pos : pos + len(seg)] = seg
        pos += len(seg)
        if excess > 0:
            state = int(pattern[j])
            run = excess
        else:
            state = 1 - int(pattern[j])
            run = 0
    return out, state, run


def _draw_service(service: ServiceSpec, rng, n: int) -> np.ndarray:
    sample = sample_fading(service.scenario, rng, size=n)
    if isinstance(service, CsiService):
        rates = instantaneous_rates(sample, service.snr, service.split)
        return np.asarray(
            (rates.r0, rates.r1, rates.r2)[int(service.stream)], dtype=float
        )
    on = nocsi.secure_event(sample.z1, sample.z2, service.snr, service.rate)
    return service.rate * on.astype(float)


def run_buffer_sim(config: SimConfig) -> SimReport:
    """Simulate the buffer and tally threshold exceedances Pr{Q > q}."""
    rng = np.random.default_rng(config.seed)
    source = config.source
    thresholds = np.asarray(config.thresholds)
    counts = np.zeros(len(thresholds), dtype=np.int64)
    crossings = np.zeros(len(thresholds), dtype=np.int64)
    occupied = 0
    sum_arrival = 0.0
    sum_service = 0.0

    constant = isinstance(source, sources.ConstantRate)
    mmpp = sources.is_mmpp(source)
    if not constant:
        trans = sources.transition_matrix(source)
        stay_off, stay_on = float(trans[0, 0]), float(trans[1, 1])
        state = 1 if rng.random() < sources.on_probability(source) else 0
        run = 0

    spacing = config.delay_probe_spacing
    lookahead = config.delay_lookahead
    delays = [] if spacing else None
    censored = 0
    next_probe = 0  # global block index of the next delay probe

    q0 = 0.0
    done = 0
    while done < config.horizon:
        n = min(_CHUNK_BLOCKS, config.horizon - done)
        if constant:
            states = np.ones(n, dtype=np.int8)
        else:
            states, state, run = _paint_states(rng, n, stay_off, stay_on, state, run)
        if mmpp:
            arrivals = rng.poisson(config.on_rate * states).astype(float)
        else:
            arrivals = config.on_rate * states.astype(float)
        service = _draw_service(config.service, rng, n)
        prev_level = q0
        q, q0 = _lindley(arrivals - service, q0)

        occupied += int(np.count_nonzero(q > 1e-12))
        for idx, t in enumerate(thresholds):
            above = q > t
            counts[idx] += int(np.count_nonzero(above))
            # independent excursions above t: entries from below
            ups = int(np.count_nonzero(above[1:] & ~above[:-1]))
            if above[0] and prev_level <= t:
                ups += 1
            crossings[idx] += ups
        sum_arrival += float(arrivals.sum())
        sum_service += float(service.sum())

        if spacing:
            # probes on the global grid; the last `lookahead` blocks of a
            # chunk are skipped so every probe can resolve within the chunk
            first = next_probe - done
            limit = n - lookahead
            if first < limit:
                ks = np.arange(first, limit, spacing)
                csum = np.cumsum(service)
                pos = np.searchsorted(csum, csum[ks] + q[ks], side="left")
                w = np.clip(pos - ks, 0, lookahead)
                censored += int(np.count_nonzero(pos >= n))
                delays.append(w.astype(np.int64))
            # advance the grid past this chunk
            skipped = max(0, -((done + n - next_probe) // -spacing))
            next_probe += skipped * spacing
        done += n

    return SimReport(
        horizon=config.horizon,
        seed=config.seed,
        on_rate=config.on_rate,
        thresholds=config.thresholds,
        counts=tuple(int(c) for c in counts),
        occupancy=occupied / config.horizon,
        mean_arrival=sum_arrival / config.horizon,
        mean_service=sum_service / config.horizon,
        final_queue=q0,
        crossings=tuple(int(c) for c in crossings),
        delay_probe_spacing=spacing,
        delay_lookahead=lookahead if spacing else 0,
        delay_samples=np.concatenate(delays) if delays else None,
        delay_censored=censored,
    )


def default_thresholds(theta: float, count: int = 12, step_nats: float = 0.5) -> tuple:
    """Threshold ladder spanning ln Pr{Q > q} from about -0.5 to -6.

    Spacing the thresholds by a fixed number of nats of expected decay
    keeps the event counts usable across very different theta values.
    """
    if theta <= 0.0:
        raise ParameterError(f"theta must be > 0, got {theta}")
    return tuple(step_nats * k / theta for k in range(1, count + 1))


# ---------------------------------------------------------------------------
# fitting and prediction
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QosFit:
    theta_sim: float
    sigma_fit: float
    residual_rms: float
    thresholds_used: tuple


def fit_qos_exponent(
    report: SimReport,
    min_events: int = 100,
    drop_fraction: float = 0.2,
    min_points: int = 4,
    fit_range: Optional[tuple] = None,
) -> QosFit:
    """Least-squares slope of ln Pr{Q > q} vs q -> (theta_sim, sigma).

    Overflow blocks arrive in long correlated excursions, so the honest
    sample size at a threshold is its up-crossing count, not its block
    count.  Thresholds with too few events are discarded, the smallest
    remaining fraction is dropped (the region near q = 0 carries
    pre-asymptotic curvature), and the rest are weighted by excursions so
    poorly equilibrated deep levels cannot steer the slope.

    Passing ``fit_range=(lo, hi)`` restricts the fit to thresholds inside
    that interval instead of using the automatic drop rule.
    """
    qs = np.asarray(report.thresholds)
    counts = np.asarray(report.counts)
    if report.crossings is not None:
        events = np.asarray(report.crossings)
    else:
        events = counts
    keep = (counts >= min_events) & (events >= min_events)
    if fit_range is not None:
        lo, hi = fit_range
        keep &= (qs >= lo) & (qs <= hi)
    qs, counts, events = qs[keep], counts[keep], events[keep]
    n_drop = int(drop_fraction * len(qs)) if fit_range is None else 0
    qs, counts, events = qs[n_drop:], counts[n_drop:], events[n_drop:]
    if len(qs) < min_points:
        raise FitError(
            f"only {len(qs)} usable thresholds (need {min_points}); "
            "lower the thresholds or lengthen the run"
        )
    ln_p = np.log(counts / report.horizon)
    slope, intercept = np.polyfit(qs, ln_p, 1, w=np.sqrt(events))
    if slope >= 0.0:
        raise FitError(f"overflow tail is not decaying (slope {slope:.3g})")
    resid = ln_p - (slope * qs + intercept)
    return QosFit(
        theta_sim=float(-slope),
        sigma_fit=float(np.exp(intercept)),
        residual_rms=float(np.sqrt(np.mean(resid**2))),
        thresholds_used=tuple(float(t) for t in qs),
    )


def predict_delay_tail(
    source: sources.SourceModel,
    theta: float,
    on_rate: float,
    sigma: float,
    delay: float,
) -> float:
    """sigma * exp(-theta * a(theta, r_on) * d): the delay-violation tail."""
    a = sources.effective_bandwidth(source, theta, on_rate)
    return sigma * math.exp(-theta * a * delay)


# ---------------------------------------------------------------------------
# report output
# ---------------------------------------------------------------------------

def write_report_csv(
    report: SimReport,
    path,
    metadata: Optional[Mapping[str, object]] = None,
) -> None:
    """Write the threshold tallies as CSV with a versioned header."""
    with open(path, "w", newline="") as fh:
        fh.write("# schema=secqos.simreport/1\n")
        fh.write("# units: q=bits count=blocks prob=fraction ln_prob=nats\n")
        fh.write(
            f"# horizon={report.horizon} seed={report.seed}"
            f" on_rate={report.on_rate!r} occupancy={report.occupancy!r}\n"
        )
        for key, value in (metadata or {}).items():
            fh.write(f"# {key}={value}\n")
        writer = csv.writer(fh)
        writer.writerow(["q", "count", "prob", "ln_prob"])
        for q, count, prob, lnp in zip(
            report.thresholds, report.counts, report.probs, report.ln_probs
        ):
            writer.writerow([f"{q:.10g}", count, f"{prob:.10g}", f"{lnp:.10g}"])
