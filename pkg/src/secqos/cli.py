"""Command-line front end.

Subcommands
  analyze    throughput/effective-capacity curve for one stream
  energy     energy-per-bit curve plus low-snr metrics
  simulate   buffer simulation and QoS-exponent fit
  nocsi      fixed-rate (no transmitter CSI) throughput and metrics
  reproduce  canned parameter studies (fig2 .. fig12)

All commands write versioned CSV tables (units in the header, root seed
recorded) into --out, with a matplotlib rendering of each table saved
alongside.  Exit codes: 0 on success, 2 for configuration problems, 3 for
numerical or fitting failures.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from . import energy, nocsi, qos, simqueue, sources
from .channel import FadingScenario, PowerSplit
from .errors import (
    ConfigError,
    DomainError,
    FitError,
    ParameterError,
    SolverError,
    UnsupportedFamilyError,
)

_SCHEMA = "secqos.table/1"
_LN2 = math.log(2.0)

_STREAMS = {
    "common": qos.MessageIndex.COMMON,
    "conf1": qos.MessageIndex.CONF1,
    "conf2": qos.MessageIndex.CONF2,
}

_FIGURES = tuple(f"fig{k}" for k in range(2, 13))


# ---------------------------------------------------------------------------
# config handling
# ---------------------------------------------------------------------------

def _load_config(args) -> dict:
    if not args.config:
        raise ConfigError(f"{args.command} requires --config PATH")
    path = Path(args.config)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML in {path}: {exc}") from exc


def _table(cfg: dict, name: str, required: bool = True) -> dict:
    sec = cfg.get(name)
    if sec is None:
        if required:
            raise ConfigError(f"missing [{name}] table in config")
        return {}
    if not isinstance(sec, dict):
        raise ConfigError(f"[{name}] must be a table")
    return sec


def _source_from(cfg: dict) -> sources.SourceModel:
    sec = _table(cfg, "source")
    family = sec.get("family")
    try:
        if family == "constant":
            return sources.ConstantRate()
        if family in ("discrete", "dmmpp"):
            cls = (
                sources.OnOffDiscreteMarkov
                if family == "discrete"
                else sources.OnOffDiscreteMmpp
            )
            return cls(p11=float(sec["p11"]), p22=float(sec["p22"]))
        if family in ("fluid", "cmmpp"):
            cls = (
                sources.OnOffMarkovFluid
                if family == "fluid"
                else sources.OnOffContinuousMmpp
            )
            return cls(alpha=float(sec["alpha"]), beta=float(sec["beta"]))
    except KeyError as exc:
        raise ConfigError(f"[source] family {family!r} is missing key {exc}")
    except (ParameterError, ValueError) as exc:
        raise ConfigError(f"[source]: {exc}") from exc
    raise ConfigError(
        f"unknown source family {family!r} "
        "(expected constant|discrete|fluid|dmmpp|cmmpp)"
    )


def _scenario_from(cfg: dict) -> FadingScenario:
    sec = _table(cfg, "channel", required=False)
    try:
        return FadingScenario(
            mean_z1=float(sec.get("mean_z1", 1.0)),
            mean_z2=float(sec.get("mean_z2", 1.0)),
            power_correlation=float(sec.get("power_correlation", 0.0)),
        )
    except (ParameterError, ValueError) as exc:
        raise ConfigError(f"[channel]: {exc}") from exc


def _split_from(cfg: dict) -> PowerSplit:
    sec = _table(cfg, "power", required=False)
    try:
        return PowerSplit(
            delta1=float(sec.get("delta1", 0.5)),
            delta2=float(sec.get("delta2", 0.5)),
        )
    except (ParameterError, ValueError) as exc:
        raise ConfigError(f"[power]: {exc}") from exc


def _qos_from(cfg: dict):
    sec = _table(cfg, "qos")
    try:
        theta = float(sec["theta"])
    except KeyError:
        raise ConfigError("[qos] needs theta")
    stream_name = sec.get("stream", "conf1")
    if stream_name not in _STREAMS:
        raise ConfigError(f"[qos] stream must be one of {sorted(_STREAMS)}")
    return theta, _STREAMS[stream_name]


def _snr_grid(value) -> list:
    if isinstance(value, dict):
        try:
            start, stop = float(value["start"]), float(value["stop"])
            points = int(value["points"])
        except KeyError as exc:
            raise ConfigError(f"snr grid table is missing key {exc}")
        if not (0.0 < start < stop) or points < 2:
            raise ConfigError("snr grid needs 0 < start < stop and points >= 2")
        return [float(s) for s in np.geomspace(start, stop, points)]
    if isinstance(value, (list, tuple)) and value:
        grid = [float(s) for s in value]
        if any(s <= 0.0 for s in grid) or any(
            b <= a for a, b in zip(grid, grid[1:])
        ):
            raise ConfigError("snr grid must be positive and ascending")
        return grid
    raise ConfigError("snr grid must be a list or a {start, stop, points} table")


def _method_from(args, cfg: dict, scenario: FadingScenario):
    sec = _table(cfg, "method", required=False)
    name = args.method or sec.get("name")
    if name is None:
        name = "quad" if scenario.power_correlation == 0.0 else "mc"
    if name == "quad":
        return qos.GaussLaguerre(nodes_per_axis=int(sec.get("nodes", 128)))
    if name == "mc":
        samples = args.samples or int(sec.get("samples", 10**6))
        return qos.MonteCarlo(samples=samples, seed=args.seed)
    raise ConfigError(f"unknown method {name!r} (expected mc or quad)")


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------

def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.10g}"
    return str(value)


def _write_table(path: Path, columns: dict, units: str, meta: dict) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# schema={_SCHEMA}\n")
        fh.write(f"# units: {units}\n")
        for key, value in meta.items():
            fh.write(f"# {key}={_fmt(value)}\n")
        writer = csv.writer(fh)
        writer.writerow(list(columns))
        for row in zip(*columns.values()):
            writer.writerow([_fmt(v) for v in row])
    print(f"wrote {path}")


def _plot_lines(
    path: Path,
    series,
    xlabel: str,
    ylabel: str,
    logx: bool = False,
    logy: bool = False,
    title: str = "",
) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    for label, x, y in series:
        ax.plot(x, y, marker="o", markersize=3, linewidth=1.2, label=label)
    if logx:
        ax.set_xscale("log")
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    if len(series) > 1 or series[0][0]:
        ax.legend(fontsize=8)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    print(f"wrote {path}")


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _cmd_analyze(args) -> None:
    cfg = _load_config(args)
    source = _source_from(cfg)
    scenario = _scenario_from(cfg)
    split = _split_from(cfg)
    theta, stream = _qos_from(cfg)
    method = _method_from(args, cfg, scenario)
    grid = _snr_grid(_table(cfg, "analyze").get("snr_grid"))

    g_vals, caps, r_avgs, r_ons = [], [], [], []
    p_on = sources.on_probability(source)
    for snr in grid:
        g = qos.g_value(stream, snr, theta, scenario, split, method).value
        g_vals.append(g)
        caps.append(-math.log(g) / theta)
        r_avg = qos.max_avg_arrival_rate_from_g(source, g, theta)
        r_avgs.append(r_avg)
        r_ons.append(r_avg / p_on)

    out = _out_dir(args)
    _write_table(
        out / "analyze.csv",
        {
            "snr": grid,
            "g": g_vals,
            "effective_capacity": caps,
            "max_avg_rate": r_avgs,
            "on_rate": r_ons,
        },
        units="snr=linear g=unitless effective_capacity=bits/block "
        "max_avg_rate=bits/block on_rate=bits/block",
        meta={"seed": args.seed, "theta": theta, "stream": stream.name.lower()},
    )
    _plot_lines(
        out / "analyze.png",
        [("max avg rate", grid, r_avgs), ("effective capacity", grid, caps)],
        xlabel="snr",
        ylabel="bits/block",
        logx=True,
    )


def _cmd_energy(args) -> None:
    cfg = _load_config(args)
    source = _source_from(cfg)
    scenario = _scenario_from(cfg)
    split = _split_from(cfg)
    theta, stream = _qos_from(cfg)
    method = _method_from(args, cfg, scenario)
    sec = _table(cfg, "energy")
    grid = _snr_grid(sec.get("snr_grid"))

    points = energy.energy_curve(source, stream, theta, scenario, split, method, grid)
    meta = {"seed": args.seed, "theta": theta, "stream": stream.name.lower()}
    meta["ebn0_min_closed"] = energy.min_ebn0_closed_form(
        source, stream, theta, scenario, split, method
    )
    meta["ebn0_min_closed_db"] = 10.0 * math.log10(meta["ebn0_min_closed"])
    meta["slope_s0_closed"] = energy.wideband_slope_closed_form(
        source, stream, theta, scenario, split, method
    )
    if sec.get("fit", False):
        fitted = energy.numeric_low_snr_metrics(
            source, stream, theta, scenario, split, method
        )
        meta["ebn0_min_fit_db"] = fitted.ebn0_min_db
        meta["slope_s0_fit"] = fitted.slope_s0

    out = _out_dir(args)
    _write_table(
        out / "energy.csv",
        {
            "snr": [p.snr for p in points],
            "r_avg": [p.r_avg for p in points],
            "eb_n0": [p.eb_n0 for p in points],
            "eb_n0_db": [p.eb_n0_db for p in points],
        },
        units="snr=linear r_avg=bits/block eb_n0=linear eb_n0_db=dB",
        meta=meta,
    )
    _plot_lines(
        out / "energy.png",
        [("", [p.eb_n0_db for p in points], [p.r_avg for p in points])],
        xlabel="Eb/N0 (dB)",
        ylabel="max avg rate (bits/block)",
        logy=True,
    )


def _sim_service_from(cfg: dict, scenario, split):
    sec = _table(cfg, "simulate")
    mode = sec.get("mode", "csi")
    try:
        snr = float(sec["snr"])
    except KeyError:
        raise ConfigError("[simulate] needs snr")
    if mode == "csi":
        stream = sec.get("stream")
        theta, qstream = _qos_from(cfg)
        if stream is not None:
            if stream not in _STREAMS:
                raise ConfigError(f"[simulate] stream must be one of {sorted(_STREAMS)}")
            qstream = _STREAMS[stream]
        return simqueue.CsiService(
            snr=snr, stream=qstream, scenario=scenario, split=split
        ), theta
    if mode == "nocsi":
        theta, _ = _qos_from(cfg)
        if "rate" in sec:
            rate = float(sec["rate"])
        else:
            rate = float(sec.get("coefficient", 1.0)) * snr / _LN2
        return simqueue.FixedRateService(snr=snr, rate=rate, scenario=scenario), theta
    raise ConfigError(f"[simulate] mode must be csi or nocsi, got {mode!r}")


def _run_one_sim(source, service, theta, thresholds, horizon, seed, method, spacing=0):
    cal = simqueue.calibrate_on_rate(source, service, theta, method)
    config = simqueue.SimConfig(
        source=source,
        service=service,
        on_rate=cal.on_rate,
        thresholds=thresholds,
        horizon=horizon,
        seed=seed,
        delay_probe_spacing=spacing,
    )
    report = simqueue.run_buffer_sim(config)
    fit = simqueue.fit_qos_exponent(report)
    return cal, report, fit


def _cmd_simulate(args) -> None:
    cfg = _load_config(args)
    source = _source_from(cfg)
    scenario = _scenario_from(cfg)
    split = _split_from(cfg)
    method = _method_from(args, cfg, scenario)
    sec = _table(cfg, "simulate")
    service, theta = _sim_service_from(cfg, scenario, split)
    horizon = int(sec.get("horizon", 10_000_000))
    thresholds = tuple(
        float(t) for t in sec.get("thresholds", simqueue.default_thresholds(theta))
    )
    spacing = int(sec.get("delay_probe_spacing", 0))

    cal, report, fit = _run_one_sim(
        source, service, theta, thresholds, horizon, args.seed, method, spacing
    )
    out = _out_dir(args)
    simqueue.write_report_csv(
        report,
        out / "simulate.csv",
        metadata={
            "theta_target": _fmt(theta),
            "theta_sim": _fmt(fit.theta_sim),
            "sigma_fit": _fmt(fit.sigma_fit),
            "avg_rate": _fmt(cal.avg_rate),
        },
    )
    print(f"wrote {out / 'simulate.csv'}")
    print(
        f"theta target {theta:.6g}  theta_sim {fit.theta_sim:.6g}  "
        f"sigma {fit.sigma_fit:.4g}  occupancy {report.occupancy:.4g}"
    )
    qs = np.asarray(report.thresholds)
    _plot_lines(
        out / "simulate.png",
        [
            ("simulated", qs, report.probs),
            ("fit", qs, fit.sigma_fit * np.exp(-fit.theta_sim * qs)),
        ],
        xlabel="buffer threshold q (bits)",
        ylabel="Pr{Q > q}",
        logy=True,
    )


def _cmd_nocsi(args) -> None:
    cfg = _load_config(args)
    source = _source_from(cfg)
    scenario = _scenario_from(cfg)
    theta, _ = _qos_from(cfg)
    sec = _table(cfg, "nocsi")
    grid = _snr_grid(sec.get("snr_grid"))
    if "rate" in sec:
        policy = nocsi.FixedRatePolicy(rate=float(sec["rate"]))
    else:
        policy = nocsi.FixedRatePolicy(
            coefficient=float(sec.get("coefficient", 1.0))
        )

    rates, p_ons, caps, thrus, dbs = [], [], [], [], []
    for snr in grid:
        rate = policy.rate_at(snr)
        p_on = nocsi.secure_on_probability(snr, rate, scenario)
        thru = nocsi.nocsi_throughput(source, snr, policy, theta, scenario)
        rates.append(rate)
        p_ons.append(p_on)
        caps.append(nocsi.effective_capacity_nocsi(snr, policy, theta, scenario))
        thrus.append(thru)
        dbs.append(10.0 * math.log10(snr / thru) if thru > 0 else math.inf)

    meta = {"seed": args.seed, "theta": theta}
    if policy.coefficient is not None:
        metrics = nocsi.nocsi_low_snr_metrics(source, policy, theta, scenario)
        meta["coefficient"] = policy.coefficient
        meta["ebn0_min_db"] = metrics.ebn0_min_db
        meta["slope_s0"] = metrics.slope_s0
        meta["best_coefficient"] = nocsi.best_coefficient(scenario)
        meta["csi_penalty_db"] = 10.0 * math.log10(nocsi.csi_penalty(scenario))

    out = _out_dir(args)
    _write_table(
        out / "nocsi.csv",
        {
            "snr": grid,
            "rate": rates,
            "secure_on_prob": p_ons,
            "effective_capacity": caps,
            "throughput": thrus,
            "eb_n0_db": dbs,
        },
        units="snr=linear rate=bits/block secure_on_prob=fraction "
        "effective_capacity=bits/block throughput=bits/block eb_n0_db=dB",
        meta=meta,
    )
    _plot_lines(
        out / "nocsi.png",
        [("throughput", grid, thrus)],
        xlabel="snr",
        ylabel="bits/block",
        logx=True,
        logy=True,
    )


# ---------------------------------------------------------------------------
# reproduce presets
# ---------------------------------------------------------------------------

def _mc(args, samples_default: int = 10**6) -> qos.MonteCarlo:
    return qos.MonteCarlo(samples=args.samples or samples_default, seed=args.seed)


def _repro_fig2(args, out: Path) -> None:
    """Discrete-source confidential throughput vs snr for several s and rho."""
    theta = 1.0
    split = PowerSplit(delta1=0.5, delta2=0.5)
    grid = list(np.geomspace(0.1, 10.0, 20))
    series, columns = [], {"snr": grid}
    for s in (0.2, 0.5, 0.8):
        source = sources.OnOffDiscreteMarkov(p11=1.0 - s, p22=s)
        for rho in (0.1, 0.5):
            scenario = FadingScenario(power_correlation=rho)
            method = _mc(args)
            vals = [
                qos.max_avg_arrival_rate(
                    source, qos.MessageIndex.CONF1, snr, theta, scenario, split, method
                )
                for snr in grid
            ]
            label = f"s={s} rho={rho}"
            series.append((label, grid, vals))
            columns[f"r_avg1[s={s},rho={rho}]"] = vals
    _write_table(
        out / "fig2.csv", columns,
        units="snr=linear r_avg1=bits/block",
        meta={"seed": args.seed, "theta1": theta, "delta1": split.delta1},
    )
    _plot_lines(out / "fig2.png", series, "snr", "max avg rate (bits/block)", logx=True)


def _sim_figure(args, out: Path, name: str, runs, default_horizon: int) -> None:
    """Shared body of the two buffer-simulation figures.

    runs: list of (label, source, service, theta, thresholds).
    """
    horizon = args.horizon if args.horizon is not None else default_horizon
    results = {}

    def work(item):
        label, source, service, theta, thresholds = item
        return label, _run_one_sim(
            source, service, theta, thresholds, horizon, args.seed, None
        )

    workers = max(1, args.threads)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for label, payload in pool.map(work, runs):
                results[label] = payload
    else:
        for item in runs:
            label, payload = work(item)
            results[label] = payload

    series = []
    with open(out / f"{name}.csv", "w", newline="") as fh:
        fh.write(f"# schema={_SCHEMA}\n")
        fh.write("# units: q=bits prob=fraction ln_prob=nats\n")
        fh.write(f"# seed={args.seed} horizon={horizon}\n")
        writer = csv.writer(fh)
        writer.writerow(["label", "theta_target", "theta_sim", "q", "count", "prob", "ln_prob"])
        for label, source, service, theta, thresholds in runs:
            cal, report, fit = results[label]
            print(
                f"{name} {label}: theta target {theta:g} -> "
                f"theta_sim {fit.theta_sim:.4f} (on_rate {cal.on_rate:.6g})"
            )
            for q, count, prob, lnp in zip(
                report.thresholds, report.counts, report.probs, report.ln_probs
            ):
                writer.writerow(
                    [label, _fmt(theta), _fmt(fit.theta_sim), _fmt(q), count,
                     _fmt(prob), _fmt(lnp)]
                )
            keep = np.asarray(report.counts) > 0
            series.append(
                (f"{label} (fit {fit.theta_sim:.3f})",
                 np.asarray(report.thresholds)[keep],
                 report.probs[keep])
            )
    print(f"wrote {out / f'{name}.csv'}")
    _plot_lines(
        out / f"{name}.png", series, "buffer threshold q (bits)", "Pr{Q > q}",
        logy=True,
    )


def _repro_fig3(args, out: Path) -> None:
    """Buffer overflow tails for the three streams under full CSI."""
    source = sources.OnOffDiscreteMarkov(p11=0.8, p22=0.8)
    scenario = FadingScenario()
    split = PowerSplit(delta1=0.7, delta2=0.7)
    snr = 1.0
    runs = []
    for theta, stream in (
        (0.5, qos.MessageIndex.CONF1),
        (1.0, qos.MessageIndex.COMMON),
        (2.0, qos.MessageIndex.CONF2),
    ):
        service = simqueue.CsiService(
            snr=snr, stream=stream, scenario=scenario, split=split
        )
        runs.append(
            (f"{stream.name.lower()} theta={theta}", source, service, theta,
             simqueue.default_thresholds(theta))
        )
    _sim_figure(args, out, "fig3", runs, default_horizon=10_000_000)


def _repro_fig4(args, out: Path) -> None:
    """Fluid-source confidential throughput to receiver 2 vs snr."""
    theta = 1.0
    split = PowerSplit(delta1=0.5, delta2=0.5)
    grid = list(np.geomspace(0.1, 10.0, 20))
    series, columns = [], {"snr": grid}
    for alpha, beta in ((9.0, 1.0), (1.0, 9.0)):
        source = sources.OnOffMarkovFluid(alpha=alpha, beta=beta)
        for gamma in (1.0, 2.0):
            scenario = FadingScenario(mean_z2=gamma, power_correlation=0.05)
            method = _mc(args)
            vals = [
                qos.max_avg_arrival_rate(
                    source, qos.MessageIndex.CONF2, snr, theta, scenario, split, method
                )
                for snr in grid
            ]
            label = f"alpha={alpha:g} beta={beta:g} gamma={gamma:g}"
            series.append((label, grid, vals))
            columns[f"r_avg2[a={alpha:g},b={beta:g},gamma={gamma:g}]"] = vals
    _write_table(
        out / "fig4.csv", columns,
        units="snr=linear r_avg2=bits/block",
        meta={"seed": args.seed, "theta2": theta, "delta2": split.delta2},
    )
    _plot_lines(out / "fig4.png", series, "snr", "max avg rate (bits/block)", logx=True)


def _energy_figure(args, out: Path, name: str, stream, curves, theta: float,
                   split: PowerSplit) -> None:
    """Shared body of the discrete-source energy figures.

    curves: list of (label, source, scenario).
    """
    grid = list(np.geomspace(1e-3, 3.0, 24))
    series = []
    with open(out / f"{name}.csv", "w", newline="") as fh:
        fh.write(f"# schema={_SCHEMA}\n")
        fh.write("# units: snr=linear r_avg=bits/block eb_n0_db=dB\n")
        fh.write(f"# seed={args.seed} theta={_fmt(theta)}\n")
        writer = csv.writer(fh)
        writer.writerow(["label", "snr", "r_avg", "eb_n0_db"])
        for label, source, scenario in curves:
            method = _mc(args)
            points = energy.energy_curve(
                source, stream, theta, scenario, split, method, grid
            )
            for p in points:
                writer.writerow([label, _fmt(p.snr), _fmt(p.r_avg), _fmt(p.eb_n0_db)])
            series.append(
                (label, [p.eb_n0_db for p in points], [p.r_avg for p in points])
            )
    print(f"wrote {out / f'{name}.csv'}")
    _plot_lines(
        out / f"{name}.png", series, "Eb/N0 (dB)", "max avg rate (bits/block)",
        logy=True,
    )


def _disc_energy_curves(rho: float):
    curves = []
    for s in (0.2, 0.5, 0.8):
        source = sources.OnOffDiscreteMarkov(p11=1.0 - s, p22=s)
        for gamma in (1.0, 2.0):
            scenario = FadingScenario(mean_z2=gamma, power_correlation=rho)
            curves.append((f"s={s:g} gamma={gamma:g}", source, scenario))
    return curves


def _repro_fig5(args, out: Path) -> None:
    """Receiver-1 confidential energy curve, discrete sources."""
    _energy_figure(
        args, out, "fig5", qos.MessageIndex.CONF1, _disc_energy_curves(0.05),
        theta=1.0, split=PowerSplit(delta1=0.5, delta2=0.5),
    )


def _repro_fig6(args, out: Path) -> None:
    """Receiver-2 confidential energy curve, discrete sources."""
    _energy_figure(
        args, out, "fig6", qos.MessageIndex.CONF2, _disc_energy_curves(0.05),
        theta=1.0, split=PowerSplit(delta1=0.5, delta2=0.5),
    )


def _repro_fig7(args, out: Path) -> None:
    """Common-message energy curve, discrete sources."""
    _energy_figure(
        args, out, "fig7", qos.MessageIndex.COMMON, _disc_energy_curves(0.05),
        theta=1.0, split=PowerSplit(delta1=0.5, delta2=0.5),
    )


def _fluid_energy_curves():
    curves = []
    for alpha, beta in ((9.0, 1.0), (1.0, 9.0)):
        source = sources.OnOffMarkovFluid(alpha=alpha, beta=beta)
        for rho in (0.0, 0.3, 0.6):
            scenario = FadingScenario(power_correlation=rho)
            curves.append(
                (f"a={alpha:g} b={beta:g} rho={rho:g}", source, scenario)
            )
    return curves


def _repro_fig8(args, out: Path) -> None:
    """Common-message energy curve, fluid sources, different correlations."""
    _energy_figure(
        args, out, "fig8", qos.MessageIndex.COMMON, _fluid_energy_curves(),
        theta=1.0, split=PowerSplit(delta1=0.5, delta2=0.5),
    )


def _repro_fig9(args, out: Path) -> None:
    """Receiver-1 confidential energy curve, fluid sources, correlations."""
    _energy_figure(
        args, out, "fig9", qos.MessageIndex.CONF1, _fluid_energy_curves(),
        theta=1.0, split=PowerSplit(delta1=0.5, delta2=0.5),
    )


def _repro_fig10(args, out: Path) -> None:
    """Common-message energy curve for discrete MMPP arrivals."""
    source = sources.OnOffDiscreteMmpp(p11=0.1, p22=0.9)
    scenario = FadingScenario(power_correlation=0.8)
    curves = []
    for theta in (0.5, 1.0, 2.0):
        for delta in (0.25, 0.75):
            curves.append((theta, delta))
    grid = list(np.geomspace(1e-3, 3.0, 24))
    series = []
    with open(out / "fig10.csv", "w", newline="") as fh:
        fh.write(f"# schema={_SCHEMA}\n")
        fh.write("# units: snr=linear r_avg=bits/block eb_n0_db=dB\n")
        fh.write(f"# seed={args.seed}\n")
        writer = csv.writer(fh)
        writer.writerow(["label", "snr", "r_avg", "eb_n0_db"])
        for theta, delta in curves:
            split = PowerSplit(delta1=delta, delta2=delta)
            method = _mc(args)
            points = energy.energy_curve(
                source, qos.MessageIndex.COMMON, theta, scenario, split, method, grid
            )
            label = f"theta0={theta:g} delta={delta:g}"
            for p in points:
                writer.writerow([label, _fmt(p.snr), _fmt(p.r_avg), _fmt(p.eb_n0_db)])
            series.append(
                (label, [p.eb_n0_db for p in points], [p.r_avg for p in points])
            )
    print(f"wrote {out / 'fig10.csv'}")
    _plot_lines(
        out / "fig10.png", series, "Eb/N0 (dB)", "max avg rate (bits/block)",
        logy=True,
    )


def _repro_fig11(args, out: Path) -> None:
    """Buffer overflow tails for fixed-rate transmission without CSI."""
    source = sources.OnOffDiscreteMarkov(p11=0.8, p22=0.8)
    scenario = FadingScenario()
    snr = 0.05
    rate = snr / _LN2  # scaled policy at the optimal coefficient a = 1
    runs = []
    for theta in (0.5, 1.0, 2.0):
        service = simqueue.FixedRateService(snr=snr, rate=rate, scenario=scenario)
        runs.append(
            (f"theta={theta}", source, service, theta,
             simqueue.default_thresholds(theta))
        )
    # the fixed-rate service moves the queue in very small steps, so deep
    # levels equilibrate slowly; a longer run keeps the fit trustworthy
    _sim_figure(args, out, "fig11", runs, default_horizon=200_000_000)


def _repro_fig12(args, out: Path) -> None:
    """Fixed-rate energy curves for several rate coefficients, fluid source."""
    source = sources.OnOffMarkovFluid(alpha=9.0, beta=1.0)
    scenario = FadingScenario()
    theta = 0.5
    grid = list(np.geomspace(1e-3, 1.0, 16))
    series = []
    with open(out / "fig12.csv", "w", newline="") as fh:
        fh.write(f"# schema={_SCHEMA}\n")
        fh.write("# units: snr=linear throughput=bits/block eb_n0_db=dB\n")
        fh.write(f"# seed={args.seed} theta={_fmt(theta)}\n")
        writer = csv.writer(fh)
        writer.writerow(["label", "snr", "throughput", "eb_n0_db"])
        for a in (0.6, 0.8, 1.0, 1.2):
            policy = nocsi.FixedRatePolicy(coefficient=a)
            thrus, dbs = [], []
            for snr in grid:
                thru = nocsi.nocsi_throughput(source, snr, policy, theta, scenario)
                db = 10.0 * math.log10(snr / thru) if thru > 0 else math.inf
                thrus.append(thru)
                dbs.append(db)
                writer.writerow([f"a={a:g}", _fmt(snr), _fmt(thru), _fmt(db)])
            metrics = nocsi.nocsi_low_snr_metrics(source, policy, theta, scenario)
            series.append((f"a={a:g} (min {metrics.ebn0_min_db:.2f} dB)", dbs, thrus))
    print(f"wrote {out / 'fig12.csv'}")
    _plot_lines(
        out / "fig12.png", series, "Eb/N0 (dB)", "throughput (bits/block)",
        logy=True,
    )


_REPRO = {
    "fig2": _repro_fig2,
    "fig3": _repro_fig3,
    "fig4": _repro_fig4,
    "fig5": _repro_fig5,
    "fig6": _repro_fig6,
    "fig7": _repro_fig7,
    "fig8": _repro_fig8,
    "fig9": _repro_fig9,
    "fig10": _repro_fig10,
    "fig11": _repro_fig11,
    "fig12": _repro_fig12,
}


def _cmd_reproduce(args) -> None:
    out = _out_dir(args)
    _REPRO[args.figure](args, out)


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="secqos",
        description="Secure throughput and energy limits under delay QoS",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_config=True):
        if needs_config:
            p.add_argument("--config", help="TOML parameter file")
        p.add_argument("--seed", type=int, default=0, help="root RNG seed")
        p.add_argument("--out", default="secqos-out", help="output directory")
        p.add_argument(
            "--method", choices=("mc", "quad"),
            help="expectation method (default: quad when channels are "
            "independent, mc otherwise)",
        )
        p.add_argument("--samples", type=int, help="Monte Carlo sample count")
        p.add_argument(
            "--threads", type=int, default=1, help="worker threads where supported"
        )

    for name, handler in (
        ("analyze", _cmd_analyze),
        ("energy", _cmd_energy),
        ("simulate", _cmd_simulate),
        ("nocsi", _cmd_nocsi),
    ):
        p = sub.add_parser(name)
        common(p)
        p.set_defaults(handler=handler)

    p = sub.add_parser("reproduce", help="regenerate a canned parameter study")
    p.add_argument("figure", choices=_FIGURES)
    common(p, needs_config=False)
    p.add_argument("--config", help=argparse.SUPPRESS)
    p.add_argument(
        "--horizon", type=int, default=None,
        help="simulation horizon for the buffer studies "
             "(default: figure-specific)",
    )
    p.set_defaults(handler=_cmd_reproduce)

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        args.handler(args)
    except (ConfigError, ParameterError, UnsupportedFamilyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (DomainError, SolverError, FitError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
