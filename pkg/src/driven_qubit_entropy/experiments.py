from __future__ import annotations

import asyncio
import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .bath import bath_correlation, one_sided_transform
from .config import ExperimentConfig, config_items
from .dynamics import TRAJECTORY_COLUMNS, purity_monitor, trajectory, trajectory_rows
from .formatting import generator_rows, plot_script, utc_timestamp, write_csv, write_manifest
from .generators import EPSILON_SCALE, build_redfield, build_weak_coupling, kossakowski_spectrum, stationary_bloch
from .qubit import NORM_TOLERANCE, gibbs_bloch, trace_distance
from .sweep import SweepPlan, run_sweep
from .thermo import (
    heat_flux,
    reference_state,
    sample_states,
    sigma_values,
    violation_intervals,
    violation_scan_states,
)
from .types import (
    BlochGenerator,
    CorrelationPart,
    Sampling,
    Scenario,
    SpectralModel,
    TimeKernel,
    TransformRequest,
)

logger = logging.getLogger(__name__)

MANIFEST_NAME = "run_manifest.txt"
PLOT_NAME = "plot.gp"


@dataclass
class RunResult:
    files: list[Path] = field(default_factory=list)
    summary: list[tuple[str, Any]] = field(default_factory=list)


def _generators(config: ExperimentConfig) -> tuple[BlochGenerator, BlochGenerator]:
    model = SpectralModel.from_params(config.params)
    return build_redfield(config.params, model), build_weak_coupling(config.params, model)


def _fig1_scan(config: ExperimentConfig, out: Path, result: RunResult) -> str:
    redfield, weak = _generators(config)
    states = sample_states(Sampling.EQUATORIAL_GRID, config.n_points, config.seed)
    reference = config.analysis.reference
    sigma_red = sigma_values(redfield, states, reference_state(redfield, reference))
    sigma_cp = sigma_values(weak, states, reference_state(weak, reference))
    rows = [(s.r[1], s.r[2], a, b) for s, a, b in zip(states, sigma_red, sigma_cp)]
    name = "fig1_scan.csv"
    result.files.append(write_csv(out / name, ("r1", "r2", "sigma_redfield", "sigma_cp"), rows))
    for label, g in (("redfield", redfield), ("cp", weak)):
        report = violation_scan_states(g, states, reference_state(g, reference), config.seed)
        result.summary.append((f"result.fraction_negative_{label}", report.t0_fraction_negative))
        result.summary.append((f"result.min_sigma_{label}", report.min_sigma))
    return name


def _timeseries(config: ExperimentConfig, out: Path, result: RunResult) -> str:
    assert config.initial_state is not None
    redfield, weak = _generators(config)
    t_max, dt = config.resolved_t_max(), config.resolved_dt()
    reference = config.analysis.reference
    records = {}
    series = {}
    for label, g in (("redfield", redfield), ("cp", weak)):
        rec = trajectory(g, config.initial_state, t_max, dt)
        records[label] = rec
        series[label] = sigma_values(g, rec.states, reference_state(g, reference))
        series[f"heat_{label}"] = np.array(
            [math.nan if s.norm > 1.0 + NORM_TOLERANCE else heat_flux(g, s) for s in rec.states]
        )
        result.files.append(write_csv(out / f"trajectory_{label}.csv", TRAJECTORY_COLUMNS, trajectory_rows(rec)))
        events = purity_monitor(rec)
        report = violation_intervals(g, config.initial_state, t_max, dt, reference)
        result.summary.append((f"result.positivity_events_{label}", len(events)))
        result.summary.append((f"result.negative_intervals_{label}", len(report.negative_intervals)))
        result.summary.append((f"result.sigma_t0_{label}", float(series[label][0])))
        result.summary.append((f"result.min_sigma_{label}", report.min_sigma))
        result.files.append(
            write_csv(
                out / f"intervals_{label}.csv",
                ("t_start", "t_end"),
                report.negative_intervals,
            )
        )

    times = records["redfield"].times
    rows = zip(times, series["redfield"], series["cp"], series["heat_redfield"], series["heat_cp"])
    name = "timeseries.csv"
    result.files.append(
        write_csv(
            out / name,
            ("t", "sigma_redfield", "sigma_cp", "heat_flux_redfield", "heat_flux_cp"),
            list(rows),
        )
    )
    result.summary.extend(_closeness(redfield, weak, records["redfield"].states))
    return name


def _closeness(redfield: BlochGenerator, weak: BlochGenerator, states: list) -> list[tuple[str, Any]]:
    """How far the Redfield stationary state is from the completely positive and Gibbs states."""
    red_stationary = stationary_bloch(redfield)
    gibbs = gibbs_bloch(redfield.params)
    sigma_stationary = sigma_values(redfield, states, red_stationary)
    sigma_gibbs = sigma_values(redfield, states, gibbs)
    finite = np.isfinite(sigma_stationary) & np.isfinite(sigma_gibbs)
    scale = float(np.max(np.abs(sigma_stationary[finite]))) if finite.any() else 0.0
    gap = float(np.max(np.abs(sigma_stationary[finite] - sigma_gibbs[finite]))) / scale if scale > 0 else 0.0
    return [
        ("result.trace_distance_redfield_cp", trace_distance(red_stationary, stationary_bloch(weak))),
        ("result.trace_distance_redfield_gibbs", trace_distance(red_stationary, gibbs)),
        ("result.sigma_gibbs_relative_gap", gap),
    ]


async def _sweep(config: ExperimentConfig, out: Path, result: RunResult, workers: int | None) -> str:
    plan = SweepPlan(
        temperatures=config.sweep.temperatures,
        ratios=config.sweep.ratios,
        base=config.params,
        n_states=config.sweep.n_states,
        seed=config.seed,
        sampling=config.analysis.sampling,
        search_states=config.sweep.search_states,
        search_periods=config.sweep.search_periods,
    )
    cells = await run_sweep(plan, workers)
    rows = []
    for index, cell in enumerate(cells):
        red = cell.redfield.t0_fraction_negative if cell.redfield else math.nan
        cp = cell.weak_coupling.t0_fraction_negative if cell.weak_coupling else math.nan
        min_sigma = cell.redfield.min_sigma if cell.redfield else math.nan
        rows.append((cell.temperature, cell.ratio, red, cp, cell.has_time_violation, min_sigma))
        if cell.error is not None:
            result.summary.append((f"result.cell_{index}_error", cell.error))
    name = "sweep.csv"
    header = ("T_kelvin", "ratio", "frac_t0_redfield", "frac_t0_cp", "has_time_violation", "min_sigma")
    result.files.append(write_csv(out / name, header, rows))
    result.summary.append(("result.failed_cells", sum(1 for c in cells if c.error is not None)))
    return name


def _tabulate_bath(config: ExperimentConfig, out: Path, result: RunResult) -> str:
    model = SpectralModel.from_params(config.params)
    u_values = np.linspace(0.0, config.analysis.u_max, config.analysis.u_points)
    rows = []
    for u in u_values:
        g = bath_correlation(float(u), model)
        rows.append((float(u), g.real, g.imag))
    name = "bath_correlation.csv"
    result.files.append(write_csv(out / name, ("u", "re_G", "im_G"), rows))

    d = config.params.to_dimensionless()
    epsilon0 = EPSILON_SCALE * d.omega_eff
    transform_rows = []
    for nu in sorted({d.omega_drive, d.omega_eff - d.omega_drive, d.omega_eff, d.omega_eff + d.omega_drive}):
        values = [
            one_sided_transform(TransformRequest(nu, kernel, part), model, epsilon0)
            for kernel in (TimeKernel.COS, TimeKernel.SIN)
            for part in (CorrelationPart.REAL, CorrelationPart.IMAG)
        ]
        transform_rows.append((nu, *values))
    result.files.append(
        write_csv(out / "transforms.csv", ("nu", "cos_re", "cos_im", "sin_re", "sin_im"), transform_rows)
    )
    return name


def _snapshot_generators(config: ExperimentConfig, out: Path, result: RunResult) -> None:
    redfield, weak = _generators(config)
    header = ("l0", "l1", "l2", "l3")
    for label, g in (("redfield", redfield), ("cp", weak)):
        result.files.append(write_csv(out / f"generator_{label}.csv", header, generator_rows(g)))
        data = kossakowski_spectrum(g)
        result.summary.append((f"result.kossakowski_eigenvalues_{label}", [float(v) for v in data.eigenvalues]))
        result.summary.append((f"result.stationary_{label}", list(stationary_bloch(g).r[1:])))


async def run_async(config: ExperimentConfig, workers: int | None = None) -> RunResult:
    """Execute one scenario against both generators and write CSVs, manifest and plot script."""
    out = config.output_dir
    out.mkdir(parents=True, exist_ok=True)
    started = time.time()
    result = RunResult()
    logger.info("scenario started scenario=%s out=%s", config.scenario.value, out)

    csv_name: str | None = None
    if config.scenario is Scenario.FIG1_SCAN:
        csv_name = _fig1_scan(config, out, result)
    elif config.scenario is Scenario.TIMESERIES:
        csv_name = _timeseries(config, out, result)
    elif config.scenario is Scenario.SWEEP:
        csv_name = await _sweep(config, out, result, workers)
    elif config.scenario is Scenario.TABULATE_BATH:
        csv_name = _tabulate_bath(config, out, result)
    else:
        _snapshot_generators(config, out, result)

    script = plot_script(config.scenario, csv_name) if csv_name else None
    if script is not None:
        path = out / PLOT_NAME
        path.write_text(script, encoding="utf-8", newline="\n")
        result.files.append(path)

    elapsed = time.time() - started
    manifest = [
        ("tool", "driven-qubit-entropy"),
        ("version", __version__),
        ("started_at", utc_timestamp(started)),
        ("wall_time_seconds", round(elapsed, 3)),
        *config_items(config),
        *result.summary,
        ("files", [p.name for p in result.files]),
    ]
    result.files.append(write_manifest(out / MANIFEST_NAME, manifest))
    logger.info(
        "scenario finished scenario=%s files=%d wall_time=%.1fs", config.scenario.value, len(result.files), elapsed
    )
    return result


def run(config: ExperimentConfig, workers: int | None = None) -> RunResult:
    return asyncio.run(run_async(config, workers))
