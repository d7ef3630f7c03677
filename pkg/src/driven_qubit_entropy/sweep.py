from __future__ import annotations

import asyncio
import dataclasses
import logging
import os
from collections.abc import Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .bath import transform_cache_info
from .dynamics import default_dt
from .generators import build_redfield, build_weak_coupling
from .thermo import sample_states, violation_intervals, violation_scan_t0
from .types import BlochGenerator, BlochVector, ModelParams, Sampling, SpectralModel, SweepCell

logger = logging.getLogger(__name__)

# A time violation counts as repeated from this many disjoint negative intervals on.
REPEATED_INTERVALS = 2


@dataclass(frozen=True)
class SweepPlan:
    temperatures: tuple[float, ...]
    ratios: tuple[float, ...]
    base: ModelParams
    n_states: int
    seed: int
    sampling: Sampling = Sampling.RANDOM_BALL
    search_states: int = 16
    search_periods: float = 20.0

    def __post_init__(self) -> None:
        if not self.temperatures or not self.ratios:
            raise ValueError("sweep grids must be nonempty")
        if self.n_states < 1:
            raise ValueError(f"n_states must be >= 1 (got {self.n_states})")

    @property
    def cells(self) -> list[tuple[float, float]]:
        return [(t, ratio) for t in self.temperatures for ratio in self.ratios]


@dataclass
class SweepMetrics:
    cells_done: int = 0
    cells_failed: int = 0
    cells_with_time_violation: int = 0
    cp_violating_cells: int = 0


def cell_params(base: ModelParams, temperature: float, ratio: float) -> ModelParams:
    return dataclasses.replace(base, temperature=temperature, omega_drive=ratio * base.delta)


def cell_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


def search_time_violation(
    g: BlochGenerator, n_states: int, periods: float, seed: int
) -> BlochVector | None:
    """First seeded random initial state whose entropy production turns negative repeatedly."""
    period = g.params.to_dimensionless().period
    for state in sample_states(Sampling.RANDOM_BALL, n_states, seed):
        report = violation_intervals(g, state, periods * period, default_dt(g))
        if len(report.negative_intervals) >= REPEATED_INTERVALS:
            return state
    return None


def evaluate_cell(plan: SweepPlan, index: int) -> SweepCell:
    temperature, ratio = plan.cells[index]
    seed = cell_seed(plan.seed, index)
    try:
        params = cell_params(plan.base, temperature, ratio)
        model = SpectralModel.from_params(params)
        redfield = build_redfield(params, model)
        weak = build_weak_coupling(params, model)
        redfield_report = violation_scan_t0(redfield, plan.sampling, plan.n_states, seed)
        weak_report = violation_scan_t0(weak, plan.sampling, plan.n_states, seed)
        witness = search_time_violation(redfield, plan.search_states, plan.search_periods, seed)
        logger.debug("cell done index=%d %s", index, transform_cache_info())
    except Exception as exc:
        return SweepCell(
            temperature=temperature,
            ratio=ratio,
            redfield=None,
            weak_coupling=None,
            has_time_violation=False,
            error=f"{type(exc).__name__}: {exc}",
        )
    return SweepCell(
        temperature=temperature,
        ratio=ratio,
        redfield=redfield_report,
        weak_coupling=weak_report,
        has_time_violation=witness is not None,
        witness=witness,
    )


class SweepRunner:
    """Evaluates the (temperature, ratio) grid on a process pool; results keep grid order."""

    def __init__(self, plan: SweepPlan, workers: int | None = None) -> None:
        self.plan = plan
        self.workers = max(1, workers if workers is not None else os.cpu_count() or 1)
        self.metrics = SweepMetrics()

    async def run(self) -> list[SweepCell]:
        indices = range(len(self.plan.cells))
        logger.info("sweep started cells=%d workers=%d", len(indices), self.workers)
        if self.workers == 1:
            cells = [evaluate_cell(self.plan, i) for i in indices]
        else:
            loop = asyncio.get_running_loop()
            with ProcessPoolExecutor(max_workers=min(self.workers, len(indices))) as pool:
                futures = [loop.run_in_executor(pool, evaluate_cell, self.plan, i) for i in indices]
                cells = list(await asyncio.gather(*futures))
        for cell in cells:
            self._record(cell)
        logger.info(
            "sweep finished cells=%d failed=%d time_violations=%d cp_violations=%d",
            self.metrics.cells_done,
            self.metrics.cells_failed,
            self.metrics.cells_with_time_violation,
            self.metrics.cp_violating_cells,
        )
        return cells

    def _record(self, cell: SweepCell) -> None:
        self.metrics.cells_done += 1
        if cell.error is not None:
            self.metrics.cells_failed += 1
            logger.warning("sweep cell failed T=%g ratio=%g: %s", cell.temperature, cell.ratio, cell.error)
            return
        if cell.has_time_violation:
            self.metrics.cells_with_time_violation += 1
        if cell.weak_coupling is not None and cell.weak_coupling.t0_fraction_negative > 0:
            self.metrics.cp_violating_cells += 1
            logger.warning("completely positive generator violated T=%g ratio=%g", cell.temperature, cell.ratio)
        logger.info(
            "sweep cell T=%g ratio=%g frac_redfield=%.4f frac_cp=%.4f time_violation=%s",
            cell.temperature,
            cell.ratio,
            cell.redfield.t0_fraction_negative if cell.redfield else float("nan"),
            cell.weak_coupling.t0_fraction_negative if cell.weak_coupling else float("nan"),
            cell.has_time_violation,
        )


async def run_sweep(plan: SweepPlan, workers: int | None = None) -> list[SweepCell]:
    return await SweepRunner(plan, workers).run()


def parameter_sweep(
    temperatures: Sequence[float],
    ratios: Sequence[float],
    base: ModelParams,
    n_states: int,
    seed: int,
    workers: int | None = None,
    **options,
) -> list[SweepCell]:
    plan = SweepPlan(
        temperatures=tuple(float(t) for t in temperatures),
        ratios=tuple(float(r) for r in ratios),
        base=base,
        n_states=n_states,
        seed=seed,
        **options,
    )
    return asyncio.run(run_sweep(plan, workers))
