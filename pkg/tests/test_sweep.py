import math

import numpy as np
import pytest

from driven_qubit_entropy.dynamics import default_dt
from driven_qubit_entropy.generators import kossakowski_spectrum, stationary_bloch
from driven_qubit_entropy.sweep import (
    SweepPlan,
    SweepRunner,
    cell_params,
    cell_seed,
    parameter_sweep,
    run_sweep,
)
from driven_qubit_entropy.thermo import (
    sample_states,
    sigma_values,
    violation_intervals,
    violation_scan_states,
    violation_scan_t0,
    violation_tolerance,
)
from driven_qubit_entropy.types import BlochVector, ModelParams, Reference, Sampling

BASE = ModelParams(delta=1.0, omega_drive=1.0, lambda_coupling=0.05, temperature=0.5, omega_cutoff=10.0)


def _failing_plan() -> SweepPlan:
    return SweepPlan(temperatures=(-1.0,), ratios=(1.0, 2.0), base=BASE, n_states=4, seed=3)


@pytest.mark.asyncio
@pytest.mark.parametrize("workers", [1, 2])
async def test_failing_cells_are_reported_in_grid_order(workers: int) -> None:
    runner = SweepRunner(_failing_plan(), workers=workers)
    cells = await runner.run()
    assert [(c.temperature, c.ratio) for c in cells] == [(-1.0, 1.0), (-1.0, 2.0)]
    for cell in cells:
        assert cell.error is not None and cell.error.startswith("ValueError")
        assert cell.redfield is None and cell.weak_coupling is None
        assert not cell.has_time_violation
    assert runner.metrics.cells_done == 2
    assert runner.metrics.cells_failed == 2


@pytest.mark.asyncio
async def test_cheap_cell_runs_end_to_end() -> None:
    plan = SweepPlan(
        temperatures=(0.5,),
        ratios=(1.0,),
        base=BASE,
        n_states=6,
        seed=1,
        sampling=Sampling.RANDOM_BALL,
        search_states=1,
        search_periods=1.0,
    )
    (cell,) = await run_sweep(plan, workers=1)
    assert cell.error is None
    assert cell.weak_coupling is not None and cell.weak_coupling.t0_fraction_negative == 0.0
    assert cell.redfield is not None and cell.redfield.sample_count == 6
    assert cell.has_time_violation == (cell.witness is not None)


def test_plan_validation() -> None:
    with pytest.raises(ValueError):
        SweepPlan(temperatures=(), ratios=(1.0,), base=BASE, n_states=4, seed=0)
    with pytest.raises(ValueError):
        SweepPlan(temperatures=(0.5,), ratios=(1.0,), base=BASE, n_states=0, seed=0)
    plan = SweepPlan(temperatures=(0.1, 0.2), ratios=(1.0, 3.0, 5.0), base=BASE, n_states=1, seed=0)
    assert plan.cells[:3] == [(0.1, 1.0), (0.1, 3.0), (0.1, 5.0)]
    assert len(plan.cells) == 6


def test_cell_seeds_are_deterministic_and_distinct() -> None:
    assert cell_seed(7, 0) == cell_seed(7, 0)
    assert len({cell_seed(7, i) for i in range(50)}) == 50
    assert cell_seed(7, 1) != cell_seed(8, 1)


def test_cell_params_scale_the_drive_with_delta() -> None:
    params = cell_params(BASE, 0.3, 4.0)
    assert params.temperature == 0.3
    assert params.omega_drive == 4.0
    assert params.lambda_coupling == BASE.lambda_coupling


def test_synchronous_sweep_wrapper() -> None:
    cells = parameter_sweep([-2.0], [1.0], BASE, n_states=2, seed=0, workers=1)
    assert len(cells) == 1 and cells[0].error is not None


@pytest.mark.slow
def test_every_grid_cell_evaluates_against_both_references(grid_pairs) -> None:
    for pair in grid_pairs.values():
        for g in (pair.redfield, pair.weak):
            for reference in Reference:
                report = violation_scan_t0(g, Sampling.RANDOM_BALL, 200, seed=5, reference=reference)
                assert math.isfinite(report.min_sigma)
                assert report.sample_count == 200


@pytest.mark.slow
def test_weak_coupling_production_is_never_negative_on_the_grid(grid_pairs) -> None:
    states = sample_states(Sampling.RANDOM_BALL, 2000, seed=11)
    start = BlochVector.from_polarization(0.0, -0.894, -0.447)
    for pair in grid_pairs.values():
        g = pair.weak
        sigmas = sigma_values(g, states, stationary_bloch(g))
        assert np.min(sigmas) >= -violation_tolerance(g)
        period = g.params.to_dimensionless().period
        report = violation_intervals(g, start, 50.0 * period, default_dt(g))
        assert report.negative_intervals == []


@pytest.mark.slow
def test_redfield_kossakowski_matrix_is_indefinite_on_the_grid(grid_pairs) -> None:
    for pair in grid_pairs.values():
        assert kossakowski_spectrum(pair.redfield).eigenvalues[0] < -1.0


@pytest.mark.slow
def test_negative_production_spreads_as_the_bath_cools(grid_pairs) -> None:
    states = sample_states(Sampling.RANDOM_BALL, 4000, seed=17)
    temperatures = sorted({temperature for temperature, _ in grid_pairs})
    for ratio in (2.0, 10.0):
        fractions = []
        for temperature in temperatures:
            g = grid_pairs[temperature, ratio].redfield
            fractions.append(violation_scan_states(g, states, stationary_bloch(g)).t0_fraction_negative)
        assert 0.30 <= fractions[0] <= 0.55
        assert fractions[0] >= fractions[1] >= fractions[2]
        assert fractions[0] > fractions[2]
