import dataclasses
import math

import numpy as np
import pytest

from driven_qubit_entropy.dynamics import default_dt, propagate
from driven_qubit_entropy.errors import PhysicalityError
from driven_qubit_entropy.generators import stationary_bloch
from driven_qubit_entropy.qubit import (
    density_from_bloch,
    frame_rotation,
    gibbs_bloch,
    relative_entropy,
    rotate_frame,
    trace_distance,
    von_neumann_entropy,
)
from driven_qubit_entropy.thermo import (
    entropy_production_bloch,
    entropy_production_trace,
    entropy_rate,
    heat_flux,
    heat_flux_lab,
    lab_hamiltonian,
    reference_state,
    regularize,
    sample_states,
    sigma_sample,
    sigma_values,
    violation_intervals,
    violation_scan_states,
    violation_scan_t0,
    violation_tolerance,
    work_rate_lab,
)
from driven_qubit_entropy.types import BlochVector, FrameDirection, Reference, Sampling

TILTED_STATE = BlochVector.from_polarization(0.0, -0.894, -0.447)
SECOND_STATE = BlochVector.from_polarization(0.0, 0.5, -0.4)


def _mixed_states(count: int, seed: int) -> list[BlochVector]:
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        v = rng.uniform(-0.95, 0.95, size=3)
        if np.linalg.norm(v) < 0.95:
            out.append(BlochVector.from_polarization(*v))
    return out


def test_bloch_and_trace_forms_agree(warm_pair) -> None:
    for g in (warm_pair.redfield, warm_pair.weak):
        r_ref = stationary_bloch(g)
        for r in _mixed_states(50, seed=3):
            assert entropy_production_bloch(g, r, r_ref) == pytest.approx(
                entropy_production_trace(g, r, r_ref), abs=1e-10
            )


def test_production_vanishes_at_the_stationary_state(warm_pair) -> None:
    for g in (warm_pair.redfield, warm_pair.weak):
        r_ss = stationary_bloch(g)
        assert entropy_production_bloch(g, r_ss, r_ss) == pytest.approx(0.0, abs=1e-13)


def test_weak_coupling_production_is_never_negative(warm_pair, reference_pair) -> None:
    for g in (warm_pair.weak, reference_pair.weak):
        r_ref = stationary_bloch(g)
        sigmas = sigma_values(g, _mixed_states(200, seed=5), r_ref)
        assert np.min(sigmas) >= -violation_tolerance(g)


def test_gibbs_reference_splits_into_entropy_rate_and_heat(warm_pair) -> None:
    beta = warm_pair.model.beta
    gibbs = gibbs_bloch(warm_pair.params)
    for g in (warm_pair.redfield, warm_pair.weak):
        for r in _mixed_states(20, seed=8):
            expected = entropy_rate(g, r) - beta * heat_flux(g, r)
            assert entropy_production_bloch(g, r, gibbs) == pytest.approx(expected, abs=1e-12)


def test_maximally_mixed_state_releases_heat_into_the_vacuum(vacuum_pair) -> None:
    mixed = BlochVector.from_polarization(0.0, 0.0, 0.0)
    for g in (vacuum_pair.redfield, vacuum_pair.weak):
        assert heat_flux(g, mixed) < 0.0
        assert entropy_rate(g, mixed) == 0.0


def test_no_heat_flows_at_the_weak_coupling_stationary_state(warm_pair) -> None:
    g = warm_pair.weak
    scale = g.params.lambda_coupling**2 * float(np.max(np.abs(g.parts.dissipative)))
    assert abs(heat_flux(g, stationary_bloch(g))) < 1e-12 * scale


def test_rotating_frame_energy_changes_only_by_heat(warm_pair) -> None:
    omega = warm_pair.params.omega_eff
    h, t = 1e-4, 1.7
    for g in (warm_pair.redfield, warm_pair.weak):
        forward = propagate(g, TILTED_STATE, t + h).r[3]
        backward = propagate(g, TILTED_STATE, t - h).r[3]
        derivative = 0.5 * omega * (forward - backward) / (2.0 * h)
        assert derivative == pytest.approx(heat_flux(g, propagate(g, TILTED_STATE, t)), abs=1e-9)


def test_lab_frame_first_law(warm_pair) -> None:
    params = warm_pair.params

    def lab_state(g, t: float) -> BlochVector:
        return rotate_frame(propagate(g, TILTED_STATE, t), t, params, FrameDirection.TO_LAB)

    def lab_energy(g, t: float) -> float:
        rho = density_from_bloch(lab_state(g, t), params)
        return float(np.trace(rho @ lab_hamiltonian(params, t)).real)

    h, t = 1e-5, 2.3
    for g in (warm_pair.redfield, warm_pair.weak):
        derivative = (lab_energy(g, t + h) - lab_energy(g, t - h)) / (2.0 * h)
        heat = heat_flux_lab(g, propagate(g, TILTED_STATE, t))
        work = work_rate_lab(params, lab_state(g, t), t)
        assert derivative == pytest.approx(heat - work, abs=1e-8)


def test_entropy_rate_is_the_time_derivative_of_the_entropy(warm_pair) -> None:
    h, t = 1e-4, 0.9
    for g in (warm_pair.redfield, warm_pair.weak):
        forward = von_neumann_entropy(propagate(g, TILTED_STATE, t + h))
        backward = von_neumann_entropy(propagate(g, TILTED_STATE, t - h))
        assert (forward - backward) / (2.0 * h) == pytest.approx(
            entropy_rate(g, propagate(g, TILTED_STATE, t)), abs=1e-9
        )


def test_production_is_minus_the_decay_rate_of_the_relative_entropy(warm_pair) -> None:
    h, t = 1e-5, 1.0
    for g in (warm_pair.redfield, warm_pair.weak):
        r_ref = stationary_bloch(g)
        forward = relative_entropy(propagate(g, TILTED_STATE, t + h), r_ref)
        backward = relative_entropy(propagate(g, TILTED_STATE, t - h), r_ref)
        sigma = entropy_production_bloch(g, propagate(g, TILTED_STATE, t), r_ref)
        assert -(forward - backward) / (2.0 * h) == pytest.approx(sigma, abs=1e-8)


def test_production_is_invariant_under_a_frame_rotation(warm_pair) -> None:
    g = warm_pair.redfield
    rotation = frame_rotation(0.77, g.params, FrameDirection.TO_LAB)
    rotated = dataclasses.replace(g, matrix=rotation @ g.matrix @ rotation.T)
    r_ref = stationary_bloch(g)
    moved_ref = BlochVector.from_array(rotation @ r_ref.as_array())
    for r in _mixed_states(10, seed=21):
        moved = BlochVector.from_array(rotation @ r.as_array())
        assert entropy_production_bloch(rotated, moved, moved_ref) == pytest.approx(
            entropy_production_bloch(g, r, r_ref), abs=1e-12
        )


def test_pure_states_are_regularized() -> None:
    pure = BlochVector.from_polarization(0.0, 0.6, 0.8)
    inside = regularize(pure)
    assert inside.norm == pytest.approx(1.0 - 1e-9, abs=1e-15)
    mixed = BlochVector.from_polarization(0.1, 0.2, 0.3)
    assert regularize(mixed) is mixed


def test_dissipation_out_of_a_pure_state_is_unbounded(warm_pair) -> None:
    g = warm_pair.weak
    pure = BlochVector.from_polarization(0.0, 1.0, 0.0)
    assert entropy_production_trace(g, pure, stationary_bloch(g)) == math.inf
    assert math.isfinite(entropy_production_bloch(g, pure, stationary_bloch(g)))


def test_pure_reference_is_pulled_inside_the_ball(warm_pair) -> None:
    g = warm_pair.weak
    pure = BlochVector.from_polarization(0.0, 0.0, -1.0)
    capped = regularize(pure)
    r = BlochVector.from_polarization(0.1, 0.0, 0.0)
    assert entropy_production_bloch(g, r, pure) == entropy_production_bloch(g, r, capped)
    assert math.isfinite(entropy_production_trace(g, r, pure))
    assert entropy_production_trace(g, r, pure) == pytest.approx(
        entropy_production_bloch(g, r, pure), abs=1e-8
    )
    with pytest.raises(PhysicalityError):
        entropy_production_bloch(g, r, BlochVector.from_polarization(0.0, 0.0, -1.1))


def test_states_outside_the_ball_give_nan(warm_pair) -> None:
    g = warm_pair.weak
    outside = BlochVector.from_polarization(0.0, 0.0, 1.1)
    values = sigma_values(g, [outside, TILTED_STATE], stationary_bloch(g))
    assert math.isnan(values[0]) and math.isfinite(values[1])
    assert math.isnan(sigma_sample(g, outside, stationary_bloch(g)).sigma)


def test_reference_selection(warm_pair) -> None:
    g = warm_pair.redfield
    assert reference_state(g, Reference.GIBBS) == gibbs_bloch(g.params)
    assert reference_state(g) == stationary_bloch(g)


def test_sample_states() -> None:
    grid = sample_states(Sampling.EQUATORIAL_GRID, 5, seed=0)
    assert len(grid) == 25
    assert all(s.r[3] == 0.0 and s.norm <= 1.0 + 1e-15 for s in grid)
    assert sample_states(Sampling.EQUATORIAL_GRID, 1, seed=0) == [BlochVector.from_polarization(0.0, 0.0, 0.0)]
    ball = sample_states(Sampling.RANDOM_BALL, 40, seed=4)
    assert len(ball) == 40 and all(s.norm <= 1.0 for s in ball)
    assert ball == sample_states(Sampling.RANDOM_BALL, 40, seed=4)
    assert ball != sample_states(Sampling.RANDOM_BALL, 40, seed=5)
    sphere = sample_states(Sampling.RANDOM_SPHERE, 10, seed=4)
    assert all(s.norm == pytest.approx(1.0) for s in sphere)
    with pytest.raises(ValueError):
        sample_states(Sampling.RANDOM_BALL, 0, seed=0)


def test_weak_coupling_scan_finds_no_violation(warm_pair, reference_pair) -> None:
    for g in (warm_pair.weak, reference_pair.weak):
        report = violation_scan_t0(g, Sampling.EQUATORIAL_GRID, 9, seed=0)
        assert report.t0_fraction_negative == 0.0
        assert report.sample_count == 81
        assert report.generator_kind is g.kind


def test_redfield_scan_finds_negative_production(reference_pair) -> None:
    report = violation_scan_t0(reference_pair.redfield, Sampling.EQUATORIAL_GRID, 21, seed=0)
    assert 0.0 < report.t0_fraction_negative < 1.0
    assert report.min_sigma < 0.0


def test_scan_of_the_stationary_state_alone_is_clean(reference_pair) -> None:
    g = reference_pair.redfield
    r_ss = stationary_bloch(g)
    report = violation_scan_states(g, [r_ss], r_ss)
    assert report.t0_fraction_negative == 0.0
    assert report.min_sigma == pytest.approx(0.0, abs=1e-12)


def test_weak_coupling_trajectory_has_no_negative_interval(reference_pair) -> None:
    g = reference_pair.weak
    period = g.params.to_dimensionless().period
    report = violation_intervals(g, TILTED_STATE, 20.0 * period, default_dt(g))
    assert report.negative_intervals == []
    assert report.t0_fraction_negative == 0.0


def test_redfield_trajectory_has_negative_intervals(reference_pair) -> None:
    g = reference_pair.redfield
    period = g.params.to_dimensionless().period
    t_max = 20.0 * period
    report = violation_intervals(g, TILTED_STATE, t_max, default_dt(g))
    assert len(report.negative_intervals) >= 3
    assert report.min_sigma < 0.0
    previous_end = -1.0
    for start, end in report.negative_intervals:
        assert 0.0 <= start < end <= t_max + 1e-9
        assert start > previous_end
        previous_end = end
    assert report.t0_fraction_negative == 0.0


def test_redfield_production_turns_negative_repeatedly_from_the_second_reference_state(reference_pair) -> None:
    g = reference_pair.redfield
    period = g.params.to_dimensionless().period
    report = violation_intervals(g, SECOND_STATE, 20.0 * period, default_dt(g))
    assert len(report.negative_intervals) >= 2


def test_redfield_thermodynamic_production_starts_negative_from_the_second_reference_state(reference_pair) -> None:
    g = reference_pair.redfield
    period = g.params.to_dimensionless().period
    report = violation_intervals(g, SECOND_STATE, 20.0 * period, default_dt(g), Reference.GIBBS)
    assert report.t0_fraction_negative == 1.0
    assert report.negative_intervals[0][0] == 0.0
    assert len(report.negative_intervals) >= 2
    beta = reference_pair.model.beta
    expected = entropy_rate(g, SECOND_STATE) - beta * heat_flux(g, SECOND_STATE)
    assert entropy_production_bloch(g, SECOND_STATE, gibbs_bloch(g.params)) == pytest.approx(expected, rel=1e-6)


def test_weak_coupling_thermodynamic_production_stays_positive_from_the_second_reference_state(reference_pair) -> None:
    g = reference_pair.weak
    period = g.params.to_dimensionless().period
    report = violation_intervals(g, SECOND_STATE, 20.0 * period, default_dt(g), Reference.GIBBS)
    assert report.negative_intervals == []
    assert report.min_sigma > 0.0


def test_stationary_states_of_both_generators_nearly_coincide(reference_pair) -> None:
    redfield = stationary_bloch(reference_pair.redfield)
    weak = stationary_bloch(reference_pair.weak)
    assert trace_distance(redfield, weak) < 1e-2
    assert weak.r[3] == pytest.approx(-0.8416, abs=1e-3)
    # At beta * delta near 10 the thermal state is almost the ground state, the stationary one is not.
    assert 0.07 < trace_distance(weak, gibbs_bloch(reference_pair.params)) < 0.09


def test_weak_coupling_production_is_convex_along_segments(warm_pair, reference_pair) -> None:
    fractions = np.linspace(0.0, 1.0, 41)
    for g in (warm_pair.weak, reference_pair.weak):
        r_ref = stationary_bloch(g)
        states = _mixed_states(400, seed=31)
        for a, b in zip(states[::2], states[1::2]):
            segment = [
                BlochVector.from_polarization(*((1.0 - s) * a.polarization + s * b.polarization)) for s in fractions
            ]
            sigmas = sigma_values(g, segment, r_ref)
            assert np.min(sigmas[:-2] - 2.0 * sigmas[1:-1] + sigmas[2:]) >= -1e-8
