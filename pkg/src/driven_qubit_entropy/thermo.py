from __future__ import annotations

import logging
import math
from collections.abc import Sequence

import numpy as np

from .dynamics import propagate, trajectory
from .errors import PhysicalityError
from .generators import generator_action, stationary_bloch
from .qubit import (
    NORM_TOLERANCE,
    SIGMA_1,
    SIGMA_3,
    check_physical,
    density_from_bloch,
    gibbs_bloch,
    log_ratio_over_norm,
)
from .types import (
    BlochGenerator,
    BlochVector,
    ModelParams,
    Reference,
    Sampling,
    SigmaSample,
    ViolationReport,
)

logger = logging.getLogger(__name__)

PURE_STATE_RADIUS = 1.0 - 1e-9
VIOLATION_SCALE = 1e-9
BISECTION_FRACTION = 1e-3
SUPPORT_TOLERANCE = 1e-12


def violation_tolerance(g: BlochGenerator) -> float:
    return VIOLATION_SCALE * g.params.lambda_coupling**2


def regularize(r: BlochVector) -> BlochVector:
    """Pull (almost) pure states inside the ball to radius 1 - 1e-9."""
    norm = check_physical(r)
    if norm <= PURE_STATE_RADIUS:
        return r
    return BlochVector.from_polarization(*(r.polarization * (PURE_STATE_RADIUS / r.norm)))


def regularize_reference(r_ref: BlochVector) -> BlochVector:
    """References that are pure in floating point (cold baths) get the radius cap of the states."""
    if check_physical(r_ref) < 1.0:
        return r_ref
    logger.debug("reference pulled inside the ball norm=%.17g", r_ref.norm)
    return BlochVector.from_polarization(*(r_ref.polarization * (PURE_STATE_RADIUS / r_ref.norm)))


def _matrix_log_on_support(rho: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    eigenvalues, vectors = np.linalg.eigh(rho)
    support = eigenvalues > SUPPORT_TOLERANCE
    logs = np.zeros_like(eigenvalues)
    logs[support] = np.log(eigenvalues[support])
    return vectors, logs, support


def entropy_production_trace(g: BlochGenerator, r: BlochVector, r_ref: BlochVector) -> float:
    """-Tr(L[rho] (log rho - log rho_ref)) by spectral decomposition of the 2x2 matrices."""
    check_physical(r)
    r_ref = regularize_reference(r_ref)
    rho = density_from_bloch(r, g.params)
    derivative = generator_action(g, rho)
    vectors, logs, support = _matrix_log_on_support(rho)
    diagonal = np.einsum("ia,ij,ja->a", vectors.conj(), derivative, vectors).real
    leak = diagonal[~support]
    if np.any(leak < -SUPPORT_TOLERANCE):
        raise PhysicalityError("generator drives a pure state out of the state space")
    if np.any(leak > SUPPORT_TOLERANCE):
        return math.inf
    ref_vectors, ref_logs, _ = _matrix_log_on_support(density_from_bloch(r_ref, g.params))
    log_ref = (ref_vectors * ref_logs) @ ref_vectors.conj().T
    state_term = float(np.sum(diagonal[support] * logs[support]))
    reference_term = float(np.trace(derivative @ log_ref).real)
    return -(state_term - reference_term)


def _log_gradient(values: np.ndarray) -> np.ndarray:
    """r_i log((1 + r) / (1 - r)) / r for i = 1..3."""
    polarization = values[1:]
    return polarization * log_ratio_over_norm(float(np.linalg.norm(polarization)))


def entropy_production_bloch(g: BlochGenerator, r: BlochVector, r_ref: BlochVector) -> float:
    reference = regularize_reference(r_ref).as_array()
    state = regularize(r).as_array()
    flow = g.matrix[1:] @ state
    return float(flow @ (_log_gradient(state) - _log_gradient(reference)))


def entropy_rate(g: BlochGenerator, r: BlochVector) -> float:
    """dS/dt = -Tr(L[rho] log rho) under the full generator."""
    state = regularize(r).as_array()
    return float((g.matrix[1:] @ state) @ _log_gradient(state))


def _dissipative_flow(g: BlochGenerator, r: BlochVector) -> np.ndarray:
    lam2 = g.params.lambda_coupling**2
    return -2.0 * lam2 * (g.parts.lamb_shift + g.parts.dissipative) @ r.as_array()


def heat_flux(g: BlochGenerator, r: BlochVector) -> float:
    """Tr(H_eff K[rho]) with H_eff = (omega_eff / 2) hat sigma_3."""
    check_physical(r)
    omega = g.params.to_dimensionless().omega_eff
    return 0.5 * omega * float(_dissipative_flow(g, r)[3])


def heat_flux_lab(g: BlochGenerator, r: BlochVector) -> float:
    """Lab-frame heat current Tr(H_t K_t[rho_t]), evaluated from the rotating-frame state."""
    check_physical(r)
    d = g.params.to_dimensionless()
    q, p = d.omega_drive / d.omega_eff, 1.0 / d.omega_eff
    flow = _dissipative_flow(g, r)
    return 0.5 * (q * float(flow[2]) + p * float(flow[3]))


def lab_hamiltonian(params: ModelParams, t: float) -> np.ndarray:
    """H_t = (delta / 2)(sigma_3 cos(Omega t) + sigma_1 sin(Omega t)) in units of delta."""
    angle = params.to_dimensionless().omega_drive * t
    return 0.5 * (math.cos(angle) * SIGMA_3 + math.sin(angle) * SIGMA_1)


def work_rate_lab(params: ModelParams, r_lab: BlochVector, t: float) -> float:
    """dW/dt = -Tr(rho_t dH_t/dt) for a lab-frame state at time t."""
    drive = params.to_dimensionless().omega_drive
    angle = drive * t
    derivative = 0.5 * drive * (-math.sin(angle) * SIGMA_3 + math.cos(angle) * SIGMA_1)
    rho = density_from_bloch(r_lab, params)
    return -float(np.trace(rho @ derivative).real)


def reference_state(g: BlochGenerator, reference: Reference = Reference.STATIONARY) -> BlochVector:
    if reference is Reference.GIBBS:
        return gibbs_bloch(g.params)
    return stationary_bloch(g)


def sigma_sample(g: BlochGenerator, r: BlochVector, r_ref: BlochVector, time: float = 0.0) -> SigmaSample:
    if r.norm > 1.0 + NORM_TOLERANCE:
        return SigmaSample(time=time, sigma=math.nan, entropy_rate=math.nan, heat_flux=math.nan)
    return SigmaSample(
        time=time,
        sigma=entropy_production_bloch(g, r, r_ref),
        entropy_rate=entropy_rate(g, r),
        heat_flux=heat_flux(g, r),
    )


def sigma_values(g: BlochGenerator, states: Sequence[BlochVector], r_ref: BlochVector) -> np.ndarray:
    """Entropy production per state; states that left the Bloch ball give NaN."""
    r_ref = regularize_reference(r_ref)
    out = np.empty(len(states))
    for i, state in enumerate(states):
        out[i] = math.nan if state.norm > 1.0 + NORM_TOLERANCE else entropy_production_bloch(g, state, r_ref)
    return out


def sample_states(sampling: Sampling, n: int, seed: int) -> list[BlochVector]:
    if n < 1:
        raise ValueError(f"n must be >= 1 (got {n})")
    if sampling is Sampling.EQUATORIAL_GRID:
        axis = np.linspace(-1.0, 1.0, n) if n > 1 else np.zeros(1)
        x, y = np.meshgrid(axis, axis, indexing="ij")
        r1 = x * np.sqrt(1.0 - 0.5 * y * y)
        r2 = y * np.sqrt(1.0 - 0.5 * x * x)
        return [BlochVector.from_polarization(a, b, 0.0) for a, b in zip(r1.ravel(), r2.ravel())]
    rng = np.random.default_rng(seed)
    directions = rng.normal(size=(n, 3))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    if sampling is Sampling.RANDOM_BALL:
        radii = rng.uniform(size=n) ** (1.0 / 3.0)
    else:
        radii = np.ones(n)
    points = directions * np.minimum(radii, 1.0)[:, None]
    return [BlochVector.from_polarization(*point) for point in points]


def violation_scan_states(
    g: BlochGenerator,
    states: Sequence[BlochVector],
    r_ref: BlochVector,
    seed: int = 0,
) -> ViolationReport:
    sigmas = sigma_values(g, states, r_ref)
    negative = sigmas < -violation_tolerance(g)
    finite = np.isfinite(sigmas)
    min_index = int(np.nanargmin(sigmas)) if finite.any() else 0
    return ViolationReport(
        params=g.params,
        generator_kind=g.kind,
        t0_fraction_negative=float(np.count_nonzero(negative)) / len(states),
        min_sigma=float(sigmas[min_index]) if finite.any() else math.inf,
        min_sigma_time=0.0,
        sample_count=len(states),
        rng_seed=seed,
    )


def violation_scan_t0(
    g: BlochGenerator,
    sampling: Sampling,
    n: int,
    seed: int,
    reference: Reference = Reference.STATIONARY,
) -> ViolationReport:
    """Fraction of initial states with negative entropy production.

    The equatorial grid holds n * n states of the r3 = 0 disk; the random modes draw n states.
    """
    states = sample_states(sampling, n, seed)
    report = violation_scan_states(g, states, reference_state(g, reference), seed)
    logger.info(
        "t0 scan kind=%s sampling=%s samples=%d fraction=%.4f min_sigma=%.6g",
        g.kind.value,
        sampling.value,
        report.sample_count,
        report.t0_fraction_negative,
        report.min_sigma,
    )
    return report


def _bisect(g: BlochGenerator, r0: BlochVector, r_ref: BlochVector, inside: float, outside: float, width: float) -> float:
    """Boundary of the negative set between a negative time and a non-negative one."""
    threshold = -violation_tolerance(g)
    while abs(outside - inside) > width:
        middle = 0.5 * (inside + outside)
        state = propagate(g, r0, middle)
        value = sigma_values(g, [state], r_ref)[0]
        if value < threshold:
            inside = middle
        else:
            outside = middle
    return 0.5 * (inside + outside)


def violation_intervals(
    g: BlochGenerator,
    r0: BlochVector,
    t_max: float,
    dt: float,
    reference: Reference = Reference.STATIONARY,
) -> ViolationReport:
    """Maximal time intervals with negative entropy production along the trajectory from r0.

    t0_fraction_negative is 1.0 when the trajectory starts with negative production, else 0.0.
    """
    rec = trajectory(g, r0, t_max, dt)
    r_ref = reference_state(g, reference)
    sigmas = sigma_values(g, rec.states, r_ref)
    negative = sigmas < -violation_tolerance(g)
    width = BISECTION_FRACTION * dt
    times = rec.times
    intervals: list[tuple[float, float]] = []
    k = 0
    while k < len(times):
        if not negative[k]:
            k += 1
            continue
        start_index = k
        while k + 1 < len(times) and negative[k + 1]:
            k += 1
        end_index = k
        start = 0.0 if start_index == 0 else _bisect(
            g, r0, r_ref, times[start_index], times[start_index - 1], width
        )
        end = float(times[-1]) if end_index == len(times) - 1 else _bisect(
            g, r0, r_ref, times[end_index], times[end_index + 1], width
        )
        intervals.append((float(start), float(end)))
        k += 1

    finite = np.isfinite(sigmas)
    min_index = int(np.nanargmin(sigmas)) if finite.any() else 0
    report = ViolationReport(
        params=g.params,
        generator_kind=g.kind,
        t0_fraction_negative=1.0 if negative[0] else 0.0,
        negative_intervals=intervals,
        min_sigma=float(sigmas[min_index]) if finite.any() else math.inf,
        min_sigma_time=float(times[min_index]),
        sample_count=len(times),
    )
    logger.debug(
        "interval scan kind=%s intervals=%d min_sigma=%.6g", g.kind.value, len(intervals), report.min_sigma
    )
    return report
