from __future__ import annotations

import functools
import logging
import math
import warnings
from collections.abc import Callable

import numpy as np
from scipy import integrate

from .errors import ConvergenceError
from .types import CorrelationPart, SpectralModel, TimeKernel, TransformRequest

logger = logging.getLogger(__name__)

INTEGRATE_EPSABS = 1e-10
INTEGRATE_EPSREL = 1e-8
SUBDIV_LIMIT = 500
# Accepted slack between the requested tolerance and the reported error estimate.
CONVERGENCE_SLACK = 100.0

HORIZON_CAP = 1e3
HORIZON_RATIO = 1e-14
HEAD_WIDTH = 50.0
THERMAL_OMEGA_SPAN = 60.0
DEFAULT_EPSILON = 1e-3


def _coth_half(x: np.ndarray | float) -> np.ndarray | float:
    """coth(x / 2) written as 1 + 2 / expm1(x), free of cancellation for small x."""
    with np.errstate(over="ignore", divide="ignore"):
        return 1.0 + 2.0 / np.expm1(x)


def spectral_density(omega: float | np.ndarray, model: SpectralModel) -> float | np.ndarray:
    omega_arr = np.asarray(omega, dtype=float)
    if np.any(omega_arr < 0):
        raise ValueError("spectral density is defined for omega >= 0")
    out = omega_arr * np.exp(-omega_arr / model.omega_cutoff)
    return float(out) if out.ndim == 0 else out


def thermal_weight(omega: float | np.ndarray, model: SpectralModel) -> float | np.ndarray:
    """J(omega) coth(beta omega / 2), continued to 2 / beta at omega = 0."""
    omega_arr = np.asarray(omega, dtype=float)
    j = np.asarray(spectral_density(omega_arr, model))
    zero_limit = 0.0 if math.isinf(model.beta) else 2.0 / model.beta
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(omega_arr > 0, j * _coth_half(model.beta * omega_arr), zero_limit)
    return float(out) if out.ndim == 0 else out


def two_point(t: float, omega: float, model: SpectralModel) -> complex:
    if omega <= 0:
        raise ValueError(
            "two-point function has a removable singularity at omega = 0; use thermal_weight"
        )
    coth = float(_coth_half(model.beta * omega))
    return complex(math.cos(omega * t) * coth, -math.sin(omega * t))


def _checked_quad(func: Callable[[float], float], a: float, b: float, what: str, **kwargs) -> float:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        result = integrate.quad(
            func, a, b, epsabs=INTEGRATE_EPSABS, epsrel=INTEGRATE_EPSREL, limit=SUBDIV_LIMIT, **kwargs
        )
    value, error = float(result[0]), float(result[1])
    tolerance = max(INTEGRATE_EPSABS, INTEGRATE_EPSREL * abs(value))
    if not math.isfinite(value) or error > CONVERGENCE_SLACK * tolerance:
        raise ConvergenceError(f"quadrature of {what} on [{a}, {b}] did not converge", error, tolerance)
    if error > tolerance:
        logger.debug("quadrature of %s above tolerance estimate=%.3e tol=%.3e", what, error, tolerance)
    return value


def _vacuum_correlation(u: float, omega_cutoff: float) -> complex:
    x = omega_cutoff * u
    denom = (1.0 + x * x) ** 2
    return complex(omega_cutoff**2 * (1.0 - x * x) / denom, -2.0 * omega_cutoff**2 * x / denom)


def _thermal_excess(omega: float, beta: float, omega_cutoff: float) -> float:
    if omega == 0.0:
        return 2.0 / beta
    return 2.0 * omega * math.exp(-omega / omega_cutoff) / math.expm1(beta * omega)


@functools.lru_cache(maxsize=2**16)
def _thermal_correlation(u: float, omega_cutoff: float, beta: float) -> float:
    if math.isinf(beta):
        return 0.0
    omega_max = min(THERMAL_OMEGA_SPAN / beta, THERMAL_OMEGA_SPAN * omega_cutoff)
    func = functools.partial(_thermal_excess, beta=beta, omega_cutoff=omega_cutoff)
    if u * omega_max < 1.0:
        return _checked_quad(lambda w: func(w) * math.cos(w * u), 0.0, omega_max, "thermal correlation")
    return _checked_quad(func, 0.0, omega_max, "thermal correlation", weight="cos", wvar=u)


def bath_correlation(u: float, model: SpectralModel) -> complex:
    """Closed-form vacuum part plus the numerically integrated thermal excess."""
    if u < 0:
        raise ValueError("bath correlation is evaluated for u >= 0")
    vacuum = _vacuum_correlation(u, model.omega_cutoff)
    return vacuum + _thermal_correlation(float(u), model.omega_cutoff, model.beta)


@functools.lru_cache(maxsize=256)
def correlation_horizon(model: SpectralModel) -> float:
    """First u where |Re G| stays below HORIZON_RATIO |G(0)|, capped at HORIZON_CAP."""
    if math.isinf(model.beta):
        return math.inf
    threshold = HORIZON_RATIO * abs(bath_correlation(0.0, model))
    u, below = 1.0, 0
    while u < HORIZON_CAP:
        if abs(bath_correlation(u, model).real) < threshold:
            below += 1
            if below == 2:
                return u
        else:
            below = 0
        u *= 1.25
    return HORIZON_CAP


def regularized_transform(req: TransformRequest, model: SpectralModel, epsilon: float) -> float:
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    sign = 1.0
    nu = req.nu
    if req.time_kernel is TimeKernel.SIN:
        if nu == 0.0:
            return 0.0
        sign = math.copysign(1.0, nu)
    nu = abs(nu)
    kernel = math.cos if req.time_kernel is TimeKernel.COS else math.sin
    wc = model.omega_cutoff
    thermal = req.correlation_part is CorrelationPart.REAL and not math.isinf(model.beta)

    if req.correlation_part is CorrelationPart.IMAG:
        def part(u: float) -> float:
            return _vacuum_correlation(u, wc).imag
    elif thermal:
        def part(u: float) -> float:
            return bath_correlation(u, model).real
    else:
        def part(u: float) -> float:
            return _vacuum_correlation(u, wc).real

    def damped(u: float) -> float:
        return part(u) * math.exp(-epsilon * u)

    what = f"{req.correlation_part.value}-part {req.time_kernel.value} transform at nu={nu:.6g}"
    u_split = HEAD_WIDTH / wc
    head = _checked_quad(
        lambda u: damped(u) * kernel(nu * u), 0.0, u_split, what, points=[1.0 / wc]
    )
    upper = correlation_horizon(model) if thermal else math.inf
    if nu == 0.0:
        tail = _checked_quad(damped, u_split, upper, what)
    else:
        tail = _checked_quad(damped, u_split, upper, what, weight=req.time_kernel.value, wvar=nu)
    return sign * (head + tail)


def _absorptive_value(req: TransformRequest, model: SpectralModel) -> float:
    nu = abs(req.nu)
    if req.time_kernel is TimeKernel.COS:
        return 0.5 * math.pi * float(thermal_weight(nu, model))
    return -0.5 * math.pi * math.copysign(1.0, req.nu) * float(spectral_density(nu, model))


@functools.lru_cache(maxsize=4096)
def one_sided_transform(
    req: TransformRequest, model: SpectralModel, epsilon0: float = DEFAULT_EPSILON
) -> float:
    """Absorptive pairs take their spectral value; dispersive ones are Richardson-extrapolated in epsilon."""
    if req.time_kernel is TimeKernel.SIN and req.nu == 0.0:
        return 0.0
    if req.absorptive:
        return _absorptive_value(req, model)
    coarse = regularized_transform(req, model, epsilon0)
    mid = regularized_transform(req, model, 0.5 * epsilon0)
    fine = regularized_transform(req, model, 0.25 * epsilon0)
    value = (8.0 * fine - 6.0 * mid + coarse) / 3.0
    logger.debug(
        "transform nu=%.6g kernel=%s part=%s value=%.12g spread=%.3e",
        req.nu,
        req.time_kernel.value,
        req.correlation_part.value,
        value,
        abs(fine - coarse),
    )
    return value


def transform_cache_info() -> str:
    return (
        f"transforms={one_sided_transform.cache_info().currsize} "
        f"thermal_points={_thermal_correlation.cache_info().currsize}"
    )
