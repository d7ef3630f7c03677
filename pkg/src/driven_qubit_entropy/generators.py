from __future__ import annotations

import functools
import logging
import math
from collections.abc import Callable

import numpy as np
from scipy import linalg

from .bath import one_sided_transform, spectral_density, thermal_weight
from .errors import DegenerateStationaryStateError, MalformedGeneratorError
from .qubit import coefficients_from_operator, operator_from_coefficients, pauli_basis
from .types import (
    BlochGenerator,
    BlochVector,
    CorrelationPart,
    GeneratorKind,
    GeneratorParts,
    KossakowskiData,
    ModelParams,
    SpectralModel,
    TimeKernel,
    TransformRequest,
)

logger = logging.getLogger(__name__)

# Abel regularizer of the dispersive transforms, relative to omega_eff.
EPSILON_SCALE = 1e-3
SECULAR_SAMPLES = 16
CONDITION_LIMIT = 1e12
DECOMPOSITION_TOLERANCE = 1e-10

Superoperator = Callable[[np.ndarray], np.ndarray]


def _interaction_table(params: ModelParams) -> list[tuple[int, int, float, TimeKernel, float]]:
    """Trigonometric expansion of exp(u H)[sigma~_xi(-u)] in the rotated basis.

    Rows are (coupling index, basis index, coefficient, kernel, frequency); coupling
    0 is sigma_1, coupling 1 is sigma_3, basis indices 0..2 stand for hat sigma_1..3.
    """
    d = params.to_dimensionless()
    omega, drive = d.omega_eff, d.omega_drive
    p, q = 1.0 / omega, drive / omega
    up, down = omega + drive, omega - drive
    cos, sin = TimeKernel.COS, TimeKernel.SIN
    return [
        (0, 0, 0.5 * (1.0 + q), cos, down),
        (0, 0, 0.5 * (1.0 - q), cos, up),
        (0, 1, 0.5 * (1.0 - q), sin, up),
        (0, 1, 0.5 * (1.0 + q), sin, down),
        (0, 2, -p, sin, drive),
        (1, 0, 0.5 * (1.0 - q), sin, up),
        (1, 0, -0.5 * (1.0 + q), sin, down),
        (1, 1, 0.5 * (1.0 + q), cos, down),
        (1, 1, -0.5 * (1.0 - q), cos, up),
        (1, 2, p, cos, drive),
    ]


def lab_couplings(params: ModelParams) -> np.ndarray:
    d = params.to_dimensionless()
    p, q = 1.0 / d.omega_eff, d.omega_drive / d.omega_eff
    return np.array([[1.0, 0.0, 0.0], [0.0, q, p]])


def interaction_operator(xi: int, u: float, params: ModelParams) -> np.ndarray:
    if xi not in (0, 1):
        raise ValueError(f"coupling index must be 0 or 1 (got {xi})")
    out = np.zeros(3)
    for row, k, coef, kernel, freq in _interaction_table(params):
        if row == xi:
            out[k] += coef * (math.cos(freq * u) if kernel is TimeKernel.COS else math.sin(freq * u))
    return out


def _gamma(nu: float, kernel: TimeKernel, model: SpectralModel, epsilon0: float) -> complex:
    real = one_sided_transform(TransformRequest(nu, kernel, CorrelationPart.REAL), model, epsilon0)
    imag = one_sided_transform(TransformRequest(nu, kernel, CorrelationPart.IMAG), model, epsilon0)
    return complex(real, imag)


def integrated_couplings(params: ModelParams, model: SpectralModel) -> np.ndarray:
    """Lambda_xi as a (2, 3) complex array of hat-basis coefficients."""
    epsilon0 = EPSILON_SCALE * params.to_dimensionless().omega_eff
    out = np.zeros((2, 3), dtype=complex)
    for row, k, coef, kernel, freq in _interaction_table(params):
        out[row, k] += coef * _gamma(freq, kernel, model, epsilon0)
    return out


def bloch_projection(superop: Superoperator, params: ModelParams) -> np.ndarray:
    """Real 4x4 matrix L with L[mu, nu] = -Tr(hat sigma_mu superop[hat sigma_nu]) / 4."""
    return _project(superop, pauli_basis(params))


def _project(superop: Superoperator, basis: np.ndarray) -> np.ndarray:
    images = np.stack([superop(b) for b in basis])
    projected = -0.25 * np.einsum("mij,nji->mn", basis, images)
    return projected.real


def _redfield_superoperator(params: ModelParams, lam: np.ndarray) -> Superoperator:
    basis = pauli_basis(params)[1:]
    couplings = np.tensordot(lab_couplings(params), basis, axes=1)
    integrated = np.tensordot(lam, basis, axes=1)

    def apply(rho: np.ndarray) -> np.ndarray:
        out = np.zeros((2, 2), dtype=complex)
        for s, big_lambda in zip(couplings, integrated):
            inner = big_lambda @ rho - rho @ big_lambda.conj().T
            out -= s @ inner - inner @ s
        return out

    return apply


def effective_hamiltonian_block(params: ModelParams) -> np.ndarray:
    omega = params.to_dimensionless().omega_eff
    block = np.zeros((4, 4))
    block[1, 2] = 0.5 * omega
    block[2, 1] = -0.5 * omega
    return block


def split_parts(block: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    block = np.array(block, dtype=float)
    block[0, :] = 0.0
    inner = block[1:, 1:]
    lamb_shift = np.zeros((4, 4))
    lamb_shift[1:, 1:] = 0.5 * (inner - inner.T)
    return lamb_shift, block - lamb_shift


def generator_from_parts(
    hamiltonian: np.ndarray,
    lamb_shift: np.ndarray,
    dissipative: np.ndarray,
    kind: GeneratorKind,
    params: ModelParams,
) -> BlochGenerator:
    lam2 = params.lambda_coupling**2
    matrix = hamiltonian + lam2 * lamb_shift + lam2 * dissipative
    for array in (matrix, hamiltonian, lamb_shift, dissipative):
        array.setflags(write=False)
    return BlochGenerator(
        matrix=matrix,
        parts=GeneratorParts(hamiltonian=hamiltonian, lamb_shift=lamb_shift, dissipative=dissipative),
        kind=kind,
        params=params,
    )


def build_redfield(params: ModelParams, model: SpectralModel) -> BlochGenerator:
    lam = integrated_couplings(params, model)
    block = bloch_projection(_redfield_superoperator(params, lam), params)
    lamb_shift, dissipative = split_parts(block)
    g = generator_from_parts(
        effective_hamiltonian_block(params), lamb_shift, dissipative, GeneratorKind.REDFIELD, params
    )
    logger.info(
        "generator built kind=redfield omega_eff=%.6g lambda=%.6g beta=%.6g",
        params.to_dimensionless().omega_eff,
        params.lambda_coupling,
        model.beta,
    )
    return g


def build_weak_coupling(params: ModelParams, model: SpectralModel) -> BlochGenerator:
    d = params.to_dimensionless()
    omega, drive = d.omega_eff, d.omega_drive
    p, q = 1.0 / omega, drive / omega
    up, down = omega + drive, omega - drive
    epsilon0 = EPSILON_SCALE * omega

    def transform(nu: float, kernel: TimeKernel, part: CorrelationPart) -> float:
        return one_sided_transform(TransformRequest(nu, kernel, part), model, epsilon0)

    cos_re = functools.partial(transform, kernel=TimeKernel.COS, part=CorrelationPart.REAL)
    sin_re = functools.partial(transform, kernel=TimeKernel.SIN, part=CorrelationPart.REAL)
    sin_im = functools.partial(transform, kernel=TimeKernel.SIN, part=CorrelationPart.IMAG)

    k33 = (1.0 + q) ** 2 * cos_re(down) + (1.0 - q) ** 2 * cos_re(up)
    k30 = -(1.0 - q) ** 2 * sin_im(up) - (1.0 + q) ** 2 * sin_im(down)
    k11 = 0.5 * k33 + 2.0 * p * p * cos_re(drive)
    h12 = 0.5 * (1.0 - q) ** 2 * sin_re(up) + 0.5 * (1.0 + q) ** 2 * sin_re(down)

    dissipative = np.zeros((4, 4))
    dissipative[1, 1] = dissipative[2, 2] = k11
    dissipative[3, 3] = k33
    dissipative[3, 0] = k30
    lamb_shift = np.zeros((4, 4))
    lamb_shift[1, 2] = h12
    lamb_shift[2, 1] = -h12

    g = generator_from_parts(
        effective_hamiltonian_block(params), lamb_shift, dissipative, GeneratorKind.WEAK_COUPLING, params
    )
    logger.info(
        "generator built kind=weak_coupling omega_eff=%.6g lambda=%.6g k30=%.6g k33=%.6g",
        omega,
        params.lambda_coupling,
        k30,
        k33,
    )
    return g


def period_average(block: np.ndarray, hamiltonian: np.ndarray, omega_eff: float) -> np.ndarray:
    # The conjugated block is a trigonometric polynomial of degree two, so equispaced samples are exact.
    period = 2.0 * math.pi / omega_eff
    total = np.zeros((4, 4))
    for k in range(SECULAR_SAMPLES):
        t = k * period / SECULAR_SAMPLES
        total += linalg.expm(-2.0 * t * hamiltonian) @ block @ linalg.expm(2.0 * t * hamiltonian)
    return total / SECULAR_SAMPLES


def secular_average(g: BlochGenerator) -> BlochGenerator:
    if g.kind is not GeneratorKind.REDFIELD:
        raise ValueError(f"secular average expects a redfield generator (got {g.kind.value})")
    omega = g.params.to_dimensionless().omega_eff
    hamiltonian = np.array(g.parts.hamiltonian)
    lamb_shift = period_average(g.parts.lamb_shift, hamiltonian, omega)
    dissipative = period_average(g.parts.dissipative, hamiltonian, omega)
    return generator_from_parts(hamiltonian, lamb_shift, dissipative, GeneratorKind.WEAK_COUPLING, g.params)


def stationary_bloch(g: BlochGenerator) -> BlochVector:
    block = g.matrix[1:, 1:]
    rhs = -g.matrix[1:, 0]
    condition = np.linalg.cond(block)
    if not math.isfinite(condition) or condition > CONDITION_LIMIT:
        raise DegenerateStationaryStateError(
            f"stationary block of the {g.kind.value} generator is singular (cond={condition:.3e})"
        )
    solution = linalg.solve(block, rhs)
    return BlochVector.from_polarization(*solution)


def r3_equilibrium(params: ModelParams, model: SpectralModel) -> float:
    """Signed stationary polarization along hat sigma_3 in the weak-coupling limit."""
    d = params.to_dimensionless()
    omega, drive = d.omega_eff, d.omega_drive
    up, down = omega + drive, omega - drive
    w_up, w_down = (omega - drive) ** 2, (omega + drive) ** 2
    numerator = w_up * spectral_density(up, model) + w_down * spectral_density(down, model)
    denominator = w_up * thermal_weight(up, model) + w_down * thermal_weight(down, model)
    return -float(numerator) / float(denominator)


def _hermitian_basis() -> list[np.ndarray]:
    out = []
    for j in range(3):
        e = np.zeros((3, 3), dtype=complex)
        e[j, j] = 1.0
        out.append(e)
    for j, k in ((0, 1), (0, 2), (1, 2)):
        e = np.zeros((3, 3), dtype=complex)
        e[j, k] = e[k, j] = 1.0
        out.append(e)
        e = np.zeros((3, 3), dtype=complex)
        e[j, k], e[k, j] = 1.0j, -1.0j
        out.append(e)
    return out


def _gksl_superoperator(kossakowski: np.ndarray, lamb_shift: np.ndarray, basis: np.ndarray) -> Superoperator:
    paulis = basis[1:]
    hamiltonian = np.tensordot(lamb_shift, paulis, axes=1)

    def apply(rho: np.ndarray) -> np.ndarray:
        out = -1.0j * (hamiltonian @ rho - rho @ hamiltonian)
        for j in range(3):
            for k in range(3):
                if kossakowski[j, k] == 0:
                    continue
                product = paulis[j] @ paulis[k]
                out += kossakowski[j, k] * (
                    paulis[k] @ rho @ paulis[j] - 0.5 * (product @ rho + rho @ product)
                )
        return out

    return apply


@functools.lru_cache(maxsize=64)
def _gksl_design(ratio: float) -> np.ndarray:
    basis = pauli_basis(ModelParams(1.0, ratio, 0.0, 1.0, 1.0))
    columns = []
    for e in _hermitian_basis():
        columns.append(_project(_gksl_superoperator(e, np.zeros(3), basis), basis).ravel())
    for l in range(3):
        h = np.zeros(3)
        h[l] = 1.0
        columns.append(_project(_gksl_superoperator(np.zeros((3, 3)), h, basis), basis).ravel())
    design = np.column_stack(columns)
    design.setflags(write=False)
    return design


def kossakowski_spectrum(g: BlochGenerator) -> KossakowskiData:
    """Exact fit of the unscaled non-Hamiltonian block by a Hermitian K plus a coherent remainder."""
    target = np.asarray(g.parts.lamb_shift + g.parts.dissipative, dtype=float)
    design = _gksl_design(g.params.to_dimensionless().drive_ratio)
    theta, *_ = np.linalg.lstsq(design, target.ravel(), rcond=None)
    residual = float(np.max(np.abs(design @ theta - target.ravel())))
    scale = max(1.0, float(np.max(np.abs(target))))
    if residual > DECOMPOSITION_TOLERANCE * scale:
        raise MalformedGeneratorError(
            f"{g.kind.value} generator has no GKSL decomposition in the rotated basis", residual
        )
    kossakowski = np.tensordot(theta[:9], np.stack(_hermitian_basis()), axes=1)
    kossakowski = 0.5 * (kossakowski + kossakowski.conj().T)
    eigenvalues = np.linalg.eigvalsh(kossakowski)
    logger.debug("kossakowski kind=%s eigenvalues=%s residual=%.3e", g.kind.value, eigenvalues, residual)
    return KossakowskiData(matrix=kossakowski, eigenvalues=eigenvalues, lamb_shift_vector=np.array(theta[9:]))


def lindblad_action(data: KossakowskiData, rho: np.ndarray, params: ModelParams) -> np.ndarray:
    return _gksl_superoperator(data.matrix, data.lamb_shift_vector, pauli_basis(params))(
        np.asarray(rho, dtype=complex)
    )


def generator_action(g: BlochGenerator, rho: np.ndarray) -> np.ndarray:
    coefficients = coefficients_from_operator(np.asarray(rho, dtype=complex), g.params)
    return operator_from_coefficients(-2.0 * g.matrix @ coefficients, g.params)


def propagator(g: BlochGenerator, t: float) -> np.ndarray:
    if t < 0:
        raise ValueError(f"t must be >= 0 (got {t})")
    return linalg.expm(-2.0 * t * g.matrix)


def choi_minimum_eigenvalue(g: BlochGenerator, t: float) -> float:
    """Smallest eigenvalue of (Lambda_t x id) applied to the maximally entangled state."""
    step = propagator(g, t)
    choi = np.zeros((4, 4), dtype=complex)
    for i in range(2):
        for j in range(2):
            unit = np.zeros((2, 2), dtype=complex)
            unit[i, j] = 1.0
            image = operator_from_coefficients(step @ coefficients_from_operator(unit, g.params), g.params)
            choi += 0.5 * np.kron(image, unit)
    choi = 0.5 * (choi + choi.conj().T)
    return float(np.linalg.eigvalsh(choi)[0])
