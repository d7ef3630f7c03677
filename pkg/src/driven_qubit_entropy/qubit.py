from __future__ import annotations

import functools
import math

import numpy as np
from scipy import special

from .errors import PhysicalityError
from .types import BlochVector, FrameDirection, ModelParams

# Polarization excess tolerated as integration drift; larger excess is a genuine violation.
NORM_TOLERANCE = 1e-9
HERMITIAN_TOLERANCE = 1e-10

SIGMA_0 = np.eye(2, dtype=complex)
SIGMA_1 = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_2 = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_3 = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)


@functools.lru_cache(maxsize=256)
def _basis_for_ratio(ratio: float) -> np.ndarray:
    norm = math.hypot(1.0, ratio)
    basis = np.stack(
        [
            SIGMA_0,
            SIGMA_1,
            (SIGMA_2 + ratio * SIGMA_3) / norm,
            (SIGMA_3 - ratio * SIGMA_2) / norm,
        ]
    )
    basis.setflags(write=False)
    return basis


def pauli_basis(params: ModelParams) -> np.ndarray:
    """Rotated Pauli matrices (sigma_0, sigma_1, hat sigma_2, hat sigma_3), shape (4, 2, 2).

    hat sigma_3 is the direction of the effective Hamiltonian in the rotating frame.
    """
    return _basis_for_ratio(params.drive_ratio)


def check_physical(r: BlochVector) -> float:
    """Return the polarization norm clamped to 1, rejecting non-finite or clearly unphysical input."""
    values = r.as_array()
    if not np.all(np.isfinite(values)):
        raise PhysicalityError(f"non-finite Bloch components: {r.r}")
    norm = r.norm
    if norm > 1.0 + NORM_TOLERANCE:
        raise PhysicalityError(f"polarization norm {norm:.12f} exceeds 1")
    return min(norm, 1.0)


def density_from_bloch(r: BlochVector, params: ModelParams) -> np.ndarray:
    values = r.as_array()
    if not np.all(np.isfinite(values)):
        raise PhysicalityError(f"non-finite Bloch components: {r.r}")
    if abs(values[0] - 1.0) > HERMITIAN_TOLERANCE:
        raise PhysicalityError(f"r0 must be 1 for a state (got {values[0]})")
    return 0.5 * np.tensordot(values, pauli_basis(params), axes=1)


def operator_from_coefficients(coefficients: np.ndarray, params: ModelParams) -> np.ndarray:
    """Inverse of coefficients_from_operator for arbitrary (possibly complex, traceful) 2x2 operators."""
    return 0.5 * np.tensordot(coefficients, pauli_basis(params), axes=1)


def coefficients_from_operator(op: np.ndarray, params: ModelParams) -> np.ndarray:
    return np.einsum("mij,ji->m", pauli_basis(params), op)


def bloch_from_density(rho: np.ndarray, params: ModelParams) -> BlochVector:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (2, 2):
        raise PhysicalityError(f"expected a 2x2 matrix, got shape {rho.shape}")
    if np.max(np.abs(rho - rho.conj().T)) > HERMITIAN_TOLERANCE:
        raise PhysicalityError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1.0) > HERMITIAN_TOLERANCE:
        raise PhysicalityError(f"density matrix trace is {np.trace(rho).real}, expected 1")
    coefficients = coefficients_from_operator(rho, params).real
    coefficients[0] = 1.0
    return BlochVector.from_array(coefficients)


def von_neumann_entropy(r: BlochVector) -> float:
    norm = check_physical(r)
    eigenvalues = np.array([0.5 * (1.0 + norm), 0.5 * (1.0 - norm)])
    return float(np.sum(special.entr(eigenvalues)))


def log_ratio_over_norm(norm: float) -> float:
    """log((1 + r) / (1 - r)) / r, continued to 2 at r = 0."""
    if norm < 1e-8:
        return 2.0 + 2.0 * norm * norm / 3.0
    return 2.0 * math.atanh(norm) / norm


def relative_entropy(r: BlochVector, s: BlochVector) -> float:
    """Tr rho (log rho - log sigma); math.inf when the reference is pure and the supports differ."""
    r_norm = check_physical(r)
    s_norm = check_physical(s)
    if s_norm >= 1.0 - 1e-15:
        aligned = r_norm >= 1.0 - 1e-12 and np.allclose(r.polarization, s.polarization, atol=1e-12)
        return 0.0 if aligned else math.inf
    overlap = float(np.dot(r.polarization, s.polarization))
    cross = 0.5 * math.log(0.25 * (1.0 - s_norm * s_norm)) + 0.5 * log_ratio_over_norm(s_norm) * overlap
    return max(-von_neumann_entropy(r) - cross, 0.0)


def trace_distance(r: BlochVector, s: BlochVector) -> float:
    check_physical(r)
    check_physical(s)
    return 0.5 * float(np.linalg.norm(r.polarization - s.polarization))


def _drive_unitary(t: float, params: ModelParams) -> np.ndarray:
    angle = 0.5 * params.to_dimensionless().omega_drive * t
    return math.cos(angle) * SIGMA_0 - 1j * math.sin(angle) * SIGMA_2


def frame_rotation(t: float, params: ModelParams, direction: FrameDirection) -> np.ndarray:
    """Orthogonal 4x4 matrix acting on Bloch vectors for the conjugation by R_t = exp(-i Omega t sigma_2 / 2).

    TO_LAB maps rho~ to R rho~ R^dagger, TO_ROTATING maps rho to R^dagger rho R.
    Times are in units of 1 / delta.
    """
    unitary = _drive_unitary(t, params)
    if direction is FrameDirection.TO_ROTATING:
        unitary = unitary.conj().T
    basis = pauli_basis(params)
    conjugated = unitary[None] @ basis @ unitary.conj().T[None]
    return 0.5 * np.einsum("mij,nji->mn", basis, conjugated).real


def rotate_frame(
    r: BlochVector, t: float, params: ModelParams, direction: FrameDirection
) -> BlochVector:
    check_physical(r)
    rotated = frame_rotation(t, params, direction) @ r.as_array()
    rotated[0] = 1.0
    return BlochVector.from_array(rotated)


def gibbs_bloch(params: ModelParams) -> BlochVector:
    """Gibbs state of H_eff = (hbar omega_eff / 2) hat sigma_3 at the bath temperature."""
    dimless = params.to_dimensionless()
    return BlochVector.from_polarization(0.0, 0.0, -math.tanh(0.5 * dimless.omega_eff / dimless.temperature))
