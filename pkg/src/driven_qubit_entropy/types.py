from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy import constants


class UnitMode(str, Enum):
    PHYSICAL = "physical"
    DIMENSIONLESS = "dimensionless"


class FrequencyConvention(str, Enum):
    ANGULAR = "angular"
    ORDINARY = "ordinary"


class GeneratorKind(str, Enum):
    REDFIELD = "redfield"
    WEAK_COUPLING = "weak_coupling"


class TimeKernel(str, Enum):
    COS = "cos"
    SIN = "sin"


class CorrelationPart(str, Enum):
    REAL = "real"
    IMAG = "imag"


class FrameDirection(str, Enum):
    TO_LAB = "to_lab"
    TO_ROTATING = "to_rotating"


class Sampling(str, Enum):
    EQUATORIAL_GRID = "equatorial_grid"
    RANDOM_BALL = "random_ball"
    RANDOM_SPHERE = "random_sphere"


class Reference(str, Enum):
    STATIONARY = "stationary"
    GIBBS = "gibbs"


class Scenario(str, Enum):
    FIG1_SCAN = "fig1_scan"
    TIMESERIES = "timeseries"
    SWEEP = "sweep"
    TABULATE_BATH = "tabulate_bath"
    SNAPSHOT_GENERATORS = "snapshot_generators"


@dataclass(frozen=True)
class ModelParams:
    """Physical parameters of the driven qubit.

    In physical mode frequencies are in GHz and the temperature in kelvin.
    In dimensionless mode frequencies are in units of delta (so delta == 1)
    and the temperature is k_B T / (hbar delta).
    """

    delta: float
    omega_drive: float
    lambda_coupling: float
    temperature: float
    omega_cutoff: float
    unit_mode: UnitMode = UnitMode.DIMENSIONLESS
    frequency_convention: FrequencyConvention = FrequencyConvention.ANGULAR

    def __post_init__(self) -> None:
        for name in ("delta", "omega_drive", "lambda_coupling", "temperature", "omega_cutoff"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.delta <= 0:
            raise ValueError(f"delta must be > 0 (got {self.delta})")
        if self.omega_cutoff <= 0:
            raise ValueError(f"omega_cutoff must be > 0 (got {self.omega_cutoff})")
        if self.temperature <= 0:
            raise ValueError(f"temperature must be > 0 (got {self.temperature})")
        if self.omega_drive < 0:
            raise ValueError(f"omega_drive must be >= 0 (got {self.omega_drive})")
        if self.unit_mode is UnitMode.DIMENSIONLESS and self.delta != 1.0:
            raise ValueError("dimensionless parameters must have delta == 1")

    @property
    def omega_eff(self) -> float:
        return math.hypot(self.delta, self.omega_drive)

    @property
    def drive_ratio(self) -> float:
        return self.omega_drive / self.delta

    @property
    def period(self) -> float:
        """One revolution of the effective Hamiltonian, 2 pi / omega_eff."""
        return 2.0 * math.pi / self.omega_eff

    def delta_rad_per_second(self) -> float:
        if self.unit_mode is UnitMode.DIMENSIONLESS:
            raise ValueError("dimensionless parameters carry no physical delta")
        scale = 2.0 * math.pi if self.frequency_convention is FrequencyConvention.ORDINARY else 1.0
        return self.delta * 1e9 * scale

    def beta_hbar_delta(self) -> float:
        """Inverse temperature as the dimensionless combination beta * hbar * delta."""
        if self.unit_mode is UnitMode.DIMENSIONLESS:
            return 1.0 / self.temperature
        return constants.hbar * self.delta_rad_per_second() / (constants.k * self.temperature)

    def to_dimensionless(self) -> ModelParams:
        if self.unit_mode is UnitMode.DIMENSIONLESS:
            return self
        return ModelParams(
            delta=1.0,
            omega_drive=self.omega_drive / self.delta,
            lambda_coupling=self.lambda_coupling,
            temperature=1.0 / self.beta_hbar_delta(),
            omega_cutoff=self.omega_cutoff / self.delta,
            unit_mode=UnitMode.DIMENSIONLESS,
            frequency_convention=self.frequency_convention,
        )


@dataclass(frozen=True)
class BlochVector:
    """Coefficients (r0, r1, r2, r3) of a qubit state in the rotated Pauli basis."""

    r: tuple[float, float, float, float]

    @classmethod
    def from_polarization(cls, r1: float, r2: float, r3: float) -> BlochVector:
        return cls((1.0, float(r1), float(r2), float(r3)))

    @classmethod
    def from_array(cls, values: np.ndarray) -> BlochVector:
        return cls(tuple(float(v) for v in values))  # type: ignore[arg-type]

    @property
    def polarization(self) -> np.ndarray:
        return np.asarray(self.r[1:], dtype=float)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.polarization))

    def as_array(self) -> np.ndarray:
        return np.asarray(self.r, dtype=float)


@dataclass(frozen=True)
class SpectralModel:
    """Ohmic bath with exponential cutoff; beta is hbar-scaled (math.inf means zero temperature)."""

    omega_cutoff: float
    beta: float
    form: str = "ohmic-exponential-cutoff"

    def __post_init__(self) -> None:
        if self.omega_cutoff <= 0:
            raise ValueError(f"omega_cutoff must be > 0 (got {self.omega_cutoff})")
        if not self.beta > 0:
            raise ValueError(f"beta must be > 0 (got {self.beta})")
        if self.form != "ohmic-exponential-cutoff":
            raise ValueError(f"unsupported spectral form: {self.form}")

    @classmethod
    def from_params(cls, params: ModelParams) -> SpectralModel:
        dimless = params.to_dimensionless()
        return cls(omega_cutoff=dimless.omega_cutoff, beta=1.0 / dimless.temperature)


@dataclass(frozen=True)
class TransformRequest:
    nu: float
    time_kernel: TimeKernel
    correlation_part: CorrelationPart

    def __post_init__(self) -> None:
        if not math.isfinite(self.nu):
            raise ValueError("nu must be finite")

    @property
    def absorptive(self) -> bool:
        """cos/real and sin/imag pairs reduce to the on-shell value of the spectrum."""
        return (self.time_kernel is TimeKernel.COS) == (self.correlation_part is CorrelationPart.REAL)


@dataclass(frozen=True)
class GeneratorParts:
    hamiltonian: np.ndarray
    lamb_shift: np.ndarray
    dissipative: np.ndarray


@dataclass(frozen=True)
class BlochGenerator:
    """Real 4x4 generator with d|r>/dt = -2 L |r>."""

    matrix: np.ndarray
    parts: GeneratorParts
    kind: GeneratorKind
    params: ModelParams


@dataclass(frozen=True)
class KossakowskiData:
    matrix: np.ndarray
    eigenvalues: np.ndarray
    lamb_shift_vector: np.ndarray


@dataclass(frozen=True)
class TrajectoryRecord:
    times: np.ndarray
    states: list[BlochVector]
    generator_kind: GeneratorKind
    params: ModelParams


@dataclass(frozen=True)
class SigmaSample:
    time: float
    sigma: float
    entropy_rate: float
    heat_flux: float


@dataclass(frozen=True)
class ViolationReport:
    params: ModelParams
    generator_kind: GeneratorKind
    t0_fraction_negative: float
    negative_intervals: list[tuple[float, float]] = field(default_factory=list)
    min_sigma: float = math.inf
    min_sigma_time: float = 0.0
    sample_count: int = 0
    rng_seed: int = 0


@dataclass(frozen=True)
class SweepCell:
    temperature: float
    ratio: float
    redfield: ViolationReport | None
    weak_coupling: ViolationReport | None
    has_time_violation: bool
    witness: BlochVector | None = None
    error: str | None = None
