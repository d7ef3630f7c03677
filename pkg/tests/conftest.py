from __future__ import annotations

import math
from dataclasses import dataclass

import pytest

from driven_qubit_entropy.config import default_params
from driven_qubit_entropy.generators import build_redfield, build_weak_coupling
from driven_qubit_entropy.sweep import cell_params
from driven_qubit_entropy.types import BlochGenerator, ModelParams, SpectralModel


@dataclass(frozen=True)
class GeneratorPair:
    params: ModelParams
    model: SpectralModel
    redfield: BlochGenerator
    weak: BlochGenerator


def _pair(params: ModelParams, model: SpectralModel) -> GeneratorPair:
    return GeneratorPair(params, model, build_redfield(params, model), build_weak_coupling(params, model))


@pytest.fixture(scope="session")
def vacuum_params() -> ModelParams:
    return ModelParams(delta=1.0, omega_drive=2.0, lambda_coupling=0.05, temperature=0.5, omega_cutoff=10.0)


@pytest.fixture(scope="session")
def vacuum_model() -> SpectralModel:
    return SpectralModel(omega_cutoff=10.0, beta=math.inf)


@pytest.fixture(scope="session")
def vacuum_pair(vacuum_params: ModelParams, vacuum_model: SpectralModel) -> GeneratorPair:
    """Zero-temperature bath: every transform is closed form or a vacuum quadrature."""
    return _pair(vacuum_params, vacuum_model)


@pytest.fixture(scope="session")
def warm_params() -> ModelParams:
    return ModelParams(delta=1.0, omega_drive=1.0, lambda_coupling=0.05, temperature=0.5, omega_cutoff=10.0)


@pytest.fixture(scope="session")
def warm_pair(warm_params: ModelParams) -> GeneratorPair:
    return _pair(warm_params, SpectralModel.from_params(warm_params))


@pytest.fixture(scope="session")
def reference_params() -> ModelParams:
    return default_params()


@pytest.fixture(scope="session")
def reference_pair(reference_params: ModelParams) -> GeneratorPair:
    return _pair(reference_params, SpectralModel.from_params(reference_params))


@pytest.fixture(scope="session")
def grid_pairs() -> dict[tuple[float, float], GeneratorPair]:
    """Every (temperature in K, drive ratio) cell of the shipped sweep at the reference coupling."""
    base = default_params()
    pairs = {}
    for temperature in (0.0006, 0.006, 0.06):
        for ratio in (0.1, 1.0, 2.0, 10.0):
            params = cell_params(base, temperature, ratio)
            pairs[temperature, ratio] = _pair(params, SpectralModel.from_params(params))
    return pairs
