from __future__ import annotations

import dataclasses
import os
import tomllib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from dotenv import load_dotenv

from .errors import ConfigError
from .types import BlochVector, FrequencyConvention, ModelParams, Reference, Sampling, Scenario, UnitMode


@dataclass(frozen=True)
class Settings:
    log_level: str
    num_workers: int
    output_dir: Path


def _optional_int(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    return int(raw)


def _optional_str(name: str, default: str) -> str:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    return raw.strip()


def load_settings() -> Settings:
    load_dotenv()
    return Settings(
        log_level=_optional_str("LOG_LEVEL", "INFO").upper(),
        num_workers=max(1, _optional_int("OQS_NUM_WORKERS", os.cpu_count() or 1)),
        output_dir=Path(_optional_str("OQS_OUTPUT_DIR", "results")),
    )


@dataclass(frozen=True)
class SweepSettings:
    temperatures: tuple[float, ...] = (0.0006, 0.006, 0.06)
    ratios: tuple[float, ...] = (0.1, 1.0, 2.0, 10.0)
    n_states: int = 2000
    search_states: int = 16
    search_periods: float = 20.0


@dataclass(frozen=True)
class AnalysisSettings:
    reference: Reference = Reference.STATIONARY
    sampling: Sampling = Sampling.RANDOM_BALL
    u_max: float = 10.0
    u_points: int = 201


@dataclass(frozen=True)
class ExperimentConfig:
    """One reproducible run. Times are in units of 1 / delta; None means derived from the period."""

    scenario: Scenario
    params: ModelParams
    initial_state: BlochVector | None = None
    n_points: int = 101
    t_max: float | None = None
    dt: float | None = None
    periods: float = 20.0
    seed: int = 0
    output_dir: Path = Path("results")
    sweep: SweepSettings = field(default_factory=SweepSettings)
    analysis: AnalysisSettings = field(default_factory=AnalysisSettings)

    def resolved_dt(self) -> float:
        return self.dt if self.dt is not None else self.params.to_dimensionless().period / 64.0

    def resolved_t_max(self) -> float:
        if self.t_max is not None:
            return self.t_max
        return self.periods * self.params.to_dimensionless().period


TILTED_STATE = BlochVector.from_polarization(0.0, -0.894, -0.447)


def default_params() -> ModelParams:
    """lambda = 0.005, T = 0.006 K, delta = 8 GHz, Omega / delta = 2, omega_c / delta = 1000."""
    return ModelParams(
        delta=8.0,
        omega_drive=16.0,
        lambda_coupling=0.005,
        temperature=0.006,
        omega_cutoff=8000.0,
        unit_mode=UnitMode.PHYSICAL,
        frequency_convention=FrequencyConvention.ANGULAR,
    )


def default_config() -> ExperimentConfig:
    return ExperimentConfig(scenario=Scenario.FIG1_SCAN, params=default_params(), initial_state=TILTED_STATE)


_TOP_KEYS = {"scenario", "seed", "output_dir", "params", "initial_state", "grid", "sweep", "analysis"}
_PARAM_KEYS = {
    "delta",
    "omega_drive",
    "drive_ratio",
    "lambda_coupling",
    "temperature",
    "omega_cutoff",
    "cutoff_ratio",
    "unit_mode",
    "frequency_convention",
}
_GRID_KEYS = {"n_points", "t_max", "dt", "periods"}


def _field(section: str, key: str) -> str:
    return f"{section}.{key}" if section else key


def _check_keys(section: str, table: dict[str, Any], allowed: set[str]) -> None:
    for key in table:
        if key not in allowed:
            raise ConfigError(_field(section, key), "unknown key")


def _table(raw: dict[str, Any], name: str) -> dict[str, Any]:
    value = raw.get(name, {})
    if not isinstance(value, dict):
        raise ConfigError(name, "expected a table")
    return value


def _number(table: dict[str, Any], section: str, key: str, default: float | None = None) -> float | None:
    if key not in table:
        return default
    value = table[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(_field(section, key), f"expected a number, got {value!r}")
    return float(value)


def _integer(table: dict[str, Any], section: str, key: str, default: int) -> int:
    if key not in table:
        return default
    value = table[key]
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(_field(section, key), f"expected an integer, got {value!r}")
    return value


def _numbers(table: dict[str, Any], section: str, key: str, default: tuple[float, ...]) -> tuple[float, ...]:
    if key not in table:
        return default
    value = table[key]
    if not isinstance(value, list) or not value:
        raise ConfigError(_field(section, key), "expected a nonempty list of numbers")
    return tuple(_number({key: v}, section, key) for v in value)  # type: ignore[misc]


def _enum(table: dict[str, Any], section: str, key: str, enum_type: type, default: Any) -> Any:
    if key not in table:
        return default
    try:
        return enum_type(table[key])
    except ValueError:
        choices = ", ".join(member.value for member in enum_type)
        raise ConfigError(_field(section, key), f"expected one of {choices}, got {table[key]!r}") from None


def _exclusive(table: dict[str, Any], section: str, first: str, second: str) -> None:
    if first in table and second in table:
        raise ConfigError(f"{section}.{second}", f"conflicts with {section}.{first}")


def _parse_params(table: dict[str, Any], base: ModelParams) -> ModelParams:
    _check_keys("params", table, _PARAM_KEYS)
    _exclusive(table, "params", "omega_drive", "drive_ratio")
    _exclusive(table, "params", "omega_cutoff", "cutoff_ratio")
    unit_mode = _enum(table, "params", "unit_mode", UnitMode, base.unit_mode)
    default_delta = 1.0 if unit_mode is UnitMode.DIMENSIONLESS else base.delta
    delta = _number(table, "params", "delta", default_delta)
    omega_drive = _number(table, "params", "omega_drive", None)
    if "drive_ratio" in table:
        omega_drive = _number(table, "params", "drive_ratio") * delta
    omega_cutoff = _number(table, "params", "omega_cutoff", None)
    if "cutoff_ratio" in table:
        omega_cutoff = _number(table, "params", "cutoff_ratio") * delta
    try:
        return ModelParams(
            delta=delta,
            omega_drive=omega_drive if omega_drive is not None else base.drive_ratio * delta,
            lambda_coupling=_number(table, "params", "lambda_coupling", base.lambda_coupling),
            temperature=_number(table, "params", "temperature", base.temperature),
            omega_cutoff=omega_cutoff if omega_cutoff is not None else base.omega_cutoff / base.delta * delta,
            unit_mode=unit_mode,
            frequency_convention=_enum(
                table, "params", "frequency_convention", FrequencyConvention, base.frequency_convention
            ),
        )
    except ValueError as exc:
        raise ConfigError("params", str(exc)) from exc


def _parse_state(table: dict[str, Any]) -> BlochVector | None:
    if not table:
        return None
    _check_keys("initial_state", table, {"r"})
    values = table.get("r")
    if not isinstance(values, list) or len(values) != 3:
        raise ConfigError("initial_state.r", "expected three polarization components [r1, r2, r3]")
    components = [_number({"r": v}, "initial_state", "r") for v in values]
    state = BlochVector.from_polarization(*components)  # type: ignore[arg-type]
    if state.norm > 1.0 + 1e-9:
        raise ConfigError("initial_state.r", f"polarization norm {state.norm:.6f} exceeds 1")
    return state


def parse_experiment_config(raw: dict[str, Any]) -> ExperimentConfig:
    defaults = default_config()
    _check_keys("", raw, _TOP_KEYS)
    grid = _table(raw, "grid")
    sweep = _table(raw, "sweep")
    analysis = _table(raw, "analysis")
    _check_keys("grid", grid, _GRID_KEYS)
    _check_keys("sweep", sweep, {f.name for f in dataclasses.fields(SweepSettings)})
    _check_keys("analysis", analysis, {f.name for f in dataclasses.fields(AnalysisSettings)})

    if "scenario" not in raw:
        raise ConfigError("scenario", "missing")
    scenario = _enum(raw, "", "scenario", Scenario, None)
    output_dir = raw.get("output_dir", str(defaults.output_dir))
    if not isinstance(output_dir, str):
        raise ConfigError("output_dir", "expected a path string")

    default_sweep = SweepSettings()
    default_analysis = AnalysisSettings()
    config = ExperimentConfig(
        scenario=scenario,
        params=_parse_params(_table(raw, "params"), defaults.params),
        initial_state=_parse_state(_table(raw, "initial_state")),
        n_points=_integer(grid, "grid", "n_points", defaults.n_points),
        t_max=_number(grid, "grid", "t_max"),
        dt=_number(grid, "grid", "dt"),
        periods=_number(grid, "grid", "periods", defaults.periods),
        seed=_integer(raw, "", "seed", defaults.seed),
        output_dir=Path(output_dir),
        sweep=SweepSettings(
            temperatures=_numbers(sweep, "sweep", "temperatures", default_sweep.temperatures),
            ratios=_numbers(sweep, "sweep", "ratios", default_sweep.ratios),
            n_states=_integer(sweep, "sweep", "n_states", default_sweep.n_states),
            search_states=_integer(sweep, "sweep", "search_states", default_sweep.search_states),
            search_periods=_number(sweep, "sweep", "search_periods", default_sweep.search_periods),
        ),
        analysis=AnalysisSettings(
            reference=_enum(analysis, "analysis", "reference", Reference, default_analysis.reference),
            sampling=_enum(analysis, "analysis", "sampling", Sampling, default_analysis.sampling),
            u_max=_number(analysis, "analysis", "u_max", default_analysis.u_max),
            u_points=_integer(analysis, "analysis", "u_points", default_analysis.u_points),
        ),
    )
    validate(config)
    return config


def load_experiment_config(path: str | Path) -> ExperimentConfig:
    try:
        with open(path, "rb") as handle:
            raw = tomllib.load(handle)
    except FileNotFoundError:
        raise ConfigError("config", f"file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("config", f"{path}: {exc}") from exc
    return parse_experiment_config(raw)


def validate(config: ExperimentConfig) -> None:
    if config.scenario is Scenario.TIMESERIES and config.initial_state is None:
        raise ConfigError("initial_state", "required by the timeseries scenario")
    if config.n_points < 1:
        raise ConfigError("grid.n_points", "must be >= 1")
    if config.dt is not None and not config.dt > 0:
        raise ConfigError("grid.dt", "must be > 0")
    if config.resolved_t_max() < config.resolved_dt():
        raise ConfigError("grid.t_max", "must be >= dt")
    if config.sweep.n_states < 1 or config.sweep.search_states < 1:
        raise ConfigError("sweep.n_states", "state counts must be >= 1")
    if config.analysis.u_points < 2 or not config.analysis.u_max > 0:
        raise ConfigError("analysis.u_points", "tabulation needs u_max > 0 and at least two points")


def apply_overrides(
    config: ExperimentConfig,
    *,
    scenario: str | None = None,
    t_max: float | None = None,
    dt: float | None = None,
    seed: int | None = None,
    out: str | Path | None = None,
    n_points: int | None = None,
) -> ExperimentConfig:
    changes: dict[str, Any] = {}
    if scenario is not None:
        changes["scenario"] = _enum({"scenario": scenario}, "", "scenario", Scenario, None)
    if t_max is not None:
        changes["t_max"] = t_max
    if dt is not None:
        changes["dt"] = dt
    if seed is not None:
        changes["seed"] = seed
    if out is not None:
        changes["output_dir"] = Path(out)
    if n_points is not None:
        changes["n_points"] = n_points
    updated = dataclasses.replace(config, **changes)
    validate(updated)
    return updated


def config_items(config: ExperimentConfig) -> list[tuple[str, Any]]:
    """Flat (key, value) view of every resolved setting."""
    params = config.params
    dimless = params.to_dimensionless()
    items: list[tuple[str, Any]] = [
        ("scenario", config.scenario.value),
        ("seed", config.seed),
        ("output_dir", str(config.output_dir)),
        ("params.unit_mode", params.unit_mode.value),
        ("params.frequency_convention", params.frequency_convention.value),
        ("params.delta", params.delta),
        ("params.omega_drive", params.omega_drive),
        ("params.lambda_coupling", params.lambda_coupling),
        ("params.temperature", params.temperature),
        ("params.omega_cutoff", params.omega_cutoff),
        ("derived.drive_ratio", dimless.omega_drive),
        ("derived.cutoff_ratio", dimless.omega_cutoff),
        ("derived.omega_eff", dimless.omega_eff),
        ("derived.beta_hbar_delta", params.beta_hbar_delta()),
        ("grid.n_points", config.n_points),
        ("grid.t_max", config.resolved_t_max()),
        ("grid.dt", config.resolved_dt()),
        ("analysis.reference", config.analysis.reference.value),
        ("analysis.sampling", config.analysis.sampling.value),
        ("analysis.u_max", config.analysis.u_max),
        ("analysis.u_points", config.analysis.u_points),
        ("sweep.temperatures", list(config.sweep.temperatures)),
        ("sweep.ratios", list(config.sweep.ratios)),
        ("sweep.n_states", config.sweep.n_states),
        ("sweep.search_states", config.sweep.search_states),
        ("sweep.search_periods", config.sweep.search_periods),
    ]
    if config.initial_state is not None:
        items.append(("initial_state.r", list(config.initial_state.r[1:])))
    return items
