"""
TOML run and scan configs.

Units in the file follow the lab notation: times in us, Rabi frequencies in
MHz, detunings, widths and decay constants in kHz, pulse areas in multiples
of pi (`*_area_pi`). Everything is converted to SI once, here.
"""
import logging
import math
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

from blochCore.dynamics import RelaxationRates, TRACE_PRESERVING
from ensemble.broadening import EnsembleSpec
from engine.runner import RunConfig, Sampling
from engine.scans import B2_AREA, STORAGE
from protocol.sequences import (
    LOCKED,
    PHASE_LOCKED,
    THREE_PULSE,
    TWO_PULSE,
    build_locked,
    build_phase_locked,
    build_three_pulse,
    build_two_pulse,
)
from utils.errors import ConfigError

log = logging.getLogger(__name__)

PRESET_DIR = Path(__file__).resolve().parent / "presets"

US = 1e-6
MHZ = 1e6
KHZ = 1e3

SECTIONS = ("protocol", "ensemble", "rates", "scan", "output", "numerics")


def _time(name):
    return name, US


def _area(name):
    return name, math.pi


# file key -> (builder argument, scale)
_PROTOCOL_KEYS = {
    TWO_PULSE: {
        "t_data": _time("t_data"),
        "t_pi": _time("t_pi"),
        "rabi_a": ("rabi", MHZ),
        "data_area_pi": _area("data_area"),
        "pi_area_pi": _area("pi_area"),
        "record_margin": _time("record_margin"),
    },
    THREE_PULSE: {
        "t_data": _time("t_data"),
        "t_write": _time("t_write"),
        "t_read": _time("t_read"),
        "rabi_a": ("rabi", MHZ),
        "area_pi": _area("area"),
        "record_margin": _time("record_margin"),
    },
    LOCKED: {
        "t_data": _time("t_data"),
        "t_write": _time("t_write"),
        "t_b1": _time("t_b1"),
        "t_b2": _time("t_b2"),
        "read_delay": _time("read_delay"),
        "rabi_a": ("rabi_a", MHZ),
        "rabi_b": ("rabi_b", MHZ),
        "b1_area_pi": _area("b1_area"),
        "b2_area_pi": _area("b2_area"),
        "area_pi": _area("area"),
        "record_margin": _time("record_margin"),
    },
    PHASE_LOCKED: {
        "t_data": _time("t_data"),
        "t_b1": _time("t_b1"),
        "t_b2": _time("t_b2"),
        "t_pi": _time("t_pi"),
        "rabi_a": ("rabi_a", MHZ),
        "rabi_b": ("rabi_b", MHZ),
        "b1_area_pi": _area("b1_area"),
        "b2_area_pi": _area("b2_area"),
        "data_area_pi": _area("data_area"),
        "pi_area_pi": _area("pi_area"),
        "record_margin": _time("record_margin"),
    },
}

_BUILDERS = {
    TWO_PULSE: build_two_pulse,
    THREE_PULSE: build_three_pulse,
    LOCKED: build_locked,
    PHASE_LOCKED: build_phase_locked,
}

_ENSEMBLE_KEYS = {
    "optical_fwhm": ("optical_fwhm", KHZ),
    "optical_span": ("optical_span", KHZ),
    "optical_segments": ("optical_segments", None),
    "spin_mode": ("spin_mode", None),
    "spin_fwhm": ("spin_fwhm", KHZ),
    "spin_segments": ("spin_segments", None),
    "gamma_12_eff": ("gamma_12_eff", 1.0),
    "gate_effective": ("gate_effective", None),
    "spin_span_sigmas": ("spin_span_sigmas", 1.0),
}

_RATE_KEYS = ("gamma_pop_31", "gamma_pop_32", "gamma_pop_12", "gamma_coh_13", "gamma_coh_23",
              "gamma_coh_12", "gamma_12_eff")

_SAMPLING_KEYS = ("fine_step", "coarse_step", "pulse_before", "pulse_after", "echo_half_width")


@dataclass(frozen=True)
class ScanSpec:
    """kind is "storage" (values are B2 centers, s) or "b2_area" (values in radians)."""

    kind: str
    values: Tuple[float, ...]
    fit: bool = True


@dataclass(frozen=True)
class OutputSpec:
    workbook: bool = False
    bloch_subspace: str = "13"


@dataclass
class SimulationConfig:
    run: RunConfig
    scan: Optional[ScanSpec] = None
    output: OutputSpec = field(default_factory=OutputSpec)
    source: str = ""


def list_presets() -> List[str]:
    """Names of the bundled presets."""
    return sorted(path.stem for path in PRESET_DIR.glob("*.toml"))


def resolve_config_path(source: Union[str, Path]) -> Path:
    """
    A preset name ("fig2_locked") or a path to a TOML file.

    Raises:
        ConfigError: If neither exists
    """
    path = Path(source)
    if path.is_file():
        return path
    preset = PRESET_DIR / f"{path.name}.toml"
    if path.suffix == "" and len(path.parts) == 1 and preset.is_file():
        return preset
    raise ConfigError(f"No config file or preset named {str(source)!r} (presets: {', '.join(list_presets())})")


def load_config(source: Union[str, Path]) -> SimulationConfig:
    """
    Read and validate a config file or bundled preset.

    Args:
        source: Preset name or file path

    Returns:
        SimulationConfig in SI units

    Raises:
        ConfigError: Unreadable file, bad TOML, unknown keys or invalid values
    """
    path = resolve_config_path(source)
    log.info("Loading config %s", path)
    try:
        with open(path, "rb") as handle:
            data = tomllib.load(handle)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: invalid TOML: {exc}") from exc
    except OSError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return parse_config(data, source=str(path))


def _section(data: dict, name: str) -> dict:
    value = data.get(name, {})
    if not isinstance(value, dict):
        raise ConfigError(f"[{name}] must be a table")
    return value


def _reject_unknown(table: dict, allowed, where: str) -> None:
    unknown = sorted(set(table) - set(allowed))
    if unknown:
        raise ConfigError(f"Unknown keys in [{where}]: {', '.join(unknown)}")


def _number(value, key: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{key} must be a number, got {value!r}")
    return float(value)


def _numbers(value, key: str) -> List[float]:
    if not isinstance(value, list):
        raise ConfigError(f"{key} must be a list of numbers")
    return [_number(item, key) for item in value]


def _scaled(table: dict, mapping: Dict[str, tuple], where: str) -> dict:
    kwargs = {}
    for key, value in table.items():
        name, scale = mapping[key]
        if scale is None:
            kwargs[name] = value
        else:
            kwargs[name] = _number(value, f"{where}.{key}") * scale
    return kwargs


def _parse_protocol(table: dict):
    kind = table.get("type")
    if kind not in _PROTOCOL_KEYS:
        raise ConfigError(f"[protocol] type must be one of {sorted(_PROTOCOL_KEYS)}, got {kind!r}")
    keys = _PROTOCOL_KEYS[kind]
    body = {k: v for k, v in table.items() if k != "type"}
    _reject_unknown(body, keys, "protocol")
    return _BUILDERS[kind](**_scaled(body, keys, "protocol"))


def _parse_ensemble(table: dict) -> Tuple[EnsembleSpec, Tuple[float, float, float]]:
    body = dict(table)
    populations = body.pop("initial_populations", [1.0, 0.0, 0.0])
    _reject_unknown(body, _ENSEMBLE_KEYS, "ensemble")
    populations = _numbers(populations, "ensemble.initial_populations")
    if len(populations) != 3:
        raise ConfigError("ensemble.initial_populations needs three values")
    kwargs = _scaled(body, _ENSEMBLE_KEYS, "ensemble")
    for key in ("optical_segments", "spin_segments"):
        if key in kwargs and (isinstance(kwargs[key], bool) or not isinstance(kwargs[key], int)):
            raise ConfigError(f"ensemble.{key} must be an integer")
    if "gate_effective" in kwargs and not isinstance(kwargs["gate_effective"], bool):
        raise ConfigError("ensemble.gate_effective must be true or false")
    if "spin_mode" in kwargs:
        kwargs["spin_mode"] = str(kwargs["spin_mode"]).lower()
    return EnsembleSpec(**kwargs), tuple(populations)


def _parse_rates(table: dict) -> Tuple[RelaxationRates, str]:
    body = dict(table)
    mode = body.pop("mode", TRACE_PRESERVING)
    _reject_unknown(body, _RATE_KEYS, "rates")
    return RelaxationRates(**{k: _number(v, f"rates.{k}") for k, v in body.items()}), mode


def _parse_numerics(table: dict) -> dict:
    allowed = _SAMPLING_KEYS + ("integrator", "steps_per_cycle", "max_step")
    _reject_unknown(table, allowed, "numerics")
    sampling = {k: _number(v, f"numerics.{k}") * US for k, v in table.items() if k in _SAMPLING_KEYS}
    kwargs = {"sampling": Sampling(**sampling)}
    if "integrator" in table:
        kwargs["integrator"] = table["integrator"]
    if "steps_per_cycle" in table:
        value = table["steps_per_cycle"]
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError("numerics.steps_per_cycle must be an integer")
        kwargs["steps_per_cycle"] = value
    if "max_step" in table:
        kwargs["max_step"] = _number(table["max_step"], "numerics.max_step") * US
    return kwargs


def _parse_scan(table: dict) -> Optional[ScanSpec]:
    if not table:
        return None
    kind = table.get("kind")
    if kind == STORAGE:
        _reject_unknown(table, ("kind", "t_b2", "fit"), "scan")
        values = [v * US for v in _numbers(table.get("t_b2"), "scan.t_b2")]
    elif kind == B2_AREA:
        _reject_unknown(table, ("kind", "areas_pi", "fit"), "scan")
        values = [v * math.pi for v in _numbers(table.get("areas_pi"), "scan.areas_pi")]
        if any(v <= 0 for v in values):
            raise ConfigError("scan.areas_pi must be > 0")
    else:
        raise ConfigError(f"scan.kind must be {STORAGE!r} or {B2_AREA!r}, got {kind!r}")
    if not values:
        raise ConfigError("Scan list is empty")
    if kind == STORAGE and any(b <= a for a, b in zip(values, values[1:])):
        raise ConfigError("scan.t_b2 must be strictly increasing")
    fit = table.get("fit", kind == STORAGE)
    if not isinstance(fit, bool):
        raise ConfigError("scan.fit must be true or false")
    return ScanSpec(kind=kind, values=tuple(values), fit=fit)


def _parse_output(table: dict) -> Tuple[OutputSpec, dict]:
    _reject_unknown(table, ("snapshots", "bloch_detunings", "bloch_subspace", "workbook"), "output")
    workbook = table.get("workbook", False)
    if not isinstance(workbook, bool):
        raise ConfigError("output.workbook must be true or false")
    subspace = str(table.get("bloch_subspace", "13"))
    if subspace not in ("13", "23", "12"):
        raise ConfigError(f"output.bloch_subspace must be 13, 23 or 12, got {subspace!r}")
    run_kwargs = {
        "snapshot_times": tuple(t * US for t in _numbers(table.get("snapshots", []), "output.snapshots")),
        "bloch_detunings": tuple(d * KHZ for d in _numbers(table.get("bloch_detunings", []),
                                                           "output.bloch_detunings")),
    }
    return OutputSpec(workbook=workbook, bloch_subspace=subspace), run_kwargs


def parse_config(data: dict, source: str = "<memory>") -> SimulationConfig:
    """
    Turn a parsed TOML document into a validated SimulationConfig.

    Raises:
        ConfigError: On any unknown key or invalid value
    """
    _reject_unknown(data, SECTIONS, "top level")
    if "protocol" not in data:
        raise ConfigError("Config needs a [protocol] section")
    try:
        sequence = _parse_protocol(_section(data, "protocol"))
        ensemble, populations = _parse_ensemble(_section(data, "ensemble"))
        rates, mode = _parse_rates(_section(data, "rates"))
        numerics = _parse_numerics(_section(data, "numerics"))
        output, output_kwargs = _parse_output(_section(data, "output"))
        scan = _parse_scan(_section(data, "scan"))
        run_config = RunConfig(sequence=sequence, ensemble=ensemble, rates=rates,
                               initial_populations=populations, relaxation_mode=mode,
                               **numerics, **output_kwargs)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    return SimulationConfig(run=run_config, scan=scan, output=output, source=source)
