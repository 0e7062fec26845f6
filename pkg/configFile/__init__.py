# TOML run/scan configs and the bundled presets
from .config_file import (
    PRESET_DIR,
    ScanSpec,
    OutputSpec,
    SimulationConfig,
    list_presets,
    resolve_config_path,
    load_config,
    parse_config
)

__all__ = [
    'PRESET_DIR',
    'ScanSpec',
    'OutputSpec',
    'SimulationConfig',
    'list_presets',
    'resolve_config_path',
    'load_config',
    'parse_config'
]
