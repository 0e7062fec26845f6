import os
from dataclasses import dataclass
from pathlib import Path

from dotenv import load_dotenv

# Settings cache
_settings_cache = {
    'settings': None
}


@dataclass(frozen=True)
class Settings:
    workers: int = 1
    out_dir: Path = Path("output")
    log_level: str = "INFO"


def get_settings(refresh: bool = False) -> Settings:
    """
    Read environment defaults for the command line tools.

    Values come from the process environment, falling back to a local .env
    file. The result is cached; pass refresh=True to re-read.

    Returns:
        Settings with workers, out_dir and log_level

    Raises:
        ValueError: If ECHOSIM_WORKERS is not a positive integer
    """
    if _settings_cache['settings'] is not None and not refresh:
        return _settings_cache['settings']

    load_dotenv()
    raw_workers = os.getenv("ECHOSIM_WORKERS", "1")
    try:
        workers = int(raw_workers)
    except ValueError:
        raise ValueError(f"ECHOSIM_WORKERS must be a positive integer, got {raw_workers!r}")
    if workers < 1:
        raise ValueError(f"ECHOSIM_WORKERS must be a positive integer, got {workers}")

    settings = Settings(
        workers=workers,
        out_dir=Path(os.getenv("ECHOSIM_OUT_DIR", "output")),
        log_level=os.getenv("ECHOSIM_LOG_LEVEL", "INFO").upper(),
    )
    _settings_cache['settings'] = settings
    return settings
