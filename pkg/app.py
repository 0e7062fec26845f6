import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import pandas as pd

# Add project root to Python path
project_root = Path(__file__).parent
sys.path.insert(0, str(project_root))

from analysis.echoes import bloch_trajectory
from analysis.fitting import EXP, EXP_OFFSET, MODELS, fit_decay
from configFile.config_file import SimulationConfig, list_presets, load_config
from engine.runner import measure_echo, run
from engine.scans import B2_AREA, SCAN_COLUMNS, STORAGE, scan_b2_area, scan_storage
from protocol.sequences import expected_echo_time
from settings.environment import get_settings
from utils.errors import PropagationError, StepSizeError
from utils.io_helpers import safe_name, write_json, write_table, write_workbook
from utils.logs import configure_logging

log = logging.getLogger("echosim")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

SIGNAL_COLUMNS = ["t", "re_P", "im_P", "abs_P", "rho11", "rho22", "rho33"]
SPECTRA_COLUMNS = ["delta", "im_rho13", "rho33", "rho11", "rho22"]
BLOCH_COLUMNS = ["t", "u", "v", "w", "low_confidence"]
FIT_COLUMNS = ["model", "A", "tau", "C", "rms_residual", "converged", "message"]

MODEL_NAMES = {"exp": EXP, "exp_offset": EXP_OFFSET}
DECAY_X_COLUMNS = ("t", "storage", "axis")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="echosim",
        description="Three-level photon echo simulator: locked, phase locked, two- and three-pulse echoes.",
    )
    parser.add_argument("--workers", type=int, default=None, help="worker processes (default: ECHOSIM_WORKERS or 1)")
    parser.add_argument("--out-dir", type=Path, default=None, help="output directory (default: ECHOSIM_OUT_DIR)")
    parser.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING or ERROR")
    commands = parser.add_subparsers(dest="command", required=True)

    simulate = commands.add_parser("simulate", help="run one pulse sequence over the ensemble")
    simulate.add_argument("config", help=f"TOML file or preset name ({', '.join(list_presets())})")

    scan = commands.add_parser("scan", help="storage-time or B2-area scan")
    scan.add_argument("config", help="TOML file or preset name with a [scan] section")

    fit = commands.add_parser("fit", help="fit an echo decay from a CSV file")
    fit.add_argument("csv", type=Path, help="CSV with t and amplitude columns, or a scan.csv")
    fit.add_argument("--model", choices=sorted(MODEL_NAMES), default="exp_offset")
    fit.add_argument("--output", type=Path, default=None, help="also write the fit as JSON here")
    return parser


def _with_workers(config: SimulationConfig, workers: int) -> SimulationConfig:
    return replace(config, run=replace(config.run, worker_count=workers))


def _simulate_outputs(config: SimulationConfig, out_dir: Path) -> list:
    """Run and collect every output in memory; nothing is written here."""
    result = run(config.run)
    echo = measure_echo(result)
    sequence = config.run.sequence

    echo_payload = echo.to_dict()
    echo_payload.update({
        "protocol": sequence.protocol,
        "expected_echo_time": expected_echo_time(sequence) if sequence.pulses else None,
        "config": config.source,
    })
    outputs = [
        ("table", out_dir / "signal.csv", result.signal.to_frame(), SIGNAL_COLUMNS),
        ("json", out_dir / "echo.json", echo_payload, None),
    ]
    for snapshot in result.snapshots:
        name = f"spectra_{safe_name(round(snapshot.t * 1e6, 9))}.csv"
        outputs.append(("table", out_dir / name, snapshot.to_frame(), SPECTRA_COLUMNS))
    for history in result.histories:
        points = bloch_trajectory(history, config.output.bloch_subspace)
        frame = pd.DataFrame([vars(p) for p in points])
        name = f"bloch_{safe_name(round(history.delta_opt / 1e3, 9))}.csv"
        outputs.append(("table", out_dir / name, frame, BLOCH_COLUMNS))
    return outputs


def _fit_report(scan_result, wanted: bool) -> dict:
    report = {"warnings": list(scan_result.warnings)}
    if scan_result.kind != STORAGE or not wanted:
        report["skipped"] = f"{scan_result.kind} scans are not fitted"
        return report
    points = scan_result.points()
    for model in MODELS:
        try:
            report[model] = fit_decay(points, model).to_dict()
        except ValueError as e:
            log.warning("%s fit skipped: %s", model, e)
            report[model] = {"error": str(e)}
    return report


def _fit_rows(report: dict) -> list:
    rows = []
    for model in MODELS:
        fit = report.get(model)
        if not fit or "params" not in fit:
            continue
        rows.append({
            "model": model,
            "A": fit["params"].get("A"),
            "tau": fit["params"].get("tau"),
            "C": fit["params"].get("C"),
            "rms_residual": fit["rms_residual"],
            "converged": fit["converged"],
            "message": fit["message"],
        })
    return rows


def _scan_outputs(config: SimulationConfig, out_dir: Path) -> list:
    if config.scan is None:
        raise ValueError(f"{config.source} has no [scan] section")
    if config.scan.kind == B2_AREA:
        scan_result = scan_b2_area(config.run, config.scan.values)
    else:
        scan_result = scan_storage(config.run, config.scan.values)
    frame = scan_result.to_frame()
    report = _fit_report(scan_result, config.scan.fit)
    outputs = [
        ("table", out_dir / "scan.csv", frame, SCAN_COLUMNS),
        ("json", out_dir / "fit.json", report, None),
    ]
    if config.output.workbook:
        sheets = {"Scan": frame, "Fits": pd.DataFrame(_fit_rows(report), columns=FIT_COLUMNS)}
        outputs.append(("workbook", out_dir / "scan.xlsx", sheets, None))
    return outputs


def _check_out_dir(out_dir: Path) -> None:
    if out_dir.exists() and not out_dir.is_dir():
        raise ValueError(f"Output path {out_dir} exists and is not a directory")


def _write_outputs(outputs: list) -> None:
    """Write every output; if one fails, remove the files already written and re-raise."""
    written = []
    try:
        for kind, path, payload, columns in outputs:
            if kind == "table":
                write_table(payload, path, columns)
            elif kind == "json":
                write_json(payload, path)
            else:
                write_workbook(payload, path)
            written.append(path)
    except OSError:
        for path in written:
            path.unlink(missing_ok=True)
        raise


def _read_decay_points(path: Path) -> list:
    """(x, amplitude) pairs; x is 't', else the storage time of a scan.csv, else its axis."""
    frame = pd.read_csv(path, float_precision="round_trip")
    candidates = [c for c in DECAY_X_COLUMNS if c in frame.columns and frame[c].notna().any()]
    if not candidates or "amplitude" not in frame.columns:
        raise ValueError(f"{path} needs 't' (or 'storage' / 'axis') and 'amplitude' columns")
    frame = frame[[candidates[0], "amplitude"]].dropna()
    return list(frame.itertuples(index=False, name=None))


def cmd_fit(args) -> int:
    try:
        points = _read_decay_points(args.csv)
        fit = fit_decay(points, MODEL_NAMES[args.model])
    except (OSError, ValueError) as e:
        log.error("Cannot fit %s: %s", args.csv, e)
        return EXIT_CONFIG
    print(json.dumps(fit.to_dict(), indent=2, sort_keys=True, default=str))
    if args.output is not None:
        try:
            write_json(fit.to_dict(), args.output)
        except OSError as e:
            log.error("Cannot write %s: %s", args.output, e)
            return EXIT_CONFIG
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    try:
        settings = get_settings()
    except ValueError as e:
        configure_logging(args.log_level or "INFO")
        log.error("Bad environment settings: %s", e)
        return EXIT_CONFIG
    configure_logging(args.log_level or settings.log_level)

    if args.command == "fit":
        return cmd_fit(args)

    workers = args.workers if args.workers is not None else settings.workers
    out_dir = args.out_dir if args.out_dir is not None else settings.out_dir
    if workers < 1:
        log.error("--workers must be >= 1, got %d", workers)
        return EXIT_CONFIG

    log.info("[STEP 1] Loading %s", args.config)
    try:
        config = _with_workers(load_config(args.config), workers)
        if args.command == "scan" and config.scan is None:
            raise ValueError(f"{config.source} has no [scan] section")
        _check_out_dir(out_dir)
    except ValueError as e:
        log.error("Configuration error: %s", e)
        return EXIT_CONFIG

    log.info("[STEP 2] Running %s with %d worker(s)", args.command, workers)
    try:
        if args.command == "simulate":
            outputs = _simulate_outputs(config, out_dir)
        else:
            outputs = _scan_outputs(config, out_dir)
    except PropagationError as e:
        log.error("Numeric failure at delta_opt=%.6g Hz, delta_spin=%.6g Hz: %s", e.delta_opt, e.delta_spin, e)
        return EXIT_NUMERIC
    except StepSizeError as e:
        log.error("Numerics settings cannot resolve the sequence: %s", e)
        return EXIT_CONFIG
    except ValueError as e:
        log.error("Configuration error: %s", e)
        return EXIT_CONFIG

    log.info("[STEP 3] Writing %d file(s) to %s", len(outputs), out_dir)
    try:
        _write_outputs(outputs)
    except OSError as e:
        log.error("Cannot write outputs to %s: %s", out_dir, e)
        return EXIT_CONFIG
    log.info("Done")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
