"""Command-line front end: ``fracspec <command> --config FILE``.

Commands write machine-readable reports into the output directory and exit
with 0 when every check passes, 1 when a check fails and 2 on configuration
or validation errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig, load_config
from .errors import OrderingError, ValidationError
from .pipeline import run_accretivity, run_identities, run_range, run_sandwich

__all__ = ["main", "build_parser"]

log = logging.getLogger("fracspec")

COMMANDS = ("identities", "accretivity", "range", "sandwich", "report")
_RUNNERS = {
    "identities": run_identities,
    "accretivity": run_accretivity,
    "range": run_range,
    "sandwich": run_sandwich,
}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, complex):
        return [_jsonable(obj.real), _jsonable(obj.imag)]
    return obj


def _write_json(path: Path, payload: dict) -> None:
    text = json.dumps(_jsonable(payload), sort_keys=True, indent=2, allow_nan=False)
    path.write_text(text + "\n", encoding="utf-8", newline="\n")


def _write_csv(path: Path, header: list[str], rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        cells = []
        for v in row:
            if isinstance(v, (bool, np.bool_)):
                cells.append("true" if v else "false")
            elif isinstance(v, (int, np.integer)):
                cells.append(str(int(v)))
            else:
                cells.append("%.17g" % float(v))
        lines.append(",".join(cells))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def _envelope(cfg: RunConfig, result: dict) -> dict:
    body = {k: v for k, v in result.items() if k not in ("samples", "report")}
    body["config_hash"] = cfg.config_hash
    body["seed"] = cfg.seed
    body["check_ids"] = [c["id"] for c in result["checks"]]
    body["all_pass"] = all(c["pass"] for c in result["checks"])
    return body


def _emit(command: str, cfg: RunConfig, result: dict, out: Path) -> list[str]:
    if command == "identities":
        _write_json(out / "identities.json", _envelope(cfg, result))
        return ["identities.json"]
    if command == "accretivity":
        _write_json(out / "accretivity.json", _envelope(cfg, result))
        return ["accretivity.json"]
    if command == "range":
        pts = result["samples"]
        _write_csv(out / "range.csv", ["re", "im"], ((z.real, z.imag) for z in pts))
        _write_json(out / "sector.json", _envelope(cfg, result))
        return ["range.csv", "sector.json"]
    rep = result["report"]
    _write_csv(out / "eigenvalues.csv", ["n", "lambda_L0", "lambda_H", "lambda_L1", "pass"], rep.rows())
    body = _envelope(cfg, result)
    body["first_failure"] = rep.first_failure
    body["rtol"] = rep.rtol
    _write_json(out / "sandwich.json", body)
    return ["eigenvalues.csv", "sandwich.json"]


def _threads() -> int:
    raw = os.environ.get("FRACSPEC_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fracspec", description="Fractional operator identities and spectral checks.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="JSON run configuration")
    parser.add_argument("--out", default=None, help="output directory (default: config 'output' or ./out)")
    parser.add_argument("--seed", type=int, default=None, help="override the configured RNG seed")
    parser.add_argument("--quiet", action="store_true", help="print nothing on success")
    return parser


def run(command: str, cfg: RunConfig, out: Path) -> tuple[int, list[dict]]:
    names = list(_RUNNERS) if command == "report" else [command]
    out.mkdir(parents=True, exist_ok=True)
    workers = min(_threads(), len(names))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda n: _RUNNERS[n](cfg), names))
    else:
        results = [_RUNNERS[n](cfg) for n in names]
    checks = []
    for name, result in zip(names, results):
        _emit(name, cfg, result, out)
        checks.extend(result["checks"])
    if command == "report":
        summary = {
            "config_hash": cfg.config_hash,
            "seed": cfg.seed,
            "check_ids": [c["id"] for c in checks],
            "checks": checks,
            "all_pass": all(c["pass"] for c in checks),
        }
        _write_json(out / "report.json", summary)
    return (0 if all(c["pass"] for c in checks) else 1), checks


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(message)s")
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            if not 0 <= args.seed < 2**64:
                raise ConfigError("--seed must be an unsigned 64-bit integer")
            cfg = cfg.with_seed(args.seed)
        out = Path(args.out or cfg.output or "out")
        code, checks = run(args.command, cfg, out)
    except (ConfigError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OrderingError as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return 1
    for c in checks:
        line = f"{'PASS' if c['pass'] else 'FAIL'} {c['id']}: value={c['value']:.6g} threshold={c['threshold']:.6g}"
        if c["pass"]:
            log.info(line)
        else:
            print(line, file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
