"""Command-line entry point: ``fracnls <experiment> [--config PATH] [--out DIR] ...``."""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .errors import ConfigError, NonFiniteError, ParameterError, PicardDivergenceError
from .experiments.config import default_config, load_config, to_toml
from .experiments.plotting import render
from .experiments.registry import EXPERIMENTS, run
from .experiments.report import FAIL, INCONCLUSIVE

EXIT = {"pass": 0, "error": 1, FAIL: 2, INCONCLUSIVE: 3}

log = logging.getLogger("fracnls")


def list_experiments(as_json: bool = False) -> str:
    """Experiment kinds in registry order with their anchors."""
    rows = [{"kind": e.kind, "anchor": e.anchor, "description": e.description} for e in EXPERIMENTS.values()]
    if as_json:
        return json.dumps(rows, indent=2)
    width = max(len(r["kind"]) for r in rows)
    return "\n".join(f"{r['kind']:<{width}}  {r['anchor']}: {r['description']}" for r in rows)


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _write_manifest(out: Path, manifest: dict) -> Path:
    path = out / "manifest.json"
    tmp = out / ".manifest.json.tmp"
    tmp.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    os.replace(tmp, path)
    return path


def run_experiment(kind: str, config_path=None, out_dir=None, seed: int | None = None, jobs: int = 1) -> tuple[int, dict]:
    """Run one experiment and write its outputs; returns ``(exit code, summary)``."""
    started = _now()
    if config_path is not None:
        config = load_config(config_path, kind=kind, seed=seed)
    else:
        config = default_config(kind, seed=0 if seed is None else seed)
    out = Path(out_dir) if out_dir is not None else Path("runs") / f"{kind}-{config.hash[:12]}"
    out.mkdir(parents=True, exist_ok=True)
    log.info("running %s (config %s, seed %d) into %s", kind, config.hash[:12], config.seed, out)
    report = run(config, jobs=jobs)
    files = report.write(out)
    (out / "config.toml").write_text(to_toml(config.document))
    files["config.toml"] = hashlib.sha256((out / "config.toml").read_bytes()).hexdigest()
    for path in render(report, out / "figures"):
        files[f"figures/{path.name}"] = hashlib.sha256(path.read_bytes()).hexdigest()
    summary = report.summary()
    _write_manifest(out, {
        "kind": kind,
        "config_hash": config.hash,
        "seed": config.seed,
        "version": __version__,
        "started": started,
        "finished": _now(),
        "status": report.status,
        "jobs": jobs,
        "files": dict(sorted(files.items())),
    })
    return EXIT[report.status], summary


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fracnls", description="Fractional Hartree experiments with randomized data.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for e in EXPERIMENTS.values():
        p = sub.add_parser(e.kind, help=e.description)
        p.add_argument("--config", type=Path, help="TOML config; defaults for this kind when omitted")
        p.add_argument("--out", type=Path, help="output directory (default runs/<kind>-<config hash>)")
        p.add_argument("--seed", type=int, help="master seed, overrides the config")
        p.add_argument("--jobs", type=int, default=1, help="worker processes; results do not depend on it")
        p.add_argument("--json", action="store_true", help="print the summary as JSON")
        p.add_argument("-v", "--verbose", action="store_true")
    p = sub.add_parser("list", help="list experiment kinds")
    p.add_argument("--json", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list":
        print(list_experiments(args.json))
        return 0
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.jobs < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return EXIT["error"]
    if args.seed is not None and not 0 <= args.seed < 2**64:
        print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return EXIT["error"]
    try:
        code, summary = run_experiment(args.command, args.config, args.out, args.seed, args.jobs)
    except (ConfigError, ParameterError, PicardDivergenceError, NonFiniteError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT["error"]
    except Exception as exc:  # unexpected: still a clean exit code
        log.debug("traceback", exc_info=True)
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT["error"]
    if args.json:
        print(json.dumps(summary, indent=2, sort_keys=True, default=str))
    else:
        print(f"{args.command}: {summary['status']}")
        for name, v in summary["verdicts"].items():
            print(f"  {name}: {v}")
        for note in summary.get("notes", []):
            print(f"  note: {note}")
    return code


if __name__ == "__main__":
    sys.exit(main())
