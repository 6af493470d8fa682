"""Command-line front end: ``quasilab {audit,transform,phi,solve,pipeline,sweep} --config FILE``.

Exit codes: 0 success, 1 domain or verdict failure, 2 usage or parse failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .config import ConfigError, RunConfig, expand_sweep, load_config
from .pipeline import dump_json, run, sha256_file

log = logging.getLogger("quasilab")

COMMANDS = ("audit", "transform", "phi", "solve", "pipeline", "sweep")


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="quasilab", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, type=Path, help="sectioned key=value run file")
    p.add_argument("--out", type=Path, default=None, help="output directory (overrides [output] directory)")
    p.add_argument("--jobs", type=int, default=1, help="parallel runs for sweep")
    p.add_argument("--seedless", action="store_true", help="accepted for compatibility; nothing is random")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _one(args: tuple[str, RunConfig, str]) -> int:
    command, cfg, out = args
    code, _ = run(command, cfg, Path(out))
    return code


def cmd_single(command: str, cfg: RunConfig, out: Path) -> int:
    code, st = run(command, cfg, out)
    status = st.report["status"]
    msg = f"{command}: {status}"
    if st.report.get("failed_stage"):
        msg += f" at stage {st.report['failed_stage']} ({st.report.get('error')})"
    print(msg)
    return code


def cmd_sweep(base: RunConfig, axes: dict[str, list], out: Path, jobs: int) -> int:
    runs = expand_sweep(base, axes)
    out.mkdir(parents=True, exist_ok=True)
    tasks = [("pipeline", cfg, str(out / f"run_{i:03d}")) for i, (_, cfg) in enumerate(runs)]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            codes = list(pool.map(_one, tasks))
    else:
        codes = [_one(t) for t in tasks]
    # the index is written once, after all runs, in run order
    index = []
    for (params, _), (_, _, rdir), code in zip(runs, tasks, codes):
        rdir = Path(rdir)
        entry = {"run": rdir.name, "params": params, "exit_code": code,
                 "manifest_sha256": sha256_file(rdir / "MANIFEST.json")}
        index.append(entry)
        print(f"{rdir.name} {params} exit={code}")
    dump_json(out / "index.json", {"axes": axes, "runs": index})
    return 0 if all(c == 0 for c in codes) else 1


def main(argv: list[str] | None = None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse usage errors exit with 2 already
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        base, axes = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if args.jobs < 1:
        print("--jobs must be >= 1", file=sys.stderr)
        return 2
    out = args.out or Path(base.output.directory)
    if args.command == "sweep":
        return cmd_sweep(base, axes, out, args.jobs)
    if axes:
        print(f"config declares sweep axes {sorted(axes)}; use the sweep command", file=sys.stderr)
        return 2
    return cmd_single(args.command, base, out)


if __name__ == "__main__":
    sys.exit(main())
