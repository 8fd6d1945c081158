"""Command-line front end: ``boxlogic build | verify | export``.

Exit codes: 0 success, 1 verification failure, 2 usage error, 3 resource limit.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .boxworld import BoxShape
from .logic import LogicPoset, build_poset, table1_csv, to_dot
from .questions import ResourceLimitExceeded, generate_logic
from .report import CHECKS, Context, run_checks
from .states import enumerate_two_valued

log = logging.getLogger("boxlogic")

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_LIMIT = 0, 1, 2, 3
FORMATS = ("json", "dot", "csv", "png")
EXPORTS = ("table1", "hasse", "states", "report", "logic")


@dataclass
class RunConfig:
    shape: BoxShape
    out_dir: Path
    formats: tuple
    workers: int = 1
    max_questions: Optional[int] = None
    max_lp_calls: Optional[int] = None
    labels: bool = True


def _positive(text: str) -> int:
    v = int(text)
    if v <= 0:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _formats(text: str) -> tuple:
    items = tuple(t.strip() for t in text.split(",") if t.strip())
    bad = [t for t in items if t not in FORMATS]
    if bad or not items:
        raise argparse.ArgumentTypeError(f"formats must be a comma list of {', '.join(FORMATS)}")
    return items


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def _dump(data) -> str:
    return json.dumps(data, indent=1, sort_keys=False) + "\n"


def _states_json(poset: LogicPoset) -> dict:
    states = enumerate_two_valued(poset.questions.algebra.polytope)
    return {"kind": "two-valued", "count": len(states), "states": [s.to_json() for s in states]}


def _build(config: RunConfig) -> LogicPoset:
    qs = generate_logic(config.shape, workers=config.workers, max_questions=config.max_questions,
                        max_lp_calls=config.max_lp_calls)
    return build_poset(qs)


def _load_or_build(config: RunConfig) -> LogicPoset:
    path = config.out_dir / "logic.json"
    if path.exists():
        data = json.loads(path.read_text(encoding="utf-8"))
        if data.get("shape") == [config.shape.inputs, config.shape.outputs]:
            log.info("using %s", path)
            return LogicPoset.from_json(data)
    return _build(config)


def _write_artifacts(poset: LogicPoset, config: RunConfig) -> list[Path]:
    out = config.out_dir
    written = []
    if "json" in config.formats:
        _write(out / "logic.json", _dump(poset.to_json()))
        _write(out / "states.json", _dump(_states_json(poset)))
        written += [out / "logic.json", out / "states.json"]
    if "dot" in config.formats:
        _write(out / "hasse.dot", to_dot(poset, labels=config.labels))
        written.append(out / "hasse.dot")
    if "csv" in config.formats:
        _write(out / "table1.csv", table1_csv(poset))
        written.append(out / "table1.csv")
    if "png" in config.formats:
        from .plotting import render_hasse

        render_hasse(poset, out / "hasse.png", labels=config.labels)
        written.append(out / "hasse.png")
    return written


def cmd_build(config: RunConfig) -> int:
    try:
        poset = _build(config)
    except ResourceLimitExceeded as exc:
        partial = exc.partial
        payload = {
            "shape": [config.shape.inputs, config.shape.outputs],
            "complete": False,
            "message": str(exc),
            "passes": exc.passes,
            "element_count": len(partial) if partial is not None else 0,
            "elements": [q.to_json() for q in partial] if partial is not None else [],
        }
        _write(config.out_dir / "logic.partial.json", _dump(payload))
        print(f"resource limit reached: {exc}; partial output in {config.out_dir / 'logic.partial.json'}",
              file=sys.stderr)
        return EXIT_LIMIT
    for path in _write_artifacts(poset, config):
        print(path)
    print(f"{len(poset)} elements, {len(poset.covers)} covering pairs, {len(poset.atoms)} atoms")
    return EXIT_OK


def cmd_verify(config: RunConfig, only: Optional[list] = None) -> int:
    try:
        ctx = Context(config.shape, _load_or_build(config), workers=config.workers)
    except ResourceLimitExceeded as exc:
        print(f"resource limit reached: {exc}", file=sys.stderr)
        return EXIT_LIMIT
    report = run_checks(ctx, only)
    _write(config.out_dir / "report.json", _dump(report.to_json()))
    for line in report.summary_lines():
        print(line)
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_export(config: RunConfig, what: str, output: Optional[Path] = None) -> int:
    if what == "report":
        path = config.out_dir / "report.json"
        if path.exists():
            text = path.read_text(encoding="utf-8")
        else:
            report = run_checks(Context(config.shape, _load_or_build(config), workers=config.workers))
            text = _dump(report.to_json())
    else:
        try:
            poset = _load_or_build(config)
        except ResourceLimitExceeded as exc:
            print(f"resource limit reached: {exc}", file=sys.stderr)
            return EXIT_LIMIT
        if what == "table1":
            text = table1_csv(poset)
        elif what == "hasse":
            text = to_dot(poset, labels=config.labels)
        elif what == "states":
            text = _dump(_states_json(poset))
        else:
            text = _dump(poset.to_json())
    if output is None:
        sys.stdout.write(text)
    else:
        _write(output, text)
    return EXIT_OK


def make_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--inputs", type=_positive, default=2, help="measurement settings per party (n)")
    common.add_argument("--outputs", type=int, default=2, help="outcomes per measurement (d >= 2)")
    common.add_argument("--out-dir", type=Path, default=Path("out"))
    common.add_argument("--format", type=_formats, default=FORMATS, help="comma list of json,dot,csv,png")
    common.add_argument("--workers", type=_positive, default=1)
    common.add_argument("--max-questions", type=_positive)
    common.add_argument("--max-lp-calls", type=_positive)
    common.add_argument("--no-labels", action="store_true", help="omit node labels in Hasse outputs")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="boxlogic", description="Logic of two-party box worlds, computed exactly.")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("build", parents=[common], help="generate the logic and write its files")
    v = sub.add_parser("verify", parents=[common], help="run the reproduction checks")
    v.add_argument("--only", help=f"comma list of checks: {', '.join(CHECKS)}")
    e = sub.add_parser("export", parents=[common], help="print one artifact")
    e.add_argument("what", choices=EXPORTS)
    e.add_argument("--output", type=Path, help="write here instead of stdout")
    return p


def main(argv: Optional[list] = None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    if args.outputs < 2:
        parser.error("--outputs must be at least 2")
    config = RunConfig(BoxShape(args.inputs, args.outputs), args.out_dir, args.format, args.workers,
                       args.max_questions, args.max_lp_calls, not args.no_labels)
    if args.command == "build":
        return cmd_build(config)
    if args.command == "verify":
        only = [t.strip() for t in args.only.split(",")] if args.only else None
        if only:
            unknown = [t for t in only if t not in CHECKS]
            if unknown:
                parser.error(f"unknown check(s): {', '.join(unknown)}")
        return cmd_verify(config, only)
    return cmd_export(config, args.what, args.output)


if __name__ == "__main__":
    sys.exit(main())
