"""Command line driver: ``regfred verify`` and ``regfred describe``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from datetime import datetime, timezone
from pathlib import Path

from regfred import __version__
from regfred.config import SUITES, ConfigError, load_config, parse_family_spec
from regfred.families import DEFAULT_LEVELS
from regfred.suites import ANCHORS, RUNNERS, ReportRecord

log = logging.getLogger("regfred")

CSV_COLUMNS = ("suite", "case_id", "anchor", "measured", "budget", "pass", "seconds")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _fmt(x: float) -> str:
    return f"{x:.10g}"


def csv_body(records: list[ReportRecord], timings: bool = False) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in records:
        w.writerow([r.suite, r.case_id, r.anchor, _fmt(r.measured), _fmt(r.budget),
                    "pass" if r.passed else "fail", f"{r.seconds:.6f}" if timings else ""])
    return buf.getvalue()


def write_reports(out_dir: Path, suite: str, records: list[ReportRecord], cfg) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    stamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
    if "csv" in cfg.formats:
        header = f"# regfred {__version__} suite={suite} seed={cfg.seed} generated={stamp}\n"
        (out_dir / f"{suite}.csv").write_text(header + csv_body(records, cfg.timings))
    if "json" in cfg.formats:
        failures = [r.case_id for r in records if not r.passed]
        summary = {
            "suite": suite,
            "seed": cfg.seed,
            "generated": stamp,
            "cases": len(records),
            "passed": len(records) - len(failures),
            "failures": failures,
            "anchors": sorted({r.anchor for r in records}),
            "seconds": round(sum(r.seconds for r in records), 3),
        }
        (out_dir / f"{suite}.json").write_text(json.dumps(summary, indent=2) + "\n")


def cmd_verify(args) -> int:
    try:
        cfg = load_config(args.config)
        if args.suite:
            if args.suite not in SUITES + ("all",):
                raise ConfigError(f"unknown suite {args.suite!r}")
            cfg = replace(cfg, suite=args.suite)
        if args.seed is not None:
            cfg = replace(cfg, seed=args.seed)
        if args.out:
            cfg = replace(cfg, out_dir=args.out)
        if args.timings:
            cfg = replace(cfg, timings=True)
        for spec in cfg.families:
            spec.build(cfg.levels)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out_dir = Path(cfg.out_dir)
    suites = cfg.suites
    with ThreadPoolExecutor(max_workers=max(1, args.workers)) as pool:
        futures = {s: pool.submit(RUNNERS[s], cfg) for s in suites}
        results = {}
        for s in suites:
            try:
                results[s] = futures[s].result()
            except Exception as exc:  # a crashed suite is a failure, not a config error
                log.exception("suite %s crashed", s)
                print(f"FAIL {s} crashed: {exc}", file=sys.stderr)
                results[s] = None
    code = EXIT_OK
    for s in suites:
        records = results[s]
        if records is None:
            code = EXIT_FAIL
            continue
        write_reports(out_dir, s, records, cfg)
        failed = [r for r in records if not r.passed]
        print(f"{s}: {len(records) - len(failed)}/{len(records)} passed")
        for r in failed:
            print(f"FAIL {r.suite} {r.case_id} ({r.anchor}) measured={_fmt(r.measured)} budget={_fmt(r.budget)}",
                  file=sys.stderr)
        if failed:
            code = EXIT_FAIL
    return code


_DESCRIPTIONS = {
    "diagonal": ("cayley-criterion", "compact-resolvent", "bounded-stability", "relbound-stability",
                 "t-compactness", "compact-stability", "gap-openness", "path-continuity", "path-fredholm"),
    "banded": ("cayley-criterion", "compact-resolvent", "bounded-stability", "relbound-stability",
               "t-compactness", "compact-stability", "gap-openness", "path-continuity", "path-fredholm"),
    "shift": ("compact-stability", "bounded-stability", "doubling-fredholm", "unitary-invariance"),
    "custom-matrix-file": ("cayley-criterion", "compact-stability", "bounded-stability", "doubling-fredholm"),
}


def describe(text: str, levels=DEFAULT_LEVELS) -> str:
    spec = parse_family_spec(text)
    fam = spec.build(levels if spec.kind != "custom-matrix-file" else None)
    lines = [f"family: {fam.label}", f"kind: {spec.kind}"]
    if spec.params:
        lines.append("params: " + ", ".join(f"{k}={v}" for k, v in sorted(spec.params.items())))
    lines.append("levels: " + ", ".join(str(n) for n in fam.levels))
    if spec.kind == "shift":
        lines.append("expectation: Fredholm with kernel 0, cokernel 1, index -1 (cokernel vector e_1 "
                     "persists across levels; the edge kernel vector e_n does not)")
    lines.append("exercised by the default suites:")
    for anchor in _DESCRIPTIONS[spec.kind]:
        lines.append(f"  {anchor}: {ANCHORS[anchor]}")
    return "\n".join(lines)


def cmd_describe(args) -> int:
    try:
        levels = tuple(args.levels) if args.levels else DEFAULT_LEVELS
        print(describe(args.family, levels))
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="regfred", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    v = sub.add_parser("verify", help="run verification suites from a JSON config")
    v.add_argument("--config", required=True)
    v.add_argument("--suite", help=f"one of {', '.join(SUITES + ('all',))}")
    v.add_argument("--seed", type=int)
    v.add_argument("--out", help="report directory")
    v.add_argument("--workers", type=int, default=1)
    v.add_argument("--timings", action="store_true", help="fill the seconds column with wall times")
    v.set_defaults(func=cmd_verify)
    d = sub.add_parser("describe", help="summarize a family description")
    d.add_argument("--family", required=True, help="e.g. 'diagonal(k)', 'shift', 'diagonal:profile=k,shift=10'")
    d.add_argument("--levels", type=int, nargs="+")
    d.set_defaults(func=cmd_describe)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
