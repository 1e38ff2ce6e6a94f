"""Command-line interface.

Machine output goes to stdout, diagnostics to stderr.  Exit codes: 0 success,
1 validation failure, 2 usage error, 3 I/O error.  The store root comes from
--root or the ONTONOTE_ROOT environment variable.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

from . import ontology as onto, query as qmod, reports, wire
from .analytics import fmt4
from .errors import OntoNoteError, ValidationError
from .store import Store

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_USAGE = 2
EXIT_IO = 3


class UsageError(Exception):
    """Bad invocation (missing root, malformed --addr), not a data problem."""


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ontonote",
        description="Ontology-guided annotation activities: check and format "
        "taxonomies, move activity archives, run queries, build reports, and "
        "serve the HTTP API.",
    )
    parser.add_argument(
        "--root",
        default=None,
        help="store root directory (default: $ONTONOTE_ROOT)",
    )
    parser.add_argument(
        "--json", action="store_true", help="emit machine-readable JSON on stdout"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_onto = sub.add_parser("ontology", help="bracket notation utilities")
    onto_sub = p_onto.add_subparsers(dest="subcommand", required=True)
    for name, helptext in (
        ("check", "parse a bracket file and report validity"),
        ("fmt", "print the canonical form of a bracket file"),
        ("metrics", "print structural metrics of a bracket file"),
    ):
        p = onto_sub.add_parser(name, help=helptext)
        p.add_argument("file", help="bracket notation file, or - for stdin")
        p.set_defaults(func={"check": cmd_check, "fmt": cmd_fmt, "metrics": cmd_metrics}[name])

    p_act = sub.add_parser("activity", help="activity archive transfer")
    act_sub = p_act.add_subparsers(dest="subcommand", required=True)
    p_export = act_sub.add_parser("export", help="write one activity as a JSON archive")
    p_export.add_argument("--activity", required=True, help="activity id")
    p_export.add_argument("--out", default=None, help="output file (default stdout)")
    p_export.set_defaults(func=cmd_export)
    p_import = act_sub.add_parser("import", help="restore an archive into the store")
    p_import.add_argument("file", help="archive file, or - for stdin")
    p_import.set_defaults(func=cmd_import)

    p_query = sub.add_parser("query", help="run annotation queries")
    query_sub = p_query.add_subparsers(dest="subcommand", required=True)
    p_run = query_sub.add_parser("run", help="filter an activity's annotations")
    p_run.add_argument("--activity", required=True, help="activity id")
    mode = p_run.add_mutually_exclusive_group(required=True)
    mode.add_argument("--q", help="query text (criteria of signed concept paths)")
    mode.add_argument("--concepts", help="comma-separated concept paths (assert all)")
    p_run.add_argument("--author", default=None, help="restrict to one author id")
    p_run.set_defaults(func=cmd_query_run)

    p_report = sub.add_parser("report", help="statistics reports")
    report_sub = p_report.add_subparsers(dest="subcommand", required=True)
    p_ra = report_sub.add_parser("activity", help="per-activity report")
    p_ra.add_argument("--activity", required=True, help="activity id")
    p_ra.add_argument("--width", type=float, default=10.0, help="histogram bin width")
    p_ra.add_argument("--level", type=float, default=0.95, help="confidence level")
    p_ra.add_argument("--out", default=None, help="directory for CSV/PNG export")
    p_ra.set_defaults(func=cmd_report_activity)
    p_rc = report_sub.add_parser("compare", help="before/after cohort comparison")
    p_rc.add_argument("--before", required=True, help="JSON map or CSV of key,value")
    p_rc.add_argument("--after", required=True, help="JSON map or CSV of key,value")
    p_rc.add_argument("--width", type=float, default=10.0, help="histogram bin width")
    p_rc.add_argument("--out", default=None, help="directory for CSV/PNG export")
    p_rc.set_defaults(func=cmd_report_compare)

    p_serve = sub.add_parser("serve", help="run the HTTP API")
    p_serve.add_argument("--addr", default="127.0.0.1:8077", help="host:port to bind")
    p_serve.set_defaults(func=cmd_serve)
    return parser


def _read_text(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    return Path(path).read_text(encoding="utf-8")


def _read_bytes(path: str) -> bytes:
    if path == "-":
        return sys.stdin.buffer.read()
    return Path(path).read_bytes()


def _store(args: argparse.Namespace) -> Store:
    root = args.root or os.environ.get("ONTONOTE_ROOT")
    if not root:
        raise UsageError("no store root: pass --root or set ONTONOTE_ROOT")
    return Store(root)


def _emit_json(obj: object) -> None:
    sys.stdout.buffer.write(wire.dump_bytes(obj))
    sys.stdout.buffer.write(b"\n")
    sys.stdout.buffer.flush()


# --- ontology commands ------------------------------------------------------------


def cmd_check(args: argparse.Namespace) -> int:
    ontology = onto.parse_bracket(_read_text(args.file))
    m = onto.metrics(ontology)
    if args.json:
        _emit_json({"ok": True, "concepts": m.concepts})
    else:
        print(f"ok concepts={m.concepts}")
    return EXIT_OK


def cmd_fmt(args: argparse.Namespace) -> int:
    ontology = onto.parse_bracket(_read_text(args.file))
    print(onto.serialize_bracket(ontology))
    return EXIT_OK


def cmd_metrics(args: argparse.Namespace) -> int:
    ontology = onto.parse_bracket(_read_text(args.file))
    m = onto.metrics(ontology)
    avg = float(m.avg_branching) if m.avg_branching is not None else None
    if args.json:
        _emit_json(
            {
                "concepts": m.concepts,
                "intermediates": m.intermediates,
                "finals": m.finals,
                "depth": m.depth,
                "avg_branching": round(avg, 4) if avg is not None else None,
            }
        )
    else:
        shown = fmt4(avg) if avg is not None else "n/a"
        print(
            f"concepts={m.concepts} intermediates={m.intermediates} "
            f"finals={m.finals} avg_branching={shown}"
        )
    return EXIT_OK


# --- activity archive commands --------------------------------------------------------


def cmd_export(args: argparse.Namespace) -> int:
    store = _store(args)
    data = store.export_archive(args.activity)
    if args.out:
        Path(args.out).write_bytes(data)
        print(f"wrote {args.out} ({len(data)} bytes)", file=sys.stderr)
    else:
        sys.stdout.buffer.write(data)
    return EXIT_OK


def cmd_import(args: argparse.Namespace) -> int:
    store = _store(args)
    activity = store.import_archive(_read_bytes(args.file))
    if args.json:
        _emit_json({"activity_id": activity.id, "title": activity.title})
    else:
        print(activity.id)
    return EXIT_OK


# --- query commands ----------------------------------------------------------------------


def cmd_query_run(args: argparse.Namespace) -> int:
    store = _store(args)
    _, activity = store.load_activity(args.activity)
    annotations = store.annotations_for_activity(args.activity, author=args.author)
    if args.q is not None:
        q = qmod.parse_query(args.q, activity.snapshot)
    else:
        picks = qmod.parse_concept_list(args.concepts, activity.snapshot)
        q = qmod.basic_to_query(qmod.BasicFilter(picks))
    matched = qmod.filter_annotations(annotations, q, activity.snapshot)
    document = wire.query_result_document(q, activity.snapshot, matched)
    # byte-identical with the HTTP endpoint: raw canonical JSON, no newline
    sys.stdout.buffer.write(wire.dump_bytes(document))
    sys.stdout.buffer.flush()
    return EXIT_OK


# --- report commands ------------------------------------------------------------------------


def _write_csv(path: Path, rows: list[list[str]]) -> None:
    with path.open("w", encoding="utf-8", newline="") as f:
        csv.writer(f).writerows(rows)


def cmd_report_activity(args: argparse.Namespace) -> int:
    store = _store(args)
    report = reports.activity_report(
        store, args.activity, width=args.width, level=args.level
    )
    _emit_json(report)
    if args.out:
        from . import figures

        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(
            json.dumps(report, ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
        )
        _write_csv(out / "counts.csv", reports.counts_rows(report["counts_per_student"]))
        _write_csv(out / "coverage_students.csv", reports.coverage_student_rows(report["coverage"]))
        _write_csv(out / "coverage_concepts.csv", reports.coverage_concept_rows(report["coverage"]))
        _write_csv(out / "proposals.csv", reports.proposal_rows(report["proposals"]))
        written = ["report.json", "counts.csv", "coverage_students.csv",
                   "coverage_concepts.csv", "proposals.csv"]
        if "histogram" in report:
            _write_csv(out / "histogram.csv", reports.histogram_rows(report["histogram"]))
            figures.save_histogram_figure(
                report["histogram"],
                out / "histogram.png",
                title=f"Annotations per student: {report['title']}",
                xlabel="annotations",
            )
            written += ["histogram.csv", "histogram.png"]
        figures.save_concept_counts_figure(
            report["coverage"],
            out / "concept_counts.png",
            title=f"Concept usage: {report['title']}",
        )
        written.append("concept_counts.png")
        print(f"wrote {', '.join(written)} to {out}", file=sys.stderr)
    return EXIT_OK


def _load_number_map(path: str) -> dict[str, float]:
    text = _read_text(path)
    stripped = text.lstrip()
    if stripped.startswith("{"):
        raw = json.loads(text)
        if not isinstance(raw, dict):
            raise ValidationError(f"{path}: expected a JSON object of numbers")
        out = {}
        for key, value in raw.items():
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise ValidationError(f"{path}: value for {key!r} is not a number")
            out[str(key)] = float(value)
        return out
    out = {}
    for row in csv.reader(text.splitlines()):
        if not row or not row[0].strip():
            continue
        try:
            value = float(row[1])
        except (IndexError, ValueError):
            if not out:  # tolerate one header row
                continue
            raise ValidationError(f"{path}: bad row {row!r}") from None
        out[row[0].strip()] = value
    if not out:
        raise ValidationError(f"{path}: no usable rows")
    return out


def cmd_report_compare(args: argparse.Namespace) -> int:
    before = _load_number_map(args.before)
    after = _load_number_map(args.after)
    report = reports.compare_report(before, after, width=args.width)
    _emit_json(report)
    if args.out:
        from . import figures

        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "compare.json").write_text(
            json.dumps(report, ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
        )
        _write_csv(out / "differences.csv", reports.differences_rows(before, after))
        _write_csv(
            out / "difference_histogram.csv",
            reports.histogram_rows(report["differences"]["histogram"]),
        )
        figures.save_histogram_figure(
            report["differences"]["histogram"],
            out / "difference_histogram.png",
            title="Paired differences (after - before)",
            xlabel="difference",
        )
        print(
            "wrote compare.json, differences.csv, difference_histogram.csv, "
            f"difference_histogram.png to {out}",
            file=sys.stderr,
        )
    return EXIT_OK


# --- serve -------------------------------------------------------------------------------------


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    host, _, port_text = args.addr.rpartition(":")
    if not host or not port_text.isdigit():
        raise UsageError(f"--addr must be host:port, got {args.addr!r}")
    root = args.root or os.environ.get("ONTONOTE_ROOT")
    if not root:
        raise UsageError("no store root: pass --root or set ONTONOTE_ROOT")
    app = create_app(root)
    uvicorn.run(app, host=host, port=int(port_text), log_level="warning")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OntoNoteError as exc:
        print(f"error: {exc} [{exc.code}]", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
