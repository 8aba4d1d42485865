"""Command-line interface.

Subcommands:

    run             interactive (or scripted) troubleshooting session
    lint            static checks on a knowledge-base file
    export-dot      render one tree as Graphviz DOT
    fmea-report     per-mode severity/occurrence/RPN table
    replay          reconstruct a session from an event log
    potential-grid  sample the trapping potential as CSV
    serve           run the HTTP service

The knowledge base defaults to the bundled one; the ITRIAGE_KB
environment variable overrides it and the --kb flag wins over both.
Exit codes: 0 success, 1 errors (lint findings, bad input files),
2 usage errors.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import fmea
from .bundled import default_kb_path
from .dsl import ParseFailure, parse_file
from .flowchart import export_flowchart
from .lint import LintDiagnostic, has_errors, lint
from .model import KnowledgeBase, NodeKind, UnknownTreeError
from .potential import PotentialParams, write_grid_csv
from .session import (
    EVENT_LOG_SUFFIX,
    InvalidAnswerError,
    Session,
    SessionStatus,
    abort_session,
    advance,
    current_prompt,
    read_event_log,
    replay,
    start_session,
    write_event_log,
)

KB_ENV_VAR = "ITRIAGE_KB"


def entry() -> None:
    sys.exit(main())


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help()
        return 2
    try:
        return args.func(args)
    except ParseFailure as exc:
        for diag in exc.diagnostics:
            print(str(diag), file=sys.stderr)
        return 1
    except (FileNotFoundError, UnknownTreeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="itriage",
        description="Troubleshooting engine and FMEA toolkit for trapped-ion systems.",
    )
    parser.set_defaults(command=None)
    sub = parser.add_subparsers(dest="command")

    p_run = sub.add_parser("run", help="walk through a troubleshooting session")
    p_run.add_argument("--kb", help="knowledge-base file (.itkb)")
    p_run.add_argument("--tree", default="main", help="tree to start in")
    p_run.add_argument("--answers", help="file with one decision answer per line")
    p_run.add_argument("--faultlog", help="append a fault record here on a finding")
    p_run.add_argument("--log-dir", help="write the session event log (.itlog) here")
    p_run.add_argument("--note", default="", help="annotation for the fault record")
    p_run.set_defaults(func=cmd_run)

    p_lint = sub.add_parser("lint", help="check a knowledge-base file")
    p_lint.add_argument("file", nargs="?", help="KB file (defaults to the bundled one)")
    p_lint.set_defaults(func=cmd_lint)

    p_dot = sub.add_parser("export-dot", help="render a tree as Graphviz DOT")
    p_dot.add_argument("file", help="KB file")
    p_dot.add_argument("tree", help="tree id")
    p_dot.add_argument("-o", "--output", help="write here instead of stdout")
    p_dot.set_defaults(func=cmd_export_dot)

    p_rep = sub.add_parser("fmea-report", help="severity/occurrence/RPN table")
    p_rep.add_argument("kb", help="KB file")
    p_rep.add_argument("faultlog", help="fault log file (.itrec); may not exist yet")
    p_rep.add_argument("--csv", action="store_true", help="emit CSV instead of a table")
    p_rep.add_argument("-o", "--output", help="write here instead of stdout")
    p_rep.set_defaults(func=cmd_fmea_report)

    p_replay = sub.add_parser("replay", help="reconstruct a session from its log")
    p_replay.add_argument("kb", help="KB file")
    p_replay.add_argument("eventlog", help="session event log (.itlog)")
    p_replay.set_defaults(func=cmd_replay)

    p_grid = sub.add_parser("potential-grid", help="sample the trapping potential")
    p_grid.add_argument("--u", type=float, required=True, help="DC voltage (V)")
    p_grid.add_argument("--u-rf", type=float, required=True, help="RF amplitude (V)")
    p_grid.add_argument("--omega", type=float, required=True, help="RF angular frequency (rad/s)")
    p_grid.add_argument("--dc", required=True, help="DC coefficients a,b,c (1/m^2)")
    p_grid.add_argument("--rf", required=True, help="RF coefficients a',b',c' (1/m^2)")
    p_grid.add_argument("--axes", default="xy", help="two of x,y,z (default xy)")
    p_grid.add_argument("--range1", default="-1:1", help="first axis range lo:hi (m)")
    p_grid.add_argument("--range2", default="-1:1", help="second axis range lo:hi (m)")
    p_grid.add_argument("--res", type=int, default=50, help="lattice points per axis")
    p_grid.add_argument("--t", type=float, default=0.0, help="time (s)")
    p_grid.add_argument("-o", "--output", help="write here instead of stdout")
    p_grid.set_defaults(func=cmd_potential_grid)

    p_serve = sub.add_parser("serve", help="run the HTTP service")
    p_serve.add_argument("--kb", help="knowledge-base file (.itkb)")
    p_serve.add_argument("--persistence", required=True, help="session/fault log directory")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8047)
    p_serve.set_defaults(func=cmd_serve)

    return parser


def resolve_kb_path(flag_value: str | None) -> Path:
    if flag_value:
        return Path(flag_value)
    env_value = os.environ.get(KB_ENV_VAR)
    if env_value:
        return Path(env_value)
    return default_kb_path()


def load_kb(flag_value: str | None) -> KnowledgeBase:
    return parse_file(resolve_kb_path(flag_value)).kb


# ---------------------------------------------------------------------------
# run
# ---------------------------------------------------------------------------


def cmd_run(args: argparse.Namespace) -> int:
    kb = load_kb(args.kb)
    scripted: list[str] | None = None
    if args.answers:
        scripted = [
            line.strip()
            for line in Path(args.answers).read_text(encoding="utf-8").splitlines()
            if line.strip() and not line.strip().startswith("#")
        ]

    session = start_session(kb, args.tree)
    aborted_by_user = _drive(session, scripted)

    if args.log_dir:
        log_dir = Path(args.log_dir)
        log_dir.mkdir(parents=True, exist_ok=True)
        write_event_log(log_dir / (session.id + EVENT_LOG_SUFFIX), session.events)

    print()
    print(f"Session {session.id} ended: {session.status.value}")
    if session.status is SessionStatus.FINISHED_FINDING:
        _print_finding(session)
        if args.faultlog:
            record = fmea.fault_record_from_session(session, notes=args.note)
            fmea.append_fault_record(args.faultlog, record)
            print(f"Fault record appended to {args.faultlog} (mode: {record.mode_id})")
    return 0 if not aborted_by_user else 1


def _drive(session: Session, scripted: list[str] | None) -> bool:
    """Advance until the session ends; returns True if the user aborted."""
    script_pos = 0
    while session.is_active:
        prompt = current_prompt(session)
        if prompt.kind is NodeKind.DECISION:
            if not prompt.answers:
                print(f"[{session.cursor.tree}] {prompt.text}")
                print("This branch has no continuation in the knowledge base.")
                abort_session(session)
                return True
            if scripted is not None:
                if script_pos >= len(scripted):
                    print("Answer script exhausted; aborting.", file=sys.stderr)
                    abort_session(session)
                    return True
                answer = scripted[script_pos]
                script_pos += 1
                print(f"[{session.cursor.tree}] {prompt.text} -> {answer}")
            else:
                answer = _ask(session, prompt)
                if answer is None:
                    abort_session(session)
                    return True
            try:
                advance(session, answer)
            except InvalidAnswerError as exc:
                print(f"error: {exc}", file=sys.stderr)
                if scripted is not None:
                    abort_session(session)
                    return True
        else:
            label = prompt.kind.value
            print(f"[{session.cursor.tree}] ({label}) {prompt.text}")
            if prompt.context_note:
                print(f"    note: {prompt.context_note}")
            if scripted is None:
                try:
                    input("    ... press Enter to continue ")
                except EOFError:
                    pass
            advance(session)
    return False


def _ask(session: Session, prompt) -> str | None:
    print(f"[{session.cursor.tree}] {prompt.text}")
    if prompt.context_note:
        print(f"    note: {prompt.context_note}")
    for i, label in enumerate(prompt.answers, 1):
        print(f"    {i}. {label}")
    while True:
        try:
            raw = input("answer (number/label, 'q' to abort)> ").strip()
        except EOFError:
            return None
        if raw in ("q", "quit", "abort"):
            return None
        if raw.isdigit() and 1 <= int(raw) <= len(prompt.answers):
            return prompt.answers[int(raw) - 1]
        if raw in prompt.answers:
            return raw
        print(f"    pick one of {list(prompt.answers)}")


def _print_finding(session: Session) -> None:
    node = session.node
    kb = session.kb
    print(f"Finding: {node.text}")
    if node.note:
        print(f"    {node.note}")
    ref = node.failure_mode_ref
    if ref is None or not kb.has_failure_mode(ref):
        print("No cataloged failure mode is linked to this finding.")
        return
    mode = kb.failure_mode(ref)
    print(f"Failure mode: {mode.name}  [{mode.area.value}]")
    rows = (
        ("Operational impact", fmea.CostDimension.OPERATIONAL_IMPACT,
         mode.cost.operational_impact),
        ("Time cost", fmea.CostDimension.TIME_COST, mode.cost.time_cost),
        ("Disturbance risk", fmea.CostDimension.DISTURBANCE_RISK,
         mode.cost.disturbance_risk),
    )
    for title, dim, level in rows:
        desc = fmea.describe_severity(dim, level)
        print(f"  {title:<19} {level.value:<7} {desc.effect_text}")
    overall = max(mode.cost.levels())
    print(f"  Intervention:       {fmea.INTERVENTIONS[overall]}")


# ---------------------------------------------------------------------------
# lint / export-dot
# ---------------------------------------------------------------------------


def cmd_lint(args: argparse.Namespace) -> int:
    path = Path(args.file) if args.file else default_kb_path()
    kb = parse_file(path).kb
    diagnostics = lint(kb)
    for diag in diagnostics:
        print(format_lint_diagnostic(diag))
    errors = sum(1 for d in diagnostics if d.severity == "error")
    warnings = len(diagnostics) - errors
    print(f"{path}: {errors} error(s), {warnings} warning(s)")
    return 1 if has_errors(diagnostics) else 0


def format_lint_diagnostic(diag: LintDiagnostic) -> str:
    return str(diag)


def cmd_export_dot(args: argparse.Namespace) -> int:
    kb = parse_file(args.file).kb
    dot = export_flowchart(kb.tree(args.tree))
    if args.output:
        Path(args.output).write_text(dot, encoding="utf-8")
    else:
        print(dot, end="")
    return 0


# ---------------------------------------------------------------------------
# fmea-report
# ---------------------------------------------------------------------------


def cmd_fmea_report(args: argparse.Namespace) -> int:
    kb = parse_file(args.kb).kb
    store = fmea.load_fault_log(args.faultlog, kb)
    rows = fmea.report_rows(kb, store)
    lines = _report_csv(rows) if args.csv else _report_table(rows, len(store))
    text = "\n".join(lines) + "\n"
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        print(text, end="")
    return 0


def _report_table(rows: list[fmea.ReportRow], record_count: int) -> list[str]:
    header = (
        f"{'Area':<12} {'Failure mode':<36} {'Impact':<7} {'Time':<7} "
        f"{'Disturb':<7} {'Count':>5} {'Freq':>6} {'Occ':>3} {'RPN':>4}"
    )
    lines = [header, "-" * len(header)]
    for r in rows:
        lines.append(
            f"{r.area:<12} {r.name:<36} {r.impact.value:<7} {r.time_cost.value:<7} "
            f"{r.disturbance.value:<7} {r.count:>5} {r.fraction:>6.3f} "
            f"{r.bucket:>3} {r.rpn:>4}"
        )
    lines.append(f"({record_count} fault record(s))")
    return lines


def _report_csv(rows: list[fmea.ReportRow]) -> list[str]:
    lines = ["area,mode,name,impact,time,disturbance,count,fraction,bucket,rpn"]
    for r in rows:
        name = '"' + r.name.replace('"', '""') + '"'
        lines.append(
            f"{r.area},{r.mode_id},{name},{r.impact.value},{r.time_cost.value},"
            f"{r.disturbance.value},{r.count},{r.fraction!r},{r.bucket},{r.rpn}"
        )
    return lines


# ---------------------------------------------------------------------------
# replay / potential-grid / serve
# ---------------------------------------------------------------------------


def cmd_replay(args: argparse.Namespace) -> int:
    kb = parse_file(args.kb).kb
    events = read_event_log(args.eventlog)
    session = replay(kb, events)
    print(f"session: {session.id}")
    print(f"status: {session.status.value}")
    print(f"cursor: {session.cursor.tree}.{session.cursor.node}")
    print(f"stack depth: {len(session.stack)}")
    print(f"events: {len(session.events)}")
    return 0


def _parse_triple(raw: str, what: str) -> tuple[float, float, float]:
    parts = raw.split(",")
    if len(parts) != 3:
        raise ValueError(f"{what} must be three comma-separated numbers, got {raw!r}")
    return (float(parts[0]), float(parts[1]), float(parts[2]))


def _parse_range(raw: str, what: str) -> tuple[float, float]:
    parts = raw.split(":")
    if len(parts) != 2:
        raise ValueError(f"{what} must look like lo:hi, got {raw!r}")
    return (float(parts[0]), float(parts[1]))


def cmd_potential_grid(args: argparse.Namespace) -> int:
    params = PotentialParams(
        dc_voltage=args.u,
        rf_voltage=args.u_rf,
        omega_rf=args.omega,
        dc_coeffs=_parse_triple(args.dc, "--dc"),
        rf_coeffs=_parse_triple(args.rf, "--rf"),
    )
    if len(args.axes) != 2:
        raise ValueError(f"--axes must name two axes, got {args.axes!r}")
    ranges = (_parse_range(args.range1, "--range1"), _parse_range(args.range2, "--range2"))
    if args.output:
        write_grid_csv(args.output, params, (args.axes[0], args.axes[1]), ranges,
                       args.res, args.t)
    else:
        write_grid_csv(sys.stdout, params, (args.axes[0], args.axes[1]), ranges,
                       args.res, args.t)
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    kb_path = resolve_kb_path(args.kb)
    kb = parse_file(kb_path).kb
    diagnostics = lint(kb)
    for diag in diagnostics:
        stream = sys.stderr if diag.severity == "error" else sys.stdout
        print(format_lint_diagnostic(diag), file=stream)
    if has_errors(diagnostics):
        print(f"refusing to serve {kb_path}: lint errors", file=sys.stderr)
        return 1

    import uvicorn

    from .service import create_app

    app = create_app(kb, args.persistence)
    print(f"serving {kb_path} on http://{args.host}:{args.port}")
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


if __name__ == "__main__":
    entry()
