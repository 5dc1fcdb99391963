"""Command-line entry point.

Exit codes: 0 success, 1 analysis mismatch (M matrix differs from the
expected one, or a family property fails), 2 usage, parse, I/O or
configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from importlib.resources import files
from pathlib import Path
from typing import Sequence

from . import __version__
from .analysis import (
    DEFAULT_EPSILON_FLAT,
    DEFAULT_THETA,
    BitOrder,
    ModeMatrix,
    Scheme,
    SuperpositionState,
    check_thresholds,
    extract_m_matrix,
    extract_period,
    reconstruct_terms,
    render_diff,
)
from .detection import correlation_scan, traces_to_csv
from .fields import OpticalField, fields_to_csv
from .netlist import NetlistError, NetworkError, evaluate_network, parse_netlist, pretty_print
from .scenarios import SCENARIOS, build
from .sequences import FamilyFormatError, PhaseSequence, builtin_table, load_family, verify_family

EXIT_OK, EXIT_MISMATCH, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


@dataclass
class RunBundle:
    """Named text payloads of one run plus a human-readable summary."""

    files: dict[str, str] = field(default_factory=dict)
    summary: list[str] = field(default_factory=list)

    def write(self, out_dir: Path) -> None:
        out_dir.mkdir(parents=True, exist_ok=True)
        for name in sorted(self.files):
            (out_dir / name).write_text(self.files[name])


def _data_file(name: str) -> Path | None:
    candidate = files("pseudophase.data").joinpath(name)
    return Path(str(candidate)) if candidate.is_file() else None


def _resolve(path: str) -> Path:
    """A path on disk, falling back to the files shipped with the package."""
    p = Path(path)
    if p.exists():
        return p
    shipped = _data_file(p.name)
    if shipped is not None:
        return shipped
    raise UsageError(f"cannot read {path}: no such file")


def _read(path: str) -> tuple[Path, str]:
    p = _resolve(path)
    try:
        return p, p.read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def _family(args) -> list[PhaseSequence]:
    if getattr(args, "family", None) is None:
        return builtin_table()
    p = _resolve(args.family)
    try:
        return load_family(p)
    except FamilyFormatError as exc:
        raise UsageError(f"{args.family}: {exc}") from None


def _check_config(args) -> None:
    if not args.mu > 0:
        raise UsageError(f"--mu must be > 0, got {args.mu}")
    if not args.tau_slot > 0:
        raise UsageError(f"--tau-slot must be > 0, got {args.tau_slot}")
    if args.samples_per_slot < 1:
        raise UsageError(f"--samples-per-slot must be >= 1, got {args.samples_per_slot}")
    try:
        check_thresholds(args.epsilon_flat, args.theta)
    except ValueError as exc:
        raise UsageError(f"configuration error: {exc}") from None


def _config_echo(args, family, lo_ids, **extra) -> str:
    doc = {
        "version": __version__,
        "mu": args.mu,
        "tau_slot": args.tau_slot,
        "epsilon_flat": args.epsilon_flat,
        "theta": args.theta,
        "bit_order": args.bit_order,
        "scheme": args.scheme,
        "samples_per_slot": args.samples_per_slot,
        "lo_sequence_ids": list(lo_ids),
        "family": [list(s.codes) for s in family],
        **extra,
    }
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


def _state_text(state: SuperpositionState) -> str:
    lines = []
    pairs = state.pairs() if state.register_split else None
    for k, t in enumerate(state.terms):
        witness = " ".join(str(s) for s in t.witness)
        extra = f"  x={pairs[k][0]} f={pairs[k][1]}" if pairs else ""
        lines.append(f"{t.bitstring}  [{witness}]{extra}")
    if not state.terms:
        lines.append("# empty state; nonzero entries per field: " + " ".join(map(str, state.candidates)))
    return "\n".join(lines) + "\n"


def _state_json(state: SuperpositionState) -> str:
    doc = {
        "bit_order": state.bit_order.value,
        "register_split": None if state.register_split is None else [list(p) for p in state.register_split],
        "terms": [{"bits": t.bitstring, "witness": list(t.witness)} for t in state.terms],
        "candidates": list(state.candidates),
    }
    if state.register_split is not None:
        doc["pairs"] = [list(p) for p in state.pairs()]
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


def _emit_csv(spec: str | None, name: str, payload: str, bundle: RunBundle, out: Path | None) -> bool:
    """Route an optional CSV; returns True when it went to stdout."""
    if spec is None:
        return False
    if spec == "-":
        bundle.files[name] = payload
        if out is None:
            sys.stdout.write(payload)
            return True
        return False
    Path(spec).write_text(payload)
    bundle.files[name] = payload
    return False


def _analyse(args, fields: Sequence[OpticalField], family, lo_ids, split, bundle: RunBundle) -> ModeMatrix:
    by_id = {s.id: s for s in family}
    missing = [i for i in lo_ids if i not in by_id]
    if missing:
        raise UsageError(f"LO sequences {missing} are not in the family")
    los = [by_id[i] for i in lo_ids]
    table = correlation_scan(list(fields), los, mu=args.mu, tau_slot=args.tau_slot)
    m = extract_m_matrix(table, args.epsilon_flat, args.theta)
    state = reconstruct_terms(m, args.scheme, split, args.bit_order)

    bundle.files["correlations.csv"] = table.to_csv()
    bundle.files["correlations.json"] = table.to_json()
    bundle.files["traces.csv"] = traces_to_csv(fields, los, args.mu, args.samples_per_slot)
    bundle.files["m_matrix.txt"] = m.render()
    bundle.files["reconstruction.txt"] = _state_text(state)
    bundle.files["reconstruction.json"] = _state_json(state)
    bundle.summary += ["M matrix:", m.render().rstrip("\n"), "",
                       f"reconstructed terms ({args.scheme}, {len(state)}):", _state_text(state).rstrip("\n")]
    if split is not None and state.terms:
        period = extract_period(state)
        bundle.files["period.json"] = json.dumps(period.to_dict(), indent=1) + "\n"
        bundle.summary += ["", f"period r = {period.r}; f-values: " + " ".join(map(str, period.f_values))]
    return m


def _compare(expected: ModeMatrix, got: ModeMatrix, bundle: RunBundle) -> int:
    try:
        got = got.select_columns(expected.cols)
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from None
    if got.shape != expected.shape:
        raise UsageError(f"expected M matrix has shape {expected.shape}, measured {got.shape}")
    bundle.files["expected_m.txt"] = expected.render()
    if got.entries == expected.entries:
        bundle.summary.append("\nM matrix matches the expected matrix")
        return EXIT_OK
    diff = render_diff(expected, got)
    bundle.files["m_diff.txt"] = diff
    bundle.summary += ["\nM matrix MISMATCH:", diff.rstrip("\n")]
    return EXIT_MISMATCH


def _finish(args, bundle: RunBundle, code: int, csv_on_stdout: bool) -> int:
    if args.out is not None:
        bundle.write(Path(args.out))
    stream = sys.stderr if csv_on_stdout else sys.stdout
    stream.write("\n".join(bundle.summary) + "\n")
    return code


def cmd_sequences(args) -> int:
    family = _family(args)
    for s in family:
        names = ["0" if c == 0 else ("pi" if c == 2 else f"{c}pi/2") for c in s.codes]
        print(f"lambda{s.id}: " + " ".join(n.replace("1pi/2", "pi/2") for n in names))
    return EXIT_OK


def cmd_check_family(args) -> int:
    family = _family(args)
    try:
        report = verify_family(family)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    for s, bal, zero in zip(family, report.balanced, report.all_zero):
        status = "all-zero" if zero else ("balanced" if bal else "NOT balanced")
        print(f"lambda{s.id}: {status}")
    print("pairwise agreements:")
    for row in report.pairwise_agreements:
        print("  " + " ".join(f"{v:2d}" for v in row))
    print(f"orthogonal (distinct pairs agree on half the slots): {report.orthogonal}")
    print(f"closed under xor: {report.closed_under_xor}")
    print("family OK" if report.ok else "family check FAILED")
    return EXIT_OK if report.ok else EXIT_MISMATCH


def cmd_demo(args) -> int:
    _check_config(args)
    family = _family(args)
    try:
        seq_ids = _int_list(args.seq_ids) if args.seq_ids else None
        scenario = build(args.name, seq_ids, family)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    bundle = RunBundle()
    bundle.files["config.json"] = _config_echo(args, family, scenario.lo_ids, scenario=scenario.descriptor())
    bundle.files["scenario.json"] = scenario.descriptor_json()
    bundle.summary.append(f"scenario {scenario.name}")
    m = _analyse(args, scenario.fields, family, scenario.lo_ids, scenario.register_split, bundle)
    code = _compare(scenario.expected_m, m, bundle)
    on_stdout = _emit_csv(args.dump_fields, "fields.csv", fields_to_csv(scenario.fields, args.samples_per_slot),
                          bundle, args.out)
    on_stdout |= _emit_csv(args.traces, "traces.csv", bundle.files["traces.csv"], bundle, args.out)
    return _finish(args, bundle, code, on_stdout)


def cmd_run(args) -> int:
    _check_config(args)
    family = _family(args)
    path, text = _read(args.netlist)
    try:
        net = parse_netlist(text, str(args.netlist))
    except NetlistError as exc:
        for d in exc.diagnostics:
            print(d.format(args.netlist), file=sys.stderr)
        return EXIT_USAGE
    for w in net.warnings:
        print(w.format(args.netlist), file=sys.stderr)
    try:
        sinks = evaluate_network(net, family)
    except NetworkError as exc:
        raise UsageError(f"{args.netlist}: {exc}") from None
    if not sinks:
        raise UsageError(f"{args.netlist}: network has no sinks to analyse")

    expected = None
    if args.expect:
        _, mtext = _read(args.expect)
        try:
            expected = ModeMatrix.parse(mtext)
        except ValueError as exc:
            raise UsageError(f"{args.expect}: {exc}") from None
    if args.lo:
        lo_ids = _int_list(args.lo)
    elif expected is not None:
        lo_ids = list(expected.cols)
    else:
        lo_ids = [s.id for s in family]
    split = None
    if args.split is not None:
        if not 0 < args.split < len(sinks):
            raise UsageError(f"--split must lie in 1..{len(sinks) - 1}")
        split = (tuple(range(args.split)), tuple(range(args.split, len(sinks))))

    bundle = RunBundle()
    bundle.files["config.json"] = _config_echo(args, family, lo_ids, netlist=str(args.netlist), split=args.split)
    bundle.files["network.net"] = pretty_print(net)
    bundle.summary.append(f"netlist {args.netlist}: {len(net.components)} components, sinks {' '.join(sinks)}")
    fields = list(sinks.values())
    m = _analyse(args, fields, family, lo_ids, split, bundle)
    code = EXIT_OK
    if expected is not None:
        if len(expected.rows) != len(fields):
            raise UsageError(f"{args.expect} has {len(expected.rows)} rows but the network has {len(fields)} sinks")
        expected = ModeMatrix(tuple(sinks), expected.cols, expected.entries)
        code = _compare(expected, m, bundle)
    on_stdout = _emit_csv(args.dump_fields, "fields.csv", fields_to_csv(fields, args.samples_per_slot),
                          bundle, args.out)
    on_stdout |= _emit_csv(args.traces, "traces.csv", bundle.files["traces.csv"], bundle, args.out)
    return _finish(args, bundle, code, on_stdout)


def cmd_reconstruct(args) -> int:
    _, text = _read(args.mfile)
    try:
        m = ModeMatrix.parse(text)
    except ValueError as exc:
        raise UsageError(f"{args.mfile}: {exc}") from None
    split = None
    if args.split is not None:
        if not 0 < args.split < m.shape[0]:
            raise UsageError(f"--split must lie in 1..{m.shape[0] - 1}")
        split = (tuple(range(args.split)), tuple(range(args.split, m.shape[0])))
    state = reconstruct_terms(m, args.scheme, split, args.bit_order)
    print(f"# {len(state)} term(s), scheme {args.scheme}, bit order {args.bit_order}")
    sys.stdout.write(_state_text(state))
    if split is not None and state.terms:
        period = extract_period(state)
        print(f"period r = {period.r}")
        for f, xs in period.groups.items():
            print(f"  f={f}: x in {{{', '.join(map(str, xs))}}}")
    if args.out is not None:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "reconstruction.json").write_text(_state_json(state))
    return EXIT_OK


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.replace(",", " ").split()]
    except ValueError:
        raise UsageError(f"expected a comma-separated list of integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pseudophase",
        description="Coherent detection of optical fields tagged with pseudorandom phase sequences.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    fam = argparse.ArgumentParser(add_help=False)
    fam.add_argument("--family", help="sequence family file (default: built-in 8-sequence family)")

    recon = argparse.ArgumentParser(add_help=False)
    recon.add_argument("--bit-order", choices=[b.value for b in BitOrder], default=BitOrder.MSB_FIRST.value)
    recon.add_argument("--scheme", choices=[s.value for s in Scheme], default=Scheme.CYCLIC.value,
                       help="term reconstruction rule (default: cyclic)")
    recon.add_argument("--out", help="write the run bundle into this directory")

    analysis = argparse.ArgumentParser(add_help=False)
    analysis.add_argument("--mu", type=float, default=1.0, help="photodetector sensitivity")
    analysis.add_argument("--tau-slot", type=float, default=1.0, help="slot duration")
    analysis.add_argument("--epsilon-flat", type=float, default=DEFAULT_EPSILON_FLAT)
    analysis.add_argument("--theta", type=float, default=DEFAULT_THETA)
    analysis.add_argument("--samples-per-slot", type=int, default=1, help="sample-and-hold factor for CSV output")
    analysis.add_argument("--dump-fields", nargs="?", const="-", metavar="PATH",
                          help="write the analysed fields as CSV (stdout or bundle when PATH is omitted)")
    analysis.add_argument("--traces", nargs="?", const="-", metavar="PATH",
                          help="write detector traces as CSV (stdout or bundle when PATH is omitted)")

    p = sub.add_parser("sequences", parents=[fam], help="print the sequence family")
    p.set_defaults(func=cmd_sequences)

    p = sub.add_parser("check-family", parents=[fam], help="verify balance, orthogonality and closure")
    p.set_defaults(func=cmd_check_family)

    p = sub.add_parser("demo", parents=[fam, analysis, recon], help="run a built-in scenario end to end")
    p.add_argument("name", choices=SCENARIOS)
    p.add_argument("--seq-ids", help="three sequence ids for product/ghz/w (default 1,2,3)")
    p.set_defaults(func=cmd_demo)

    p = sub.add_parser("run", parents=[fam, analysis, recon], help="evaluate and analyse a netlist")
    p.add_argument("netlist")
    p.add_argument("--expect", metavar="M_FILE", help="expected M matrix; mismatch exits with 1")
    p.add_argument("--lo", help="LO sequence ids to scan (default: the --expect columns, else the family)")
    p.add_argument("--split", type=int, help="number of leading sinks forming the x register")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("reconstruct", parents=[recon], help="reconstruct basis terms from an M-matrix file")
    p.add_argument("mfile")
    p.add_argument("--split", type=int, help="number of leading fields forming the x register")
    p.set_defaults(func=cmd_reconstruct)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"pseudophase: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
