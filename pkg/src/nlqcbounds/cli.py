"""Command-line front end: ``nlqcbounds table|verify|structure|cds|omega1``.

Exit codes: 0 success, 1 verification failure, 2 usage or parse error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass
from fractions import Fraction
from math import log2
from pathlib import Path

import numpy as np

from . import __version__
from .boolfn import EXTRA_FAMILIES, FAMILIES, TruthTable, load_truth_table, make_family, negate, support_pattern, to_bits
from .cds import (
    brute_force_cds_search,
    cds_to_cdqs,
    format_cds,
    load_cds,
    parallel_repeat,
    randomness_bound,
    verify_cdqs,
    verify_cds,
)
from .errors import NLQCError, SizeError
from .fbb84 import BB84Protocol, bb84_from_dict, bb84_zoo, garden_hose_bb84, rank_bound_bb84, structure_matrix_bb84, verify_bb84
from .frouting import (
    RANK_TOL,
    ZERO_TOL,
    decoupling_grid,
    omega1_check,
    rank_bound,
    structure_matrix,
    verify_routing,
)
from .nlqc import (
    DATA_DIR,
    PROTOCOL_FORMAT,
    STRATEGY_FORMAT,
    GardenHoseStrategy,
    NLQCProtocol,
    entanglement_cost,
    fixture_strategy,
    garden_hose_compile,
    protocol_from_dict,
    resource_schmidt_rank,
    strategy_from_dict,
    zoo_protocol,
)
from .patternrank import triangular_bound

VERIFY_TOL = 1e-9
TABLE_FAMILIES = ("EQ", "NEQ", "GT", "LT", "DISJ", "INT", "IP")
ZOO = ("constant0", "constant1", "x_only", "discard")


class UsageError(Exception):
    pass


# ------------------------------------------------------------------ bound table

def quarter_log(rank: int, shift: int = 0):
    """``(log2 rank - shift) / 4``, exact when ``rank`` is a power of two, clipped at 0."""
    if rank < 1:
        return Fraction(0)
    if rank & (rank - 1) == 0:
        return max(Fraction(0), Fraction(rank.bit_length() - 1 - shift, 4))
    return max(0.0, (log2(rank) - shift) / 4)


@dataclass
class BoundTableRow:
    function: str
    n: int
    fr0: object = None
    fr1: object = None
    fbb84: object = None
    pp_cds: object = None
    pc_cds: object = None
    upper: object = None
    supported: bool = True


def _fixture_upper(family: str, n: int):
    if family != "EQ":
        return None
    costs = []
    for path in sorted(DATA_DIR.glob("eq_*.json")):
        s = strategy_from_dict(json.loads(path.read_text()))
        if s.n == n:
            costs.append(s.pipes)
    return Fraction(min(costs)) if costs else None


def bound_table(families=TABLE_FAMILIES, ns=(1, 2, 3, 4)) -> list[BoundTableRow]:
    rows = []
    for fam in families:
        for n in ns:
            fam_u = fam.upper()
            if fam_u == "IP":
                rows.append(BoundTableRow("IP", n, supported=False))
                continue
            f = make_family(fam_u, n)
            r1 = triangular_bound(support_pattern(f)).lower_bound
            r0 = triangular_bound(support_pattern(negate(f))).lower_bound
            fr0, fr1 = quarter_log(r1), quarter_log(r0)
            rows.append(BoundTableRow(fam_u, n, fr0, fr1, quarter_log(r1, 1), fr0, fr1, _fixture_upper(fam_u, n)))
    return rows


def _fmt(v) -> str:
    if v is None:
        return "-"
    if isinstance(v, Fraction):
        return str(v)
    return f"{v:.6f}"


TABLE_HEAD = ["function", "n", "FR0", "FR1", "fBB84", "ppCDS", "pcCDS", "upper"]


def row_cells(r: BoundTableRow) -> list[str]:
    if not r.supported:
        return [r.function, str(r.n)] + ["unsupported"] * 5 + ["-"]
    return [r.function, str(r.n)] + [_fmt(v) for v in (r.fr0, r.fr1, r.fbb84, r.pp_cds, r.pc_cds, r.upper)]


def render_text(head, rows) -> str:
    widths = [max(len(h), *(len(r[i]) for r in rows)) if rows else len(h) for i, h in enumerate(head)]
    line = lambda cells: "  ".join(c.rjust(w) for c, w in zip(cells, widths))
    return "\n".join([line(head), line(["-" * w for w in widths])] + [line(r) for r in rows]) + "\n"


def render_markdown(head, rows) -> str:
    out = ["| " + " | ".join(head) + " |", "|" + "---|" * len(head)]
    out += ["| " + " | ".join(r) + " |" for r in rows]
    return "\n".join(out) + "\n"


def render_csv(head, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(head)
    w.writerows(rows)
    return buf.getvalue()


# --------------------------------------------------------------------- loading

def resolve_function(spec: str | None, n: int | None) -> TruthTable | None:
    if spec is None:
        return None
    if spec.upper() in FAMILIES + EXTRA_FAMILIES:
        if n is None:
            raise UsageError(f"--n is required with function family {spec}")
        return make_family(spec.upper(), n)
    path = Path(spec)
    if not path.exists():
        raise UsageError(f"--function {spec!r} is neither a family name nor a truth-table file")
    return load_truth_table(path)


def load_protocol_spec(spec: str, task: str, f: TruthTable | None):
    """Returns (protocol object, function the protocol is designed for or None)."""
    name = spec.lower()
    if (DATA_DIR / f"{name}.json").exists():
        s = fixture_strategy(name)
        return _from_strategy(s, task), s.function()
    if name in ZOO:
        if task == "bb84":
            if name not in ("constant0", "discard"):
                raise UsageError(f"no BB84 variant of zoo protocol {name}")
            if f is None:
                raise UsageError("--function is required with zoo protocols")
            return bb84_zoo(name, f.n), None
        if f is None:
            raise UsageError("--function is required with zoo protocols")
        return zoo_protocol(name, f), None
    path = Path(spec)
    if not path.exists():
        raise UsageError(f"--protocol {spec!r} is neither a shipped fixture, a zoo name, nor a file")
    try:
        obj = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise UsageError(f"{spec}: invalid JSON ({e})") from None
    fmt = obj.get("format")
    if fmt == STRATEGY_FORMAT:
        s = strategy_from_dict(obj)
        return _from_strategy(s, task), s.function()
    if fmt == PROTOCOL_FORMAT:
        if task == "bb84":
            return bb84_from_dict(obj), None
        return protocol_from_dict(obj), None
    raise UsageError(f"{spec}: unknown file format {fmt!r}")


def _from_strategy(s: GardenHoseStrategy, task: str):
    return garden_hose_bb84(s) if task == "bb84" else garden_hose_compile(s)


def _header(cmd: str, args) -> str:
    return (f"# nlqcbounds {__version__} {cmd}: tol-rank={args.tol_rank:g} tol-zero={args.tol_zero:g} "
            f"tol-verify={args.tol_verify:g} jobs={args.jobs}\n")


def _grid(values: np.ndarray, n: int, fmt="{:.9f}") -> str:
    N = 2 ** n
    head = ["x\\y"] + [to_bits(y, n) for y in range(N)]
    rows = [[to_bits(x, n)] + [fmt.format(values[x, y]) for y in range(N)] for x in range(N)]
    return render_text(head, rows)


def _write_outputs(args, head, rows):
    if getattr(args, "csv", None):
        Path(args.csv).write_text(render_csv(head, rows))
    if getattr(args, "markdown", None):
        Path(args.markdown).write_text(render_markdown(head, rows))


# -------------------------------------------------------------------- commands

def cmd_table(args, out) -> int:
    ns = args.n_list or [1, 2, 3, 4]
    fams = [f.upper() for f in (args.families or TABLE_FAMILIES)]
    rows = bound_table(fams, ns)
    cells = [row_cells(r) for r in rows]
    out.write(_header("table", args))
    out.write("# lower bounds in ebits (ppCDS/pcCDS in bits of shared randomness); "
              "fractions are exact, decimals are quarter-logs of non-powers of two\n")
    out.write(render_text(TABLE_HEAD, cells))
    _write_outputs(args, TABLE_HEAD, cells)
    return 0


def cmd_verify(args, out) -> int:
    f = resolve_function(args.function, args.n)
    p, native = load_protocol_spec(args.protocol, args.task, f)
    f = f or native
    if f is None:
        raise UsageError("--function is required for this protocol")
    out.write(_header("verify", args))
    ok = True
    if args.task == "bb84":
        bp: BB84Protocol = p
        rep = verify_bb84(bp, f)
        out.write(f"protocol {bp.name}  task bb84  function {f.name or args.function}  n={f.n}\n")
        out.write("success probability:\n" + _grid(rep.success, f.n))
        perfect = rep.perfect(args.tol_verify)
        out.write(f"worst success {rep.worst:.12f}  perfect={perfect}\n")
        G = structure_matrix_bb84(bp.protocol, f, args.tol_zero, jobs=args.jobs)
        d_e = resource_schmidt_rank(bp.protocol)
        rb = rank_bound_bb84(G, args.tol_rank, d_e)
        cost = entanglement_cost(bp.protocol)
        checks = {"perfect": perfect, "zero pattern": G.pattern_matches,
                  "rank <= 2 d_E^4": bool(rb.decomposition_ok), "bound <= cost": rb.clipped <= cost + 1e-9}
    else:
        rep = verify_routing(p, f, jobs=args.jobs)
        out.write(f"protocol {p.name}  task routing  function {f.name or args.function}  n={f.n}\n")
        out.write("Alice-side fidelity:\n" + _grid(rep.alice_fidelity, f.n))
        out.write("Bob-side fidelity:\n" + _grid(rep.bob_fidelity, f.n))
        out.write(f"eps0 {rep.eps0:.3e}  eps1 {rep.eps1:.3e}\n")
        gaps = decoupling_grid(p, jobs=args.jobs)
        out.write("decoupling gap:\n" + _grid(gaps, f.n))
        G = structure_matrix(p, f, "M'", args.tol_zero, jobs=args.jobs)
        rb = rank_bound(G, "FR0", args.tol_rank)
        d_e = resource_schmidt_rank(p)
        cost = entanglement_cost(p)
        perfect = rep.perfect(args.tol_verify)
        checks = {"perfect": perfect, "zero pattern": G.pattern_matches,
                  "rank <= d_E^4": rb.numerical_rank <= d_e ** 4, "bound <= cost": rb.bound_ebits <= cost + 1e-9}
        if perfect:
            zero = f.table == 0
            checks["decoupled on f=0"] = bool(np.all(gaps[zero] <= 1e-8)) if zero.any() else True
    out.write("structure matrix:\n" + _grid(G.G, f.n, "{:.6g}"))
    tag = " (degenerate)" if rb.degenerate else ""
    out.write(f"rank {rb.numerical_rank}{tag}  bound {rb.bound_ebits:g} ebits  cost {cost:g} ebits  d_E {d_e}\n")
    for name, val in checks.items():
        out.write(f"check {name}: {'ok' if val else 'FAIL'}\n")
        ok = ok and val
    return 0 if ok else 1


def cmd_structure(args, out) -> int:
    f = resolve_function(args.function, args.n)
    p, native = load_protocol_spec(args.protocol, args.task, f)
    f = f or native
    out.write(_header("structure", args))
    if args.task == "bb84":
        G = structure_matrix_bb84(p.protocol, f, args.tol_zero, jobs=args.jobs)
        rb = rank_bound_bb84(G, args.tol_rank)
    else:
        G = structure_matrix(p, f, args.side, args.tol_zero, jobs=args.jobs)
        rb = rank_bound(G, "FR1" if G.side == "M" else "FR0", args.tol_rank)
    out.write(f"structure matrix ({G.source}, side {G.side}):\n" + _grid(G.G, G.n, "{:.6g}"))
    out.write(f"rank {rb.numerical_rank}  {rb.variant} bound {rb.bound_ebits:g} ebits\n")
    if f is not None:
        out.write(f"zero pattern matches f: {G.pattern_matches}\n")
    if args.csv:
        Path(args.csv).write_text(G.to_csv())
    return 0


def cmd_omega1(args, out) -> int:
    f = resolve_function(args.function, args.n)
    p, native = load_protocol_spec(args.protocol, "routing", f)
    f = f or native
    if f is None:
        raise UsageError("--function is required for this protocol")
    r = omega1_check(p, f, args.x0)
    out.write(_header("omega1", args))
    out.write(f"x0 {to_bits(r.x0, f.n)}\n")
    out.write(f"I(ref:A E_B) {r.info_a_r:.9f}  I(ref:B E_B) {r.info_b_r:.9f}  target {r.target:g}\n")
    out.write(f"I(ref:A) {r.info_a:.9f}  I(ref:B) {r.info_b:.9f}  S(E_B) {r.entropy_r:.9f}\n")
    out.write(f"check equalities: {'ok' if r.equalities_hold else 'FAIL'}\n")
    out.write(f"check strong subadditivity: {'ok' if r.ssa_holds else 'FAIL'}\n")
    out.write(f"check S(E_B) >= log2 d_Q: {'ok' if r.entropy_bound_holds else 'FAIL'}\n")
    return 0 if r.ok else 1


def cmd_cds(args, out) -> int:
    out.write(_header(f"cds {args.cds_cmd}", args))
    if args.cds_cmd == "bound":
        f = resolve_function(args.function, args.n)
        b = randomness_bound(f)
        head = ["function", "n", "ppCDS", "pcCDS", "pp rank", "pc rank"]
        row = [f.name or args.function, str(f.n), _fmt(quarter_log(b.pp_rank)), _fmt(quarter_log(b.pc_rank)),
               str(b.pp_rank), str(b.pc_rank)]
        out.write(render_text(head, [row]))
        if b.pp_degenerate or b.pc_degenerate:
            out.write("note: a rank of at most 1 gives a degenerate (zero) bound\n")
        _write_outputs(args, head, [row])
        return 0
    if args.cds_cmd == "search":
        f = resolve_function(args.function, args.n)
        c = brute_force_cds_search(f, args.k, args.randomness, args.message_bits)
        if c is None:
            out.write("none\n")
            return 0
        if args.repeat > 1:
            c = parallel_repeat(c, args.repeat)
        text = format_cds(c)
        if args.out:
            Path(args.out).write_text(text)
            out.write(f"scheme written to {args.out}\n")
        else:
            out.write(text)
        return 0
    c = load_cds(args.scheme)
    f = resolve_function(args.function, c.n if args.n is None else args.n)
    rep = verify_cds(c, f)
    out.write(f"eps {rep.eps:g}{' (vacuous)' if rep.eps_vacuous else ''}  "
              f"delta {rep.delta:g}{' (vacuous)' if rep.delta_vacuous else ''}  tv {rep.tv:g}\n")
    out.write(f"randomness {rep.randomness_bits} bits  communication {rep.comm_bits:g} bits\n")
    out.write(f"note: {rep.note}\n")
    if args.cds_cmd == "verify":
        return 0 if rep.perfect(args.tol_verify) else 1
    q = cds_to_cdqs(c)
    qr = verify_cdqs(q, f)
    out.write(f"CDQS hiding {int(log2(q.d_q))} qubit(s)\n")
    out.write(f"correctness in [{qr.correct_lower:.3e}, {qr.correct_upper:.3e}]  "
              f"security in [{qr.secure_lower:.3e}, {qr.secure_upper:.3e}]\n")
    for note in qr.notes:
        out.write(f"note: {note}\n")
    ok = qr.correct_lower <= 2 * rep.eps ** 0.5 + args.tol_verify and qr.secure_lower <= rep.delta + args.tol_verify
    if rep.perfect(args.tol_verify):
        ok = ok and qr.perfect(args.tol_verify)
    return 0 if ok else 1


# ---------------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol-rank", type=float, default=RANK_TOL, help="relative singular-value cutoff")
    common.add_argument("--tol-zero", type=float, default=ZERO_TOL, help="structure-function zero threshold")
    common.add_argument("--tol-verify", type=float, default=VERIFY_TOL, help="fidelity/success tolerance")
    common.add_argument("--jobs", type=int, default=1, help="worker threads for grid evaluation")
    common.add_argument("--csv", metavar="PATH")
    common.add_argument("--markdown", metavar="PATH")

    proto = argparse.ArgumentParser(add_help=False)
    proto.add_argument("--protocol", required=True,
                       help="shipped fixture (eq_n1, eq_n2, eq_n1_hose), zoo name, or JSON file")
    proto.add_argument("--function", help="family name (with --n) or truth-table file")
    proto.add_argument("--n", type=int)

    ap = argparse.ArgumentParser(prog="nlqcbounds", description="NLQC entanglement lower-bound workbench")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="cmd", required=True)

    t = sub.add_parser("table", parents=[common], help="bound table for function families")
    t.add_argument("--n", dest="n_list", type=int, nargs="+")
    t.add_argument("--families", nargs="+", choices=[*TABLE_FAMILIES, *[f.lower() for f in TABLE_FAMILIES]])

    v = sub.add_parser("verify", parents=[common, proto], help="verify a protocol and its bounds")
    v.add_argument("--task", choices=("routing", "bb84"), default="routing")

    s = sub.add_parser("structure", parents=[common, proto], help="print a structure matrix")
    s.add_argument("--task", choices=("routing", "bb84"), default="routing")
    s.add_argument("--side", choices=("M", "M'"), default="M'")

    o = sub.add_parser("omega1", parents=[common, proto], help="entropy check for non-constant rows")
    o.add_argument("--x0", type=int)

    c = sub.add_parser("cds", help="classical and quantum CDS pipelines")
    csub = c.add_subparsers(dest="cds_cmd", required=True)
    cs = csub.add_parser("search", parents=[common])
    cs.add_argument("--function", required=True)
    cs.add_argument("--n", type=int)
    cs.add_argument("--k", type=int, default=1)
    cs.add_argument("--randomness", type=int, default=1)
    cs.add_argument("--message-bits", type=int, default=1)
    cs.add_argument("--repeat", type=int, default=1, help="run the found scheme as this many independent copies")
    cs.add_argument("--out", metavar="PATH")
    for name in ("verify", "reduce"):
        cv = csub.add_parser(name, parents=[common])
        cv.add_argument("--scheme", required=True)
        cv.add_argument("--function", required=True)
        cv.add_argument("--n", type=int)
    cb = csub.add_parser("bound", parents=[common])
    cb.add_argument("--function", required=True)
    cb.add_argument("--n", type=int)
    return ap


COMMANDS = {"table": cmd_table, "verify": cmd_verify, "structure": cmd_structure,
            "omega1": cmd_omega1, "cds": cmd_cds}


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.cmd](args, out)
    except UsageError as e:
        print(f"nlqcbounds: error: {e}", file=sys.stderr)
        return 2
    except SizeError as e:
        print(f"nlqcbounds: error: {e}", file=sys.stderr)
        return 2
    except (NLQCError, OSError) as e:
        print(f"nlqcbounds: error: {type(e).__name__}: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
