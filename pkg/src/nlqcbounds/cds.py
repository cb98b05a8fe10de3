"""Conditional disclosure of classical and quantum secrets.

Classical schemes are explicit tables: ``m0[x, s, r]``, ``m1[y, r]`` and a
decoder ``dec[m0, x, m1, y]``. Secrets and randomness are integers read as
big-endian bitstrings.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from math import log2, sqrt
from pathlib import Path

import numpy as np

from .boolfn import TruthTable, negate, support_pattern, to_bits
from .errors import ConfigError, DomainError, PreconditionError, SizeError
from .frouting import verify_routing
from .nlqc import M0P, M1P, MP_SIDE, NLQCProtocol, Q, reduced_grid
from .patternrank import triangular_bound
from .qmath import (
    DensityMatrix,
    PureState,
    QuantumChannel,
    SubsystemLayout,
    apply_channel,
    channel_from_choi,
    maximally_entangled,
    schmidt_rank,
    trace_norm,
)

SEARCH_GUARD = 2 ** 30


@dataclass
class CDSScheme:
    n: int
    k: int
    randomness_bits: int
    m0: np.ndarray  # (2^n, 2^k, 2^rho) -> [0, a0)
    m1: np.ndarray  # (2^n, 2^rho) -> [0, a1)
    a0: int
    a1: int
    dec: np.ndarray | None = None  # (a0, 2^n, a1, 2^n) -> secret

    def __post_init__(self):
        N, S, Rn = 2 ** self.n, 2 ** self.k, 2 ** self.randomness_bits
        self.m0 = np.asarray(self.m0, dtype=np.int64)
        self.m1 = np.asarray(self.m1, dtype=np.int64)
        if self.m0.shape != (N, S, Rn) or self.m1.shape != (N, Rn):
            raise ConfigError(f"message tables must have shapes {(N, S, Rn)} and {(N, Rn)}")
        if self.m0.min() < 0 or self.m0.max() >= self.a0 or self.m1.min() < 0 or self.m1.max() >= self.a1:
            raise ConfigError("message values fall outside the declared alphabets")
        if self.dec is None:
            self.dec = majority_decoder(self)
        self.dec = np.asarray(self.dec, dtype=np.int64)
        if self.dec.shape != (self.a0, N, self.a1, N):
            raise ConfigError(f"decoder table must have shape {(self.a0, N, self.a1, N)}")

    @property
    def comm_bits(self) -> float:
        return log2(self.a0) + log2(self.a1)


def majority_decoder(c: CDSScheme) -> np.ndarray:
    """Most frequent secret behind each transcript (ties to the smallest)."""
    N, S, Rn = 2 ** c.n, 2 ** c.k, 2 ** c.randomness_bits
    counts = np.zeros((c.a0, N, c.a1, N, S), dtype=np.int64)
    for x, y, s, r in product(range(N), range(N), range(S), range(Rn)):
        counts[c.m0[x, s, r], x, c.m1[y, r], y, s] += 1
    return counts.argmax(axis=-1)


def scheme_from_functions(n, k, randomness_bits, a0, a1, m0, m1, dec=None) -> CDSScheme:
    N, S, Rn = 2 ** n, 2 ** k, 2 ** randomness_bits
    t0 = np.array([[[m0(x, s, r) for r in range(Rn)] for s in range(S)] for x in range(N)])
    t1 = np.array([[m1(y, r) for r in range(Rn)] for y in range(N)])
    td = None
    if dec is not None:
        td = np.array([[[[dec(u, x, v, y) for y in range(N)] for v in range(a1)] for x in range(N)]
                       for u in range(a0)])
    return CDSScheme(n, k, randomness_bits, t0, t1, a0, a1, td)


@dataclass
class CDSReport:
    eps: float
    delta: float  # one-norm, as in the security definition
    tv: float  # total-variation distance, delta / 2
    randomness_bits: int
    comm_bits: float
    eps_vacuous: bool
    delta_vacuous: bool
    note: str = ("simulator is the secret-averaged transcript distribution; "
                 "the optimal simulator can be at most a factor 2 better")

    def perfect(self, tol: float = 1e-12) -> bool:
        return self.eps <= tol and self.delta <= tol


def _transcript_dist(c: CDSScheme, x: int, y: int) -> np.ndarray:
    """P[s, m0, m1] over uniform r."""
    S, Rn = 2 ** c.k, 2 ** c.randomness_bits
    out = np.zeros((S, c.a0, c.a1))
    for s in range(S):
        np.add.at(out[s], (c.m0[x, s], c.m1[y]), 1.0 / Rn)
    return out


def verify_cds(c: CDSScheme, f: TruthTable) -> CDSReport:
    if f.n != c.n:
        raise ConfigError(f"scheme has n={c.n} but f has n={f.n}")
    N, S = 2 ** c.n, 2 ** c.k
    eps, delta = 0.0, 0.0
    ones = f.table == 1
    for x in range(N):
        for y in range(N):
            if ones[x, y]:
                guess = c.dec[c.m0[x], x, c.m1[y][None, :], y]  # (S, R)
                fail = (guess != np.arange(S)[:, None]).mean(axis=1)
                eps = max(eps, float(fail.max()))
            else:
                p = _transcript_dist(c, x, y)
                sim = p.mean(axis=0)
                delta = max(delta, float(np.abs(p - sim).sum(axis=(1, 2)).max()))
    return CDSReport(eps, delta, delta / 2, c.randomness_bits, c.comm_bits,
                     eps_vacuous=not ones.any(), delta_vacuous=bool(ones.all()))


def _row_ok(row: np.ndarray, x: int, m1: np.ndarray, f: TruthTable, S: int, a0: int, a1: int) -> bool:
    """Whether Alice's table for input x is perfect against every y given Bob's table."""
    Rn = row.shape[1]
    for y in range(m1.shape[0]):
        code = row * a1 + m1[y][None, :]  # (S, R) transcript ids
        if f.table[x, y]:
            owner = {}
            for s in range(S):
                for t in code[s]:
                    if owner.setdefault(int(t), s) != s:
                        return False
        else:
            ref = np.sort(code[0])
            for s in range(1, S):
                if not np.array_equal(np.sort(code[s]), ref):
                    return False
    return True


def brute_force_cds_search(f: TruthTable, k: int, randomness_bits: int, message_bits: int,
                           guard: int = SEARCH_GUARD) -> CDSScheme | None:
    """First perfectly correct and perfectly secure scheme in a fixed enumeration order.

    Bob's table is enumerated in the outer loop. Each of Alice's rows only interacts
    with Bob's table, so rows are found independently per x.
    """
    N, S, Rn = 2 ** f.n, 2 ** k, 2 ** randomness_bits
    a = 2 ** message_bits
    n_bob = a ** (N * Rn)
    n_row = a ** (S * Rn)
    total = n_bob * N * n_row
    if total > guard:
        raise SizeError(f"search space of {total} tables exceeds the guard of {guard}")
    rows = np.array(list(product(range(a), repeat=S * Rn)), dtype=np.int64).reshape(-1, S, Rn)
    for bob in product(range(a), repeat=N * Rn):
        m1 = np.array(bob, dtype=np.int64).reshape(N, Rn)
        m0 = []
        for x in range(N):
            hit = next((r for r in rows if _row_ok(r, x, m1, f, S, a, a)), None)
            if hit is None:
                break
            m0.append(hit)
        else:
            return CDSScheme(f.n, k, randomness_bits, np.array(m0), m1, a, a)
    return None


def parallel_repeat(c: CDSScheme, t: int) -> CDSScheme:
    """Hide ``t * k`` bits with ``t`` independent copies (fresh randomness per copy)."""
    if t < 1:
        raise ConfigError("t must be positive")
    N, S, Rn = 2 ** c.n, 2 ** c.k, 2 ** c.randomness_bits

    def split(v, base):
        return [(v // base ** (t - 1 - i)) % base for i in range(t)]

    m0 = np.zeros((N, S ** t, Rn ** t), dtype=np.int64)
    for x in range(N):
        for s in range(S ** t):
            for r in range(Rn ** t):
                parts = [c.m0[x, si, ri] for si, ri in zip(split(s, S), split(r, Rn))]
                m0[x, s, r] = sum(p * c.a0 ** (t - 1 - i) for i, p in enumerate(parts))
    m1 = np.zeros((N, Rn ** t), dtype=np.int64)
    for y in range(N):
        for r in range(Rn ** t):
            m1[y, r] = sum(c.m1[y, ri] * c.a1 ** (t - 1 - i) for i, ri in enumerate(split(r, Rn)))
    dec = np.zeros((c.a0 ** t, N, c.a1 ** t, N), dtype=np.int64)
    for u in range(c.a0 ** t):
        for v in range(c.a1 ** t):
            for x in range(N):
                for y in range(N):
                    ss = [c.dec[ui, x, vi, y] for ui, vi in zip(split(u, c.a0), split(v, c.a1))]
                    dec[u, x, v, y] = sum(si * S ** (t - 1 - i) for i, si in enumerate(ss))
    return CDSScheme(c.n, c.k * t, c.randomness_bits * t, m0, m1, c.a0 ** t, c.a1 ** t, dec)


# ----------------------------------------------------------------- CDS text

def format_cds(c: CDSScheme) -> str:
    N, S, Rn = 2 ** c.n, 2 ** c.k, 2 ** c.randomness_bits
    lines = [f"n {c.n}", f"k {c.k}", f"randomness {c.randomness_bits}",
             f"m0_alphabet {c.a0}", f"m1_alphabet {c.a1}"]
    for x, s, r in product(range(N), range(S), range(Rn)):
        lines.append(f"m0 {to_bits(x, c.n)} {s} {r} {c.m0[x, s, r]}")
    for y, r in product(range(N), range(Rn)):
        lines.append(f"m1 {to_bits(y, c.n)} {r} {c.m1[y, r]}")
    for u, x, v, y in product(range(c.a0), range(N), range(c.a1), range(N)):
        lines.append(f"dec {u} {to_bits(x, c.n)} {v} {to_bits(y, c.n)} {c.dec[u, x, v, y]}")
    return "\n".join(lines) + "\n"


def parse_cds(text: str) -> CDSScheme:
    head, m0l, m1l, decl = {}, [], [], []
    for i, ln in enumerate(text.splitlines(), 1):
        ln = ln.split("#", 1)[0].strip()
        if not ln:
            continue
        parts = ln.split()
        key = parts[0]
        try:
            if key in ("n", "k", "randomness", "m0_alphabet", "m1_alphabet"):
                head[key] = int(parts[1])
            elif key == "m0":
                m0l.append((int(parts[1], 2), int(parts[2]), int(parts[3]), int(parts[4])))
            elif key == "m1":
                m1l.append((int(parts[1], 2), int(parts[2]), int(parts[3])))
            elif key == "dec":
                decl.append((int(parts[1]), int(parts[2], 2), int(parts[3]), int(parts[4], 2), int(parts[5])))
            else:
                raise ConfigError(f"line {i}: unknown record {key!r}")
        except (IndexError, ValueError):
            raise ConfigError(f"line {i}: malformed {key!r} record") from None
    missing = {"n", "k", "randomness", "m0_alphabet", "m1_alphabet"} - set(head)
    if missing:
        raise ConfigError(f"scheme header lacks {sorted(missing)}")
    n, k, rb, a0, a1 = (head[key] for key in ("n", "k", "randomness", "m0_alphabet", "m1_alphabet"))
    N, S, Rn = 2 ** n, 2 ** k, 2 ** rb
    m0 = np.full((N, S, Rn), -1, dtype=np.int64)
    m1 = np.full((N, Rn), -1, dtype=np.int64)
    try:
        for x, s, r, v in m0l:
            m0[x, s, r] = v
        for y, r, v in m1l:
            m1[y, r] = v
    except IndexError:
        raise ConfigError("message record index out of range") from None
    if (m0 < 0).any() or (m1 < 0).any():
        raise ConfigError("message tables are not total")
    dec = None
    if decl:
        dec = np.full((a0, N, a1, N), -1, dtype=np.int64)
        for u, x, v, y, s in decl:
            dec[u, x, v, y] = s
        if (dec < 0).any():
            raise ConfigError("decoder table is not total")
    return CDSScheme(n, k, rb, m0, m1, a0, a1, dec)


def load_cds(path) -> CDSScheme:
    return parse_cds(Path(path).read_text())


def save_cds(c: CDSScheme, path) -> None:
    Path(path).write_text(format_cds(c))


# ---------------------------------------------------------------------- CDQS

SECRET, PAD, C0, C1 = "Q", "P", "C0", "C1"


@dataclass
class CDQSScheme:
    """Per-input joint encodings ``Q -> M`` (shared randomness correlates the two
    senders, so only the joint map is well defined) and referee decoders."""

    n: int
    d_q: int
    encoders: dict
    decoders: dict
    randomness_bits: int = 0
    resource: PureState | None = None
    message_qubits: float = 0.0
    name: str = ""


def pauli_pad(a: int, b: int, m: int) -> np.ndarray:
    """``X^a Z^b`` on ``m`` qubits; bit ``i`` of ``a`` (big-endian) acts on qubit ``i``."""
    x = np.array([[0, 1], [1, 0]])
    z = np.diag([1, -1])
    out = np.ones((1, 1))
    for i in range(m):
        ai = (a >> (m - 1 - i)) & 1
        bi = (b >> (m - 1 - i)) & 1
        out = np.kron(out, np.linalg.matrix_power(x, ai) @ np.linalg.matrix_power(z, bi))
    return out


def cds_to_cdqs(c: CDSScheme) -> CDQSScheme:
    """One-time pad the quantum secret with a key hidden by the classical scheme."""
    if c.k % 2:
        raise DomainError(f"the classical secret must have an even number of bits, got k={c.k}")
    m = c.k // 2
    d = 2 ** m
    N, S, Rn = 2 ** c.n, 2 ** c.k, 2 ** c.randomness_bits
    in_lay = SubsystemLayout(((SECRET, d),))
    out_lay = SubsystemLayout(((PAD, d), (C0, c.a0), (C1, c.a1)))
    pads = [pauli_pad(s >> m, s & (d - 1), m) for s in range(S)]
    e0, e1 = np.eye(c.a0), np.eye(c.a1)
    enc, dec = {}, {}
    w = 1 / sqrt(S * Rn)
    for x in range(N):
        for y in range(N):
            ops = []
            for s in range(S):
                for r in range(Rn):
                    tag = np.kron(e0[c.m0[x, s, r]], e1[c.m1[y, r]])[None, :]
                    ops.append(w * np.kron(pads[s], tag.T))
            enc[x, y] = QuantumChannel(in_lay, out_lay, ops)
            dops = []
            for u in range(c.a0):
                for v in range(c.a1):
                    s = int(c.dec[u, x, v, y])
                    undo = pads[s].conj().T
                    bra = np.kron(e0[u], e1[v])[None, :]
                    dops.append(np.kron(undo, bra))
            dec[x, y] = QuantumChannel(out_lay, in_lay, dops)
    return CDQSScheme(c.n, d, enc, dec, c.randomness_bits, None, c.comm_bits + m, name="padded")


@dataclass
class CDQSReport:
    f: TruthTable
    ent_fidelity: np.ndarray  # decode o encode on Psi+, f = 1 inputs (nan elsewhere)
    correct_lower: float
    correct_upper: float
    secure_lower: float
    secure_upper: float
    notes: list = field(default_factory=list)

    def perfect(self, tol: float = 1e-9) -> bool:
        return self.correct_upper <= tol and self.secure_upper <= tol


def verify_cdqs(q: CDQSScheme, f: TruthTable) -> CDQSReport:
    """Diamond-norm brackets from a maximally entangled test input.

    Lower bounds use ``|| (id (x) Phi)(Psi+) ||_1``. Upper bounds use
    ``d * || J ||_1`` and, for correctness, ``2 sqrt(1 - F_e)``.
    """
    if f.n != q.n:
        raise ConfigError(f"scheme has n={q.n} but f has n={f.n}")
    d = q.d_q
    N = 2 ** q.n
    ref = "ref"
    fe = np.full((N, N), np.nan)
    c_lo = c_hi = s_lo = s_hi = 0.0
    for x in range(N):
        for y in range(N):
            enc = q.encoders[x, y]
            in_label = enc.input_layout.labels
            psi = maximally_entangled(d, (ref, "in")).density()
            psi = DensityMatrix.trusted(SubsystemLayout(((ref, d),)) + enc.input_layout, psi.data)
            out = apply_channel(enc, psi, in_label)
            if f.table[x, y]:
                dec = q.decoders[x, y]
                back = apply_channel(dec, out, enc.output_layout.labels)
                target = psi.data
                fid = float(np.real(np.vdot(target.reshape(-1), back.data.reshape(-1))))
                fe[x, y] = fid
                lo = trace_norm(back.data - target)
                c_lo = max(c_lo, lo)
                c_hi = max(c_hi, min(d * lo, 2 * sqrt(max(0.0, 1 - fid))))
            else:
                dm = out.data.shape[0] // d
                t = out.data.reshape(d, dm, d, dm)
                sim = np.einsum("imin->mn", t)
                lo = trace_norm(out.data - np.kron(np.eye(d) / d, sim))
                s_lo = max(s_lo, lo)
                s_hi = max(s_hi, d * lo)
    notes = ["lower bounds: maximally entangled test input",
             f"upper bounds: d_Q * lower (d_Q = {d}); correctness also 2*sqrt(1 - F_e)"]
    return CDQSReport(f, fe, c_lo, c_hi, s_lo, s_hi, notes)


def fr_to_cdqs(p: NLQCProtocol, f: TruthTable, tol: float = 1e-9) -> CDQSScheme:
    """CDQS whose messages are everything Bob holds after the routing round
    (``M0'`` from Alice and his own ``M1'``), decoded with Bob's routing decoder."""
    rep = verify_routing(p, f)
    if not rep.perfect(tol):
        raise PreconditionError(f"routing is not perfect (eps0={rep.eps0:.3g}, eps1={rep.eps1:.3g})")
    lay, grid = reduced_grid(p, (M0P,), (M1P,))
    in_lay = SubsystemLayout(((Q, 2),))
    out_lay = lay.select(MP_SIDE)
    enc = {}
    for x in range(p.size):
        for y in range(p.size):
            enc[x, y] = channel_from_choi(grid[x, y], in_lay, out_lay)
    msg = log2(out_lay.dim)
    return CDQSScheme(p.n, 2, enc, dict(p.bob_decoders), 0, p.resource, msg, name=f"from {p.name}")


def cdqs_resource_rank(q: CDQSScheme) -> int:
    if q.resource is None:
        return 1
    lay = q.resource.layout
    if 1 in lay.dims:
        return 1
    return schmidt_rank(q.resource, (lay.labels[0],))


def cdqs_to_frouting_params(eps: float, delta: float, n_e: float, n_m: float) -> tuple[float, float, float]:
    """(correctness, resource qubits, message qubits) of the f-routing protocol a CDQS
    scheme implies; the construction itself is not built."""
    if not (0 <= eps and 0 <= delta):
        raise ConfigError("eps and delta must be nonnegative")
    return max(eps, 2 * sqrt(delta)), n_e, 4 * (n_m + n_e)


@dataclass
class RandomnessBound:
    pp_bits: float
    pc_bits: float
    pp_rank: int
    pc_rank: int

    @property
    def pp_degenerate(self) -> bool:
        return self.pp_rank <= 1

    @property
    def pc_degenerate(self) -> bool:
        return self.pc_rank <= 1


def randomness_bound(f: TruthTable) -> RandomnessBound:
    """Shared-randomness lower bounds for perfectly private (pp) and perfectly correct (pc) CDS."""
    pp = triangular_bound(support_pattern(f)).lower_bound
    pc = triangular_bound(support_pattern(negate(f))).lower_bound
    val = lambda r: 0.25 * log2(r) if r >= 1 else 0.0
    return RandomnessBound(val(pp), val(pc), pp, pc)
