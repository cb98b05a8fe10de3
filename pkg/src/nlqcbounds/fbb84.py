"""f-BB84: both parties must reproduce the referee's outcome on R in basis H^f(x,y)."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .boolfn import TruthTable, parse_input, to_bits
from .errors import ConfigError
from .frouting import RANK_TOL, ZERO_TOL, RankBound, StructureMatrix, rank_bound
from .nlqc import (
    HADAMARD,
    M0,
    M0P,
    M1,
    M1P,
    MP_SIDE,
    M_SIDE,
    E_A,
    E_B,
    Q,
    R,
    GardenHoseStrategy,
    MidState,
    NLQCProtocol,
    _compile_channels,
    _factor_axes,
    _trivial_resource,
    compute_mid_state,
    decode_matrix,
    encode_matrix,
    frame_axes,
    protocol_from_dict,
    protocol_to_dict,
    reduced_grid,
    terminal_location,
)
from .qmath import Povm, QuantumChannel, SubsystemLayout


def referee_projector(q: int, b: int) -> np.ndarray:
    """``H^q |b><b| H^q``."""
    if q not in (0, 1) or b not in (0, 1):
        raise ConfigError(f"q and b must be bits, got {(q, b)}")
    v = np.eye(2)[b]
    if q:
        v = HADAMARD @ v
    return np.outer(v, v.conj())


@dataclass
class BB84Protocol:
    """First-round protocol plus guessing POVMs for Alice (on M) and Bob (on M')."""

    protocol: NLQCProtocol
    alice_povms: dict
    bob_povms: dict

    def __post_init__(self):
        p = self.protocol
        conv = lambda d: {self._key(k): v for k, v in d.items()}
        self.alice_povms = conv(self.alice_povms)
        self.bob_povms = conv(self.bob_povms)
        grid = {(x, y) for x in range(p.size) for y in range(p.size)}
        for side, povms, labels in (("Alice", self.alice_povms, M_SIDE), ("Bob", self.bob_povms, MP_SIDE)):
            if set(povms) != grid:
                raise ConfigError(f"{side}'s POVM map is not total over all input pairs")
            d = int(np.prod(p.output_dims(labels)))
            for povm in povms.values():
                if povm.dim != d:
                    raise ConfigError(f"{side} POVM acts on dimension {povm.dim}, expected {d}")
                if set(povm.labels) - {0, 1}:
                    raise ConfigError(f"{side} POVM outcomes must be bits, got {povm.labels}")

    def _key(self, k):
        n = self.protocol.n
        if isinstance(k, str):
            x, y = k.split(":")
            return parse_input(x, n), parse_input(y, n)
        return parse_input(k[0], n), parse_input(k[1], n)

    @property
    def n(self) -> int:
        return self.protocol.n

    @property
    def name(self) -> str:
        return self.protocol.name


def _povm_element(povm: Povm, b: int, d: int) -> np.ndarray:
    for lab, m in povm.outcomes:
        if lab == b:
            return m
    return np.zeros((d, d))


def success_probability(bp: BB84Protocol, f: TruthTable, x, y) -> float:
    p = bp.protocol
    x, y = parse_input(x, p.n), parse_input(y, p.n)
    if (x, y) not in bp.alice_povms or (x, y) not in bp.bob_povms:
        raise ConfigError(f"missing POVM for input ({x}, {y})")
    m = compute_mid_state(p, x, y)
    dm = int(np.prod(p.output_dims(M_SIDE)))
    dmp = int(np.prod(p.output_dims(MP_SIDE)))
    psi = m.state.amplitudes.reshape(2, dm, dmp, -1)
    q = int(f.table[x, y])
    total = 0.0
    for b in (0, 1):
        la = _povm_element(bp.alice_povms[x, y], b, dm)
        lb = _povm_element(bp.bob_povms[x, y], b, dmp)
        pi = referee_projector(q, b)
        phi = np.einsum("rs,ab,cd,sbde->race", pi, la, lb, psi, optimize=True)
        total += float(np.real(np.vdot(psi, phi)))
    return total


@dataclass
class BB84Report:
    f: TruthTable
    success: np.ndarray

    def perfect(self, tol: float = 1e-9) -> bool:
        return bool(np.all(self.success >= 1 - tol))

    @property
    def worst(self) -> float:
        return float(self.success.min())


def verify_bb84(bp: BB84Protocol, f: TruthTable) -> BB84Report:
    if f.n != bp.n:
        raise ConfigError(f"protocol has n={bp.n} but f has n={f.n}")
    N = 2 ** f.n
    s = np.array([[success_probability(bp, f, x, y) for y in range(N)] for x in range(N)])
    return BB84Report(f, s)


# ------------------------------------------------------- structure function

@dataclass
class Bb84Pair:
    rho0: np.ndarray
    rho1: np.ndarray

    @property
    def overlap(self) -> float:
        return float(np.real(np.trace(self.rho0 @ self.rho1)))


def _pair_from(mat: np.ndarray, d_r: int = 2):
    d = mat.shape[-1] // d_r
    t = mat.reshape(mat.shape[:-2] + (d_r, d, d_r, d))
    return t[..., 0, :, 0, :], t[..., 1, :, 1, :]


def post_measurement_states(m: MidState, side: str = "M") -> Bb84Pair:
    """Unnormalised states on ``side`` after the referee finds R in ``|0>`` or ``|1>``."""
    labels = M_SIDE if side in ("M", "alice") else MP_SIDE
    rho = m.reduced((R,) + labels)
    r0, r1 = _pair_from(rho.data, m.d_r)
    return Bb84Pair(r0, r1)


def structure_function_bb84(m: MidState) -> float:
    return post_measurement_states(m, "M").overlap + post_measurement_states(m, "M'").overlap


def _overlap_grid(grid: np.ndarray) -> np.ndarray:
    r0, r1 = _pair_from(grid)
    return np.real(np.einsum("...ab,...ba->...", r0, r1))


def structure_matrix_bb84(p: NLQCProtocol, f: TruthTable | None = None, zero_tol: float = ZERO_TOL,
                          jobs: int = 1) -> StructureMatrix:
    if f is not None and f.n != p.n:
        raise ConfigError(f"protocol has n={p.n} but f has n={f.n}")
    _, g_m = reduced_grid(p, (M0,), (M1,), jobs=jobs)
    _, g_mp = reduced_grid(p, (M0P,), (M1P,), jobs=jobs)
    G = _overlap_grid(g_m) + _overlap_grid(g_mp)
    return StructureMatrix(p.n, G, "fbb84", "M+M'", f, zero_tol)


def rank_bound_bb84(G, tol: float = RANK_TOL, d_e: int | None = None) -> RankBound:
    """``(log2 rank - 1) / 4``; with ``d_e`` also checks ``rank <= 2 d_E^4``."""
    rb = rank_bound(G, "FBB84", tol)
    if d_e is not None:
        rb.decomposition_ok = rb.numerical_rank <= 2 * d_e ** 4
    return rb


# ----------------------------------------------------------------- protocols

def _bit_povm(d: int, guess: np.ndarray) -> Povm:
    return Povm([(0, np.diag((guess == 0).astype(float))), (1, np.diag((guess == 1).astype(float)))],
                check=False)


def bb84_zoo(kind: str, n: int) -> BB84Protocol:
    """``constant0``: Alice measures Q in the computational basis and broadcasts
    the bit; ``discard``: Q is thrown away and both parties guess 0."""
    in_a = SubsystemLayout(((Q, 2), (E_A, 1)))
    in_b = SubsystemLayout(((E_B, 1),))
    out_a = SubsystemLayout(((M0, 2), (M0P, 2)))
    out_b = SubsystemLayout(((M1P, 1), (M1, 1)))
    kind = kind.lower()
    if kind == "constant0":
        # |b> -> |b>|b>
        ops = [np.outer(np.kron(e, e), e) for e in np.eye(2)]
    elif kind == "discard":
        z = np.zeros(4)
        z[0] = 1
        ops = [np.outer(z, e) for e in np.eye(2)]
    else:
        raise ConfigError(f"unknown BB84 zoo protocol {kind!r}")
    N = 2 ** n
    alice = {x: QuantumChannel(in_a, out_a, ops) for x in range(N)}
    bob = {y: QuantumChannel(in_b, out_b, [np.eye(1)]) for y in range(N)}
    p = NLQCProtocol(n, _trivial_resource(), alice, bob, name=f"bb84-{kind}")
    bit = np.array([0, 1]) if kind == "constant0" else np.array([0, 0])
    povms = {(x, y): _bit_povm(2, bit) for x in range(N) for y in range(N)}
    return BB84Protocol(p, povms, dict(povms))


def garden_hose_bb84(s: GardenHoseStrategy) -> BB84Protocol:
    """Route Q as the strategy does, but measure every open port on arrival in the
    basis matching its destination and copy all outcomes to both parties."""
    resource, alice, bob, a_regs, b_regs = _compile_channels(s, measure=True)
    p = NLQCProtocol(s.n, resource, alice, bob, name=f"bb84-{s.name or 'garden-hose'}")
    a_pov, b_pov = {}, {}
    for x in range(2 ** s.n):
        for y in range(2 ** s.n):
            route = s.trace(x, y)
            q = 1 if route.holder == "bob" else 0
            for reader, labels, table in (("alice", M_SIDE, a_pov), ("bob", MP_SIDE, b_pov)):
                flat, where = _factor_axes(labels, a_regs, b_regs)
                idx = np.indices(flat).reshape(len(flat), -1)
                guess = idx[where[terminal_location(route, x, y, a_regs, b_regs, reader)]].copy()
                for loc in frame_axes(route, reader):
                    k = idx[where[loc]]
                    guess ^= (k >> 1) if q else (k & 1)
                table[x, y] = _bit_povm(guess.size, guess)
    return BB84Protocol(p, a_pov, b_pov)


# ------------------------------------------------------------------- file I/O

def bb84_to_dict(bp: BB84Protocol) -> dict:
    n = bp.n
    enc = lambda povm: [[lab, encode_matrix(m)] for lab, m in povm.outcomes]
    key = lambda k: f"{to_bits(k[0], n)}:{to_bits(k[1], n)}"
    d = protocol_to_dict(bp.protocol)
    d["bb84"] = {
        "alice_povms": {key(k): enc(v) for k, v in sorted(bp.alice_povms.items())},
        "bob_povms": {key(k): enc(v) for k, v in sorted(bp.bob_povms.items())},
    }
    return d


def bb84_from_dict(obj) -> BB84Protocol:
    if "bb84" not in obj:
        raise ConfigError("protocol file has no bb84 section")
    p = protocol_from_dict(obj)
    dec = lambda items: Povm([(int(lab), decode_matrix(m)) for lab, m in items])
    sec = obj["bb84"]
    return BB84Protocol(p, {k: dec(v) for k, v in sec["alice_povms"].items()},
                        {k: dec(v) for k, v in sec["bob_povms"].items()})


def save_bb84(bp: BB84Protocol, path) -> None:
    Path(path).write_text(json.dumps(bb84_to_dict(bp)))


def load_bb84(path) -> BB84Protocol:
    return bb84_from_dict(json.loads(Path(path).read_text()))
