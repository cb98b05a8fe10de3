"""One-round non-local quantum computation protocols.

Alice holds ``Q`` (maximally entangled with a reference ``R``) and her half
``E_A`` of the resource state; Bob holds ``E_B``. In the single round Alice
applies ``N^x : (Q, E_A) -> (M0, M0')`` and Bob ``M^y : E_B -> (M1', M1)``.
After communication Alice holds ``M = (M0, M1)`` and Bob ``M' = (M0', M1')``.
Classical data travels as computational-basis registers inside these systems.
"""
from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import count
from math import log2, prod
from pathlib import Path

import numpy as np

from .boolfn import TruthTable, from_predicate, parse_input, to_bits
from .errors import ConfigError, DomainError, LabelError
from .qmath import (
    DensityMatrix,
    PureState,
    QuantumChannel,
    SubsystemLayout,
    apply_channel_pure,
    maximally_entangled,
    random_channel,
    schmidt_rank,
    tensor,
)

R, Q, E_A, E_B = "R", "Q", "E_A", "E_B"
M0, M1, M0P, M1P = "M0", "M1", "M0'", "M1'"
ALICE_OUT = (M0, M0P)
BOB_OUT = (M1P, M1)
M_SIDE = (M0, M1)
MP_SIDE = (M0P, M1P)
ENV_A, ENV_B = "env_A", "env_B"

_I2 = np.eye(2)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Z = np.diag([1, -1]).astype(complex)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)


def _bell_states() -> np.ndarray:
    """``B[k] = (I (x) X^b Z^a)|Phi+>`` as 2x2 arrays, register value ``k = 2a + b``."""
    phi = np.eye(2, dtype=complex) / np.sqrt(2)
    out = np.empty((4, 2, 2), dtype=complex)
    for a in (0, 1):
        for b in (0, 1):
            p = np.linalg.matrix_power(PAULI_X, b) @ np.linalg.matrix_power(PAULI_Z, a)
            out[2 * a + b] = phi @ p.T
    return out


BELL = _bell_states()


def pauli_correction(a: int, b: int) -> np.ndarray:
    """Undo an accumulated teleportation frame ``X^b Z^a`` (up to phase)."""
    return np.linalg.matrix_power(PAULI_Z, a) @ np.linalg.matrix_power(PAULI_X, b)


# ------------------------------------------------------------------- protocol

class NLQCProtocol:
    """Resource state, first-round channels and (optionally) routing decoders.

    Channel maps are keyed by integer inputs; decoders by ``(x, y)``.
    """

    def __init__(self, n: int, resource: PureState, alice_channels, bob_channels,
                 alice_decoders=None, bob_decoders=None, name: str = ""):
        self.n = n
        self.resource = resource
        self.alice_channels = {parse_input(k, n): v for k, v in alice_channels.items()}
        self.bob_channels = {parse_input(k, n): v for k, v in bob_channels.items()}
        self.alice_decoders = {self._key(k): v for k, v in (alice_decoders or {}).items()}
        self.bob_decoders = {self._key(k): v for k, v in (bob_decoders or {}).items()}
        self.name = name
        self._validate()

    def _key(self, k):
        if isinstance(k, str):
            x, y = k.split(":")
            return parse_input(x, self.n), parse_input(y, self.n)
        return parse_input(k[0], self.n), parse_input(k[1], self.n)

    @property
    def size(self) -> int:
        return 2 ** self.n

    @property
    def has_decoders(self) -> bool:
        return bool(self.alice_decoders)

    def _validate(self):
        if self.resource.layout.labels != (E_A, E_B):
            raise ConfigError(f"resource must live on ({E_A}, {E_B}), got {self.resource.layout.labels}")
        d_a, d_b = self.resource.layout.dims
        inputs = set(range(self.size))
        for side, chans in (("Alice", self.alice_channels), ("Bob", self.bob_channels)):
            if set(chans) != inputs:
                raise ConfigError(f"{side}'s channel map is not total over {{0,1}}^{self.n}")
        first = self.alice_channels[0]
        for ch in self.alice_channels.values():
            if ch.input_layout.labels != (Q, E_A) or ch.input_layout.dims != (2, d_a):
                raise ConfigError(f"Alice channel input must be (Q:2, E_A:{d_a}), got {ch.input_layout.factors}")
            if ch.output_layout != first.output_layout or ch.output_layout.labels != ALICE_OUT:
                raise ConfigError("Alice channels must all output (M0, M0') with fixed dimensions")
        first = self.bob_channels[0]
        for ch in self.bob_channels.values():
            if ch.input_layout.labels != (E_B,) or ch.input_layout.dims != (d_b,):
                raise ConfigError(f"Bob channel input must be (E_B:{d_b}), got {ch.input_layout.factors}")
            if ch.output_layout != first.output_layout or ch.output_layout.labels != BOB_OUT:
                raise ConfigError("Bob channels must all output (M1', M1) with fixed dimensions")
        grid = {(x, y) for x in inputs for y in inputs}
        for side, decs, want in (("Alice", self.alice_decoders, M_SIDE),
                                 ("Bob", self.bob_decoders, MP_SIDE)):
            if not decs:
                continue
            if set(decs) != grid:
                raise ConfigError(f"{side}'s decoder map is not total over all input pairs")
            dims = self.output_dims(want)
            for d in decs.values():
                if d.input_layout.labels != want or d.input_layout.dims != dims:
                    raise ConfigError(f"{side} decoder must read {want} with dims {dims}")
                if d.output_layout.dims != (2,):
                    raise ConfigError(f"{side} decoder must output a qubit")
        if bool(self.alice_decoders) != bool(self.bob_decoders):
            raise ConfigError("decoders must be given for both sides or neither")

    def output_layout(self) -> SubsystemLayout:
        a = self.alice_channels[0].output_layout
        b = self.bob_channels[0].output_layout
        return a + b

    def output_dims(self, labels) -> tuple[int, ...]:
        lay = self.output_layout()
        return tuple(lay.dim_of(lab) for lab in labels)

    def channel(self, side: str, v):
        v = parse_input(v, self.n)
        chans = self.alice_channels if side == "alice" else self.bob_channels
        if v not in chans:
            raise ConfigError(f"no {side} channel for input {v}")
        return chans[v]

    def __repr__(self):
        return f"NLQCProtocol({self.name or '?'}, n={self.n}, d_E={self.resource.layout.dims})"


def entanglement_cost(p: NLQCProtocol) -> float:
    """log2 of the resource's Schmidt rank across the Alice/Bob cut."""
    if p.resource.layout.dim_of(E_A) == 1 or p.resource.layout.dim_of(E_B) == 1:
        return 0.0
    return log2(schmidt_rank(p.resource, (E_A,)))


def resource_schmidt_rank(p: NLQCProtocol) -> int:
    if p.resource.layout.dim_of(E_A) == 1 or p.resource.layout.dim_of(E_B) == 1:
        return 1
    return schmidt_rank(p.resource, (E_A,))


# ------------------------------------------------------------------ mid-state

@dataclass(frozen=True)
class MidState:
    """Purified mid-protocol state.

    ``state`` lives on ``(R, M0, M1, M0', M1')`` followed by environment
    factors of the Stinespring dilations; ``rho`` traces those out.
    """

    state: PureState
    x: int
    y: int
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def rho(self) -> DensityMatrix:
        if "rho" not in self._cache:
            self._cache["rho"] = self.state.reduced((R,) + M_SIDE + MP_SIDE)
        return self._cache["rho"]

    def reduced(self, labels) -> DensityMatrix:
        key = tuple(labels)
        if key not in self._cache:
            self._cache[key] = self.state.reduced(labels)
        return self._cache[key]

    @property
    def d_r(self) -> int:
        return self.state.layout.dim_of(R)


def initial_state(p: NLQCProtocol) -> PureState:
    return tensor(maximally_entangled(2, (R, Q)), p.resource)


def compute_mid_state(p: NLQCProtocol, x, y) -> MidState:
    x, y = parse_input(x, p.n), parse_input(y, p.n)
    psi = initial_state(p)
    psi = apply_channel_pure(p.channel("alice", x), psi, (Q, E_A), ENV_A)
    psi = apply_channel_pure(p.channel("bob", y), psi, (E_B,), ENV_B)
    envs = tuple(lab for lab in (ENV_A, ENV_B) if lab in psi.layout)
    return MidState(psi.reorder((R,) + M_SIDE + MP_SIDE + envs), x, y)


def _padded_kraus(chans: list[QuantumChannel]) -> np.ndarray:
    kmax = max(len(c.kraus) for c in chans)
    dout, din = chans[0].kraus[0].shape
    out = np.zeros((len(chans), kmax, dout, din), dtype=complex)
    for i, c in enumerate(chans):
        out[i, : len(c.kraus)] = c.stacked()
    return out


def reduced_grid(p: NLQCProtocol, alice_keep=(), bob_keep=(), xs=None, ys=None,
                 jobs: int = 1) -> tuple[SubsystemLayout, np.ndarray]:
    """Reduced mid-protocol states on ``R`` plus the chosen output systems,
    for every input pair at once.

    Returns the layout ``(R, *alice_keep, *bob_keep)`` and an array of shape
    ``(len(xs), len(ys), d, d)``. The Alice side is evaluated once per ``x``
    and the Bob side once per ``y``.
    """
    xs = list(range(p.size)) if xs is None else [parse_input(v, p.n) for v in xs]
    ys = list(range(p.size)) if ys is None else [parse_input(v, p.n) for v in ys]
    a_keep = tuple(lab for lab in ALICE_OUT if lab in alice_keep)
    b_keep = tuple(lab for lab in BOB_OUT if lab in bob_keep)
    if set(alice_keep) - set(ALICE_OUT) or set(bob_keep) - set(BOB_OUT):
        raise LabelError("alice_keep must be drawn from (M0, M0') and bob_keep from (M1', M1)")
    d_a, d_b = p.resource.layout.dims
    a_lay = p.alice_channels[0].output_layout
    b_lay = p.bob_channels[0].output_layout
    dm0, dm0p = a_lay.dims
    dm1p, dm1 = b_lay.dims

    psi = initial_state(p).amplitudes.reshape(2, 2 * d_a, d_b)

    # Alice: sigma[x, r, ka, e, s, kc, g] with the dropped Alice output traced out
    ka = _padded_kraus([p.alice_channels[x] for x in xs]).reshape(len(xs), -1, dm0, dm0p, 2 * d_a)
    nk = ka.shape[1]
    if a_keep == (M0,):
        ka_k = ka
    elif a_keep == (M0P,):
        ka_k = ka.transpose(0, 1, 3, 2, 4)
    elif a_keep:
        ka_k = ka.reshape(len(xs), nk, dm0 * dm0p, 1, 2 * d_a)
    else:
        ka_k = ka.reshape(len(xs), nk, 1, dm0 * dm0p, 2 * d_a)
    phi = np.einsum("xkcdi,rie->xkrced", ka_k, psi, optimize=True)
    sigma = np.einsum("xkrced,xksfgd->xrcesfg", phi, phi.conj(), optimize=True)
    dka = sigma.shape[2]

    kb = _padded_kraus([p.bob_channels[y] for y in ys]).reshape(len(ys), -1, dm1p, dm1, d_b)
    if b_keep == (M1P,):
        kb_k = kb
    elif b_keep == (M1,):
        kb_k = kb.transpose(0, 1, 3, 2, 4)
    elif b_keep:
        kb_k = kb.reshape(len(ys), kb.shape[1], dm1p * dm1, 1, d_b)
    else:
        kb_k = kb.reshape(len(ys), kb.shape[1], 1, dm1p * dm1, d_b)
    dkb = kb_k.shape[2]

    def block(xi: slice):
        s = sigma[xi]
        out = np.einsum("yjkde,xrcesfg,yjldg->xyrcksfl", kb_k, s, kb_k.conj(), optimize=True)
        nx = out.shape[0]
        d = 2 * dka * dkb
        return out.reshape(nx, len(ys), d, d)

    if jobs > 1 and len(xs) > 1:
        chunks = np.array_split(np.arange(len(xs)), min(jobs, len(xs)))
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(lambda c: block(slice(c[0], c[-1] + 1)), chunks))
        grid = np.concatenate(parts, axis=0)
    else:
        grid = block(slice(None))

    full_lay = SubsystemLayout(((R, 2),)) + a_lay + b_lay
    layout = full_lay.select((R,) + a_keep + b_keep)
    return layout, grid


# ------------------------------------------------------------------------ zoo

def _trivial_resource() -> PureState:
    return PureState(SubsystemLayout(((E_A, 1), (E_B, 1))), [1.0])


def _reset_channel(in_layout: SubsystemLayout) -> QuantumChannel:
    """Discard the input and prepare |0> on a qubit."""
    ops = []
    for j in range(in_layout.dim):
        k = np.zeros((2, in_layout.dim), dtype=complex)
        k[0, j] = 1
        ops.append(k)
    return QuantumChannel(in_layout, SubsystemLayout(((Q, 2),)), ops)


def _select_channel(in_layout: SubsystemLayout, label: str) -> QuantumChannel:
    """Keep the qubit factor ``label``, trace out the rest."""
    lab_i = in_layout.index(label)
    dims = in_layout.dims
    rest = [d for i, d in enumerate(dims) if i != lab_i]
    ops = []
    for r in np.ndindex(*rest):
        k = np.zeros((2, in_layout.dim), dtype=complex)
        for t in (0, 1):
            full = list(r)
            full.insert(lab_i, t)
            k[t, np.ravel_multi_index(full, dims)] = 1
        ops.append(k)
    return QuantumChannel(in_layout, SubsystemLayout(((Q, 2),)), ops)


def zoo_protocol(kind: str, f: TruthTable) -> NLQCProtocol:
    """Reference protocols that use no entanglement.

    ``constant0`` keeps Q with Alice, ``constant1`` sends it to Bob,
    ``x_only`` decides by ``f(x, .)`` (which must not depend on y), and
    ``discard`` throws Q away and emits fixed states.
    """
    n = f.n
    res = _trivial_resource()
    kind = kind.replace("-", "_").lower()
    in_a = SubsystemLayout(((Q, 2), (E_A, 1)))
    in_b = SubsystemLayout(((E_B, 1),))
    out_b = SubsystemLayout(((M1P, 1), (M1, 1)))
    bob = {y: QuantumChannel(in_b, out_b, [np.eye(1)]) for y in range(2 ** n)}
    e0 = np.array([[1], [0]], dtype=complex)

    if kind == "constant0":
        out_a = SubsystemLayout(((M0, 2), (M0P, 1)))
        alice = {x: QuantumChannel(in_a, out_a, [np.eye(2)]) for x in range(2 ** n)}
        route = lambda x, y: 0
    elif kind == "constant1":
        out_a = SubsystemLayout(((M0, 1), (M0P, 2)))
        alice = {x: QuantumChannel(in_a, out_a, [np.eye(2)]) for x in range(2 ** n)}
        route = lambda x, y: 1
    elif kind == "x_only":
        if not f.depends_only_on_x():
            raise DomainError("x_only protocol needs f(x, y) to depend on x alone")
        out_a = SubsystemLayout(((M0, 2), (M0P, 2)))
        keep = np.kron(_I2, e0)  # Q -> M0, |0> on M0'
        send = np.kron(e0, _I2)  # |0> on M0, Q -> M0'
        alice = {x: QuantumChannel(in_a, out_a, [send if f.table[x, 0] else keep]) for x in range(2 ** n)}
        route = lambda x, y: int(f.table[x, 0])
    elif kind == "discard":
        out_a = SubsystemLayout(((M0, 2), (M0P, 2)))
        zz = np.kron(e0, e0)
        ops = [zz @ np.array([[1, 0]]), zz @ np.array([[0, 1]])]
        alice = {x: QuantumChannel(in_a, out_a, ops) for x in range(2 ** n)}
        route = None
    else:
        raise ConfigError(f"unknown zoo protocol {kind!r}")

    a_in = SubsystemLayout(((M0, out_a.dims[0]), (M1, 1)))
    b_in = SubsystemLayout(((M0P, out_a.dims[1]), (M1P, 1)))
    a_dec, b_dec = {}, {}
    for x in range(2 ** n):
        for y in range(2 ** n):
            side = None if route is None else route(x, y)
            a_dec[x, y] = _select_channel(a_in, M0) if side == 0 else _reset_channel(a_in)
            b_dec[x, y] = _select_channel(b_in, M0P) if side == 1 else _reset_channel(b_in)
    return NLQCProtocol(n, res, alice, bob, a_dec, b_dec, name=kind)


def random_protocol(rng: np.random.Generator, n: int, d_e: int = 2, msg_dim: int = 2,
                    n_kraus: int = 2) -> NLQCProtocol:
    """Maximally entangled resource of Schmidt rank ``d_e`` with random channels; no decoders."""
    res = maximally_entangled(d_e, (E_A, E_B)) if d_e > 1 else _trivial_resource()
    in_a = SubsystemLayout(((Q, 2), (E_A, d_e)))
    in_b = SubsystemLayout(((E_B, d_e),))
    out_a = SubsystemLayout(((M0, msg_dim), (M0P, msg_dim)))
    out_b = SubsystemLayout(((M1P, msg_dim), (M1, msg_dim)))
    alice = {x: random_channel(rng, in_a, out_a, n_kraus) for x in range(2 ** n)}
    bob = {y: random_channel(rng, in_b, out_b, n_kraus) for y in range(2 ** n)}
    return NLQCProtocol(n, res, alice, bob, name=f"random(d_E={d_e})")


# ---------------------------------------------------------------- garden hose

Port = "str | int"


def _port_key(p):
    return -1 if p == Q else int(p)


@dataclass(frozen=True)
class Wiring:
    """One party's local wiring for one input.

    ``pairs`` are Bell measurements joining two ports; unmatched ports are
    open. Open ports listed in ``forward`` are shipped to the other party,
    those in ``discard`` are thrown away, the rest are kept.
    """

    pairs: tuple = ()
    forward: tuple = ()
    discard: tuple = ()

    def partner(self, port):
        for i, (u, v) in enumerate(self.pairs):
            if u == port:
                return i, v
            if v == port:
                return i, u
        return None

    def matched(self) -> set:
        return {p for pair in self.pairs for p in pair}

    def open_ports(self, ports) -> list:
        m = self.matched()
        return sorted((p for p in ports if p not in m and p not in self.discard), key=_port_key)

    def kept(self, ports) -> list:
        return [p for p in self.open_ports(ports) if p not in self.forward]

    def forwarded(self) -> list:
        return sorted(self.forward, key=_port_key)


@dataclass(frozen=True)
class Route:
    hops: tuple  # (side, register index) of each Bell measurement on the path
    terminal: tuple  # (side, port)
    holder: str  # "alice" or "bob"


@dataclass
class GardenHoseStrategy:
    """Teleportation routing through ``pipes`` Bell pairs.

    Water (the qubit) starts at Alice's ``Q`` port and follows the matchings;
    pipe ``i`` joins Alice's port ``i`` to Bob's port ``i``. The function
    computed is 1 exactly when the path ends with Bob.
    """

    n: int
    pipes: int
    alice: dict
    bob: dict
    name: str = ""

    def __post_init__(self):
        self.alice = {parse_input(k, self.n): _as_wiring(v) for k, v in self.alice.items()}
        self.bob = {parse_input(k, self.n): _as_wiring(v) for k, v in self.bob.items()}
        self.validate()

    def alice_ports(self) -> list:
        return [Q] + list(range(self.pipes))

    def bob_ports(self) -> list:
        return list(range(self.pipes))

    def validate(self):
        inputs = set(range(2 ** self.n))
        if set(self.alice) != inputs or set(self.bob) != inputs:
            raise ConfigError("wirings must be given for every input string")
        for side, wirings, ports in (("alice", self.alice, self.alice_ports()),
                                     ("bob", self.bob, self.bob_ports())):
            allowed = set(ports)
            for v, w in wirings.items():
                used = [p for pair in w.pairs for p in pair] + list(w.forward) + list(w.discard)
                bad = [p for p in used if p not in allowed]
                if bad:
                    raise ConfigError(f"{side} wiring for {to_bits(v, self.n)} uses unknown ports {bad}")
                if len(set(used)) != len(used):
                    raise ConfigError(f"{side} wiring for {to_bits(v, self.n)} uses a port twice")
                if any(len(pair) != 2 or pair[0] == pair[1] for pair in w.pairs):
                    raise ConfigError(f"{side} wiring for {to_bits(v, self.n)} has a malformed pair")
        for x in inputs:
            for y in inputs:
                self.trace(x, y)

    def trace(self, x, y) -> Route:
        x, y = parse_input(x, self.n), parse_input(y, self.n)
        w = {"A": self.alice[x], "B": self.bob[y]}
        side, port = "A", Q
        hops = []
        for _ in range(2 * self.pipes + 2):
            hit = w[side].partner(port)
            if hit is None:
                if port in w[side].discard:
                    raise ConfigError(f"on input ({to_bits(x, self.n)}, {to_bits(y, self.n)}) "
                                      f"the qubit ends in discarded port {side}{port}")
                here = "alice" if side == "A" else "bob"
                there = "bob" if side == "A" else "alice"
                holder = there if port in w[side].forward else here
                return Route(tuple(hops), (side, port), holder)
            idx, other = hit
            hops.append((side, idx))
            if other == Q:
                raise ConfigError("path returned to the Q port")
            side, port = ("B" if side == "A" else "A"), other
        raise ConfigError("garden-hose path does not terminate")

    def function(self) -> TruthTable:
        return from_predicate(self.n, lambda x, y: self.trace(x, y).holder == "bob",
                              name=self.name or "garden-hose")


def _as_wiring(w) -> Wiring:
    if isinstance(w, Wiring):
        return w
    conv = lambda p: Q if p in (Q, "q") else int(p)
    return Wiring(
        pairs=tuple((conv(u), conv(v)) for u, v in w.get("pairs", ())),
        forward=tuple(conv(p) for p in w.get("forward", ())),
        discard=tuple(conv(p) for p in w.get("discard", ())),
    )


@dataclass
class SideRegisters:
    """Where one party's registers and qubit slots sit inside its two outputs.

    Each output factor is a tensor of sub-axes: ``n_bm`` Bell-outcome
    registers (dim 4, one copy per output) followed by qubit slots (dim 2).
    """

    n_bm: int
    keep_slots: int
    send_slots: int
    keep_slot: dict  # input -> {port: slot}
    send_slot: dict
    measure: bool

    @property
    def keep_axes(self) -> list:
        return [4] * self.n_bm + [2] * self.keep_slots

    @property
    def send_axes(self) -> list:
        return [4] * self.n_bm + [2] * self.send_slots


def _side_registers(wirings: dict, ports: list, measure: bool) -> SideRegisters:
    n_bm = max(len(w.pairs) for w in wirings.values())
    keep_slot, send_slot = {}, {}
    for v, w in wirings.items():
        if measure:
            opened = w.open_ports(ports)
            keep_slot[v] = {p: i for i, p in enumerate(opened)}
            send_slot[v] = dict(keep_slot[v])
        else:
            keep_slot[v] = {p: i for i, p in enumerate(w.kept(ports))}
            send_slot[v] = {p: i for i, p in enumerate(w.forwarded())}
    ks = max(len(s) for s in keep_slot.values())
    ss = max(len(s) for s in send_slot.values())
    return SideRegisters(n_bm, ks, ss, keep_slot, send_slot, measure)


def _side_channel(w: Wiring, v: int, ports: list, regs: SideRegisters, in_layout: SubsystemLayout,
                  out_layout: SubsystemLayout, basis_of=None) -> QuantumChannel:
    """Kraus family for one party's first-round operation on one input."""
    idx = count()
    in_ax = {p: next(idx) for p in ports}
    keep_ax = [next(idx) for _ in regs.keep_axes]
    send_ax = [next(idx) for _ in regs.send_axes]
    env_ax = []
    ops = []
    bm = np.einsum("kuv,kl->kluv", BELL.conj(), np.eye(4))  # [k0, k1, u, v]
    e4 = np.eye(4)[0]
    e2 = np.eye(2)[0]
    for k in range(regs.n_bm):
        if k < len(w.pairs):
            u, t = w.pairs[k]
            ops += [bm, [keep_ax[k], send_ax[k], in_ax[u], in_ax[t]]]
        else:
            ops += [e4, [keep_ax[k]], e4, [send_ax[k]]]
    if regs.measure:
        slots = regs.keep_slot[v]
        for p, s in slots.items():
            h = HADAMARD if basis_of(p) else _I2
            meas = np.einsum("su,st->stu", h, np.eye(2))
            ops += [meas, [keep_ax[regs.n_bm + s], send_ax[regs.n_bm + s], in_ax[p]]]
        for s in range(len(slots), regs.keep_slots):
            ops += [e2, [keep_ax[regs.n_bm + s]], e2, [send_ax[regs.n_bm + s]]]
    else:
        for table, axes, n_slots in ((regs.keep_slot[v], keep_ax, regs.keep_slots),
                                     (regs.send_slot[v], send_ax, regs.send_slots)):
            for p, s in table.items():
                ops += [_I2, [axes[regs.n_bm + s], in_ax[p]]]
            for s in range(len(table), n_slots):
                ops += [e2, [axes[regs.n_bm + s]]]
    for p in sorted(w.discard, key=_port_key):
        a = next(idx)
        env_ax.append(a)
        ops += [_I2, [a, in_ax[p]]]
    out_sub = keep_ax + send_ax + env_ax + [in_ax[p] for p in ports]
    t = np.einsum(*ops, out_sub)
    d_env = 2 ** len(env_ax)
    t = t.reshape(out_layout.dim, d_env, in_layout.dim)
    return QuantumChannel(in_layout, out_layout, [t[:, e, :] for e in range(d_env)])


@dataclass
class CompiledHose:
    protocol: NLQCProtocol
    strategy: GardenHoseStrategy
    alice_regs: SideRegisters
    bob_regs: SideRegisters


def _compile_channels(s: GardenHoseStrategy, measure: bool):
    a_ports, b_ports = s.alice_ports(), s.bob_ports()
    a_regs = _side_registers(s.alice, a_ports, measure)
    b_regs = _side_registers(s.bob, b_ports, measure)
    d = 2 ** s.pipes
    resource = maximally_entangled(d, (E_A, E_B)) if s.pipes else _trivial_resource()
    in_a = SubsystemLayout(((Q, 2), (E_A, d)))
    in_b = SubsystemLayout(((E_B, d),))
    out_a = SubsystemLayout(((M0, prod(a_regs.keep_axes)), (M0P, prod(a_regs.send_axes))))
    out_b = SubsystemLayout(((M1P, prod(b_regs.keep_axes)), (M1, prod(b_regs.send_axes))))

    alice, bob = {}, {}
    for x, w in s.alice.items():
        # an Alice port measured in round one belongs in the Hadamard basis iff it ends with Bob
        basis = lambda p, w=w: p in w.forward
        alice[x] = _side_channel(w, x, a_ports, a_regs, in_a, out_a, basis)
    for y, w in s.bob.items():
        basis = lambda p, w=w: p not in w.forward
        bob[y] = _side_channel(w, y, b_ports, b_regs, in_b, out_b, basis)
    return resource, alice, bob, a_regs, b_regs


def terminal_location(route: Route, x: int, y: int, a_regs: SideRegisters, b_regs: SideRegisters,
                      reader: str):
    """(factor label, sub-axis index) holding the terminal qubit or its measured bit,
    seen from ``reader``'s systems."""
    side, port = route.terminal
    if side == "A":
        regs, v = a_regs, x
        label = M0 if reader == "alice" else M0P
    else:
        regs, v = b_regs, y
        label = M1 if reader == "alice" else M1P
    if regs.measure:
        slot = regs.keep_slot[v][port]
    else:
        own = (side == "A") == (reader == "alice")
        slot = (regs.keep_slot if own else regs.send_slot)[v][port]
    return label, regs.n_bm + slot


def frame_axes(route: Route, reader: str) -> list:
    """Sub-axes carrying the Bell outcomes met along the path, from ``reader``'s systems."""
    out = []
    for side, k in route.hops:
        if side == "A":
            out.append((M0 if reader == "alice" else M0P, k))
        else:
            out.append((M1 if reader == "alice" else M1P, k))
    return out


def _factor_axes(labels, a_regs: SideRegisters, b_regs: SideRegisters):
    axes = {M0: a_regs.keep_axes, M0P: a_regs.send_axes, M1P: b_regs.keep_axes, M1: b_regs.send_axes}
    flat, where = [], {}
    for lab in labels:
        for i, d in enumerate(axes[lab]):
            where[lab, i] = len(flat)
            flat.append(d)
    return flat, where


def _correction_decoder(in_layout: SubsystemLayout, flat_dims, t_axis: int, frame: list) -> QuantumChannel:
    rest = [d for i, d in enumerate(flat_dims) if i != t_axis]
    ops = []
    for r in np.ndindex(*rest):
        full = list(r)
        full.insert(t_axis, 0)
        a = b = 0
        for ax in frame:
            a ^= full[ax] >> 1
            b ^= full[ax] & 1
        c = pauli_correction(a, b)
        k = np.zeros((2, in_layout.dim), dtype=complex)
        for t in (0, 1):
            full[t_axis] = t
            k[:, np.ravel_multi_index(full, flat_dims)] = c[:, t]
        ops.append(k)
    return QuantumChannel(in_layout, SubsystemLayout(((Q, 2),)), ops, check=False)


def garden_hose_compile(s: GardenHoseStrategy) -> NLQCProtocol:
    """Routing protocol with one Bell pair per pipe and Pauli-correcting decoders."""
    return compile_hose(s).protocol


def compile_hose(s: GardenHoseStrategy) -> CompiledHose:
    resource, alice, bob, a_regs, b_regs = _compile_channels(s, measure=False)
    out_a = alice[0].output_layout
    out_b = bob[0].output_layout
    lay = out_a + out_b
    in_alice = lay.select(M_SIDE)
    in_bob = lay.select(MP_SIDE)
    a_dec, b_dec = {}, {}
    for x in range(2 ** s.n):
        for y in range(2 ** s.n):
            route = s.trace(x, y)
            for reader, labels, in_lay, table in (("alice", M_SIDE, in_alice, a_dec),
                                                  ("bob", MP_SIDE, in_bob, b_dec)):
                if route.holder != reader:
                    table[x, y] = _reset_channel(in_lay)
                    continue
                flat, where = _factor_axes(labels, a_regs, b_regs)
                t_axis = where[terminal_location(route, x, y, a_regs, b_regs, reader)]
                frame = [where[loc] for loc in frame_axes(route, reader)]
                table[x, y] = _correction_decoder(in_lay, flat, t_axis, frame)
    p = NLQCProtocol(s.n, resource, alice, bob, a_dec, b_dec, name=s.name or "garden-hose")
    return CompiledHose(p, s, a_regs, b_regs)


# -------------------------------------------------------------------- file I/O

PROTOCOL_FORMAT = "nlqc-protocol"
STRATEGY_FORMAT = "nlqc-garden-hose"
FORMAT_VERSION = 1


def encode_matrix(m) -> dict:
    m = np.asarray(m, dtype=complex)
    flat = m.reshape(-1)
    return {"shape": list(m.shape), "data": [[float(v.real), float(v.imag)] for v in flat]}


def decode_matrix(obj) -> np.ndarray:
    data = np.asarray(obj["data"], dtype=float)
    if data.ndim != 2 or data.shape[1] != 2:
        raise ConfigError("matrix data must be a list of [re, im] pairs")
    return (data[:, 0] + 1j * data[:, 1]).reshape(obj["shape"])


def encode_layout(lay: SubsystemLayout) -> list:
    return [[lab, d] for lab, d in lay.factors]


def decode_layout(obj) -> SubsystemLayout:
    return SubsystemLayout(tuple((str(lab), int(d)) for lab, d in obj))


def encode_channel(ch: QuantumChannel) -> dict:
    return {"input": encode_layout(ch.input_layout), "output": encode_layout(ch.output_layout),
            "kraus": [encode_matrix(k) for k in ch.kraus]}


def decode_channel(obj) -> QuantumChannel:
    return QuantumChannel(decode_layout(obj["input"]), decode_layout(obj["output"]),
                          [decode_matrix(k) for k in obj["kraus"]])


def protocol_to_dict(p: NLQCProtocol) -> dict:
    bits = lambda v: to_bits(v, p.n)
    return {
        "format": PROTOCOL_FORMAT,
        "version": FORMAT_VERSION,
        "name": p.name,
        "n": p.n,
        "resource": {"layout": encode_layout(p.resource.layout),
                     "amplitudes": [[float(v.real), float(v.imag)] for v in p.resource.amplitudes]},
        "alice_channels": {bits(x): encode_channel(c) for x, c in sorted(p.alice_channels.items())},
        "bob_channels": {bits(y): encode_channel(c) for y, c in sorted(p.bob_channels.items())},
        "alice_decoders": {f"{bits(x)}:{bits(y)}": encode_channel(c)
                           for (x, y), c in sorted(p.alice_decoders.items())},
        "bob_decoders": {f"{bits(x)}:{bits(y)}": encode_channel(c)
                         for (x, y), c in sorted(p.bob_decoders.items())},
    }


def protocol_from_dict(obj) -> NLQCProtocol:
    if obj.get("format") != PROTOCOL_FORMAT:
        raise ConfigError(f"not a protocol file (format={obj.get('format')!r})")
    if obj.get("version") != FORMAT_VERSION:
        raise ConfigError(f"unsupported protocol file version {obj.get('version')!r}")
    amps = np.asarray(obj["resource"]["amplitudes"], dtype=float)
    res = PureState(decode_layout(obj["resource"]["layout"]), amps[:, 0] + 1j * amps[:, 1])
    dec = lambda d: {k: decode_channel(v) for k, v in d.items()}
    return NLQCProtocol(int(obj["n"]), res, dec(obj["alice_channels"]), dec(obj["bob_channels"]),
                        dec(obj.get("alice_decoders", {})), dec(obj.get("bob_decoders", {})),
                        name=obj.get("name", ""))


def save_protocol(p: NLQCProtocol, path) -> None:
    Path(path).write_text(json.dumps(protocol_to_dict(p)))


def load_protocol(path) -> NLQCProtocol:
    return protocol_from_dict(json.loads(Path(path).read_text()))


def strategy_to_dict(s: GardenHoseStrategy) -> dict:
    enc = lambda w: {"pairs": [list(p) for p in w.pairs], "forward": list(w.forward),
                     "discard": list(w.discard)}
    return {
        "format": STRATEGY_FORMAT,
        "version": FORMAT_VERSION,
        "name": s.name,
        "n": s.n,
        "pipes": s.pipes,
        "alice": {to_bits(x, s.n): enc(w) for x, w in sorted(s.alice.items())},
        "bob": {to_bits(y, s.n): enc(w) for y, w in sorted(s.bob.items())},
    }


def strategy_from_dict(obj) -> GardenHoseStrategy:
    if obj.get("format") != STRATEGY_FORMAT:
        raise ConfigError(f"not a garden-hose strategy file (format={obj.get('format')!r})")
    if obj.get("version") != FORMAT_VERSION:
        raise ConfigError(f"unsupported strategy file version {obj.get('version')!r}")
    return GardenHoseStrategy(int(obj["n"]), int(obj["pipes"]), dict(obj["alice"]), dict(obj["bob"]),
                              name=obj.get("name", ""))


def load_strategy(path) -> GardenHoseStrategy:
    return strategy_from_dict(json.loads(Path(path).read_text()))


def save_strategy(s: GardenHoseStrategy, path) -> None:
    Path(path).write_text(json.dumps(strategy_to_dict(s), indent=1))


DATA_DIR = Path(__file__).parent / "data"


def fixture_strategy(name: str) -> GardenHoseStrategy:
    """Shipped strategies: ``eq_n1``, ``eq_n2`` (forwarding) and ``eq_n1_hose`` (pure matchings)."""
    path = DATA_DIR / f"{name}.json"
    if not path.exists():
        raise ConfigError(f"no shipped strategy {name!r}")
    return load_strategy(path)
