"""f-routing: contract verification, structure functions and rank lower bounds."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from fractions import Fraction
from math import log2

import numpy as np

from .boolfn import TruthTable, to_bits
from .errors import ConfigError, DomainError, InternalConsistencyError, RangeError
from .nlqc import (
    ENV_A,
    E_B,
    M0,
    M0P,
    M1,
    M1P,
    MP_SIDE,
    M_SIDE,
    Q,
    R,
    MidState,
    NLQCProtocol,
    initial_state,
    reduced_grid,
    resource_schmidt_rank,
    entanglement_cost,
)
from .qmath import (
    DensityMatrix,
    apply_channel,
    apply_channel_pure,
    binary_entropy,
    fidelity,
    maximally_entangled,
    mutual_information,
    numerical_rank,
    trace_norm,
    von_neumann_entropy,
)

RANK_TOL = 1e-7
ZERO_TOL = 1e-9
FORM_TOL = 1e-9
VARIANTS = ("FR0", "FR1", "FBB84")


def _check_sizes(p: NLQCProtocol, f: TruthTable | None):
    if f is not None and f.n != p.n:
        raise ConfigError(f"protocol has n={p.n} but f has n={f.n}")


# ------------------------------------------------------------------ routing

@dataclass
class RoutingReport:
    f: TruthTable
    alice_fidelity: np.ndarray
    bob_fidelity: np.ndarray
    eps0: float
    eps1: float

    def perfect(self, tol: float = 1e-9) -> bool:
        return self.eps0 <= tol and self.eps1 <= tol


def _routing_fidelities(p: NLQCProtocol, keep_a, keep_b, decoders, labels, jobs=1) -> np.ndarray:
    lay, grid = reduced_grid(p, keep_a, keep_b, jobs=jobs)
    target = maximally_entangled(2, (R, Q)).density()
    out = np.empty((p.size, p.size))
    for x in range(p.size):
        for y in range(p.size):
            rho = DensityMatrix.trusted(lay, grid[x, y])
            dec = apply_channel(decoders[x, y], rho, labels)
            out[x, y] = fidelity(dec.reorder((R, Q)), target)
    return out


def verify_routing(p: NLQCProtocol, f: TruthTable, jobs: int = 1) -> RoutingReport:
    """Recovery fidelities with the shipped decoders.

    ``eps0`` is the worst Alice-side infidelity over ``f = 0`` inputs and
    ``eps1`` the worst Bob-side infidelity over ``f = 1`` inputs.
    """
    _check_sizes(p, f)
    if not p.has_decoders:
        raise ConfigError("protocol has no routing decoders")
    fa = _routing_fidelities(p, (M0,), (M1,), p.alice_decoders, M_SIDE, jobs)
    fb = _routing_fidelities(p, (M0P,), (M1P,), p.bob_decoders, MP_SIDE, jobs)
    zeros = f.table == 0
    eps0 = float(1 - fa[zeros].min()) if zeros.any() else 0.0
    eps1 = float(1 - fb[~zeros].min()) if (~zeros).any() else 0.0
    return RoutingReport(f, fa, fb, max(eps0, 0.0), max(eps1, 0.0))


def _gap_of(mat: np.ndarray, d_r: int) -> float:
    d_m = mat.shape[0] // d_r
    t = mat.reshape(d_r, d_m, d_r, d_m)
    rho_r = np.einsum("imjm->ij", t)
    rho_m = np.einsum("imin->mn", t)
    return 0.5 * trace_norm(mat - np.kron(rho_r, rho_m))


def decoupling_gap(m: MidState) -> float:
    """Half the one-norm distance of ``rho_RM'`` from ``rho_R (x) rho_M'``."""
    rho = m.reduced((R,) + MP_SIDE)
    return _gap_of(rho.data, m.d_r)


def decoupling_grid(p: NLQCProtocol, jobs: int = 1) -> np.ndarray:
    _, grid = reduced_grid(p, (M0P,), (M1P,), jobs=jobs)
    return np.array([[_gap_of(grid[x, y], 2) for y in range(p.size)] for x in range(p.size)])


# ------------------------------------------------------------ epsilon star

def _margin(eps: float, d_q: int) -> float:
    mu = np.sqrt(max(2 * eps - eps * eps, 0.0))
    lq = log2(d_q)
    return 2 * lq - 2 * mu * lq - (1 + mu) * binary_entropy(mu / (1 + mu))


def epsilon_margin(eps: float, d_q: int) -> float:
    """Positivity expression whose sign decides whether the decoupling argument applies."""
    if not 0 <= eps <= 1:
        raise RangeError(f"eps must lie in [0, 1], got {eps}")
    return _margin(eps, d_q)


def epsilon_star(d_q: int, tol: float = 1e-6) -> float:
    """Smallest infidelity at which the margin stops being strictly positive."""
    if d_q < 2:
        raise RangeError(f"d_Q must be at least 2, got {d_q}")
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _margin(mid, d_q) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------- structure function

def structure_value(mat: np.ndarray, d_r: int, tol: float = FORM_TOL):
    """``tr[(rho_RS - I/d_R (x) rho_S)^2]`` from matrices on ``R (x) S``.

    Accepts a single matrix or a stack ``(..., D, D)``. Cross-checked against
    ``tr rho_RS^2 - tr rho_S^2 / d_R``.
    """
    mat = np.asarray(mat)
    D = mat.shape[-1]
    d_s = D // d_r
    lead = mat.shape[:-2]
    t = mat.reshape(lead + (d_r, d_s, d_r, d_s))
    rho_s = np.einsum("...imin->...mn", t)
    diff = t - np.einsum("ij,...mn->...imjn", np.eye(d_r) / d_r, rho_s)
    direct = np.real(np.sum(np.abs(diff) ** 2, axis=(-4, -3, -2, -1)))
    alt = np.real(np.sum(np.abs(mat) ** 2, axis=(-2, -1)) - np.sum(np.abs(rho_s) ** 2, axis=(-2, -1)) / d_r)
    gap = np.max(np.abs(direct - alt)) if direct.size else 0.0
    if gap > tol:
        raise InternalConsistencyError(f"structure function forms disagree by {gap:.3g}")
    return float(direct) if direct.ndim == 0 else direct


def _side_labels(side: str):
    if side in ("M'", "Mp", "MP", "bob"):
        return "M'", (M0P,), (M1P,)
    if side in ("M", "alice"):
        return "M", (M0,), (M1,)
    raise ConfigError(f"side must be M or M', got {side!r}")


def structure_function(m: MidState, side: str = "M'") -> float:
    side, a, b = _side_labels(side)
    rho = m.reduced((R,) + a + b)
    return structure_value(rho.data, m.d_r)


@dataclass
class StructureMatrix:
    n: int
    G: np.ndarray
    source: str = "frouting"
    side: str = "M'"
    f: TruthTable | None = None
    zero_tol: float = ZERO_TOL

    def __post_init__(self):
        self.G = np.asarray(self.G, dtype=float)
        if self.G.shape != (2 ** self.n, 2 ** self.n):
            raise ConfigError(f"G must be {2 ** self.n}x{2 ** self.n}")
        if self.G.min() < -1e-10:
            raise InternalConsistencyError(f"structure matrix has negative entry {self.G.min()}")

    def nonzero_pattern(self) -> np.ndarray:
        return self.G > self.zero_tol

    def expected_pattern(self) -> np.ndarray | None:
        """Support predicted for a perfect protocol: f itself, or its negation
        for the role-swapped routing matrix on M."""
        if self.f is None:
            return None
        t = self.f.table.astype(bool)
        return ~t if self.side == "M" else t

    def pattern_mismatches(self) -> list:
        want = self.expected_pattern()
        if want is None:
            return []
        bad = np.argwhere(self.nonzero_pattern() != want)
        return [(int(x), int(y)) for x, y in bad]

    @property
    def pattern_matches(self) -> bool:
        return self.f is not None and not self.pattern_mismatches()

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["x", "y", "g", "f"])
        for x in range(2 ** self.n):
            for y in range(2 ** self.n):
                fv = "" if self.f is None else self.f.table[x, y]
                w.writerow([to_bits(x, self.n), to_bits(y, self.n), repr(float(self.G[x, y])), fv])
        return buf.getvalue()


def structure_matrix(p: NLQCProtocol, f: TruthTable | None = None, side: str = "M'",
                     zero_tol: float = ZERO_TOL, jobs: int = 1) -> StructureMatrix:
    """G[x, y] for every input pair; ``side="M"`` gives the role-swapped matrix used for FR1."""
    _check_sizes(p, f)
    side, a, b = _side_labels(side)
    _, grid = reduced_grid(p, a, b, jobs=jobs)
    G = structure_value(grid, 2)
    return StructureMatrix(p.n, G, "frouting", side, f, zero_tol)


# ---------------------------------------------------------------- rank bounds

@dataclass
class RankBound:
    numerical_rank: int
    tol: float
    bound_ebits: float
    variant: str
    degenerate: bool = False
    decomposition_ok: bool | None = None
    singular_values: np.ndarray = field(default=None, repr=False)

    @property
    def exact(self) -> Fraction | None:
        """The bound as a rational when the rank is a power of two."""
        r = self.numerical_rank
        if r < 1 or r & (r - 1):
            return None
        k = r.bit_length() - 1
        return Fraction(k - (1 if self.variant == "FBB84" else 0), 4)

    @property
    def clipped(self) -> float:
        return max(0.0, self.bound_ebits)


def bound_from_rank(rank: int, variant: str) -> float:
    if variant not in VARIANTS:
        raise ConfigError(f"variant must be one of {VARIANTS}, got {variant!r}")
    if rank < 1:
        return 0.0
    if variant == "FBB84":
        return 0.25 * (log2(rank) - 1)
    return 0.25 * log2(rank)


def rank_bound(G, variant: str = "FR0", tol: float = RANK_TOL) -> RankBound:
    mat = G.G if isinstance(G, StructureMatrix) else np.asarray(G, dtype=float)
    r, s = numerical_rank(mat, tol)
    return RankBound(r, tol, bound_from_rank(r, variant), variant, degenerate=r == 0, singular_values=s)


def verify_decomposition(G, d_e: int, tol: float = RANK_TOL) -> bool:
    """Rank of an f-routing structure matrix is at most ``d_E^4``."""
    mat = G.G if isinstance(G, StructureMatrix) else G
    return numerical_rank(mat, tol)[0] <= d_e ** 4


# ------------------------------------------------------------- Omega(1) check

@dataclass
class Omega1Report:
    x0: int
    info_a_r: float  # I(ref : A E_B)
    info_b_r: float  # I(ref : B E_B)
    info_a: float
    info_b: float
    entropy_r: float  # S(E_B)
    d_q: int
    tol: float

    @property
    def target(self) -> float:
        return 2 * log2(self.d_q)

    @property
    def equalities_hold(self) -> bool:
        return abs(self.info_a_r - self.target) <= self.tol and abs(self.info_b_r - self.target) <= self.tol

    @property
    def ssa_holds(self) -> bool:
        ok_a = self.info_a_r <= self.info_a + 2 * self.entropy_r + self.tol
        ok_b = self.info_b_r <= self.info_b + 2 * self.entropy_r + self.tol
        return ok_a and ok_b

    @property
    def entropy_bound_holds(self) -> bool:
        return self.entropy_r >= log2(self.d_q) - self.tol

    @property
    def ok(self) -> bool:
        return self.equalities_hold and self.ssa_holds and self.entropy_bound_holds


def omega1_check(p: NLQCProtocol, f: TruthTable, x0=None, tol: float = 1e-6) -> Omega1Report:
    """Entropy argument that any protocol with a non-constant row needs ``S(E_B) >= log d_Q``.

    Alice's first-round channel at ``x0`` is dilated; ``A`` is what she keeps
    (``M0`` and the purifier), ``B`` what she sends (``M0'``).
    """
    _check_sizes(p, f)
    rows = [x for x in range(p.size) if f.row_depends_on_y(x)]
    if not rows:
        raise DomainError("f has no row that depends on y; the entropy bound is vacuous")
    if x0 is None:
        x0 = rows[0]
    elif x0 not in rows:
        raise DomainError(f"row x0={x0} of f is constant")
    psi = apply_channel_pure(p.alice_channels[x0], initial_state(p), (Q, "E_A"), ENV_A)
    a = (M0, ENV_A) if ENV_A in psi.layout else (M0,)
    rho = psi.density()
    return Omega1Report(
        x0=x0,
        info_a_r=mutual_information(rho, (R,), a + (E_B,)),
        info_b_r=mutual_information(rho, (R,), (M0P, E_B)),
        info_a=mutual_information(rho, (R,), a),
        info_b=mutual_information(rho, (R,), (M0P,)),
        entropy_r=von_neumann_entropy(psi.reduced((E_B,))),
        d_q=2,
        tol=tol,
    )


def soundness(p: NLQCProtocol, rb: RankBound, tol: float = 1e-9) -> bool:
    """The rank bound does not exceed the protocol's entanglement cost."""
    return rb.bound_ebits <= entanglement_cost(p) + tol


__all__ = [
    "RoutingReport", "verify_routing", "decoupling_gap", "decoupling_grid", "epsilon_star",
    "epsilon_margin", "structure_value", "structure_function", "StructureMatrix", "structure_matrix",
    "RankBound", "rank_bound", "bound_from_rank", "verify_decomposition", "Omega1Report",
    "omega1_check", "soundness", "resource_schmidt_rank",
]
