"""Lower bounds on the rank of any real matrix with a prescribed zero pattern.

A certificate is a sequence of positions ``(r_i, c_i)`` with ``P[r_i, c_i]``
forced nonzero and ``P[r_i, c_j]`` forced zero for ``i < j``. The submatrix on
those rows and columns is then triangular with a nonzero diagonal, so every
conforming matrix has rank at least the sequence length.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations_with_replacement, product
from math import comb

import numpy as np

from .boolfn import ZeroPattern, make_family, negate, support_pattern
from .errors import ConfigError, InternalConsistencyError, SizeError, UnsupportedError

EXACT_MAX_DIM = 8
GRID = (-2, -1, -0.5, 0, 0.5, 1, 2)
SEARCH_BUDGET = 2_000_000
SUPPORTED = ("EQ", "NEQ", "GT", "LT", "DISJ", "INT")
NEGATED = ("NEQ", "INT")


@dataclass(frozen=True)
class RankCertificate:
    lower_bound: int
    method: str  # "diagonal", "triangular-submatrix", "brute-force", "empty"
    rows: tuple = ()
    cols: tuple = ()
    negated: bool = False
    note: str = ""

    def to_text(self) -> str:
        lines = [f"method {self.method}", f"lower_bound {self.lower_bound}",
                 "rows " + " ".join(map(str, self.rows)), "cols " + " ".join(map(str, self.cols))]
        if self.negated:
            lines.append("negated 1")
        if self.note:
            lines.append(f"note {self.note}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "RankCertificate":
        fields = {}
        for ln in text.splitlines():
            if ln.strip():
                key, _, val = ln.strip().partition(" ")
                fields[key] = val.strip()
        try:
            return cls(int(fields["lower_bound"]), fields["method"],
                       tuple(int(v) for v in fields.get("rows", "").split()),
                       tuple(int(v) for v in fields.get("cols", "").split()),
                       fields.get("negated") == "1", fields.get("note", ""))
        except KeyError as e:
            raise ConfigError(f"certificate text lacks {e.args[0]!r}") from None


def _as_bool(p) -> np.ndarray:
    if isinstance(p, ZeroPattern):
        return p.pattern
    return np.asarray(p, dtype=bool)


def verify_certificate(p, cert: RankCertificate) -> bool:
    """Re-check a triangular witness against the pattern."""
    pat = _as_bool(p)
    k = cert.lower_bound
    if cert.method == "brute-force":
        return True
    if len(cert.rows) != k or len(cert.cols) != k:
        return False
    if len(set(cert.rows)) != k or len(set(cert.cols)) != k:
        return False
    sub = pat[np.ix_(cert.rows, cert.cols)]
    if not sub.diagonal().all():
        return False
    return not np.triu(sub, 1).any()


def _row_masks(pat: np.ndarray) -> list:
    return [sum(1 << int(c) for c in np.flatnonzero(row)) for row in pat]


def _pivot(mask: int) -> int:
    return (mask & -mask).bit_length() - 1


def _greedy(pat: np.ndarray, rng: np.random.Generator | None = None) -> list:
    nz = _row_masks(pat)
    rows = set(range(pat.shape[0]))
    cols = (1 << pat.shape[1]) - 1
    chain = []
    while True:
        live = [(bin(nz[r] & cols).count("1"), r) for r in rows if nz[r] & cols]
        if not live:
            return chain
        best = min(c for c, _ in live)
        cands = [r for c, r in live if c == best]
        r = cands[0] if rng is None else cands[int(rng.integers(len(cands)))]
        chain.append((r, _pivot(nz[r] & cols)))
        rows.discard(r)
        cols &= ~nz[r]


def _exact(pat: np.ndarray) -> list:
    nz = _row_masks(pat)
    m = pat.shape[0]

    @lru_cache(maxsize=None)
    def best(rows: int, cols: int) -> tuple:
        out = ()
        live = [r for r in range(m) if rows >> r & 1 and nz[r] & cols]
        if len(live) <= len(out):
            return out
        for r in live:
            if len(out) >= min(len(live), bin(cols).count("1")):
                break
            tail = best(rows & ~(1 << r), cols & ~nz[r])
            if len(tail) + 1 > len(out):
                out = ((r, _pivot(nz[r] & cols)),) + tail
        return out

    return list(best((1 << m) - 1, (1 << pat.shape[1]) - 1))


def triangular_bound(p, restarts: int = 64, seed: int = 0) -> RankCertificate:
    """Largest triangular witness found: exact search up to 8x8, greedy with random
    restarts beyond. The certificate is re-verified before returning."""
    pat = _as_bool(p)
    if not pat.any():
        return RankCertificate(0, "empty")
    cap = min(int(pat.any(axis=1).sum()), int(pat.any(axis=0).sum()))
    chain = _greedy(pat)
    if len(chain) < cap:
        if max(pat.shape) <= EXACT_MAX_DIM:
            chain = _exact(pat)
        else:
            rng = np.random.default_rng(seed)
            for _ in range(restarts):
                cand = _greedy(pat, rng)
                if len(cand) > len(chain):
                    chain = cand
                if len(chain) == cap:
                    break
    rows = tuple(int(r) for r, _ in chain)
    cols = tuple(int(c) for _, c in chain)
    sub = pat[np.ix_(rows, cols)]
    method = "diagonal" if not (sub & ~np.eye(len(rows), dtype=bool)).any() else "triangular-submatrix"
    cert = RankCertificate(len(chain), method, rows, cols)
    if not verify_certificate(pat, cert):
        raise InternalConsistencyError("triangular certificate failed re-verification")
    return cert


# ------------------------------------------------------------- brute force

_SCALED_GRID = np.array([int(2 * v) for v in GRID])  # exact integers, zero pattern unchanged
_mask_cache: dict = {}


def _canonical_columns(m: int) -> np.ndarray:
    """Nonzero grid vectors whose first nonzero entry is positive."""
    vecs = np.array(list(product(_SCALED_GRID, repeat=m)), dtype=np.int64)
    keep = []
    for v in vecs:
        nzi = np.flatnonzero(v)
        if nzi.size and v[nzi[0]] > 0:
            keep.append(v)
    return np.array(keep)


def _achievable(m: int, r: int) -> np.ndarray:
    """For each canonical U (m x r), the set of row-support masks of U v over grid
    vectors v, as a boolean table of shape (n_U, 2^m)."""
    key = (m, r)
    if key in _mask_cache:
        return _mask_cache[key]
    cols = _canonical_columns(m)
    n_u = comb(len(cols) + r - 1, r)
    if n_u > SEARCH_BUDGET:
        raise SizeError(f"grid search over {n_u} factorizations exceeds the budget of {SEARCH_BUDGET}")
    combos = np.array(list(combinations_with_replacement(range(len(cols)), r)), dtype=np.int64)
    vs = np.array(list(product(_SCALED_GRID, repeat=r)), dtype=np.int64)  # (7^r, r)
    weights = 1 << np.arange(m, dtype=np.int64)
    out = np.zeros((len(combos), 1 << m), dtype=bool)
    chunk = max(1, 400_000 // len(vs))
    for start in range(0, len(combos), chunk):
        u = cols[combos[start:start + chunk]]  # (b, r, m)
        a = np.einsum("brm,vr->bvm", u, vs)
        masks = (a != 0).astype(np.int64) @ weights  # (b, v)
        rows = np.repeat(np.arange(len(u)), masks.shape[1])
        out[start + rows, masks.reshape(-1)] = True
    _mask_cache[key] = out
    return out


def grid_upper_bound(p) -> int:
    """Rank of a 0/1 matrix with the pattern is at most the number of distinct nonzero
    rows (or columns), and 0/1 entries lie on the grid."""
    pat = _as_bool(p)
    rows = {tuple(r) for r in pat if r.any()}
    cols = {tuple(c) for c in pat.T if c.any()}
    return min(len(rows), len(cols))


def brute_force_min_rank(p, max_dim: int = EXACT_MAX_DIM) -> int:
    """Smallest r with a grid factorization ``U V^T`` matching the pattern exactly.

    Entries of U and V range over {-2, -1, -1/2, 0, 1/2, 1, 2}. This is an upper
    bound on the real minimum rank for the pattern; it may exceed it.
    """
    pat = _as_bool(p)
    if max(pat.shape) > max_dim:
        raise SizeError(f"pattern {pat.shape} exceeds max_dim={max_dim}")
    if not pat.any():
        return 0
    if pat.shape[0] > pat.shape[1]:
        pat = pat.T
    m = pat.shape[0]
    ub = grid_upper_bound(pat)
    weights = 1 << np.arange(m)
    needed = sorted({int(col.astype(int) @ weights) for col in pat.T})
    for r in range(1, ub):
        table = _achievable(m, r)
        if np.any(table[:, needed].all(axis=1)):
            return r
    return ub


# -------------------------------------------------------------- families

def family_pattern(family: str, n: int) -> tuple[ZeroPattern, bool]:
    fam = family.upper()
    if fam == "IP":
        raise UnsupportedError("inner product has no triangular support structure; the technique does not apply")
    if fam not in SUPPORTED:
        raise ConfigError(f"family must be one of {SUPPORTED}, got {family!r}")
    f = make_family(fam, n)
    if fam in NEGATED:
        return support_pattern(negate(f)), True
    return support_pattern(f), False


def family_bound(family: str, n: int) -> RankCertificate:
    """Triangular certificate for a named family; NEQ and INT are certified on the
    support of their negation."""
    pat, neg = family_pattern(family, n)
    cert = triangular_bound(pat)
    return RankCertificate(cert.lower_bound, cert.method, cert.rows, cert.cols, neg, cert.note)
