"""Boolean functions on pairs of n-bit strings, stored as 2^n x 2^n truth tables.

Rows are indexed by Alice's input ``x`` and columns by Bob's input ``y``; an
integer index is read as a big-endian bitstring, so ``x = 1`` with ``n = 2``
is the string ``"01"``.
"""
from __future__ import annotations

from pathlib import Path
from typing import Callable

import numpy as np

from .errors import ConfigError, InvalidDimensionError

FAMILIES = ("EQ", "NEQ", "GT", "LT", "DISJ", "INT", "IP")
EXTRA_FAMILIES = ("AND", "ZERO", "ONE")


def to_bits(i: int, n: int) -> str:
    return format(i, f"0{n}b") if n else ""


def parse_input(v, n: int) -> int:
    """Accept an integer index or a bitstring of length ``n``."""
    if isinstance(v, (int, np.integer)):
        if not 0 <= v < 2 ** n:
            raise ConfigError(f"input {v} out of range for n={n}")
        return int(v)
    s = str(v)
    if len(s) != n or set(s) - {"0", "1"}:
        raise ConfigError(f"input {s!r} is not a bitstring of length {n}")
    return int(s, 2)


class TruthTable:
    __slots__ = ("n", "table", "name")

    def __init__(self, n: int, table, name: str = ""):
        t = np.asarray(table)
        if n < 0 or t.shape != (2 ** n, 2 ** n):
            raise InvalidDimensionError(f"truth table must be {2 ** n}x{2 ** n}, got {t.shape}")
        if not np.isin(t, (0, 1)).all():
            raise ConfigError("truth table entries must be 0 or 1")
        t = t.astype(np.uint8)
        t.setflags(write=False)
        self.n = n
        self.table = t
        self.name = name

    def __call__(self, x, y) -> int:
        return int(self.table[parse_input(x, self.n), parse_input(y, self.n)])

    def __eq__(self, other):
        return isinstance(other, TruthTable) and self.n == other.n and np.array_equal(self.table, other.table)

    def __hash__(self):
        return hash((self.n, self.table.tobytes()))

    def __repr__(self):
        return f"TruthTable({self.name or '?'}, n={self.n})"

    @property
    def size(self) -> int:
        return 2 ** self.n

    def zeros(self):
        return [(int(x), int(y)) for x, y in zip(*np.nonzero(self.table == 0))]

    def ones(self):
        return [(int(x), int(y)) for x, y in zip(*np.nonzero(self.table == 1))]

    def row_depends_on_y(self, x: int) -> bool:
        row = self.table[x]
        return bool(row.min() != row.max())

    def depends_only_on_x(self) -> bool:
        return not any(self.row_depends_on_y(x) for x in range(self.size))


class ZeroPattern:
    """Which entries of a matrix are forced nonzero (True) or forced zero (False)."""

    __slots__ = ("n", "pattern")

    def __init__(self, n: int | None, pattern):
        p = np.asarray(pattern, dtype=bool)
        if p.ndim != 2:
            raise InvalidDimensionError("pattern must be a 2-D array")
        if n is not None and p.shape != (2 ** n, 2 ** n):
            raise InvalidDimensionError(f"pattern must be {2 ** n}x{2 ** n}, got {p.shape}")
        p = p.copy()
        p.setflags(write=False)
        self.n = n
        self.pattern = p

    @classmethod
    def from_array(cls, pattern) -> "ZeroPattern":
        p = np.asarray(pattern, dtype=bool)
        r, c = p.shape
        n = None
        if r == c and r & (r - 1) == 0:
            n = r.bit_length() - 1
        return cls(n, p)

    def complement(self) -> "ZeroPattern":
        return ZeroPattern(self.n, ~self.pattern)

    def __eq__(self, other):
        return isinstance(other, ZeroPattern) and np.array_equal(self.pattern, other.pattern)

    def __hash__(self):
        return hash((self.pattern.shape, self.pattern.tobytes()))

    def __repr__(self):
        return f"ZeroPattern({self.pattern.shape[0]}x{self.pattern.shape[1]})"


def from_predicate(n: int, pred: Callable[[int, int], bool], name: str = "") -> TruthTable:
    N = 2 ** n
    t = np.array([[1 if pred(x, y) else 0 for y in range(N)] for x in range(N)], dtype=np.uint8)
    return TruthTable(n, t, name)


def make_family(family: str, n: int) -> TruthTable:
    """Named function families.

    GT is ``x >= y`` and LT its mirror ``x <= y``; both contain the diagonal.
    AND is the conjunction of all 2n input bits, which at n = 1 equals INT.
    """
    if n < 1:
        raise InvalidDimensionError(f"n must be at least 1, got {n}")
    fam = family.upper()
    N = 2 ** n
    x = np.arange(N)[:, None]
    y = np.arange(N)[None, :]
    if fam == "EQ":
        t = x == y
    elif fam == "NEQ":
        t = x != y
    elif fam == "GT":
        t = x >= y
    elif fam == "LT":
        t = x <= y
    elif fam == "DISJ":
        t = (x & y) == 0
    elif fam == "INT":
        t = (x & y) != 0
    elif fam == "IP":
        t = np.vectorize(lambda v: bin(v).count("1") % 2)(x & y) == 1
    elif fam == "AND":
        t = (x == N - 1) & (y == N - 1)
    elif fam == "ZERO":
        t = np.zeros((N, N), dtype=bool)
    elif fam == "ONE":
        t = np.ones((N, N), dtype=bool)
    else:
        raise ConfigError(f"unknown function family {family!r}")
    return TruthTable(n, np.broadcast_to(t, (N, N)).astype(np.uint8), fam)


def negate(f: TruthTable) -> TruthTable:
    name = f"NOT({f.name})" if f.name else ""
    return TruthTable(f.n, 1 - f.table, name)


def support_pattern(f: TruthTable) -> ZeroPattern:
    return ZeroPattern(f.n, f.table == 1)


# ------------------------------------------------------------------ text format

def format_truth_table(f: TruthTable) -> str:
    lines = [str(f.n)] + ["".join(str(int(v)) for v in row) for row in f.table]
    return "\n".join(lines) + "\n"


def parse_truth_table(text: str, name: str = "") -> TruthTable:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise ConfigError("empty truth table")
    try:
        n = int(lines[0])
    except ValueError:
        raise ConfigError(f"first line must be n, got {lines[0]!r}") from None
    N = 2 ** n
    rows = lines[1:]
    if len(rows) != N or any(len(r) != N or set(r) - {"0", "1"} for r in rows):
        raise ConfigError(f"expected {N} lines of {N} characters in {{0,1}}")
    return TruthTable(n, np.array([[int(c) for c in r] for r in rows]), name)


def load_truth_table(path) -> TruthTable:
    p = Path(path)
    return parse_truth_table(p.read_text(), name=p.stem)


def save_truth_table(f: TruthTable, path) -> None:
    Path(path).write_text(format_truth_table(f))
