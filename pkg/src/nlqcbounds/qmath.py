"""Finite-dimensional quantum information toolbox.

States carry a :class:`SubsystemLayout` so that partial traces and channel
applications can be addressed by subsystem label instead of axis index.
All logarithms are base 2.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import prod
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidDimensionError, LabelError, RangeError, ShapeError

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
PSD_TOL = 1e-10
TP_TOL = 1e-9
EIG_CLAMP = 1e-12


def _as_labels(labels) -> tuple[str, ...]:
    if isinstance(labels, str):
        return (labels,)
    return tuple(labels)


@dataclass(frozen=True)
class SubsystemLayout:
    """Ordered tensor factors ``(label, dim)``."""

    factors: tuple[tuple[str, int], ...]

    def __post_init__(self):
        factors = tuple((str(lab), int(d)) for lab, d in self.factors)
        object.__setattr__(self, "factors", factors)
        labels = [lab for lab, _ in factors]
        if len(set(labels)) != len(labels):
            raise LabelError(f"duplicate subsystem labels in {labels}")
        for lab, d in factors:
            if d < 1:
                raise InvalidDimensionError(f"subsystem {lab!r} has dimension {d}")

    @classmethod
    def of(cls, *pairs) -> "SubsystemLayout":
        return cls(tuple(pairs))

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(lab for lab, _ in self.factors)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(d for _, d in self.factors)

    @property
    def dim(self) -> int:
        return prod(self.dims)

    def __len__(self):
        return len(self.factors)

    def __contains__(self, label):
        return label in self.labels

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise LabelError(f"unknown subsystem label {label!r}; have {self.labels}") from None

    def dim_of(self, labels) -> int:
        return prod(self.factors[self.index(lab)][1] for lab in _as_labels(labels))

    def select(self, labels) -> "SubsystemLayout":
        """Sub-layout with ``labels`` in the order given."""
        return SubsystemLayout(tuple(self.factors[self.index(lab)] for lab in _as_labels(labels)))

    def ordered(self, labels) -> tuple[str, ...]:
        """``labels`` re-sorted into layout order, validating each."""
        wanted = set(_as_labels(labels))
        for lab in wanted:
            self.index(lab)
        return tuple(lab for lab in self.labels if lab in wanted)

    def __add__(self, other: "SubsystemLayout") -> "SubsystemLayout":
        return SubsystemLayout(self.factors + other.factors)


def _permute_operator(data: np.ndarray, dims: Sequence[int], order: Sequence[int]) -> np.ndarray:
    k = len(dims)
    t = data.reshape(tuple(dims) * 2)
    t = t.transpose(list(order) + [k + i for i in order])
    d = prod(dims)
    return t.reshape(d, d)


def _permute_vector(vec: np.ndarray, dims: Sequence[int], order: Sequence[int]) -> np.ndarray:
    return vec.reshape(tuple(dims)).transpose(list(order)).reshape(-1)


class DensityMatrix:
    """Positive unit-trace operator on a labelled tensor product.

    Construction validates Hermiticity, trace and positivity. Internal
    operations that provably preserve these use :meth:`trusted`.
    """

    __slots__ = ("layout", "data")

    def __init__(self, layout: SubsystemLayout, data, *, check: bool = True):
        data = np.asarray(data, dtype=complex)
        if data.shape != (layout.dim, layout.dim):
            raise ShapeError(f"matrix shape {data.shape} does not match layout dimension {layout.dim}")
        self.layout = layout
        self.data = data
        if check:
            self.validate()

    @classmethod
    def trusted(cls, layout: SubsystemLayout, data) -> "DensityMatrix":
        return cls(layout, data, check=False)

    @classmethod
    def from_pure(cls, psi: "PureState") -> "DensityMatrix":
        v = psi.amplitudes
        return cls.trusted(psi.layout, np.outer(v, v.conj()))

    @classmethod
    def maximally_mixed(cls, layout: SubsystemLayout) -> "DensityMatrix":
        return cls.trusted(layout, np.eye(layout.dim, dtype=complex) / layout.dim)

    def validate(self, tol: float = PSD_TOL) -> "DensityMatrix":
        a = self.data
        if np.max(np.abs(a - a.conj().T), initial=0.0) > HERMITIAN_TOL:
            raise ShapeError("density matrix is not Hermitian")
        tr = np.trace(a)
        if abs(tr - 1) > TRACE_TOL:
            raise ShapeError(f"density matrix has trace {tr.real:.3g}")
        lo = np.linalg.eigvalsh((a + a.conj().T) / 2)[0]
        if lo < -tol:
            raise ShapeError(f"density matrix has negative eigenvalue {lo:.3g}")
        return self

    @property
    def labels(self):
        return self.layout.labels

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh((self.data + self.data.conj().T) / 2)

    def reorder(self, labels) -> "DensityMatrix":
        labels = _as_labels(labels)
        if sorted(labels) != sorted(self.layout.labels):
            raise LabelError(f"reorder needs a permutation of {self.layout.labels}")
        order = [self.layout.index(lab) for lab in labels]
        return DensityMatrix.trusted(self.layout.select(labels),
                                     _permute_operator(self.data, self.layout.dims, order))

    def __repr__(self):
        return f"DensityMatrix({list(self.layout.factors)})"


class PureState:
    __slots__ = ("layout", "amplitudes")

    def __init__(self, layout: SubsystemLayout, amplitudes, *, check: bool = True):
        v = np.asarray(amplitudes, dtype=complex).reshape(-1)
        if v.shape[0] != layout.dim:
            raise ShapeError(f"{v.shape[0]} amplitudes for a layout of dimension {layout.dim}")
        if check and abs(np.linalg.norm(v) - 1) > 1e-10:
            raise ShapeError(f"state has norm {np.linalg.norm(v):.6g}")
        self.layout = layout
        self.amplitudes = v

    @property
    def labels(self):
        return self.layout.labels

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape(self.layout.dims)

    def reorder(self, labels) -> "PureState":
        labels = _as_labels(labels)
        if sorted(labels) != sorted(self.layout.labels):
            raise LabelError(f"reorder needs a permutation of {self.layout.labels}")
        order = [self.layout.index(lab) for lab in labels]
        return PureState(self.layout.select(labels),
                         _permute_vector(self.amplitudes, self.layout.dims, order), check=False)

    def reduced(self, keep) -> DensityMatrix:
        """Reduced density matrix on ``keep`` (layout order preserved)."""
        keep = self.layout.ordered(keep)
        rest = [lab for lab in self.layout.labels if lab not in keep]
        mat = self.reorder(keep + tuple(rest)).amplitudes.reshape(self.layout.dim_of(keep), -1)
        return DensityMatrix.trusted(self.layout.select(keep), mat @ mat.conj().T)

    def density(self) -> DensityMatrix:
        return DensityMatrix.from_pure(self)

    def __repr__(self):
        return f"PureState({list(self.layout.factors)})"


class QuantumChannel:
    """CPTP map given by Kraus operators ``K_k : input -> output``."""

    __slots__ = ("input_layout", "output_layout", "kraus")

    def __init__(self, input_layout: SubsystemLayout, output_layout: SubsystemLayout,
                 kraus, *, check: bool = True):
        ops = [np.asarray(k, dtype=complex) for k in kraus]
        if not ops:
            raise ShapeError("a channel needs at least one Kraus operator")
        for k in ops:
            if k.shape != (output_layout.dim, input_layout.dim):
                raise ShapeError(f"Kraus operator of shape {k.shape}, expected "
                                 f"{(output_layout.dim, input_layout.dim)}")
        self.input_layout = input_layout
        self.output_layout = output_layout
        self.kraus = tuple(ops)
        if check:
            gap = np.max(np.abs(self.tp_defect()))
            if gap > TP_TOL:
                raise ShapeError(f"channel is not trace preserving (defect {gap:.3g})")

    def tp_defect(self) -> np.ndarray:
        s = sum(k.conj().T @ k for k in self.kraus)
        return s - np.eye(self.input_layout.dim)

    def stacked(self) -> np.ndarray:
        """Kraus operators as an array of shape ``(n_kraus, d_out, d_in)``."""
        return np.stack(self.kraus)

    def isometry(self) -> np.ndarray:
        """Stinespring isometry ``V = sum_k K_k (x) |k>`` with the environment index last."""
        st = self.stacked()
        return st.transpose(1, 0, 2).reshape(-1, self.input_layout.dim)

    def choi(self) -> np.ndarray:
        """Normalised Choi state ``(id (x) N)(Psi+)``, reference factor first."""
        d = self.input_layout.dim
        st = self.stacked()
        # vectors [k, i, o] = K_k[o, i] / sqrt(d)
        vecs = st.transpose(0, 2, 1).reshape(len(self.kraus), -1) / np.sqrt(d)
        return vecs.T @ vecs.conj()

    def __repr__(self):
        return (f"QuantumChannel({list(self.input_layout.factors)} -> "
                f"{list(self.output_layout.factors)}, {len(self.kraus)} Kraus)")


class Povm:
    __slots__ = ("outcomes",)

    def __init__(self, outcomes, *, check: bool = True):
        self.outcomes = tuple((lab, np.asarray(m, dtype=complex)) for lab, m in outcomes)
        if not self.outcomes:
            raise ShapeError("empty POVM")
        if check:
            d = self.outcomes[0][1].shape[0]
            total = np.zeros((d, d), dtype=complex)
            for lab, m in self.outcomes:
                if m.shape != (d, d):
                    raise ShapeError(f"POVM element {lab!r} has shape {m.shape}")
                if np.max(np.abs(m - m.conj().T)) > HERMITIAN_TOL:
                    raise ShapeError(f"POVM element {lab!r} is not Hermitian")
                if np.linalg.eigvalsh(m)[0] < -PSD_TOL:
                    raise ShapeError(f"POVM element {lab!r} is not positive")
                total += m
            if np.max(np.abs(total - np.eye(d))) > TP_TOL:
                raise ShapeError("POVM elements do not sum to the identity")

    @property
    def labels(self):
        return tuple(lab for lab, _ in self.outcomes)

    def element(self, label) -> np.ndarray:
        for lab, m in self.outcomes:
            if lab == label:
                return m
        raise LabelError(f"no POVM outcome {label!r}")

    @property
    def dim(self) -> int:
        return self.outcomes[0][1].shape[0]


# ---------------------------------------------------------------- constructors

def maximally_entangled(d: int, labels=("A", "B")) -> PureState:
    if d < 2:
        raise InvalidDimensionError(f"maximally entangled state needs d >= 2, got {d}")
    v = np.zeros(d * d, dtype=complex)
    v[:: d + 1] = 1 / np.sqrt(d)
    return PureState(SubsystemLayout(((labels[0], d), (labels[1], d))), v)


def basis_state(layout: SubsystemLayout, index: int = 0) -> PureState:
    v = np.zeros(layout.dim, dtype=complex)
    v[index] = 1
    return PureState(layout, v)


def tensor(*states):
    """Tensor product of states of one kind (all pure or all mixed)."""
    if all(isinstance(s, PureState) for s in states):
        v = np.ones(1, dtype=complex)
        layout = SubsystemLayout(())
        for s in states:
            v = np.kron(v, s.amplitudes)
            layout = layout + s.layout
        return PureState(layout, v, check=False)
    mats = [s.data if isinstance(s, DensityMatrix) else DensityMatrix.from_pure(s).data for s in states]
    layout = SubsystemLayout(())
    out = np.ones((1, 1), dtype=complex)
    for s, m in zip(states, mats):
        out = np.kron(out, m)
        layout = layout + s.layout
    return DensityMatrix.trusted(layout, out)


def identity_channel(layout: SubsystemLayout) -> QuantumChannel:
    return QuantumChannel(layout, layout, [np.eye(layout.dim)])


def depolarizing_channel(p: float, label: str = "A") -> QuantumChannel:
    """Qubit depolarising channel; ``p = 1`` maps everything to I/2."""
    x = np.array([[0, 1], [1, 0]])
    y = np.array([[0, -1j], [1j, 0]])
    z = np.diag([1, -1])
    ops = [np.sqrt(1 - 3 * p / 4) * np.eye(2)] + [np.sqrt(p / 4) * m for m in (x, y, z)]
    lay = SubsystemLayout(((label, 2),))
    return QuantumChannel(lay, lay, ops)


def channel_from_choi(choi: np.ndarray, input_layout: SubsystemLayout,
                      output_layout: SubsystemLayout, tol: float = 1e-12) -> QuantumChannel:
    """Minimal Kraus family from a normalised Choi state (reference factor first)."""
    d, dout = input_layout.dim, output_layout.dim
    w, v = np.linalg.eigh((choi + choi.conj().T) / 2)
    ops = []
    for lam, vec in zip(w, v.T):
        if lam > tol:
            ops.append(np.sqrt(d * lam) * vec.reshape(d, dout).T)
    return QuantumChannel(input_layout, output_layout, ops, check=False)


def random_pure_state(rng: np.random.Generator, layout: SubsystemLayout) -> PureState:
    v = rng.normal(size=layout.dim) + 1j * rng.normal(size=layout.dim)
    return PureState(layout, v / np.linalg.norm(v))


def random_density_matrix(rng: np.random.Generator, layout: SubsystemLayout,
                          rank: int | None = None) -> DensityMatrix:
    d = layout.dim
    r = d if rank is None else rank
    g = rng.normal(size=(d, r)) + 1j * rng.normal(size=(d, r))
    rho = g @ g.conj().T
    return DensityMatrix.trusted(layout, rho / np.trace(rho))


def random_channel(rng: np.random.Generator, input_layout: SubsystemLayout,
                   output_layout: SubsystemLayout, n_kraus: int = 2) -> QuantumChannel:
    """Channel from a Haar-ish random isometry into output (x) environment."""
    din, dout = input_layout.dim, output_layout.dim
    g = rng.normal(size=(dout * n_kraus, din)) + 1j * rng.normal(size=(dout * n_kraus, din))
    q, _ = np.linalg.qr(g)
    ops = q.reshape(dout, n_kraus, din).transpose(1, 0, 2)
    return QuantumChannel(input_layout, output_layout, list(ops))


# ----------------------------------------------------------------- operations

def partial_trace(rho: DensityMatrix, keep) -> DensityMatrix:
    """Trace out every factor not in ``keep``; kept factors stay in layout order."""
    keep = rho.layout.ordered(keep)
    lay = rho.layout
    k = len(lay)
    if len(keep) == k:
        return rho
    t = rho.data.reshape(lay.dims * 2)
    ket = list(range(k))
    bra = [k + i for i in range(k)]
    out = []
    for i, lab in enumerate(lay.labels):
        if lab in keep:
            out.append(i)
        else:
            bra[i] = ket[i]
    out = out + [k + i for i in out]
    res = np.einsum(t, ket + bra, out)
    dk = lay.dim_of(keep)
    return DensityMatrix.trusted(lay.select(keep), res.reshape(dk, dk))


def _check_target(layout: SubsystemLayout, ch: QuantumChannel, on) -> tuple[str, ...]:
    on = _as_labels(on)
    for lab in on:
        layout.index(lab)
    if len(set(on)) != len(on):
        raise LabelError(f"repeated labels in {on}")
    if tuple(layout.dim_of(lab) for lab in on) != ch.input_layout.dims:
        raise ShapeError(f"channel input dims {ch.input_layout.dims} do not match {on}")
    rest = set(layout.labels) - set(on)
    clash = rest & set(ch.output_layout.labels)
    if clash:
        raise LabelError(f"channel output labels {sorted(clash)} collide with untouched factors")
    return on


def _output_order(layout: SubsystemLayout, on, out_labels) -> list[str]:
    first = min(layout.index(lab) for lab in on)
    rest = [lab for lab in layout.labels if lab not in on]
    before = [lab for lab in rest if layout.index(lab) < first]
    after = [lab for lab in rest if layout.index(lab) > first]
    return before + list(out_labels) + after


def apply_channel(ch: QuantumChannel, rho: DensityMatrix, on) -> DensityMatrix:
    """Apply ``ch`` to the factors ``on``; outputs take the place of the first of them."""
    on = _check_target(rho.layout, ch, on)
    lay = rho.layout
    rest = [lab for lab in lay.labels if lab not in on]
    front = rho.reorder(on + tuple(rest))
    din, drest = ch.input_layout.dim, lay.dim_of(rest) if rest else 1
    t = front.data.reshape(din, drest, din, drest)
    ks = ch.stacked()
    out = np.einsum("koi,ixjy,kpj->oxpy", ks, t, ks.conj(), optimize=True)
    dout = ch.output_layout.dim
    new_layout = ch.output_layout + lay.select(rest)
    res = DensityMatrix.trusted(new_layout, out.reshape(dout * drest, dout * drest))
    return res.reorder(_output_order(lay, on, ch.output_layout.labels))


def apply_channel_pure(ch: QuantumChannel, psi: PureState, on, env_label: str) -> PureState:
    """Apply the Stinespring dilation of ``ch``; the environment factor is appended last.

    A single-Kraus channel adds no environment factor.
    """
    on = _check_target(psi.layout, ch, on)
    lay = psi.layout
    rest = [lab for lab in lay.labels if lab not in on]
    front = psi.reorder(on + tuple(rest)).amplitudes.reshape(ch.input_layout.dim, -1)
    ks = ch.stacked()
    nk = ks.shape[0]
    out = np.einsum("koi,ix->oxk", ks, front)
    new_layout = ch.output_layout + lay.select(rest)
    if nk > 1:
        if env_label in new_layout:
            raise LabelError(f"environment label {env_label!r} already in use")
        new_layout = new_layout + SubsystemLayout(((env_label, nk),))
        order = _output_order(lay, on, ch.output_layout.labels) + [env_label]
    else:
        order = _output_order(lay, on, ch.output_layout.labels)
    res = PureState(new_layout, out.reshape(-1), check=False)
    return res.reorder(order)


def _sqrt_psd(a: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh((a + a.conj().T) / 2)
    w = np.sqrt(np.clip(w, 0, None))
    return (v * w) @ v.conj().T


def _same_layout(rho: DensityMatrix, sigma: DensityMatrix):
    if rho.layout.dims != sigma.layout.dims:
        raise ShapeError(f"layouts differ: {rho.layout.factors} vs {sigma.layout.factors}")


def fidelity(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """Root fidelity ``tr sqrt(sqrt(sigma) rho sqrt(sigma))``."""
    _same_layout(rho, sigma)
    s = _sqrt_psd(sigma.data)
    m = s @ rho.data @ s
    w = np.linalg.eigvalsh((m + m.conj().T) / 2)
    return float(min(1.0, max(0.0, np.sum(np.sqrt(np.clip(w, 0, None))))))


def trace_norm(a: np.ndarray) -> float:
    """Schatten 1-norm of a Hermitian matrix."""
    return float(np.sum(np.abs(np.linalg.eigvalsh((a + a.conj().T) / 2))))


def trace_distance(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    _same_layout(rho, sigma)
    return 0.5 * trace_norm(rho.data - sigma.data)


def entropy_of_spectrum(w: np.ndarray) -> float:
    w = np.where(w < EIG_CLAMP, 0.0, w)
    nz = w[w > 0]
    return float(max(0.0, -np.sum(nz * np.log2(nz))))


def von_neumann_entropy(rho: DensityMatrix) -> float:
    return entropy_of_spectrum(rho.eigenvalues())


def _entropy_of(rho: DensityMatrix, labels) -> float:
    return von_neumann_entropy(partial_trace(rho, labels))


def _disjoint(rho: DensityMatrix, a, b):
    a, b = _as_labels(a), _as_labels(b)
    if not a or not b:
        raise LabelError("both parts must be nonempty")
    if set(a) & set(b):
        raise LabelError(f"parts overlap: {sorted(set(a) & set(b))}")
    for lab in a + b:
        rho.layout.index(lab)
    return a, b


def mutual_information(rho: DensityMatrix, part_a, part_b) -> float:
    """``I(A:B) = S(A) + S(B) - S(AB)`` in bits."""
    a, b = _disjoint(rho, part_a, part_b)
    ab = partial_trace(rho, a + b)
    return _entropy_of(ab, a) + _entropy_of(ab, b) - von_neumann_entropy(ab)


def conditional_entropy(rho: DensityMatrix, part_a, part_b) -> float:
    """``S(A|B) = S(AB) - S(B)``."""
    a, b = _disjoint(rho, part_a, part_b)
    ab = partial_trace(rho, a + b)
    return von_neumann_entropy(ab) - _entropy_of(ab, b)


def binary_entropy(p: float) -> float:
    if p <= 0 or p >= 1:
        return 0.0
    return float(-p * np.log2(p) - (1 - p) * np.log2(1 - p))


def continuity_bound(eps: float, d_a: int) -> float:
    """Upper bound on ``|H(A|B)_rho - H(A|B)_sigma|`` at trace distance ``eps``."""
    if not 0 <= eps <= 1:
        raise RangeError(f"eps must lie in [0, 1], got {eps}")
    if d_a < 1:
        raise InvalidDimensionError(f"d_A must be positive, got {d_a}")
    return 2 * eps * np.log2(d_a) + (1 + eps) * binary_entropy(eps / (1 + eps))


def schmidt_coefficients(psi: PureState, cut) -> np.ndarray:
    cut = psi.layout.ordered(cut)
    if not cut or len(cut) == len(psi.layout):
        raise LabelError("Schmidt cut must be a nonempty proper subset of the labels")
    rest = [lab for lab in psi.layout.labels if lab not in cut]
    mat = psi.reorder(cut + tuple(rest)).amplitudes.reshape(psi.layout.dim_of(cut), -1)
    return np.linalg.svd(mat, compute_uv=False)


def schmidt_rank(psi: PureState, cut, tol: float = 1e-9) -> int:
    return int(np.sum(schmidt_coefficients(psi, cut) > tol))


def numerical_rank(matrix: np.ndarray, tol: float = 1e-7, abs_floor: float = 1e-12) -> tuple[int, np.ndarray]:
    """Count singular values above ``tol * s_max``; a matrix whose largest singular
    value is below ``abs_floor`` has rank 0."""
    s = np.linalg.svd(np.asarray(matrix, dtype=float), compute_uv=False)
    if s.size == 0 or s[0] <= abs_floor:
        return 0, s
    return int(np.sum(s > tol * s[0])), s
