import numpy as np
import pytest

from nlqcbounds.errors import InvalidDimensionError, LabelError, RangeError, ShapeError
from nlqcbounds.qmath import (
    DensityMatrix,
    PureState,
    QuantumChannel,
    SubsystemLayout,
    apply_channel,
    apply_channel_pure,
    basis_state,
    binary_entropy,
    channel_from_choi,
    conditional_entropy,
    continuity_bound,
    depolarizing_channel,
    fidelity,
    identity_channel,
    maximally_entangled,
    mutual_information,
    numerical_rank,
    partial_trace,
    random_channel,
    random_density_matrix,
    random_pure_state,
    schmidt_rank,
    tensor,
    trace_distance,
    von_neumann_entropy,
)

A = SubsystemLayout.of(("A", 2))
B = SubsystemLayout.of(("B", 2))


def test_layout_basics():
    lay = SubsystemLayout.of(("A", 2), ("B", 3), ("C", 1))
    assert lay.dim == 6
    assert lay.index("B") == 1
    assert lay.dim_of(("A", "B")) == 6
    assert "C" in lay and "Z" not in lay
    with pytest.raises(LabelError):
        lay.index("Z")
    with pytest.raises(LabelError):
        SubsystemLayout.of(("A", 2), ("A", 2))
    with pytest.raises(InvalidDimensionError):
        SubsystemLayout.of(("A", 0))


def test_maximally_entangled_qubit_amplitudes():
    psi = maximally_entangled(2)
    np.testing.assert_allclose(psi.amplitudes, np.array([1, 0, 0, 1]) / np.sqrt(2), atol=1e-15)
    assert schmidt_rank(psi, ("A",)) == 2


def test_maximally_entangled_qutrit_marginals():
    psi = maximally_entangled(3)
    for lab in ("A", "B"):
        np.testing.assert_allclose(psi.reduced((lab,)).data, np.eye(3) / 3, atol=1e-15)


def test_maximally_entangled_rejects_small_d():
    with pytest.raises(InvalidDimensionError):
        maximally_entangled(1)


def test_partial_trace_cases(rng):
    rho = maximally_entangled(2).density()
    np.testing.assert_allclose(partial_trace(rho, ("A",)).data, np.eye(2) / 2, atol=1e-15)
    assert np.array_equal(partial_trace(rho, ("A", "B")).data, rho.data)
    ra = random_density_matrix(rng, A)
    rb = random_density_matrix(rng, B)
    prod = tensor(ra, rb)
    np.testing.assert_allclose(partial_trace(prod, ("A",)).data, ra.data, atol=1e-14)
    with pytest.raises(LabelError):
        partial_trace(rho, ("Z",))


def test_partial_trace_keeps_layout_order(rng):
    lay = SubsystemLayout.of(("A", 2), ("B", 3), ("C", 2))
    rho = random_density_matrix(rng, lay)
    kept = partial_trace(rho, ("C", "A"))
    assert kept.layout.labels == ("A", "C")
    swapped = kept.reorder(("C", "A"))
    np.testing.assert_allclose(swapped.reorder(("A", "C")).data, kept.data, atol=1e-14)


def test_identity_and_depolarizing_channels(rng):
    rho = random_density_matrix(rng, A)
    out = apply_channel(identity_channel(A), rho, ("A",))
    np.testing.assert_allclose(out.data, rho.data, atol=1e-15)
    zero = basis_state(A, 0).density()
    np.testing.assert_allclose(apply_channel(depolarizing_channel(1.0), zero, ("A",)).data,
                               np.eye(2) / 2, atol=1e-15)


def test_apply_channel_shape_error():
    ch = identity_channel(SubsystemLayout.of(("A", 3)))
    with pytest.raises(ShapeError):
        apply_channel(ch, basis_state(A).density(), ("A",))


def test_channel_rejects_non_trace_preserving():
    with pytest.raises(ShapeError):
        QuantumChannel(A, A, [2 * np.eye(2)])


def test_choi_roundtrip(rng):
    ch = random_channel(rng, A, SubsystemLayout.of(("O", 3)), 3)
    back = channel_from_choi(ch.choi(), A, ch.output_layout)
    rho = random_density_matrix(rng, A)
    np.testing.assert_allclose(apply_channel(back, rho, ("A",)).data,
                               apply_channel(ch, rho, ("A",)).data, atol=1e-12)


def test_pure_and_mixed_application_agree(rng):
    lay = SubsystemLayout.of(("R", 2), ("A", 2))
    psi = random_pure_state(rng, lay)
    ch = random_channel(rng, A, SubsystemLayout.of(("O", 2)), 3)
    pure = apply_channel_pure(ch, psi, ("A",), "env")
    mixed = apply_channel(ch, psi.density(), ("A",))
    np.testing.assert_allclose(pure.reduced(mixed.layout.labels).data, mixed.data, atol=1e-13)


def test_fidelity_and_trace_distance():
    zero = basis_state(A, 0).density()
    one = basis_state(A, 1).density()
    assert fidelity(zero, zero) == pytest.approx(1.0)
    assert fidelity(zero, one) == pytest.approx(0.0, abs=1e-12)
    assert trace_distance(zero, one) == pytest.approx(1.0)
    with pytest.raises(ShapeError):
        fidelity(zero, basis_state(SubsystemLayout.of(("B", 3)), 0).density())


def test_entropy_examples():
    assert von_neumann_entropy(basis_state(A).density()) == pytest.approx(0, abs=1e-12)
    assert von_neumann_entropy(DensityMatrix.maximally_mixed(A)) == pytest.approx(1)
    eight = SubsystemLayout.of(("A", 8))
    assert von_neumann_entropy(DensityMatrix.maximally_mixed(eight)) == pytest.approx(3)


def test_mutual_information_examples(rng):
    prod = tensor(random_density_matrix(rng, A), random_density_matrix(rng, B))
    assert mutual_information(prod, "A", "B") == pytest.approx(0, abs=1e-10)
    assert mutual_information(maximally_entangled(2).density(), "A", "B") == pytest.approx(2)
    assert conditional_entropy(maximally_entangled(2).density(), "A", "B") == pytest.approx(-1)
    with pytest.raises(LabelError):
        mutual_information(prod, ("A",), ("A", "B"))


def test_continuity_bound_values():
    assert continuity_bound(0, 4) == 0
    # 2 * 1 * log2(2) + 2 * h(1/2)
    assert continuity_bound(1, 2) == pytest.approx(4.0)
    assert continuity_bound(0.5, 2) == pytest.approx(1 + 1.5 * binary_entropy(1 / 3))
    with pytest.raises(RangeError):
        continuity_bound(1.5, 2)


def test_schmidt_rank_examples():
    assert schmidt_rank(basis_state(A + B), ("A",)) == 1
    assert schmidt_rank(maximally_entangled(3), ("A",)) == 3
    with pytest.raises(LabelError):
        schmidt_rank(maximally_entangled(2), ("A", "B"))


def test_numerical_rank():
    assert numerical_rank(np.diag([1.0, 1e-3, 1e-9]))[0] == 2
    assert numerical_rank(np.zeros((3, 3)))[0] == 0
    assert numerical_rank(np.outer([1, 2], [3, 4]))[0] == 1


def test_pure_state_normalization():
    with pytest.raises(ShapeError):
        PureState(A, [1, 1])
