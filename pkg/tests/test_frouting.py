from fractions import Fraction

import numpy as np
import pytest

from nlqcbounds.boolfn import from_predicate, make_family
from nlqcbounds.errors import DomainError, InternalConsistencyError, RangeError
from nlqcbounds.frouting import (
    StructureMatrix,
    decoupling_gap,
    decoupling_grid,
    epsilon_margin,
    epsilon_star,
    omega1_check,
    rank_bound,
    soundness,
    structure_function,
    structure_matrix,
    structure_value,
    verify_decomposition,
    verify_routing,
)
from nlqcbounds.nlqc import compute_mid_state, entanglement_cost, random_protocol, zoo_protocol
from nlqcbounds.qmath import maximally_entangled

X_ONLY = from_predicate(1, lambda x, y: x == 1, "x")
ZERO1 = make_family("ZERO", 1)


def test_constant0_routes_to_alice():
    rep = verify_routing(zoo_protocol("constant0", ZERO1), ZERO1)
    assert rep.eps0 == pytest.approx(0, abs=1e-12) and rep.eps1 == 0


def test_x_only_routes_perfectly():
    rep = verify_routing(zoo_protocol("x_only", X_ONLY), X_ONLY)
    assert rep.perfect(1e-12)


@pytest.mark.parametrize("fixture", ["eq1", "eq2", "eq1_hose"])
def test_garden_hose_eq_routes_perfectly(fixture, request):
    p = request.getfixturevalue(fixture)
    rep = verify_routing(p, make_family("EQ", p.n))
    assert rep.perfect(1e-9)


def test_wrong_function_is_imperfect(eq1):
    rep = verify_routing(eq1, make_family("NEQ", 1))
    assert rep.eps0 > 0.4 and rep.eps1 > 0.4


def test_decoupling_examples():
    discard = zoo_protocol("discard", make_family("EQ", 1))
    assert decoupling_grid(discard).max() == pytest.approx(0, abs=1e-12)
    p = zoo_protocol("x_only", X_ONLY)
    assert decoupling_gap(compute_mid_state(p, 0, 1)) == pytest.approx(0, abs=1e-12)
    # Psi+ against I/4 is at trace distance 3/4
    assert decoupling_gap(compute_mid_state(p, 1, 0)) == pytest.approx(0.75)


def test_epsilon_star_values():
    assert 0.07 <= epsilon_star(2) <= 0.09
    vals = [epsilon_star(d) for d in (2, 4, 16, 1024)]
    assert vals == sorted(vals) and vals[-1] > 0.5
    assert epsilon_margin(0, 2) == pytest.approx(2)
    with pytest.raises(RangeError):
        epsilon_star(1)
    with pytest.raises(RangeError):
        epsilon_margin(-0.1, 2)


def test_epsilon_star_is_sign_change():
    e = epsilon_star(2, tol=1e-9)
    assert epsilon_margin(e - 1e-6, 2) > 0 > epsilon_margin(e + 1e-6, 2)


def test_structure_value_examples():
    prod = np.kron(np.eye(2) / 2, np.diag([0.3, 0.7]))
    assert structure_value(prod, 2) == pytest.approx(0, abs=1e-15)
    psi = maximally_entangled(2).density().data
    assert structure_value(psi, 2) == pytest.approx(0.75, abs=1e-12)


def test_structure_value_batched():
    psi = maximally_entangled(2).density().data
    stack = np.stack([psi, np.eye(4) / 4])
    np.testing.assert_allclose(structure_value(stack, 2), [0.75, 0.0], atol=1e-12)


def test_structure_value_forms_agree_on_random_states(rng):
    from nlqcbounds.qmath import SubsystemLayout, random_density_matrix
    lay = SubsystemLayout.of(("R", 2), ("S", 4))
    rho = random_density_matrix(rng, lay).data
    t = rho.reshape(2, 4, 2, 4)
    rho_s = np.einsum("imin->mn", t)
    explicit = np.linalg.norm(rho - np.kron(np.eye(2) / 2, rho_s)) ** 2
    assert structure_value(rho, 2) == pytest.approx(explicit, abs=1e-12)


def test_structure_function_x_only():
    p = zoo_protocol("x_only", X_ONLY)
    assert structure_function(compute_mid_state(p, 1, 1)) == pytest.approx(0.75, abs=1e-9)
    assert structure_function(compute_mid_state(p, 0, 1)) == pytest.approx(0, abs=1e-12)


def test_eq_structure_matrix_pattern(eq1):
    G = structure_matrix(eq1, make_family("EQ", 1))
    off = ~np.eye(2, dtype=bool)
    assert G.G[off].max() <= 1e-9 and G.G.diagonal().min() > 1e-3
    assert G.pattern_matches
    Gm = structure_matrix(eq1, make_family("EQ", 1), side="M")
    assert Gm.pattern_matches


def test_discard_structure_matrix_is_zero():
    G = structure_matrix(zoo_protocol("discard", make_family("EQ", 2)))
    assert not G.nonzero_pattern().any()
    rb = rank_bound(G)
    assert rb.degenerate and rb.numerical_rank == 0 and rb.bound_ebits == 0


def test_rank_bound_examples():
    rb = rank_bound(np.diag([1.0, 2.0, 3.0, 4.0]))
    assert rb.numerical_rank == 4 and rb.bound_ebits == pytest.approx(0.5) and rb.exact == Fraction(1, 2)
    assert rank_bound(np.outer([1, 2, 3], [1, 1, 1])).bound_ebits == 0
    assert rank_bound(np.diag([1.0, 1.0, 1.0])).exact is None


def test_eq_n2_rank_and_soundness(eq2):
    G = structure_matrix(eq2, make_family("EQ", 2))
    rb = rank_bound(G, "FR0")
    assert rb.numerical_rank == 4 and rb.bound_ebits == pytest.approx(0.5)
    assert rb.bound_ebits <= entanglement_cost(eq2)
    assert soundness(eq2, rb)


def test_decomposition_examples(eq1):
    p = random_protocol(np.random.default_rng(3), 2, d_e=1)
    assert verify_decomposition(structure_matrix(p), 1)
    assert verify_decomposition(structure_matrix(eq1), 4)


def test_to_csv(eq1):
    text = structure_matrix(eq1, make_family("EQ", 1)).to_csv()
    assert text.splitlines()[0] == "x,y,g,f" and len(text.splitlines()) == 5


def test_omega1_eq(eq1):
    r = omega1_check(eq1, make_family("EQ", 1), 0)
    assert r.entropy_r >= 1 - 1e-6
    assert r.ok


def test_omega1_constant_is_domain_error():
    with pytest.raises(DomainError):
        omega1_check(zoo_protocol("constant0", ZERO1), ZERO1)
    with pytest.raises(DomainError):
        omega1_check(zoo_protocol("x_only", X_ONLY), X_ONLY)


def test_structure_matrix_rejects_negative_entries():
    with pytest.raises(InternalConsistencyError):
        StructureMatrix(1, [[0, -1], [0, 0]])
