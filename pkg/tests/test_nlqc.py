import json

import numpy as np
import pytest

from nlqcbounds.boolfn import from_predicate, make_family
from nlqcbounds.errors import ConfigError, DomainError
from nlqcbounds.nlqc import (
    BELL,
    E_A,
    E_B,
    M0,
    M0P,
    M1,
    M1P,
    M_SIDE,
    MP_SIDE,
    PAULI_X,
    PAULI_Z,
    R,
    GardenHoseStrategy,
    NLQCProtocol,
    compute_mid_state,
    entanglement_cost,
    fixture_strategy,
    garden_hose_compile,
    load_protocol,
    pauli_correction,
    random_protocol,
    reduced_grid,
    resource_schmidt_rank,
    save_protocol,
    strategy_from_dict,
    strategy_to_dict,
    zoo_protocol,
)
from nlqcbounds.qmath import SubsystemLayout, maximally_entangled, tensor

X_ONLY = from_predicate(1, lambda x, y: x == 1, "x")


def test_bell_basis_and_corrections():
    # BELL[2a + b] = (I (x) X^b Z^a) |Phi+>, undone by Z^a X^b on the second qubit
    vecs = BELL.reshape(4, 4)
    phi = vecs[0]
    for a in (0, 1):
        for b in (0, 1):
            fix = np.kron(np.eye(2), pauli_correction(a, b))
            assert abs(np.vdot(phi, fix @ vecs[2 * a + b])) == pytest.approx(1)
    np.testing.assert_allclose(vecs.conj() @ vecs.T, np.eye(4), atol=1e-15)
    assert np.allclose(PAULI_X @ PAULI_X, np.eye(2)) and np.allclose(PAULI_Z @ PAULI_Z, np.eye(2))


def test_entanglement_cost_examples(eq1, eq2):
    assert entanglement_cost(zoo_protocol("constant0", make_family("EQ", 1))) == 0
    assert entanglement_cost(random_protocol(np.random.default_rng(0), 1, d_e=2)) == pytest.approx(1)
    assert entanglement_cost(eq1) == pytest.approx(2)
    assert entanglement_cost(eq2) == pytest.approx(4)
    assert resource_schmidt_rank(eq2) == 16


def test_bell_pairs_multiply():
    lay = [maximally_entangled(2, (f"a{i}", f"b{i}")) for i in range(3)]
    psi = tensor(*lay)
    from nlqcbounds.qmath import schmidt_rank
    assert schmidt_rank(psi, ("a0", "a1", "a2")) == 8


def test_discard_decouples_reference():
    p = zoo_protocol("discard", make_family("EQ", 1))
    m = compute_mid_state(p, 0, 1)
    rho = m.reduced((R,) + M_SIDE + MP_SIDE).data
    fixed = np.zeros((4, 4))
    fixed[0, 0] = 1
    np.testing.assert_allclose(rho, np.kron(np.eye(2) / 2, fixed), atol=1e-14)


def test_x_only_sends_entanglement_on_one():
    p = zoo_protocol("x_only", X_ONLY)
    m = compute_mid_state(p, 1, 0)
    target = maximally_entangled(2, (R, M0P)).density().data
    np.testing.assert_allclose(m.reduced((R, M0P)).data, target, atol=1e-14)
    m0 = compute_mid_state(p, 0, 1)
    np.testing.assert_allclose(m0.reduced((R, M0)).data, target, atol=1e-14)


def test_x_only_rejects_y_dependence():
    with pytest.raises(DomainError):
        zoo_protocol("x_only", make_family("EQ", 1))
    with pytest.raises(ConfigError):
        zoo_protocol("teleport", X_ONLY)


def test_mid_state_is_normalized_and_bitstring_inputs(eq2):
    m = compute_mid_state(eq2, "10", "01")
    assert (m.x, m.y) == (2, 1)
    assert np.trace(m.rho.data).real == pytest.approx(1)


def test_reduced_grid_matches_direct(eq1_hose):
    p = eq1_hose
    for ka, kb in (((M0,), (M1,)), ((M0P,), (M1P,)), ((), (M1P, M1)), ((M0, M0P), ())):
        lay, grid = reduced_grid(p, ka, kb)
        for x in range(2):
            for y in range(2):
                direct = compute_mid_state(p, x, y).state.reduced(lay.labels).reorder(lay.labels)
                np.testing.assert_allclose(grid[x, y], direct.data, atol=1e-12)


def test_reduced_grid_parallel_matches_serial(eq2):
    _, a = reduced_grid(eq2, (M0P,), (M1P,))
    _, b = reduced_grid(eq2, (M0P,), (M1P,), jobs=3)
    np.testing.assert_allclose(a, b, atol=1e-14)


def test_missing_channel_is_config_error():
    p = zoo_protocol("constant0", make_family("EQ", 1))
    with pytest.raises(ConfigError):
        NLQCProtocol(1, p.resource, {0: p.alice_channels[0]}, p.bob_channels)
    with pytest.raises(ConfigError):
        compute_mid_state(p, "11", 0)


@pytest.mark.parametrize("name,pipes", [("eq_n1", 2), ("eq_n2", 4), ("eq_n1_hose", 3)])
def test_fixture_strategies_compute_eq(name, pipes):
    s = fixture_strategy(name)
    assert s.pipes == pipes
    assert s.function() == make_family("EQ", s.n)


def test_strategy_routes():
    s = fixture_strategy("eq_n1_hose")
    assert s.trace(0, 0).holder == "bob"
    assert s.trace(0, 1).holder == "alice"
    assert len(s.trace(1, 1).hops) >= 1


def test_invalid_matching_is_config_error():
    with pytest.raises(ConfigError):
        GardenHoseStrategy(1, 1, {0: {"pairs": [["Q", 5]]}, 1: {}}, {0: {}, 1: {}})
    with pytest.raises(ConfigError):
        GardenHoseStrategy(1, 2, {0: {"pairs": [["Q", 0], [0, 1]]}, 1: {}}, {0: {}, 1: {}})
    with pytest.raises(ConfigError):
        GardenHoseStrategy(1, 1, {0: {}}, {0: {}, 1: {}})


def test_strategy_json_roundtrip():
    s = fixture_strategy("eq_n2")
    t = strategy_from_dict(json.loads(json.dumps(strategy_to_dict(s))))
    assert t.function() == s.function() and t.pipes == s.pipes


def test_protocol_json_roundtrip(tmp_path, eq1):
    path = tmp_path / "p.json"
    save_protocol(eq1, path)
    q = load_protocol(path)
    a = compute_mid_state(eq1, 1, 1).rho.data
    b = compute_mid_state(q, 1, 1).rho.data
    np.testing.assert_allclose(a, b, atol=1e-12)
    assert q.has_decoders


def test_random_protocol_layouts():
    p = random_protocol(np.random.default_rng(1), 2, d_e=2, msg_dim=2)
    assert p.size == 4 and not p.has_decoders
    assert p.output_dims(M_SIDE + MP_SIDE) == (2, 2, 2, 2)
