import json
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from trafficqaoa.qubo import (
    QuadraticForm,
    QuboModel,
    _square_of_sum,
    bit_columns,
    build_qubo,
    calibrate_lambda,
    congestion_terms,
    constraint_terms,
    direct_cost,
    segment_cost_terms,
)
from trafficqaoa.roadnet import build_instance, load_fixture, parse_network, random_instance

SHARED = """
node o
node d
edge s o d 1.0
"""


def shared_instance(n_cars, n_routes):
    """Parallel unit segments o-d; every car has one route per segment."""
    text = "node o\nnode d\n" + "".join(f"edge s{k} o d 1.0\n" for k in range(n_routes))
    net = parse_network(text)
    return build_instance(net, [("o", "d", n_routes)] * n_cars, seed=0)


def test_single_route_segment():
    net = parse_network("node o\nnode d\nedge s o d 2.0\n")
    inst = build_instance(net, [("o", "d", 1)], seed=0)
    form = segment_cost_terms(inst, "s")
    assert form.linear == {0: 2.0}
    assert form.quadratic == {}
    assert form.constant == 0.0


def test_two_cars_share_segment():
    net = parse_network(SHARED)
    inst = build_instance(net, [("o", "d", 1), ("o", "d", 1)], seed=0)
    form = segment_cost_terms(inst, "s")
    assert form.linear == {0: 1.0, 1: 1.0}
    assert form.quadratic == {(0, 1): 2.0}


def test_congestion_expansion_matches_direct_cost():
    inst = random_instance(3, 3, seed=4)
    a = congestion_terms(inst)
    values = a.evaluate_all()
    for k, bits in enumerate(bit_columns(inst.n_vars)):
        assert values[k] == pytest.approx(direct_cost(inst, bits, 1.0)[0], abs=1e-9)


def test_constraint_one_car_two_routes():
    inst = shared_instance(1, 2)
    b = constraint_terms(inst)
    assert b.constant == 1.0
    assert b.linear == {0: -1.0, 1: -1.0}
    assert b.quadratic == {(0, 1): 2.0}


def test_constraint_all_zero_and_one_hot():
    inst = random_instance(4, 3, seed=1)
    b = constraint_terms(inst)
    assert b.evaluate(np.zeros(inst.n_vars)) == 4
    one_hot = np.zeros(inst.n_vars)
    for i in range(inst.n_cars):
        one_hot[inst.variable(i, i % 3)] = 1
    assert b.evaluate(one_hot) == 0


def test_constraint_zero_exactly_on_one_hot():
    inst = random_instance(3, 2, seed=0)
    b = constraint_terms(inst).evaluate_all()
    for k, bits in enumerate(bit_columns(inst.n_vars)):
        one_hot = all(sum(bits[inst.variable(i, j)] for j in range(2)) == 1 for i in range(3))
        assert (b[k] == 0) == one_hot
        assert b[k] >= 0


def test_lambda_shared_segment_case():
    inst = shared_instance(2, 2)
    a, b = congestion_terms(inst), constraint_terms(inst)
    # brute force ranges
    av, bv = a.evaluate_all(), b.evaluate_all()
    # all ones puts both cars on both segments: 2 * 2**2; B is 1 per car at its extremes
    assert av.max() - av.min() == 8
    assert bv.max() - bv.min() == 2
    assert calibrate_lambda(a, b, inst.route_counts) == 4


def test_lambda_all_routes_on_one_segment():
    # 2 cars x 2 routes with every route crossing one unit segment: A = (q0+q1+q2+q3)^2
    a = _square_of_sum(4, [0, 1, 2, 3], 1.0)
    b = constraint_terms(shared_instance(2, 2))
    av, bv = a.evaluate_all(), b.evaluate_all()
    assert (av.min(), av.max()) == (0, 16)
    assert (bv.min(), bv.max()) == (0, 2)
    assert calibrate_lambda(a, b, [2, 2]) == 8


def test_lambda_exact_matches_brute_force_ranges():
    for seed in range(5):
        inst = random_instance(3, 3, seed=seed)
        a, b = congestion_terms(inst), constraint_terms(inst)
        av, bv = a.evaluate_all(), b.evaluate_all()
        lam = calibrate_lambda(a, b, inst.route_counts)
        assert lam == pytest.approx((av.max() - av.min()) / (bv.max() - bv.min()), rel=1e-12)


def test_lambda_endpoints_mode():
    inst = random_instance(2, 3, seed=0)
    a, b = congestion_terms(inst), constraint_terms(inst)
    n = inst.n_vars
    expected = a.evaluate(np.ones(n)) / (b.evaluate(np.ones(n)) - b.evaluate(np.zeros(n)))
    assert calibrate_lambda(a, b, inst.route_counts, mode="endpoints") == pytest.approx(expected)


def test_lambda_degenerate_falls_back_to_one():
    inst = random_instance(3, 1, seed=0)
    a, b = congestion_terms(inst), constraint_terms(inst)
    with pytest.warns(RuntimeWarning):
        assert calibrate_lambda(a, b, inst.route_counts, mode="endpoints") == 1.0


def test_lambda_equal_ranges():
    # one car, two routes of unit length sharing nothing: A spans [0, 2], B spans [0, 1]
    net = parse_network("node o\nnode d\nedge x o d 0.5\nedge y o d 0.5\n")
    inst = build_instance(net, [("o", "d", 2)], seed=0)
    a, b = congestion_terms(inst), constraint_terms(inst)
    assert calibrate_lambda(a, b, inst.route_counts) == 1.0


def test_qubo_total_and_a_zero_at_origin():
    inst = random_instance(3, 3, seed=2)
    q = build_qubo(inst)
    assert q.lam > 0
    assert q.congestion.evaluate(np.zeros(9)) == 0
    values = q.evaluate_all()
    for k, bits in enumerate(bit_columns(9)):
        assert values[k] == pytest.approx(direct_cost(inst, bits, q.lam)[2], rel=1e-12, abs=1e-9)


def test_three_paths_lambda_and_ground_states():
    inst = build_instance(load_fixture("three_paths.net"), [("O", "D", 3)] * 3, seed=0)
    q = build_qubo(inst)
    assert q.lam == 9.0
    values = q.evaluate_all()
    ground = {format(k, "09b") for k in np.flatnonzero(values == values.min())}
    assert len(ground) == 6
    # each car on a different physical route: the six permutations of the three paths
    for bits in ground:
        chosen = [inst.cars[i][bits[3 * i:3 * i + 3].index("1")].segment_ids for i in range(3)]
        assert bits.count("1") == 3
        assert len(set(chosen)) == 3


def test_quadratic_keys_ordered():
    q = build_qubo(random_instance(3, 3, seed=0))
    assert all(u < v for u, v in q.quadratic)


def test_json_roundtrip():
    q = build_qubo(random_instance(2, 3, seed=9))
    again = QuboModel.from_json(q.to_json())
    assert again.lam == q.lam
    np.testing.assert_allclose(again.evaluate_all(), q.evaluate_all())
    assert json.loads(q.to_json())["n_vars"] == 6


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6), st.data())
def test_quadratic_form_matches_matrix(n, data):
    lin = {u: data.draw(st.floats(-3, 3)) for u in range(n)}
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    quad = {p: data.draw(st.floats(-3, 3)) for p in pairs}
    form = QuadraticForm(n, lin, quad, 0.5)
    Q = form.to_matrix()
    bits = bit_columns(n).astype(float)
    expected = np.einsum("ki,ij,kj->k", bits, Q, bits) + 0.5
    np.testing.assert_allclose(form.evaluate_all(), expected, atol=1e-9)
