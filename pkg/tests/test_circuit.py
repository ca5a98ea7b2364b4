import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from trafficqaoa.circuit import (
    Circuit,
    Gate,
    ParamVector,
    broadcast_params,
    build_multi_angle,
    build_qaoa,
    canonicalize_params,
    circuit_depth,
    edge_colored_order,
)
from trafficqaoa.simulator import simulate

from conftest import small_model


def test_gate_validation():
    with pytest.raises(ValueError):
        Gate("CZ", (0, 1))
    with pytest.raises(ValueError):
        Gate("RZZ", (0,))
    with pytest.raises(ValueError):
        Gate("RZZ", (1, 1))
    with pytest.raises(ValueError):
        Circuit(1, (Gate("RX", (1,)),))
    with pytest.raises(ValueError):
        Circuit(1, (Gate("RX", (0,), 0, 1.0),), n_params=0)


def test_qaoa_gate_counts():
    model = small_model(5, dense=False)
    for p in (1, 2, 3):
        c = build_qaoa(model, p)
        assert c.n_params == 2 * p
        assert c.count("H") == 5
        assert c.count("RZ") == p * len(model.h)
        assert c.count("RZZ") == p * len(model.J)
        assert c.count("RX") == 5 * p
    with pytest.raises(ValueError):
        build_qaoa(model, 0)


def test_gate_scales_follow_coefficients():
    model = small_model(3)
    c = build_qaoa(model, 1)
    for g in c.gates:
        if g.kind == "RZ":
            assert g.scale == pytest.approx(2 * model.h[g.qubits[0]]) and g.param == 0
        elif g.kind == "RZZ":
            assert g.scale == pytest.approx(2 * model.J[g.qubits]) and g.param == 0
        elif g.kind == "RX":
            assert g.scale == -2.0 and g.param == 1


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 9).flatmap(lambda n: st.sets(
    st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)).filter(lambda t: t[0] < t[1]), max_size=30)))
def test_edge_coloring_runs_are_matchings(pairs):
    order = edge_colored_order(pairs)
    assert sorted(order) == sorted(pairs)
    # split into maximal runs without a shared qubit; the number of runs bounds the colours used
    degree = {}
    for u, v in pairs:
        degree[u] = degree.get(u, 0) + 1
        degree[v] = degree.get(v, 0) + 1
    runs, current = 0, set()
    for u, v in order:
        if u in current or v in current or not runs:
            runs += 1
            current = set()
        current |= {u, v}
    if pairs:
        assert runs <= 2 * max(degree.values()) - 1


def test_depth_of_parallel_layer():
    gates = [Gate("H", (q,)) for q in range(4)] + [Gate("CNOT", (0, 1)), Gate("CNOT", (2, 3)), Gate("CNOT", (1, 2))]
    assert circuit_depth(gates, 4) == 3


def test_text_roundtrip():
    c = build_qaoa(small_model(4), 2)
    again = Circuit.from_text(c.to_text())
    assert again == c


def test_param_vector_views():
    pv = ParamVector.standard([0.1, 0.2], [0.3, 0.4], strategy="x")
    np.testing.assert_array_equal(pv.gammas, [0.1, 0.2])
    np.testing.assert_array_equal(pv.betas, [0.3, 0.4])
    assert ParamVector.from_dict(pv.to_dict()).values.tolist() == pv.values.tolist()
    with pytest.raises(ValueError):
        ParamVector("standard", 2, [0.1])
    with pytest.raises(ValueError):
        ParamVector.standard([0.1], [0.2, 0.3])


def test_multi_angle_labels_and_broadcast():
    model = small_model(4, dense=False)
    circ, template = build_multi_angle(model, 2)
    per_layer = len(model.h) + len(model.J) + 4
    assert circ.n_params == 2 * per_layer == template.values.size
    std = ParamVector.standard([0.3, -0.2], [0.5, 0.1])
    wide = broadcast_params(template, std)
    a = simulate(build_qaoa(model, 2), std).amplitudes
    b = simulate(circ, wide).amplitudes
    np.testing.assert_allclose(a, b, atol=1e-13)
    maps = wide.layer_maps(1)
    assert set(maps["RX"].values()) == {0.1}
    assert set(maps["RZZ"].values()) == {-0.2}


def test_canonicalize_folds_beta_and_gamma():
    pv = ParamVector.standard([4.0], [2.0])
    out = canonicalize_params(pv)
    assert out.betas[0] == pytest.approx(2.0 - math.pi)
    assert out.gammas[0] == pytest.approx(4.0 - 2 * math.pi)
    inside = ParamVector.standard([3.0], [0.2])
    np.testing.assert_allclose(canonicalize_params(inside).values, inside.values)
