import numpy as np
import pytest

from trafficqaoa.cf import (
    CompressionPlan,
    build_cf_maqaoa,
    build_cf_qaoa,
    greedy_layout,
    optimize_cf_maqaoa,
    plan_compression,
)
from trafficqaoa.circuit import ParamVector, broadcast_params, build_qaoa
from trafficqaoa.ising import normalize, to_ising
from trafficqaoa.params import optimize
from trafficqaoa.qubo import build_qubo
from trafficqaoa.roadnet import random_instance
from trafficqaoa.routing import CouplingMap, route_and_count
from trafficqaoa.simulator import ExpectationFunction, simulate

from conftest import small_model

HEAVY = CouplingMap.heavy_hex(3, 2)


def traffic_model(cars, seed=0):
    return normalize(to_ising(build_qubo(random_instance(cars, 2, seed=seed))))


def test_plan_partitions_couplings():
    model = traffic_model(4)
    plan = plan_compression(model, HEAVY)
    assert sorted(plan.kept_pairs + plan.removed_pairs) == model.pairs
    assert all(HEAVY.adjacent(plan.layout[u], plan.layout[v]) for u, v in plan.kept_pairs)
    assert not any(HEAVY.adjacent(plan.layout[u], plan.layout[v]) for u, v in plan.removed_pairs)
    assert CompressionPlan.from_dict(plan.to_dict()) == plan


def test_complete_map_keeps_everything():
    model = small_model(5)
    plan = plan_compression(model, CouplingMap.complete(5))
    assert plan.removed_pairs == ()
    assert build_cf_qaoa(model, plan, 1) == build_qaoa(model, 1)


@pytest.mark.parametrize("p", [1, 2])
def test_cf_circuit_routes_without_swaps(p):
    for cars in (2, 4, 6):
        model = traffic_model(cars)
        plan = plan_compression(model, HEAVY)
        res = route_and_count(build_cf_qaoa(model, plan, p), HEAVY, plan.layout)
        assert res.swap_count == 0
        assert res.cnot_count == 2 * p * len(plan.kept_pairs)
        ma, _ = build_cf_maqaoa(model, plan, p)
        assert route_and_count(ma, HEAVY, plan.layout).cnot_count == res.cnot_count


def test_greedy_and_custom_layouts():
    model = traffic_model(3, seed=1)
    layout = greedy_layout(model, HEAVY)
    assert len(set(layout)) == model.n_qubits
    plan = plan_compression(model, HEAVY, strategy="greedy")
    assert plan.strategy == "greedy" and list(plan.layout) == layout
    custom = plan_compression(model, HEAVY, layout=list(range(model.n_qubits)))
    assert custom.strategy == "custom"
    with pytest.raises(ValueError):
        plan_compression(model, HEAVY, strategy="nope")
    with pytest.raises(ValueError):
        plan_compression(model, HEAVY, layout=[0] * model.n_qubits)
    with pytest.raises(ValueError):
        plan_compression(small_model(5), CouplingMap.linear(4))


def test_broadcast_reproduces_cf_qaoa_exactly():
    model = traffic_model(4, seed=2)
    plan = plan_compression(model, HEAVY)
    std = ParamVector.standard([0.37, -0.2], [0.41, 0.15])
    cf = ExpectationFunction(model, build_cf_qaoa(model, plan, 2))
    ma_circ, template = build_cf_maqaoa(model, plan, 2)
    ma = ExpectationFunction(model, ma_circ)
    assert abs(cf(std.values) - ma(broadcast_params(template, std).values)) < 1e-12


def test_cf_maqaoa_not_worse_than_its_starts():
    model = traffic_model(3, seed=3)
    plan = plan_compression(model, HEAVY)
    cf_circ = build_cf_qaoa(model, plan, 1)
    cf = optimize(model, cf_circ, ParamVector.standard([0.3], [0.3]), max_iter=50)
    ma = optimize_cf_maqaoa(model, plan, [cf.params], max_iter=50)
    assert ma.value <= cf.value + 1e-9
    with pytest.raises(ValueError):
        optimize_cf_maqaoa(model, plan, [])
