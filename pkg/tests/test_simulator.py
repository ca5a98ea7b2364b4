import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from trafficqaoa.circuit import Circuit, Gate, ParamVector, build_multi_angle, build_qaoa
from trafficqaoa.ising import IsingModel
from trafficqaoa.simulator import (
    CircuitSimulator,
    ExpectationFunction,
    ShotDistribution,
    expectation,
    finite_difference,
    gradient,
    sample,
    simulate,
)

from conftest import qaoa_oracle, small_model

angles = st.floats(-3, 3, allow_nan=False)


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5, 6])
@pytest.mark.parametrize("p", [1, 2])
def test_matches_dense_exponential_oracle(n, p):
    model = small_model(n, seed=n + 10 * p)
    rng = np.random.default_rng(n * p)
    g, b = rng.uniform(-1.5, 1.5, p), rng.uniform(-1.5, 1.5, p)
    psi = simulate(build_qaoa(model, p), ParamVector.standard(g, b)).amplitudes
    ref = qaoa_oracle(model, g, b)
    assert 1 - abs(np.vdot(ref, psi)) ** 2 < 1e-10


@pytest.mark.parametrize("n", [1, 3, 7, 12])
def test_fast_path_matches_gate_by_gate(n):
    model = small_model(n, seed=2, dense=False)
    circ, template = build_multi_angle(model, 2)
    theta = np.random.default_rng(n).uniform(-2, 2, circ.n_params)
    a = simulate(circ, theta).amplitudes
    b = simulate(circ, theta, fast=False).amplitudes
    np.testing.assert_allclose(a, b, atol=1e-12)


def test_single_qubit_closed_form():
    # |+> under exp(-i g h Z) then exp(i b X): <Z> = -sin(2 g h) sin(2 b)
    h = 0.7
    model = IsingModel(1, {}, {0: h})
    circ = build_qaoa(model, 1)
    fn = ExpectationFunction(model, circ)
    for g, b in [(0.3, 0.2), (-1.1, 0.9), (2.0, -0.4)]:
        assert fn([g, b]) == pytest.approx(-h * math.sin(2 * g * h) * math.sin(2 * b), abs=1e-13)


@settings(max_examples=30, deadline=None)
@given(st.lists(angles, min_size=4, max_size=4), st.sampled_from([-1, 1]), st.integers(0, 1))
def test_beta_shift_by_pi_preserves_distribution(vals, sign, layer):
    model = small_model(4, seed=5)
    circ = build_qaoa(model, 2)
    base = np.array(vals)
    shifted = base.copy()
    shifted[2 + layer] += sign * math.pi
    pa = simulate(circ, base).probabilities
    pb = simulate(circ, shifted).probabilities
    assert np.max(np.abs(pa - pb)) < 1e-10


def test_state_stays_normalised():
    model = small_model(8, seed=3)
    sv = simulate(build_qaoa(model, 3), np.linspace(-1, 1, 6))
    assert sv.norm() == pytest.approx(1.0, abs=1e-12)


def test_expectation_matches_dense_quadratic_form():
    model = small_model(5, seed=8)
    sv = simulate(build_qaoa(model, 1), [0.4, -0.3])
    ref = np.vdot(sv.amplitudes, model.dense_matrix() @ sv.amplitudes).real
    assert expectation(sv, model) == pytest.approx(ref, abs=1e-12)


def test_zero_angles_give_uniform_superposition():
    model = small_model(4)
    sv = simulate(build_qaoa(model, 2), np.zeros(4))
    np.testing.assert_allclose(sv.probabilities, 1 / 16, atol=1e-14)
    assert expectation(sv, model) == pytest.approx(model.constant, abs=1e-12)


def test_cnot_and_swap_gates():
    c = Circuit(2, (Gate("H", (0,)), Gate("CNOT", (0, 1))))
    np.testing.assert_allclose(simulate(c).probabilities, [0.5, 0, 0, 0.5], atol=1e-14)
    c = Circuit(3, (Gate("H", (0,)), Gate("SWAP", (0, 2))))
    for fast in (True, False):
        # qubit 2 is the least significant bit
        np.testing.assert_allclose(simulate(c, fast=fast).probabilities[[0, 1]], [0.5, 0.5], atol=1e-14)


def test_sampling_is_seeded_and_sums_to_shots():
    sv = simulate(build_qaoa(small_model(4), 1), [0.5, 0.3])
    a, b = sample(sv, 1000, seed=7), sample(sv, 1000, seed=7)
    assert a == b
    assert sum(a.counts.values()) == 1000
    assert ShotDistribution.from_text(a.to_text()) == a
    with pytest.raises(ValueError):
        sample(sv, 0, seed=1)


def test_sampling_frequencies_converge():
    sv = simulate(build_qaoa(small_model(3), 1), [0.5, 0.3])
    dist = sample(sv, 200000, seed=0)
    freq = np.zeros(8)
    for bits, c in dist.counts.items():
        freq[int(bits, 2)] = c / dist.shots
    assert np.max(np.abs(freq - sv.probabilities)) < 0.01


def test_shot_distribution_rejects_bad_total():
    with pytest.raises(ValueError):
        ShotDistribution({"0": 3}, 4)


def test_cap_enforced():
    model = small_model(3)
    with pytest.raises(ValueError):
        CircuitSimulator(build_qaoa(model, 1), cap=2)


def test_finite_difference_gradient_matches_closed_form():
    h = 0.9
    model = IsingModel(1, {}, {0: h})
    g, b = 0.4, 0.3
    grad = gradient(model, build_qaoa(model, 1), [g, b])
    dg = -h * 2 * h * math.cos(2 * g * h) * math.sin(2 * b)
    db = -h * math.sin(2 * g * h) * 2 * math.cos(2 * b)
    np.testing.assert_allclose(grad, [dg, db], atol=1e-7)
    fwd = finite_difference(lambda x: float(x @ x), np.array([1.0, 2.0]), 1e-7, central=False)
    np.testing.assert_allclose(fwd, [2, 4], atol=1e-5)


def test_expectation_function_counts_calls():
    model = small_model(3)
    fn = ExpectationFunction(model, build_qaoa(model, 1))
    fn([0.1, 0.1])
    fn.gradient([0.1, 0.1])
    assert fn.nfev == 5
