import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_state
from qcslp.sim import (
    Circuit,
    Gate,
    SimulationError,
    Statevector,
    apply_circuit,
    apply_gate,
    circuit_unitary,
    cnot,
    h,
    iqft,
    mcx,
    measure,
    parse_gate,
    phase,
    qft,
    qft_decomposed,
    x,
)


def dft_matrix(m):
    dim = 1 << m
    j, k = np.meshgrid(np.arange(dim), np.arange(dim), indexing="ij")
    return np.exp(2j * np.pi * j * k / dim) / math.sqrt(dim)


def unitary(gates, k):
    return circuit_unitary(Circuit(k).extend(gates))


def test_x_on_basis():
    s = apply_gate(Statevector.zero(3), x(1))
    assert s.data[0b010] == 1


def test_h_on_zero():
    s = apply_gate(Statevector.zero(1), h(0))
    assert np.allclose(s.data, [1 / math.sqrt(2)] * 2)


def test_single_qubit_matrices():
    H = np.array([[1, 1], [1, -1]]) / math.sqrt(2)
    assert np.allclose(unitary([h(0)], 1), H)
    assert np.allclose(unitary([x(0)], 1), [[0, 1], [1, 0]])
    assert np.allclose(unitary([phase(0, 2)], 1), np.diag([1, 1j]))
    assert np.allclose(unitary([phase(0, 3, dagger=True)], 1), np.diag([1, np.exp(-1j * np.pi / 4)]))


def test_cnot_matrix_convention():
    # control qubit 0 is the least significant index bit
    u = unitary([cnot(0, 1)], 2)
    expect = np.zeros((4, 4))
    for i in range(4):
        c, t = i & 1, i >> 1 & 1
        expect[c | (t ^ c) << 1, i] = 1
    assert np.allclose(u, expect)


def test_mcx_negated_controls_equal_x_conjugation():
    neg = unitary([mcx((0, 1, 2), 3, negated=(1, 2))], 4)
    conj = unitary([x(1), x(2), mcx((0, 1, 2), 3), x(1), x(2)], 4)
    assert np.allclose(neg, conj)


def test_mcx_truth_table():
    g = mcx((0, 2), 1)
    for i in range(8):
        out = apply_gate(Statevector.basis(3, i), g)
        flip = (i & 1) and (i >> 2 & 1)
        assert out.data[i ^ (2 if flip else 0)] == 1


def test_controlled_phase():
    u = unitary([phase(1, 1, controls=(0,))], 2)
    assert np.allclose(u, np.diag([1, 1, 1, -1]))


@pytest.mark.parametrize("m", [1, 2, 3, 4, 5])
def test_qft_block_is_dft(m):
    assert np.allclose(unitary([qft(range(m))], m), dft_matrix(m))
    assert np.allclose(unitary([iqft(range(m))], m), dft_matrix(m).conj().T)


@pytest.mark.parametrize("m", [1, 2, 3, 4])
def test_qft_decomposition_matches_block(m):
    assert np.allclose(unitary(qft_decomposed(range(m)), m), dft_matrix(m))
    assert np.allclose(unitary(qft_decomposed(range(m), inverse=True), m), dft_matrix(m).conj().T)


def test_one_qubit_qft_is_hadamard():
    assert np.allclose(unitary([qft([0])], 1), unitary([h(0)], 1))


def test_qft_on_scattered_register():
    # register (3, 0, 2) inside 4 qubits, embedded via permutation
    regs = (3, 0, 2)
    u = unitary([qft(regs)], 4)
    f = dft_matrix(3)
    for col in range(16):
        v = sum((col >> q & 1) << k for k, q in enumerate(regs))
        rest = col & ~sum(1 << q for q in regs)
        for row in range(16):
            w = sum((row >> q & 1) << k for k, q in enumerate(regs))
            same = (row & ~sum(1 << q for q in regs)) == rest
            assert np.isclose(u[row, col], f[w, v] if same else 0)


def test_qft_round_trip(rng):
    psi = Statevector(random_state(rng, 5))
    out = apply_circuit(psi.copy(), [qft((1, 2, 4)), iqft((1, 2, 4))])
    assert np.allclose(out.data, psi.data)


@pytest.mark.parametrize("g", [h(0), x(2), mcx((0, 1), 3, negated=(1,)), phase(2, 3, controls=(0, 3)), qft((0, 1, 3))])
def test_gates_are_unitary_and_inverses(g):
    u = unitary([g], 4)
    assert np.allclose(u.conj().T @ u, np.eye(16))
    assert np.allclose(unitary([g, g.inverse()], 4), np.eye(16))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False),
       st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False))
def test_linearity_and_norm(seed, a, b):
    rng = np.random.default_rng(seed)
    circ = Circuit(4).extend([h(0), mcx((0, 1), 2, negated=(1,)), phase(3, 2, controls=(2,)), qft((1, 3)), x(0)])
    u, v = random_state(rng, 4), random_state(rng, 4)
    lhs = apply_circuit(Statevector(a * u + b * v), circ).data
    rhs = a * apply_circuit(Statevector(u), circ).data + b * apply_circuit(Statevector(v), circ).data
    assert np.allclose(lhs, rhs, atol=1e-9)
    assert math.isclose(apply_circuit(Statevector(u), circ).norm(), 1, abs_tol=1e-12)


def test_measurement_frequencies():
    rng = np.random.default_rng(7)
    plus = apply_gate(Statevector.zero(1), h(0))
    ones = sum(measure(plus, [0], rng)[0][0] for _ in range(10_000))
    assert abs(ones / 10_000 - 0.5) < 0.02

    biased = Statevector(np.array([math.sqrt(0.25), math.sqrt(0.75)]))
    ones = sum(measure(biased, [0], rng)[0][0] for _ in range(10_000))
    assert abs(ones / 10_000 - 0.75) < 0.02


def test_measurement_collapse_and_bit_order():
    bell = apply_circuit(Statevector.zero(3), [h(0), cnot(0, 2)])
    for seed in range(20):
        bits, post = measure(bell, [2, 0], seed)
        assert bits[0] == bits[1]
        assert math.isclose(post.norm(), 1)
        assert post.data[bits[0] * 0b101] == pytest.approx(1)
    assert bell.norm() == pytest.approx(1)  # input untouched


def test_measure_is_seeded():
    psi = Statevector(random_state(np.random.default_rng(3), 6))
    assert [measure(psi, range(6), 99)[0] for _ in range(3)] == [measure(psi, range(6), 99)[0]] * 3


def test_marginal():
    psi = Statevector(random_state(np.random.default_rng(4), 4))
    p = psi.probabilities().reshape(2, 2, 2, 2)  # axes: q3 q2 q1 q0
    m = psi.marginal([2, 0])
    expect = p.sum(axis=(0, 2))  # remaining axes q2, q0 -> index q2*2 + q0
    assert np.allclose(m, [expect[0, 0], expect[1, 0], expect[0, 1], expect[1, 1]])


def test_dump_parse_round_trip():
    gates = [x(0), h(3), mcx((0, 2), 5, negated=(2,)), phase(2, 3), phase(2, 4, controls=(0, 1), dagger=True),
             Gate("H", (1,), (4,)), qft((0, 1, 2, 3)), iqft((5, 2, 0))]
    circ = Circuit(6).extend(gates)
    text = circ.dump()
    assert "MCX c:0,!2 t:5" in text
    assert Circuit.parse(text, 6).gates == gates
    for g in gates:
        assert parse_gate(str(g)) == g


@pytest.mark.parametrize(
    "build",
    [
        lambda: Gate("Y", (0,)),
        lambda: Gate("X", (0, 1)),
        lambda: mcx((1,), 1),
        lambda: mcx((0, 0), 1),
        lambda: Gate("X", (2,), (0,), frozenset({1})),
    ],
)
def test_invalid_gates(build):
    with pytest.raises(SimulationError):
        build()


def test_out_of_range_qubits():
    with pytest.raises(SimulationError):
        Circuit(2).append(x(2))
    with pytest.raises(SimulationError):
        apply_gate(Statevector.zero(2), x(5))
    with pytest.raises(SimulationError):
        Statevector(np.ones(3))
