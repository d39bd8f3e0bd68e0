from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from symmetrize.circuit import (
    Circuit,
    CircuitError,
    Gate,
    GateKind,
    canonical_angle,
    circuit_unitary,
    embed_gate,
    gen_ansatz,
    gen_bell,
    gen_qft_adder,
    gen_random_circuit,
    parse_circuit,
    phase_aligned_distance,
    serialize_circuit,
    transpile_to_native,
)
from symmetrize.simulate import simulate_ideal

X = np.array([[0, 1], [1, 0]], dtype=complex)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)


def _native_gate():
    angle = st.floats(-20, 20, allow_nan=False)
    one = st.builds(lambda k, q, a: Gate(k, (q,), a),
                    st.sampled_from([GateKind.RX, GateKind.RY, GateKind.RZ]), st.integers(0, 3), angle)
    two = st.builds(lambda p, d, a: Gate(GateKind.XX, (p, (p + d) % 4), a),
                    st.integers(0, 3), st.integers(1, 3), angle)
    return st.one_of(one, two)


native_circuits = st.builds(
    lambda gates, meas: Circuit(4, tuple(gates), meas), st.lists(_native_gate(), max_size=12), st.booleans()
)


class TestParse:
    def test_grammar_instance(self):
        c = parse_circuit("qubits 2\nry 0 1.5707963\nxx 0 1 1.5707963\nmeasure")
        assert c.n_qubits == 2
        assert len(c.gates) == 2
        assert c.measure_all
        assert c.gates[1].kind is GateKind.XX and c.gates[1].targets == (0, 1)

    def test_duplicate_xx_targets(self):
        with pytest.raises(CircuitError, match="duplicate") as err:
            parse_circuit("qubits 1\nxx 0 0 1.0")
        assert err.value.line == 2

    @pytest.mark.parametrize(
        "text, line",
        [
            ("qubits 2\nrx 2 0.1", 2),
            ("qubits 2\n\nfoo 0", 3),
            ("rx 0 0.1", 1),
            ("qubits 2\nmeasure\nrx 0 1", 3),
            ("qubits 2\nrz 0 abc", 2),
            ("qubits 2\nxx 0 1", 2),
        ],
    )
    def test_errors_carry_line_numbers(self, text, line):
        with pytest.raises(CircuitError) as err:
            parse_circuit(text)
        assert err.value.line == line
        assert f"line {line}" in str(err.value)

    def test_comments_and_blank_lines(self):
        c = parse_circuit("# header\nqubits 3  # three\n\nrx 2 0.5 # tail\n")
        assert c.n_qubits == 3 and c.gates == (Gate(GateKind.RX, (2,), 0.5),)
        assert not c.measure_all

    def test_extended_gates_can_be_refused(self):
        with pytest.raises(CircuitError, match="extended"):
            parse_circuit("qubits 2\ncnot 0 1", allow_extended=False)

    @given(native_circuits)
    @settings(max_examples=60, deadline=None)
    def test_round_trip(self, c):
        text = serialize_circuit(c)
        again = parse_circuit(text)
        assert again.structurally_equal(c, atol=1e-9)
        assert serialize_circuit(again) == text


class TestSerialize:
    def test_empty(self):
        assert serialize_circuit(Circuit(1, (), False)) == "qubits 1"

    def test_bell_has_one_xx_line(self):
        lines = serialize_circuit(gen_bell()).splitlines()
        assert sum(1 for ln in lines if ln.startswith("xx ")) == 1

    def test_twelve_significant_digits(self):
        text = serialize_circuit(Circuit(1, (Gate(GateKind.RZ, (0,), math.pi / 3),), False))
        assert text.splitlines()[1] == "rz 0 1.0471975512"


class TestAngles:
    @given(st.floats(-1e4, 1e4, allow_nan=False))
    def test_canonical_range_and_period(self, theta):
        a = canonical_angle(theta)
        assert -2 * math.pi <= a < 2 * math.pi
        # 4pi-periodic unitary: folded angle gives the same matrix
        u = embed_gate(Gate(GateKind.RX, (0,), theta), 1)
        v = embed_gate(Gate(GateKind.RX, (0,), a), 1)
        assert np.allclose(u, v, atol=1e-8)

    def test_non_finite_rejected(self):
        with pytest.raises(CircuitError):
            Gate(GateKind.RZ, (0,), math.inf)


class TestUnitary:
    def test_empty_is_identity(self):
        assert np.array_equal(circuit_unitary(Circuit(3)), np.eye(8))

    def test_rz_definition(self):
        theta = 0.73
        u = circuit_unitary(Circuit(1, (Gate(GateKind.RZ, (0,), theta),)))
        assert np.allclose(u, np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)]), atol=1e-14)

    def test_ms_gate(self):
        u = circuit_unitary(gen_bell())
        xx = np.kron(X, X)
        expected = math.cos(math.pi / 4) * np.eye(4) - 1j * math.sin(math.pi / 4) * xx
        assert np.allclose(u, expected, atol=1e-14)

    def test_unitarity(self):
        u = circuit_unitary(gen_random_circuit(4, 6, 3))
        assert np.max(np.abs(u.conj().T @ u - np.eye(16))) < 1e-10

    def test_size_limit(self):
        with pytest.raises(CircuitError):
            circuit_unitary(Circuit(11))

    def test_qubit_zero_is_least_significant(self):
        u = circuit_unitary(Circuit(2, (Gate(GateKind.RX, (0,), math.pi),)))
        # |00> -> |01> (index 1) up to phase
        assert abs(abs(u[1, 0]) - 1) < 1e-14


class TestTranspile:
    def test_cnot_has_one_ms_gate(self):
        c = Circuit(2, (Gate(GateKind.CNOT, (0, 1)),))
        out = transpile_to_native(c)
        xx = [g for g in out.gates if g.kind is GateKind.XX]
        assert len(xx) == 1 and math.isclose(abs(xx[0].angle), math.pi / 2)
        cnot = np.array([[1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0], [0, 1, 0, 0]], dtype=complex)
        # control is qubit 0 (LSB): |q1 q0> = |01> -> |11>
        assert phase_aligned_distance(circuit_unitary(out), cnot) < 1e-10

    def test_hadamard(self):
        out = transpile_to_native(Circuit(1, (Gate(GateKind.H, (0,)),)))
        assert {g.kind for g in out.gates} <= {GateKind.RY, GateKind.RZ}
        assert phase_aligned_distance(circuit_unitary(out), HADAMARD) < 1e-10

    def test_identity(self):
        c = Circuit(3)
        assert transpile_to_native(c).structurally_equal(c)

    @pytest.mark.parametrize("partial", [False, True])
    @pytest.mark.parametrize("phi", [0.3, -1.1, math.pi / 4])
    def test_cphase(self, phi, partial):
        c = Circuit(2, (Gate(GateKind.CPHASE, (1, 0), phi),))
        out = transpile_to_native(c, partial_xx=partial)
        assert out.is_native
        assert phase_aligned_distance(circuit_unitary(out), np.diag([1, 1, 1, np.exp(1j * phi)])) < 1e-10

    @given(st.lists(st.tuples(st.sampled_from(["h", "cnot", "cphase", "rx", "xx"]),
                              st.permutations(range(4)), st.floats(-5, 5, allow_nan=False)),
                    max_size=10), st.booleans())
    @settings(max_examples=40, deadline=None)
    def test_unitary_preserved(self, spec, partial):
        gates = []
        for name, perm, angle in spec:
            kind = GateKind(name)
            gates.append(Gate(kind, tuple(perm[: kind.arity]), angle))
        c = Circuit(4, tuple(gates))
        out = transpile_to_native(c, partial_xx=partial)
        assert out.is_native
        assert phase_aligned_distance(circuit_unitary(out), circuit_unitary(c)) < 1e-10


class TestGenerators:
    def test_bell_distribution(self):
        h = simulate_ideal(gen_bell())
        assert h.allclose(type(h)(2, {0: 0.5, 3: 0.5}), atol=1e-12)
        assert gen_bell().n_xx() == 1

    def test_bell_state_fidelity(self):
        psi = circuit_unitary(gen_bell())[:, 0]
        # the MS gate yields (|00> - i|11>)/sqrt2, locally equivalent to the Bell state;
        # fidelity with the target is 1 after removing the relative phase on |11>
        target = np.array([1, 0, 0, 1]) / math.sqrt(2)
        fixed = psi * np.array([1, 1, 1, 1j])
        assert abs(abs(np.vdot(target, fixed)) ** 2 - 1) < 1e-12

    @pytest.mark.parametrize("bits, a, b, s", [(2, 1, 2, 3), (3, 5, 6, 3)])
    def test_adder_examples(self, bits, a, b, s):
        h = simulate_ideal(gen_qft_adder(bits, a, b))
        assert h.support() == [s]
        assert abs(h[s] - 1) < 1e-10

    def test_adder_exhaustive(self):
        for bits in (1, 2, 3):
            for a in range(1 << bits):
                for b in range(1 << bits):
                    c = gen_qft_adder(bits, a, b)
                    assert c.is_native
                    h = simulate_ideal(c)
                    assert abs(h[(a + b) % (1 << bits)] - 1) < 1e-10, (bits, a, b)

    def test_adder_operand_range(self):
        with pytest.raises(CircuitError):
            gen_qft_adder(2, 4, 0)

    def test_random_circuit(self):
        c = gen_random_circuit(4, 6, seed=7)
        pairs = [frozenset(c.gates[i].targets) for i in c.xx_positions()]
        assert len(pairs) == 6 and len(set(pairs)) == 6
        assert all(math.isclose(c.gates[i].angle, math.pi / 2) for i in c.xx_positions())
        assert gen_random_circuit(4, 6, seed=7) == c
        with pytest.raises(CircuitError):
            gen_random_circuit(2, 2, seed=1)

    def test_ansatz_is_broad(self):
        h = simulate_ideal(gen_ansatz(4, 2, 3))
        assert len(h.support(1e-3)) > 8
