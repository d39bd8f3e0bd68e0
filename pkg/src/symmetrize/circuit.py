"""Circuit representation, text format, generators and native-gate transpilation.

Conventions used throughout the package:

* ``RX(t) = exp(-i t X / 2)``, ``RY``, ``RZ`` likewise.
* ``XX(t) = exp(-i t X⊗X / 2)``; the fully entangling Mølmer–Sørensen gate is ``XX(pi/2)``.
* Qubit 0 is the least-significant bit of an outcome integer. Bitstrings are
  printed with qubit 0 rightmost.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

FOUR_PI = 4.0 * math.pi
TWO_PI = 2.0 * math.pi
MAX_UNITARY_QUBITS = 10


class CircuitError(ValueError):
    """Raised for malformed circuits or circuit text."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class GateKind(str, Enum):
    RX = "rx"
    RY = "ry"
    RZ = "rz"
    XX = "xx"
    # extended input set, removed by transpile_to_native
    H = "h"
    CNOT = "cnot"
    CPHASE = "cphase"

    @property
    def arity(self) -> int:
        return 2 if self in (GateKind.XX, GateKind.CNOT, GateKind.CPHASE) else 1

    @property
    def has_angle(self) -> bool:
        return self not in (GateKind.H, GateKind.CNOT)

    @property
    def native(self) -> bool:
        return self in NATIVE_KINDS


NATIVE_KINDS = frozenset({GateKind.RX, GateKind.RY, GateKind.RZ, GateKind.XX})


def canonical_angle(theta: float) -> float:
    """Fold an angle into [-2pi, 2pi), the XX/R* unitaries being 4pi-periodic."""
    folded = math.fmod(theta + TWO_PI, FOUR_PI)
    if folded < 0:
        folded += FOUR_PI
    folded -= TWO_PI
    # fmod can land exactly on the open end after rounding
    return -TWO_PI if folded >= TWO_PI else folded


@dataclass(frozen=True)
class Gate:
    kind: GateKind
    targets: tuple[int, ...]
    angle: float = 0.0

    def __post_init__(self):
        kind = GateKind(self.kind)
        object.__setattr__(self, "kind", kind)
        targets = tuple(int(q) for q in self.targets)
        object.__setattr__(self, "targets", targets)
        if len(targets) != kind.arity:
            raise CircuitError(f"{kind.value} takes {kind.arity} target(s), got {len(targets)}")
        if any(q < 0 for q in targets):
            raise CircuitError(f"negative qubit index in {kind.value}")
        if kind.arity == 2 and targets[0] == targets[1]:
            raise CircuitError(f"duplicate targets in {kind.value} {targets[0]} {targets[1]}")
        angle = float(self.angle) if kind.has_angle else 0.0
        if not math.isfinite(angle):
            raise CircuitError(f"non-finite angle in {kind.value}")
        object.__setattr__(self, "angle", canonical_angle(angle) if kind.has_angle else 0.0)

    def matrix(self) -> np.ndarray:
        """Local unitary; for 2-qubit gates the first target is the high bit of the 4x4 index."""
        return _gate_matrix(self.kind, self.angle)


@dataclass(frozen=True)
class Circuit:
    n_qubits: int
    gates: tuple[Gate, ...] = ()
    measure_all: bool = True

    def __post_init__(self):
        if self.n_qubits < 1:
            raise CircuitError("circuit needs at least one qubit")
        object.__setattr__(self, "gates", tuple(self.gates))
        for g in self.gates:
            for q in g.targets:
                if q >= self.n_qubits:
                    raise CircuitError(f"qubit {q} out of range for {self.n_qubits}-qubit circuit")

    @property
    def is_native(self) -> bool:
        return all(g.kind.native for g in self.gates)

    def xx_positions(self) -> list[int]:
        return [i for i, g in enumerate(self.gates) if g.kind is GateKind.XX]

    def n_xx(self) -> int:
        return len(self.xx_positions())

    def structurally_equal(self, other: Circuit, atol: float = 1e-10) -> bool:
        if (self.n_qubits, self.measure_all, len(self.gates)) != (
            other.n_qubits, other.measure_all, len(other.gates)
        ):
            return False
        return all(
            a.kind is b.kind and a.targets == b.targets and abs(a.angle - b.angle) <= atol
            for a, b in zip(self.gates, other.gates)
        )


# ---------------------------------------------------------------------------
# matrices

_X = np.array([[0, 1], [1, 0]], dtype=complex)
_HAD = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)


def _gate_matrix(kind: GateKind, theta: float) -> np.ndarray:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    if kind is GateKind.RX:
        return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)
    if kind is GateKind.RY:
        return np.array([[c, -s], [s, c]], dtype=complex)
    if kind is GateKind.RZ:
        return np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)])
    if kind is GateKind.XX:
        return c * np.eye(4, dtype=complex) - 1j * s * np.kron(_X, _X)
    if kind is GateKind.H:
        return _HAD.copy()
    if kind is GateKind.CNOT:
        return np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
    if kind is GateKind.CPHASE:
        return np.diag([1, 1, 1, np.exp(1j * theta)]).astype(complex)
    raise CircuitError(f"no matrix for {kind}")


def embed_gate(gate: Gate, n_qubits: int) -> np.ndarray:
    """Full 2^n x 2^n matrix of one gate under the LSB-is-qubit-0 ordering."""
    dim = 1 << n_qubits
    local = gate.matrix()
    full = np.zeros((dim, dim), dtype=complex)
    qs = gate.targets
    k = len(qs)
    for col in range(dim):
        # local index: first target is the high bit
        sub_in = 0
        for q in qs:
            sub_in = (sub_in << 1) | ((col >> q) & 1)
        base = col
        for q in qs:
            base &= ~(1 << q)
        for sub_out in range(1 << k):
            amp = local[sub_out, sub_in]
            if amp == 0:
                continue
            row = base
            for pos, q in enumerate(qs):
                if (sub_out >> (k - 1 - pos)) & 1:
                    row |= 1 << q
            full[row, col] += amp
    return full


def circuit_unitary(c: Circuit) -> np.ndarray:
    """Dense unitary of the circuit (product of gate unitaries in order)."""
    if c.n_qubits > MAX_UNITARY_QUBITS:
        raise CircuitError(f"dense unitary limited to {MAX_UNITARY_QUBITS} qubits, got {c.n_qubits}")
    u = np.eye(1 << c.n_qubits, dtype=complex)
    for g in c.gates:
        u = embed_gate(g, c.n_qubits) @ u
    return u


def phase_aligned_distance(u: np.ndarray, v: np.ndarray) -> float:
    """max |u - e^{i phi} v| with phi chosen to align the two matrices."""
    overlap = np.vdot(v, u)
    phase = overlap / abs(overlap) if abs(overlap) > 1e-300 else 1.0
    return float(np.max(np.abs(u - phase * v)))


# ---------------------------------------------------------------------------
# text format

def _parse_int(tok: str, line: int, what: str) -> int:
    try:
        value = int(tok)
    except ValueError:
        raise CircuitError(f"expected integer {what}, got {tok!r}", line) from None
    if value < 0:
        raise CircuitError(f"{what} must be non-negative", line)
    return value


def _parse_float(tok: str, line: int) -> float:
    try:
        value = float(tok)
    except ValueError:
        raise CircuitError(f"expected angle, got {tok!r}", line) from None
    if not math.isfinite(value):
        raise CircuitError("angle must be finite", line)
    return value


def strip_comment(raw: str) -> str:
    return raw.split("#", 1)[0].strip()


def parse_circuit(text: str, allow_extended: bool = True) -> Circuit:
    """Parse the line-oriented circuit format.

    ``qubits N`` must be the first statement; ``measure`` is optional and must
    be last. Extended gates (``h``, ``cnot``, ``cphase``) are accepted unless
    ``allow_extended`` is false.
    """
    n_qubits = None
    gates: list[Gate] = []
    measured = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = strip_comment(raw)
        if not line:
            continue
        toks = line.split()
        head = toks[0].lower()
        if measured:
            raise CircuitError("statement after measure", lineno)
        if head == "qubits":
            if n_qubits is not None:
                raise CircuitError("duplicate qubits declaration", lineno)
            if len(toks) != 2:
                raise CircuitError("usage: qubits N", lineno)
            n_qubits = _parse_int(toks[1], lineno, "qubit count")
            if n_qubits < 1:
                raise CircuitError("qubit count must be positive", lineno)
            continue
        if n_qubits is None:
            raise CircuitError("missing 'qubits N' header", lineno)
        if head == "measure":
            if len(toks) != 1:
                raise CircuitError("measure takes no arguments", lineno)
            measured = True
            continue
        try:
            kind = GateKind(head)
        except ValueError:
            raise CircuitError(f"unknown statement {toks[0]!r}", lineno) from None
        if not kind.native and not allow_extended:
            raise CircuitError(f"extended gate {head!r} not allowed here", lineno)
        expected = 1 + kind.arity + (1 if kind.has_angle else 0)
        if len(toks) != expected:
            raise CircuitError(f"{head} expects {expected - 1} argument(s)", lineno)
        targets = tuple(_parse_int(t, lineno, "qubit index") for t in toks[1 : 1 + kind.arity])
        for q in targets:
            if q >= n_qubits:
                raise CircuitError(f"qubit {q} out of range (qubits {n_qubits})", lineno)
        if kind.arity == 2 and targets[0] == targets[1]:
            raise CircuitError(f"duplicate targets in {head}", lineno)
        angle = _parse_float(toks[-1], lineno) if kind.has_angle else 0.0
        gates.append(Gate(kind, targets, angle))
    if n_qubits is None:
        raise CircuitError("empty circuit text (missing 'qubits N')")
    return Circuit(n_qubits, tuple(gates), measured)


def format_angle(theta: float) -> str:
    return f"{theta:.12g}"


def serialize_circuit(c: Circuit) -> str:
    lines = [f"qubits {c.n_qubits}"]
    for g in c.gates:
        parts = [g.kind.value, *map(str, g.targets)]
        if g.kind.has_angle:
            parts.append(format_angle(g.angle))
        lines.append(" ".join(parts))
    if c.measure_all:
        lines.append("measure")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# transpilation into {RX, RY, RZ, XX}

def _native_h(q: int) -> list[Gate]:
    # RY(pi/2) RZ(pi) = -i H
    return [Gate(GateKind.RZ, (q,), math.pi), Gate(GateKind.RY, (q,), math.pi / 2)]


def _native_cnot(ctrl: int, tgt: int) -> list[Gate]:
    # one fully entangling MS gate dressed by single-qubit rotations
    return [
        Gate(GateKind.RY, (ctrl,), math.pi / 2),
        Gate(GateKind.XX, (ctrl, tgt), math.pi / 2),
        Gate(GateKind.RX, (ctrl,), -math.pi / 2),
        Gate(GateKind.RX, (tgt,), -math.pi / 2),
        Gate(GateKind.RY, (ctrl,), -math.pi / 2),
    ]


def _native_cphase(a: int, b: int, phi: float, partial_xx: bool) -> list[Gate]:
    if partial_xx:
        # CPHASE = RZ_a(phi/2) RZ_b(phi/2) ZZ(-phi/2), ZZ obtained from XX by RY(pi/2) conjugation
        return [
            Gate(GateKind.RY, (a,), math.pi / 2),
            Gate(GateKind.RY, (b,), math.pi / 2),
            Gate(GateKind.XX, (a, b), -phi / 2),
            Gate(GateKind.RY, (a,), -math.pi / 2),
            Gate(GateKind.RY, (b,), -math.pi / 2),
            Gate(GateKind.RZ, (a,), phi / 2),
            Gate(GateKind.RZ, (b,), phi / 2),
        ]
    # two CNOTs: ZZ(-phi/2) = CNOT . RZ_b(-phi/2) . CNOT
    return [
        Gate(GateKind.RZ, (a,), phi / 2),
        Gate(GateKind.RZ, (b,), phi / 2),
        *_native_cnot(a, b),
        Gate(GateKind.RZ, (b,), -phi / 2),
        *_native_cnot(a, b),
    ]


def transpile_to_native(c: Circuit, partial_xx: bool = False) -> Circuit:
    """Rewrite H/CNOT/CPHASE into native trapped-ion gates (global phase dropped).

    With ``partial_xx`` a controlled phase uses one XX of angle ``-phi/2``;
    otherwise it is built from two fully entangling XX(pi/2) gates.
    """
    out: list[Gate] = []
    for g in c.gates:
        if g.kind.native:
            out.append(g)
        elif g.kind is GateKind.H:
            out.extend(_native_h(*g.targets))
        elif g.kind is GateKind.CNOT:
            out.extend(_native_cnot(*g.targets))
        elif g.kind is GateKind.CPHASE:
            out.extend(_native_cphase(*g.targets, g.angle, partial_xx))
        else:  # pragma: no cover - enum is closed
            raise CircuitError(f"unsupported gate kind {g.kind}")
    return Circuit(c.n_qubits, tuple(out), c.measure_all)


# ---------------------------------------------------------------------------
# generators

def gen_bell() -> Circuit:
    """(|00> - i|11>)/sqrt(2) from a single MS gate; outcome distribution (1/2, 0, 0, 1/2)."""
    return Circuit(2, (Gate(GateKind.XX, (0, 1), math.pi / 2),), True)


def gen_bell_pairs(n_pairs: int) -> Circuit:
    """Independent Bell pairs on qubits (0,1), (2,3), ...: uniform over 2^n_pairs outcomes."""
    gates = tuple(Gate(GateKind.XX, (2 * k, 2 * k + 1), math.pi / 2) for k in range(n_pairs))
    return Circuit(2 * n_pairs, gates, True)


def qft_gates(qubits: list[int], inverse: bool = False) -> list[Gate]:
    """QFT without the final bit-reversal swaps, over ``qubits`` (index 0 = LSB)."""
    n = len(qubits)
    gates: list[Gate] = []
    for j in reversed(range(n)):
        gates.append(Gate(GateKind.H, (qubits[j],)))
        for k in reversed(range(j)):
            gates.append(Gate(GateKind.CPHASE, (qubits[k], qubits[j]), math.pi / (1 << (j - k))))
    if inverse:
        gates = [
            Gate(g.kind, g.targets, -g.angle) if g.kind is GateKind.CPHASE else g
            for g in reversed(gates)
        ]
    return gates


def gen_qft_adder(bits: int, a: int, b: int, native: bool = True, partial_xx: bool = False) -> Circuit:
    """Draper adder computing (a + b) mod 2^bits in a ``bits``-qubit register.

    The register is prepared in |b>; the addend ``a`` is folded classically into
    single-qubit phase rotations applied between a QFT and its inverse, so the
    circuit uses ``bits`` qubits and its ideal output is the single state a+b.
    """
    if bits < 1:
        raise CircuitError("bits must be positive")
    size = 1 << bits
    if not (0 <= a < size and 0 <= b < size):
        raise CircuitError(f"operands must lie in [0, {size}), got a={a}, b={b}")
    qubits = list(range(bits))
    gates: list[Gate] = [Gate(GateKind.RX, (q,), math.pi) for q in qubits if (b >> q) & 1]
    gates += qft_gates(qubits)
    # after the swap-free QFT, qubit q carries Fourier bit (bits-1-q)
    for q in qubits:
        phi = TWO_PI * a * (1 << (bits - 1 - q)) / size
        phi = math.remainder(phi, TWO_PI)
        if abs(phi) > 1e-15:
            gates.append(Gate(GateKind.RZ, (q,), phi))
    gates += qft_gates(qubits, inverse=True)
    c = Circuit(bits, tuple(gates), True)
    return transpile_to_native(c, partial_xx=partial_xx) if native else c


def distinct_pairs(n_qubits: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(n_qubits) for j in range(i + 1, n_qubits)]


def gen_random_circuit(n_qubits: int, n_xx: int, seed: int) -> Circuit:
    """Random XX(pi/2) circuit on ``n_xx`` distinct pairs with random 1-qubit rotations.

    Every qubit starts with a random RZ·RY·RZ; each XX is followed by random
    RZ·RY rotations on its two targets. Angles are uniform on [0, 2pi).
    """
    pairs = distinct_pairs(n_qubits)
    if n_xx > len(pairs):
        raise CircuitError(f"{n_xx} XX gates need distinct pairs, only {len(pairs)} exist")
    if n_xx < 0:
        raise CircuitError("n_xx must be non-negative")
    rng = np.random.default_rng(seed)
    chosen = [pairs[i] for i in rng.permutation(len(pairs))[:n_xx]]
    gates: list[Gate] = []

    def rot(kind: GateKind, q: int) -> Gate:
        return Gate(kind, (q,), float(rng.uniform(0.0, TWO_PI)))

    for q in range(n_qubits):
        gates += [rot(GateKind.RZ, q), rot(GateKind.RY, q), rot(GateKind.RZ, q)]
    for p, q in chosen:
        gates.append(Gate(GateKind.XX, (p, q), math.pi / 2))
        for t in (p, q):
            gates += [rot(GateKind.RZ, t), rot(GateKind.RY, t)]
    return Circuit(n_qubits, tuple(gates), True)


def gen_ansatz(n_qubits: int, layers: int, seed: int) -> Circuit:
    """Hardware-efficient style random-angle ansatz with a broad output distribution."""
    rng = np.random.default_rng(seed)
    gates: list[Gate] = []
    for _ in range(layers):
        for q in range(n_qubits):
            gates.append(Gate(GateKind.RY, (q,), float(rng.uniform(0.0, TWO_PI))))
            gates.append(Gate(GateKind.RZ, (q,), float(rng.uniform(0.0, TWO_PI))))
        for q in range(n_qubits - 1):
            gates.append(Gate(GateKind.XX, (q, q + 1), math.pi / 2))
    for q in range(n_qubits):
        gates.append(Gate(GateKind.RY, (q,), float(rng.uniform(0.0, TWO_PI))))
    return Circuit(n_qubits, tuple(gates), True)


GENERATORS = {
    "bell": lambda: gen_bell(),
    "bell_pairs": lambda n_pairs=2: gen_bell_pairs(int(n_pairs)),
    "qft_adder": lambda bits=5, a=0, b=0, partial_xx=False: gen_qft_adder(
        int(bits), int(a), int(b), partial_xx=bool(partial_xx)
    ),
    "random": lambda n_qubits=4, n_xx=6, seed=0: gen_random_circuit(
        int(n_qubits), int(n_xx), int(seed)
    ),
    "ansatz": lambda n_qubits=4, layers=2, seed=0: gen_ansatz(
        int(n_qubits), int(layers), int(seed)
    ),
}
