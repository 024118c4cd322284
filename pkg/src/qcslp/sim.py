"""Dense statevector simulator.

Qubit ``b`` is bit ``b`` of the basis-state index (qubit 0 is least
significant).  Gates act in place on a ``(2,) * k`` tensor view of the
amplitude vector; axis ``k - 1 - b`` belongs to qubit ``b``.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

MAX_UNITARY_QUBITS = 10
_SQRT1_2 = 1 / math.sqrt(2)


class SimulationError(ValueError):
    pass


@dataclass(frozen=True)
class Gate:
    """One circuit instruction.

    ``kind`` is ``X``, ``H``, ``PHASE`` (R_n: ``|1> -> exp(2 pi i / 2^n) |1>``),
    ``QFT`` or ``IQFT``.  ``controls`` apply to X/H/PHASE; controls listed in
    ``negated`` fire on ``|0>``.  QFT blocks take their register in ``targets``,
    least significant qubit first.
    """

    kind: str
    targets: tuple[int, ...]
    controls: tuple[int, ...] = ()
    negated: frozenset = frozenset()
    n: int = 0
    dagger: bool = False

    def __post_init__(self):
        if self.kind not in ("X", "H", "PHASE", "QFT", "IQFT"):
            raise SimulationError(f"unknown gate kind {self.kind!r}")
        if self.kind in ("QFT", "IQFT"):
            if self.controls:
                raise SimulationError("controlled QFT blocks are not supported")
        elif len(self.targets) != 1:
            raise SimulationError(f"{self.kind} takes exactly one target")
        if set(self.controls) & set(self.targets):
            raise SimulationError("control and target qubits overlap")
        if len(set(self.controls)) != len(self.controls) or len(set(self.targets)) != len(self.targets):
            raise SimulationError("repeated qubit in gate")
        if not set(self.negated) <= set(self.controls):
            raise SimulationError("negated qubit is not a control")

    @property
    def qubits(self) -> tuple[int, ...]:
        return self.controls + self.targets

    def inverse(self) -> "Gate":
        if self.kind == "PHASE":
            return Gate("PHASE", self.targets, self.controls, self.negated, self.n, not self.dagger)
        if self.kind == "QFT":
            return Gate("IQFT", self.targets)
        if self.kind == "IQFT":
            return Gate("QFT", self.targets)
        return self

    def __str__(self) -> str:
        return format_gate(self)


# -- gate constructors --------------------------------------------------------

def x(q: int) -> Gate:
    return Gate("X", (q,))


def h(q: int) -> Gate:
    return Gate("H", (q,))


def phase(q: int, n: int, controls: Sequence[int] = (), dagger: bool = False) -> Gate:
    return Gate("PHASE", (q,), tuple(controls), frozenset(), n, dagger)


def mcx(controls: Sequence[int], target: int, negated: Iterable[int] = ()) -> Gate:
    return Gate("X", (target,), tuple(controls), frozenset(negated))


def cnot(control: int, target: int) -> Gate:
    return mcx((control,), target)


def qft(qubits: Sequence[int]) -> Gate:
    return Gate("QFT", tuple(qubits))


def iqft(qubits: Sequence[int]) -> Gate:
    return Gate("IQFT", tuple(qubits))


def qft_decomposed(qubits: Sequence[int], inverse: bool = False) -> list[Gate]:
    """QFT as H, controlled R_n and swaps (swap = three CNOTs)."""
    qs = list(qubits)
    m = len(qs)
    gates: list[Gate] = []
    for i in range(m - 1, -1, -1):
        gates.append(h(qs[i]))
        for k in range(i - 1, -1, -1):
            gates.append(phase(qs[i], i - k + 1, controls=(qs[k],)))
    for i in range(m // 2):
        a, b = qs[i], qs[m - 1 - i]
        gates += [cnot(a, b), cnot(b, a), cnot(a, b)]
    if inverse:
        gates = [g.inverse() for g in reversed(gates)]
    return gates


# -- circuits -----------------------------------------------------------------

@dataclass
class Circuit:
    num_qubits: int
    gates: list[Gate] = field(default_factory=list)
    registers: dict[str, tuple[int, ...]] = field(default_factory=dict)

    def append(self, gate: Gate) -> "Circuit":
        for q in gate.qubits:
            if not 0 <= q < self.num_qubits:
                raise SimulationError(f"qubit {q} out of range for {self.num_qubits}-qubit circuit")
        self.gates.append(gate)
        return self

    def extend(self, gates: Iterable[Gate]) -> "Circuit":
        for g in gates:
            self.append(g)
        return self

    def add_register(self, name: str, qubits: Sequence[int]) -> tuple[int, ...]:
        qubits = tuple(qubits)
        used = {q for r in self.registers.values() for q in r}
        if used & set(qubits):
            raise SimulationError(f"register {name!r} overlaps an existing register")
        if any(not 0 <= q < self.num_qubits for q in qubits):
            raise SimulationError(f"register {name!r} out of range")
        self.registers[name] = qubits
        return qubits

    def inverse(self) -> "Circuit":
        return Circuit(self.num_qubits, [g.inverse() for g in reversed(self.gates)], dict(self.registers))

    def __len__(self) -> int:
        return len(self.gates)

    def __iter__(self):
        return iter(self.gates)

    def dump(self) -> str:
        return "".join(format_gate(g) + "\n" for g in self.gates)

    @classmethod
    def parse(cls, text: str, num_qubits: int) -> "Circuit":
        return cls(num_qubits).extend(parse_gate(line) for line in text.splitlines() if line.strip())


def _fmt_qubits(qs: Sequence[int]) -> str:
    qs = list(qs)
    if len(qs) > 1 and qs == list(range(qs[0], qs[0] + len(qs))):
        return f"q{qs[0]}..q{qs[-1]}"
    return ",".join(f"q{q}" for q in qs)


def format_gate(g: Gate) -> str:
    if g.kind in ("QFT", "IQFT"):
        return f"{g.kind} {_fmt_qubits(g.targets)}"
    ctl = ",".join(("!" if c in g.negated else "") + str(c) for c in g.controls)
    if g.kind == "PHASE":
        name = "PHASEDG" if g.dagger else "PHASE"
        if g.controls:
            return f"{name} n={g.n} c:{ctl} t:{g.targets[0]}"
        return f"{name} n={g.n} q{g.targets[0]}"
    if g.controls:
        name = "MCX" if g.kind == "X" else f"C{g.kind}"
        return f"{name} c:{ctl} t:{g.targets[0]}"
    return f"{g.kind} q{g.targets[0]}"


_QRANGE = re.compile(r"^q(\d+)\.\.q(\d+)$")


def _parse_qubits(tok: str) -> tuple[int, ...]:
    m = _QRANGE.match(tok)
    if m:
        return tuple(range(int(m.group(1)), int(m.group(2)) + 1))
    return tuple(int(t.lstrip("q")) for t in tok.split(","))


def parse_gate(line: str) -> Gate:
    parts = line.split()
    name, args = parts[0], parts[1:]
    if name in ("QFT", "IQFT"):
        return Gate(name, _parse_qubits(args[0]))
    n = 0
    controls: list[int] = []
    negated: set[int] = set()
    target = None
    for a in args:
        if a.startswith("n="):
            n = int(a[2:])
        elif a.startswith("c:"):
            for tok in a[2:].split(","):
                q = int(tok.lstrip("!"))
                controls.append(q)
                if tok.startswith("!"):
                    negated.add(q)
        elif a.startswith("t:"):
            target = int(a[2:])
        else:
            target = int(a.lstrip("q"))
    if target is None:
        raise SimulationError(f"cannot parse gate line {line!r}")
    kind = {"MCX": "X", "CH": "H", "PHASEDG": "PHASE"}.get(name, name)
    return Gate(kind, (target,), tuple(controls), frozenset(negated), n, name == "PHASEDG")


# -- states -------------------------------------------------------------------

class Statevector:
    """Amplitudes of a ``num_qubits`` register; ``data[i]`` is ``<i|psi>``."""

    def __init__(self, data: np.ndarray):
        data = np.asarray(data, dtype=np.complex128)
        k = int(data.size).bit_length() - 1
        if data.ndim != 1 or data.size != 1 << k:
            raise SimulationError("amplitude vector length must be a power of two")
        self.data = data
        self.num_qubits = k

    @classmethod
    def zero(cls, num_qubits: int) -> "Statevector":
        return cls.basis(num_qubits, 0)

    @classmethod
    def basis(cls, num_qubits: int, index: int) -> "Statevector":
        data = np.zeros(1 << num_qubits, dtype=np.complex128)
        data[index] = 1.0
        return cls(data)

    def copy(self) -> "Statevector":
        return Statevector(self.data.copy())

    def norm(self) -> float:
        return float(np.linalg.norm(self.data))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.data) ** 2

    def marginal(self, qubits: Sequence[int]) -> np.ndarray:
        """Outcome distribution of ``qubits``; index bit ``m`` is ``qubits[m]``."""
        probs = self.probabilities()
        idx = np.arange(probs.size)
        value = np.zeros(probs.size, dtype=np.int64)
        for m, q in enumerate(qubits):
            value |= ((idx >> q) & 1) << m
        return np.bincount(value, weights=probs, minlength=1 << len(qubits))

    def __repr__(self) -> str:
        return f"Statevector({self.num_qubits} qubits)"


def _tensor(state: Statevector) -> np.ndarray:
    return state.data.reshape((2,) * state.num_qubits)


def _slices(k: int, gate: Gate):
    sl: list = [slice(None)] * k
    for c in gate.controls:
        sl[k - 1 - c] = 0 if c in gate.negated else 1
    ax = k - 1 - gate.targets[0]
    s0, s1 = list(sl), list(sl)
    s0[ax], s1[ax] = 0, 1
    return tuple(s0), tuple(s1)


def _apply_fourier(state: Statevector, qubits: Sequence[int], inverse: bool) -> None:
    k = state.num_qubits
    m = len(qubits)
    axes = [k - 1 - q for q in reversed(qubits)]  # most significant register bit first
    t = np.moveaxis(_tensor(state), axes, list(range(m)))
    shape = t.shape
    flat = t.reshape(1 << m, -1)
    out = np.fft.fft(flat, axis=0, norm="ortho") if inverse else np.fft.ifft(flat, axis=0, norm="ortho")
    _tensor(state)[...] = np.moveaxis(out.reshape(shape), list(range(m)), axes)


def apply_gate(state: Statevector, gate: Gate) -> Statevector:
    """Apply ``gate`` in place and return ``state``."""
    k = state.num_qubits
    for q in gate.qubits:
        if not 0 <= q < k:
            raise SimulationError(f"qubit {q} out of range for {k}-qubit state")
    if gate.kind in ("QFT", "IQFT"):
        _apply_fourier(state, gate.targets, gate.kind == "IQFT")
        return state
    psi = _tensor(state)
    s0, s1 = _slices(k, gate)
    if gate.kind == "X":
        tmp = psi[s0].copy()
        psi[s0] = psi[s1]
        psi[s1] = tmp
    elif gate.kind == "H":
        a0 = psi[s0].copy()
        a1 = psi[s1]
        psi[s0] = (a0 + a1) * _SQRT1_2
        psi[s1] = (a0 - a1) * _SQRT1_2
    else:
        angle = 2 * math.pi / 2**gate.n
        psi[s1] *= np.exp(-1j * angle if gate.dagger else 1j * angle)
    return state


def apply_circuit(state: Statevector, circuit: Circuit | Iterable[Gate]) -> Statevector:
    if isinstance(circuit, Circuit) and circuit.num_qubits != state.num_qubits:
        raise SimulationError(
            f"circuit has {circuit.num_qubits} qubits, state has {state.num_qubits}"
        )
    for g in circuit:
        apply_gate(state, g)
    return state


def circuit_unitary(circuit: Circuit) -> np.ndarray:
    k = circuit.num_qubits
    if k > MAX_UNITARY_QUBITS:
        raise SimulationError(f"unitary extraction limited to {MAX_UNITARY_QUBITS} qubits")
    dim = 1 << k
    u = np.empty((dim, dim), dtype=np.complex128)
    for col in range(dim):
        u[:, col] = apply_circuit(Statevector.basis(k, col), circuit).data
    return u


def measure(
    state: Statevector, qubits: Sequence[int], rng: np.random.Generator | int | None = None
) -> tuple[tuple[int, ...], Statevector]:
    """Projective measurement of ``qubits``.

    Returns the outcome bits in the order of ``qubits`` and the collapsed,
    renormalised post-measurement state (the input is not modified).
    """
    if not qubits:
        raise SimulationError("nothing to measure")
    rng = np.random.default_rng(rng)
    dist = state.marginal(qubits)
    total = dist.sum()
    if total <= 0:
        raise SimulationError("cannot measure a zero-norm state")
    value = int(rng.choice(dist.size, p=dist / total))
    bits = tuple(value >> m & 1 for m in range(len(qubits)))
    idx = np.arange(state.data.size)
    keep = np.ones(state.data.size, dtype=bool)
    for q, b in zip(qubits, bits):
        keep &= (idx >> q & 1) == b
    data = np.where(keep, state.data, 0)
    data /= np.linalg.norm(data)
    return bits, Statevector(data)
