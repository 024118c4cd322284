"""Validity-marking oracles.

Two interchangeable forms: the explicit ancilla circuit (initialise, detect
isolated stations, label, restore, combine trips) composed with the station
counter and comparator, and a functional diagonal phase oracle evaluated
directly from the validity expression.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import grover
from .net import DEST, ORIGIN, BooleanExpr, InstanceTooLarge, Network, TripPath, build_validity_expression, hamming_weights, to_bitstring
from .sim import Circuit, Gate, Statevector, apply_circuit, h, mcx, x

MAX_CIRCUIT_QUBITS = 22


def validity_qubit_count(n: int, num_trips: int) -> int:
    """Qubits for the network validity circuit: ``(|Q|+1)(n+2) + 1``."""
    return (num_trips + 1) * (n + 2) + 1


def grover_qubit_count(n: int, num_trips: int) -> int:
    """Qubits for one full Grover iteration:
    ``|Q|(n+2) + n + max(2 ceil(log2(n+1)), n+1) + 4``."""
    t = grover.counting_width(n)
    return num_trips * (n + 2) + n + max(2 * t, n + 1) + 4


@dataclass(frozen=True)
class RegisterLayout:
    """Qubit allocation for the explicit circuits.

    Order: ``S_O, S_1..S_n, S_D``; per trip ``n+1`` ancillas then ``v_q``;
    ``v_T``; the counter/comparator region of ``max(2t, n+1)`` qubits; the
    phase qubit.  In the region the counting register comes first, then the
    comparator result; carries reuse counting qubits that phase estimation
    never touches (full mode) and spill into the tail otherwise.
    """

    n: int
    num_trips: int
    counter_mode: str = "compact"

    def __post_init__(self):
        if self.n < 1 or self.num_trips < 0:
            raise ValueError("layout needs n >= 1 and a non-negative trip count")
        if self.counter_mode not in ("full", "compact"):
            raise ValueError(f"unknown counter mode {self.counter_mode!r}")

    @property
    def t(self) -> int:
        return grover.counting_width(self.n)

    @property
    def s_origin(self) -> int:
        return 0

    @property
    def s_dest(self) -> int:
        return self.n + 1

    @property
    def stations(self) -> tuple[int, ...]:
        return tuple(range(1, self.n + 1))

    def station(self, node) -> int:
        if node == ORIGIN:
            return self.s_origin
        if node == DEST:
            return self.s_dest
        return node

    def ancillas(self, q: int) -> tuple[int, ...]:
        base = (q + 1) * (self.n + 2)
        return tuple(range(base, base + self.n + 1))

    def validity(self, q: int) -> int:
        return (q + 2) * (self.n + 2) - 1

    @property
    def v_total(self) -> int:
        return (self.num_trips + 1) * (self.n + 2)

    @property
    def validity_total(self) -> int:
        return validity_qubit_count(self.n, self.num_trips)

    @property
    def region(self) -> tuple[int, ...]:
        start = self.v_total + 1
        return tuple(range(start, start + max(2 * self.t, self.n + 1)))

    @property
    def counting(self) -> tuple[int, ...]:
        width = self.n if self.counter_mode == "full" else self.t
        return self.region[:width]

    @property
    def comparator_result(self) -> int:
        return self.region[len(self.counting)]

    @property
    def carries(self) -> tuple[int, ...]:
        w = len(self.counting)
        free = self.region[self.t:w] + self.region[w + 1:]
        return free[: self.t - 1]

    @property
    def phase_qubit(self) -> int:
        return self.region[-1] + 1

    @property
    def total(self) -> int:
        return self.phase_qubit + 1

    def registers(self) -> dict[str, tuple[int, ...]]:
        regs = {"S_O": (self.s_origin,), "S": self.stations, "S_D": (self.s_dest,)}
        for q in range(self.num_trips):
            regs[f"anc{q + 1}"] = self.ancillas(q)
            regs[f"v{q + 1}"] = (self.validity(q),)
        regs["v_T"] = (self.v_total,)
        regs["count"] = self.counting
        regs["cmp"] = (self.comparator_result,)
        spare = [q for q in self.region if q not in self.counting and q != self.comparator_result]
        if spare:
            regs["cmp_spare"] = tuple(spare)
        regs["phase"] = (self.phase_qubit,)
        return regs

    def work_qubits(self) -> tuple[int, ...]:
        """Every qubit that must return to |0> after an oracle call."""
        return tuple(range(self.n + 2, self.phase_qubit))

    def ancilla_mass(self, state: Statevector) -> float:
        """Probability mass on basis states where any work qubit is set."""
        mask = 0
        for q in self.work_qubits():
            if q < state.num_qubits:
                mask |= 1 << q
        idx = np.arange(state.data.size)
        return float(state.probabilities()[(idx & mask) != 0].sum())

    def describe(self) -> str:
        lines = [f"{name:>9}: " + ",".join(map(str, qs)) for name, qs in self.registers().items()]
        return "\n".join(lines)


def layout_for(net: Network, counter_mode: str = "compact") -> RegisterLayout:
    return RegisterLayout(net.n, len(net.trips), counter_mode)


# -- explicit validity circuit --------------------------------------------------

def build_initialization(layout: RegisterLayout, num_qubits: int | None = None) -> Circuit:
    circ = Circuit(num_qubits or layout.validity_total)
    circ.append(x(layout.s_origin))
    circ.extend(h(q) for q in layout.stations)
    circ.append(x(layout.s_dest))
    return circ


def build_phase_preparation(layout: RegisterLayout) -> Circuit:
    """Put the phase qubit in |->."""
    return Circuit(layout.total).extend([x(layout.phase_qubit), h(layout.phase_qubit)])


def build_isolation_detector(path: TripPath, layout: RegisterLayout, q: int = 0, num_qubits: int | None = None) -> Circuit:
    """Flip ``anc_i`` when checked node ``i`` holds a station but nothing in
    its accessible set does.  Negative controls are X-conjugated."""
    circ = Circuit(num_qubits or layout.validity_total)
    anc = layout.ancillas(q)
    for k, node in enumerate(path.checked_nodes()):
        reach = [layout.station(j) for j in sorted(path.accessible[node], key=_reach_key)]
        circ.extend(x(s) for s in reach)
        circ.append(mcx((layout.station(node), *reach), anc[k]))
        circ.extend(x(s) for s in reach)
    return circ


def _reach_key(node):
    return (1, 0) if node == DEST else (0, node)


def build_labeler(layout: RegisterLayout, q: int, used: int | None = None, num_qubits: int | None = None) -> Circuit:
    """Flip ``v_q`` when every used ancilla of trip ``q`` is |0>."""
    anc = layout.ancillas(q)[: layout.n + 1 if used is None else used]
    circ = Circuit(num_qubits or layout.validity_total)
    circ.extend(x(a) for a in anc)
    circ.append(mcx(anc, layout.validity(q)))
    circ.extend(x(a) for a in anc)
    return circ


def build_restoration(fragments: Iterable[Gate] | Circuit, num_qubits: int | None = None) -> Circuit:
    """Inverse of the given gates, in reverse order."""
    gates = list(fragments)
    if num_qubits is None:
        num_qubits = fragments.num_qubits if isinstance(fragments, Circuit) else max((q for g in gates for q in g.qubits), default=-1) + 1
    return Circuit(num_qubits).extend(g.inverse() for g in reversed(gates))


def build_path_validity(path: TripPath, layout: RegisterLayout, q: int = 0, num_qubits: int | None = None) -> Circuit:
    """Detect, label and restore for one trip; leaves the verdict on ``v_q``."""
    num_qubits = num_qubits or layout.validity_total
    detect = build_isolation_detector(path, layout, q, num_qubits)
    circ = Circuit(num_qubits).extend(detect)
    circ.extend(build_labeler(layout, q, len(path.checked_nodes()), num_qubits))
    circ.extend(build_restoration(detect))
    return circ


def build_corridor_circuit(path: TripPath, n: int) -> Circuit:
    """Single-trip marking circuit: stations, ``n+1`` ancillas and ``v_1``
    (``2n + 4`` qubits), including initialisation."""
    layout = RegisterLayout(n, 1)
    size = layout.validity(0) + 1
    circ = build_initialization(layout, size)
    circ.extend(build_path_validity(path, layout, 0, size))
    circ.registers = {k: v for k, v in layout.registers().items() if all(i < size for i in v)}
    return circ


def build_network_validity(net: Network, layout: RegisterLayout, paths: Sequence[TripPath] | None = None,
                           num_qubits: int | None = None) -> Circuit:
    """Per-trip blocks chained, then ``v_T`` set when every ``v_q`` is."""
    paths = net.paths if paths is None else tuple(paths)
    if layout.num_trips < len(paths) or layout.n < net.n:
        raise ValueError("layout too small for network")
    num_qubits = num_qubits or layout.validity_total
    circ = Circuit(num_qubits)
    for q, path in enumerate(paths):
        circ.extend(build_path_validity(path, layout, q, num_qubits))
    circ.append(mcx(tuple(layout.validity(q) for q in range(len(paths))), layout.v_total))
    return circ


def build_full_oracle(net: Network, layout: RegisterLayout, tau: int,
                      paths: Sequence[TripPath] | None = None) -> Circuit:
    """Valid, counter, comparator, phase kickback, then everything undone.

    The phase qubit must hold |-> for the kickback to act as a sign flip.
    """
    size = layout.total
    valid = build_network_validity(net, layout, paths, size)
    count = grover.build_hamming_counter(layout.n, layout.counter_mode, layout.stations, layout.counting, size)
    compare = grover.build_comparator(layout.t, min(tau, 1 << layout.t), layout.counting[: layout.t],
                                      layout.comparator_result, layout.carries, size)
    circ = Circuit(size, registers=layout.registers())
    circ.extend(valid).extend(count).extend(compare)
    circ.append(mcx((layout.v_total, layout.comparator_result), layout.phase_qubit))
    circ.extend(compare.inverse()).extend(count.inverse()).extend(valid.inverse())
    return circ


def build_grover_circuit(net: Network, layout: RegisterLayout, tau: int,
                         paths: Sequence[TripPath] | None = None) -> Circuit:
    """One full Grover iteration: explicit oracle then the station diffuser."""
    circ = build_full_oracle(net, layout, tau, paths)
    return circ.extend(grover.build_diffuser(layout.stations, layout.total))


def prepare_full_state(layout: RegisterLayout) -> Statevector:
    """Endpoints |1>, stations |+>, work qubits |0>, phase qubit |->."""
    state = Statevector.zero(layout.total)
    apply_circuit(state, build_initialization(layout, layout.total))
    return apply_circuit(state, build_phase_preparation(layout))


# -- functional oracle ------------------------------------------------------------

@dataclass
class PhaseOracle:
    """Diagonal sign flip on the ``n``-qubit station register."""

    n: int
    tau: int
    marked: np.ndarray = field(repr=False)

    @property
    def signs(self) -> np.ndarray:
        return np.where(self.marked, -1.0, 1.0)

    @property
    def num_marked(self) -> int:
        return int(self.marked.sum())

    def is_marked(self, mask: int) -> bool:
        return bool(self.marked[mask])

    def apply(self, state: Statevector) -> Statevector:
        if state.num_qubits != self.n:
            raise ValueError(f"oracle acts on {self.n} qubits, state has {state.num_qubits}")
        state.data[self.marked] *= -1
        return state


def functional_phase_oracle(expr: BooleanExpr | np.ndarray, tau: int, n: int) -> PhaseOracle:
    """Mark ``x`` when the validity expression holds and ``weight(x) < tau``.

    ``expr`` may also be a precomputed validity table of length ``2^n``.
    """
    valid = expr if isinstance(expr, np.ndarray) else expr.evaluate_all(n)
    return PhaseOracle(n, tau, valid & (hamming_weights(n) < tau))


@dataclass
class OracleReport:
    tau: int
    rows: list[tuple[str, int, int]]
    ancilla_residual: float
    max_deviation: float

    @property
    def mismatches(self) -> list[tuple[str, int, int]]:
        return [r for r in self.rows if r[1] != r[2]]

    @property
    def ok(self) -> bool:
        return not self.mismatches and self.ancilla_residual < 1e-10 and self.max_deviation < 1e-10

    def to_dict(self) -> dict:
        return {
            "tau": self.tau,
            "ok": self.ok,
            "ancilla_residual": self.ancilla_residual,
            "max_deviation": self.max_deviation,
            "rows": [{"pattern": p, "circuit_sign": c, "functional_sign": f} for p, c, f in self.rows],
        }


def verify_oracle_equivalence(net: Network, tau: int, counter_mode: str = "compact",
                              circuit_paths: Sequence[TripPath] | None = None) -> OracleReport:
    """Compare the explicit oracle circuit with the functional one on every
    station pattern at once (the stations start in uniform superposition).

    ``circuit_paths`` overrides the routes fed to the circuit only; the
    functional side always uses the network's own expression.
    """
    layout = layout_for(net, counter_mode)
    if layout.total > MAX_CIRCUIT_QUBITS:
        raise InstanceTooLarge(f"full oracle needs {layout.total} qubits (limit {MAX_CIRCUIT_QUBITS})")
    n = net.n
    ref = prepare_full_state(layout)
    out = apply_circuit(ref.copy(), build_full_oracle(net, layout, tau, circuit_paths))
    functional = functional_phase_oracle(build_validity_expression(net), tau, n)

    base = 1 << layout.s_origin | 1 << layout.s_dest | 1 << layout.phase_qubit
    rows = []
    expected = ref.data.copy()
    idx = np.arange(expected.size)
    station_of = np.zeros(expected.size, dtype=np.int64)
    for k, q in enumerate(layout.stations):
        station_of |= (idx >> q & 1) << k
    expected *= functional.signs[station_of]
    for mask in range(1 << n):
        i = base | mask << 1
        ratio = out.data[i] / ref.data[i]
        rows.append((to_bitstring(mask, n), int(np.sign(ratio.real)), int(functional.signs[mask])))
    return OracleReport(
        tau,
        rows,
        layout.ancilla_mass(out),
        float(np.max(np.abs(out.data - expected))),
    )
