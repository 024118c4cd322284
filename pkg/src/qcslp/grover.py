"""Grover building blocks: station counter, threshold comparator, diffuser,
one Grover iteration, and the closed-form amplitude law."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .sim import (
    MAX_UNITARY_QUBITS,
    Circuit,
    Statevector,
    apply_circuit,
    circuit_unitary,
    h,
    iqft,
    mcx,
    phase,
    qft,
    x,
)


def counting_width(n: int) -> int:
    """``ceil(log2(n + 1))``: bits needed to hold a weight in ``0..n``."""
    if n < 1:
        raise ValueError("need at least one station qubit")
    return n.bit_length()


def build_hamming_counter(
    n: int,
    mode: str = "compact",
    stations: Sequence[int] | None = None,
    counting: Sequence[int] | None = None,
    num_qubits: int | None = None,
) -> Circuit:
    """Phase-estimation circuit writing the Hamming weight of ``stations``
    into ``counting`` (least significant qubit first).

    ``full`` uses ``n`` counting qubits with per-station phase ``2 pi / 2^n``;
    ``compact`` uses ``t = ceil(log2(n+1))`` qubits with phase ``2 pi / 2^t``.
    Either way the eigenphase is an exact binary fraction, so the readout is
    deterministic.
    """
    t = counting_width(n)
    width = {"full": n, "compact": t}.get(mode)
    if width is None:
        raise ValueError(f"unknown counter mode {mode!r}")
    stations = tuple(range(n)) if stations is None else tuple(stations)
    counting = tuple(range(n, n + width)) if counting is None else tuple(counting)
    if len(stations) != n:
        raise ValueError(f"expected {n} station qubits, got {len(stations)}")
    if len(counting) < t:
        raise ValueError(f"counting register needs at least {t} qubits, got {len(counting)}")
    width = len(counting)
    if num_qubits is None:
        num_qubits = max(stations + counting) + 1
    circ = Circuit(num_qubits)
    circ.append(qft(counting))
    # counting qubit k picks up phase 2 pi 2^k / 2^width per station, i.e. R_{width-k}
    for s in stations:
        for k, c in enumerate(counting):
            circ.append(phase(c, width - k, controls=(s,)))
    circ.append(iqft(counting))
    return circ


def build_comparator(
    t: int,
    tau: int,
    value: Sequence[int] | None = None,
    result: int | None = None,
    carries: Sequence[int] | None = None,
    num_qubits: int | None = None,
) -> Circuit:
    """Reversible ``|v>|0> -> |v>|v < tau>`` on a ``t``-qubit register.

    Adds the constant ``2^t - tau`` with a ripple carry chain; the final carry
    is ``v >= tau`` and lands on ``result`` before being negated.  Intermediate
    carries (``t - 1`` qubits) are uncomputed.  Default layout: value on
    ``0..t-1``, result on ``t``, carries on ``t+1..2t-1``.
    """
    if t < 1:
        raise ValueError("comparator needs at least one value qubit")
    if not 0 <= tau <= 1 << t:
        raise ValueError(f"threshold {tau} outside [0, {1 << t}]")
    value = tuple(range(t)) if value is None else tuple(value)
    result = t if result is None else result
    carries = tuple(range(t + 1, 2 * t)) if carries is None else tuple(carries)
    if len(value) != t or len(carries) < t - 1:
        raise ValueError("comparator register too narrow")
    if num_qubits is None:
        num_qubits = max(value + (result,) + carries[: t - 1]) + 1
    circ = Circuit(num_qubits)
    if tau == 0:
        return circ

    const = (1 << t) - tau
    targets = list(carries[: t - 1]) + [result]
    stages: list[list] = []
    carry: int | None = None  # None: carry is the constant 0
    for i in range(t):
        bit = const >> i & 1
        tgt = targets[i]
        stage = []
        if carry is None:
            if bit:
                stage.append(mcx((value[i],), tgt))
                carry = tgt
        elif bit:
            # tgt = value[i] OR carry
            stage += [mcx((value[i], carry), tgt, negated=(value[i], carry)), x(tgt)]
            carry = tgt
        else:
            stage.append(mcx((value[i], carry), tgt))
            carry = tgt
        stages.append(stage)
    for stage in stages:
        circ.extend(stage)
    circ.append(x(result))
    for stage in reversed(stages[:-1]):
        circ.extend(g.inverse() for g in reversed(stage))
    return circ


def build_diffuser(qubits: Sequence[int], num_qubits: int | None = None) -> Circuit:
    """H/X/multi-controlled-Z/X/H; equals ``-(2|+><+| - I)`` on ``qubits``."""
    qubits = tuple(qubits)
    if num_qubits is None:
        num_qubits = max(qubits) + 1
    circ = Circuit(num_qubits)
    circ.extend(h(q) for q in qubits)
    circ.extend(x(q) for q in qubits)
    circ.append(phase(qubits[-1], 1, controls=qubits[:-1]))
    circ.extend(x(q) for q in qubits)
    circ.extend(h(q) for q in qubits)
    return circ


@lru_cache(maxsize=None)
def diffuser_matrix(n: int) -> np.ndarray:
    """Dense matrix of :func:`build_diffuser` on ``n`` qubits (read-only)."""
    u = circuit_unitary(build_diffuser(range(n)))
    u.setflags(write=False)
    return u


def grover_iteration(state: Statevector, oracle, layout=None, check_ancillas: bool = False) -> Statevector:
    """One oracle call followed by the diffuser, applied in place.

    ``oracle`` is either a functional phase oracle (``state`` is then the bare
    station register) or an explicit :class:`Circuit` over ``layout``.
    """
    if isinstance(oracle, Circuit):
        if layout is None:
            raise ValueError("explicit oracle circuits need their register layout")
        if check_ancillas:
            dirty = layout.ancilla_mass(state)
            if dirty > 1e-10:
                raise RuntimeError(f"ancillas not clean at iteration entry (mass {dirty:.3g})")
        apply_circuit(state, oracle)
        apply_circuit(state, build_diffuser(layout.stations, state.num_qubits))
        return state
    oracle.apply(state)
    n = state.num_qubits
    if n <= MAX_UNITARY_QUBITS:
        state.data[:] = diffuser_matrix(n) @ state.data
    else:
        apply_circuit(state, build_diffuser(range(n)))
    return state


@dataclass(frozen=True)
class GroverGeometry:
    N: int
    M: int

    def __post_init__(self):
        if not 0 <= self.M <= self.N or self.N < 1:
            raise ValueError(f"need 0 <= M <= N, got N={self.N}, M={self.M}")

    @property
    def theta(self) -> float:
        """Rotation per iteration; ``sin(theta / 2) = sqrt(M / N)``."""
        return 2 * math.asin(math.sqrt(self.M / self.N))

    @property
    def bound(self) -> int:
        return iteration_bound(self.N, self.M)

    def success_probability(self, k: int) -> float:
        return success_probability(k, self.N, self.M)


def success_probability(k: int, N: int, M: int) -> float:
    """Marked-subspace probability after ``k`` Grover iterations from uniform."""
    if k < 0:
        raise ValueError("negative iteration count")
    if M == 0:
        return 0.0
    half = math.asin(math.sqrt(M / N))
    return math.sin((2 * k + 1) * half) ** 2


def iteration_bound(N: int, M: int) -> int:
    if M < 1:
        raise ValueError("iteration bound undefined without marked states")
    return math.ceil(math.pi / 4 * math.sqrt(N / M))


# -- self-checks used by the ``check`` command ------------------------------------

def check_counter(n: int, mode: str = "compact") -> float:
    """Worst deviation from a deterministic Hamming-weight readout over all
    ``2^n`` station basis states."""
    circ = build_hamming_counter(n, mode)
    worst = 0.0
    for mask in range(1 << n):
        out = apply_circuit(Statevector.basis(circ.num_qubits, mask), circ)
        expect = mask | bin(mask).count("1") << n
        target = np.zeros_like(out.data)
        target[expect] = 1.0
        worst = max(worst, float(np.max(np.abs(out.data - target))))
    return worst


def check_comparator(t: int) -> list[tuple[int, int, int]]:
    """Failing ``(value, tau, flag)`` triples over every value and threshold."""
    failures = []
    for tau in range(1 << t | 1):
        circ = build_comparator(t, tau, num_qubits=2 * t)
        for v in range(1 << t):
            out = apply_circuit(Statevector.basis(2 * t, v), circ)
            idx = int(np.argmax(np.abs(out.data)))
            expect = v | int(v < tau) << t
            if idx != expect or abs(abs(out.data[idx]) - 1) > 1e-10:
                failures.append((v, tau, idx >> t & 1))
    return failures


def check_diffuser(n: int) -> float:
    """Entrywise distance from ``2|+><+| - I`` up to one global phase."""
    u = circuit_unitary(build_diffuser(range(n)))
    dim = 1 << n
    ref = np.full((dim, dim), 2 / dim) - np.eye(dim)
    k = np.unravel_index(np.argmax(np.abs(ref)), ref.shape)
    return float(np.max(np.abs(u * (ref[k] / u[k]) - ref)))
