"""Randomised Grover search drivers.

``exponential_search`` finds one marked state without knowing how many
exist; ``adaptive_search`` lowers a cost threshold with repeated searches;
``solve_cslp`` is the station-location loop with its oracle-call budget;
``repeat_solve`` keeps the best of several independent runs.
"""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from . import oracle as orc
from .grover import grover_iteration
from .net import InstanceTooLarge, Network, StationCombination, hamming_weights, to_bitstring, validity_table
from .sim import Circuit, Statevector, measure

log = logging.getLogger(__name__)

DEFAULT_GROWTH = 8 / 7
DEFAULT_REPETITIONS = 7


class ConfigError(ValueError):
    pass


def budget_alg3(n: int) -> float:
    """``22.5 sqrt(2^n) + 1.4 n``."""
    return 22.5 * math.sqrt(2.0**n) + 1.4 * n


def budget_alg2(n: int) -> float:
    """``22.5 sqrt(N) + 1.4 log2(N)^2`` with ``N = 2^n``."""
    return 22.5 * math.sqrt(2.0**n) + 1.4 * n * n


BUDGETS = {"alg3": budget_alg3, "alg2": budget_alg2}


@dataclass(frozen=True)
class GasConfig:
    growth: float = DEFAULT_GROWTH
    initial_tau: int | None = None  # None: uniform over tau_range
    tau_range: tuple[int, int] | None = None  # inclusive; default (1, n + 1)
    budget: str = "alg3"
    repetitions: int = DEFAULT_REPETITIONS
    mode: str = "functional"
    counter_mode: str = "compact"
    seed: int = 0

    def __post_init__(self):
        if not self.growth > 1:
            raise ConfigError(f"growth factor must exceed 1, got {self.growth}")
        if self.repetitions < 1:
            raise ConfigError("need at least one repetition")
        if self.budget not in BUDGETS:
            raise ConfigError(f"unknown budget formula {self.budget!r}")
        if self.mode not in ("functional", "circuit"):
            raise ConfigError(f"unknown oracle mode {self.mode!r}")
        if self.counter_mode not in ("full", "compact"):
            raise ConfigError(f"unknown counter mode {self.counter_mode!r}")
        if self.growth >= 4 / 3:
            log.warning("growth factor %.3f is outside (1, 4/3); expected-time bound no longer holds", self.growth)

    def check(self, n: int) -> None:
        lo, hi = self.tau_bounds(n)
        if not 0 <= lo <= hi <= n + 1:
            raise ConfigError(f"threshold range [{lo}, {hi}] outside [0, {n + 1}]")
        if self.initial_tau is not None and not 0 <= self.initial_tau <= n + 1:
            raise ConfigError(f"initial threshold {self.initial_tau} outside [0, {n + 1}]")

    def tau_bounds(self, n: int) -> tuple[int, int]:
        return self.tau_range if self.tau_range is not None else (1, n + 1)

    def draw_tau(self, n: int, rng: np.random.Generator) -> int:
        if self.initial_tau is not None:
            return self.initial_tau
        lo, hi = self.tau_bounds(n)
        return int(rng.integers(lo, hi + 1))

    def budget_for(self, n: int) -> float:
        return BUDGETS[self.budget](n)


@dataclass
class Attempt:
    m: float
    j: int
    measured: str
    valid: bool
    weight: int
    accepted: bool


@dataclass
class GasOutcome:
    n: int
    seed: int | None
    initial_tau: int
    final_tau: int
    budget: float
    run_time: float
    best: StationCombination | None
    attempts: list[Attempt] = field(default_factory=list)

    @property
    def trace(self) -> list[int]:
        """Threshold history: the initial value then every accepted weight."""
        return [self.initial_tau] + [a.weight for a in self.attempts if a.accepted]

    @property
    def feasible(self) -> bool:
        return self.best is not None

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "initial_tau": self.initial_tau,
            "final_tau": self.final_tau,
            "budget": self.budget,
            "run_time": self.run_time,
            "trace": self.trace,
            "attempts": [asdict(a) for a in self.attempts],
            "best": None if self.best is None else str(self.best),
            "best_weight": None if self.best is None else self.best.weight,
        }


# -- search engines -------------------------------------------------------------

class FunctionalEngine:
    """Station register only; oracle is a diagonal sign vector."""

    def __init__(self, n: int, valid: np.ndarray):
        self.n = n
        self.valid = valid
        self._oracles: dict[int, orc.PhaseOracle] = {}

    def oracle(self, tau: int) -> orc.PhaseOracle:
        if tau not in self._oracles:
            self._oracles[tau] = orc.functional_phase_oracle(self.valid, tau, self.n)
        return self._oracles[tau]

    def run(self, tau: int, j: int, rng: np.random.Generator) -> int:
        dim = 1 << self.n
        state = Statevector(np.full(dim, 1 / math.sqrt(dim), dtype=np.complex128))
        oracle = self.oracle(tau)
        for _ in range(j):
            grover_iteration(state, oracle)
        bits, _ = measure(state, range(self.n), rng)
        return sum(b << k for k, b in enumerate(bits))


class CircuitEngine:
    """Full register layout; oracle is the explicit gate-level circuit."""

    def __init__(self, net: Network, counter_mode: str = "compact"):
        self.net = net
        self.n = net.n
        self.layout = orc.layout_for(net, counter_mode)
        if self.layout.total > orc.MAX_CIRCUIT_QUBITS:
            raise InstanceTooLarge(
                f"circuit mode needs {self.layout.total} qubits (limit {orc.MAX_CIRCUIT_QUBITS}); "
                "use functional mode"
            )
        self._oracles: dict[int, Circuit] = {}
        self._initial = orc.prepare_full_state(self.layout)

    def oracle(self, tau: int) -> Circuit:
        if tau not in self._oracles:
            self._oracles[tau] = orc.build_full_oracle(self.net, self.layout, tau)
        return self._oracles[tau]

    def run(self, tau: int, j: int, rng: np.random.Generator) -> int:
        state = self._initial.copy()
        for _ in range(j):
            grover_iteration(state, self.oracle(tau), self.layout)
        bits, _ = measure(state, self.layout.stations, rng)
        return sum(b << k for k, b in enumerate(bits))


def make_engine(net: Network, config: GasConfig):
    if config.mode == "circuit":
        return CircuitEngine(net, config.counter_mode)
    return FunctionalEngine(net.n, validity_table(net))


# -- drivers ----------------------------------------------------------------------

@dataclass
class SearchResult:
    found: int | None
    attempts: list[tuple[float, int, int]]  # (m, j, measured)
    cost: float


def exponential_search(oracle: orc.PhaseOracle, rng: np.random.Generator, growth: float = DEFAULT_GROWTH,
                       cap: float | None = None, max_cost: float | None = None) -> SearchResult:
    """Grover search with an unknown number of marked states.

    Each attempt runs ``j`` iterations, ``j`` uniform in ``[0, m)``, and costs
    ``n + j`` units.  Stops on the first marked measurement or once the
    spent cost exceeds ``max_cost`` (default: the station-location budget).
    """
    n = oracle.n
    cap = math.sqrt(2.0**n) if cap is None else cap
    max_cost = budget_alg3(n) if max_cost is None else max_cost
    engine = FunctionalEngine(n, oracle.marked)
    m, cost = 1.0, 0.0
    attempts = []
    while cost <= max_cost:
        j = int(rng.integers(0, math.ceil(m)))
        cost += n + j
        x = engine.run(n + 1, j, rng)
        attempts.append((m, j, x))
        if oracle.is_marked(x):
            return SearchResult(x, attempts, cost)
        m = min(growth * m, cap)
    return SearchResult(None, attempts, cost)


def _threshold_loop(engine, n: int, valid: np.ndarray, tau: int, budget: float, growth: float,
                    rng: np.random.Generator, seed: int | None) -> GasOutcome:
    weights = hamming_weights(n)
    cap = math.sqrt(2.0**n)
    outcome = GasOutcome(n, seed, tau, tau, budget, 0.0, None)
    m = 1.0
    while outcome.run_time <= budget:
        j = int(rng.integers(0, math.ceil(m)))
        outcome.run_time += n + j
        x = engine.run(tau, j, rng)
        ok, w = bool(valid[x]), int(weights[x])
        accepted = ok and w < tau
        outcome.attempts.append(Attempt(m, j, to_bitstring(x, n), ok, w, accepted))
        if accepted:
            tau = w
            m = 1.0
            outcome.best = StationCombination(x, n)
        else:
            m = min(growth * m, cap)
    outcome.final_tau = tau
    return outcome


def adaptive_search(n: int, valid: np.ndarray, config: GasConfig, rng: np.random.Generator | int | None = None,
                    engine=None) -> GasOutcome:
    """Threshold-lowering search for the lightest valid mask over ``n`` bits."""
    config.check(n)
    seed = rng if isinstance(rng, (int, np.integer)) else None
    rng = np.random.default_rng(rng)
    tau = config.draw_tau(n, rng)
    engine = engine or FunctionalEngine(n, valid)
    return _threshold_loop(engine, n, valid, tau, config.budget_for(n), config.growth, rng, seed)


def solve_cslp(net: Network, config: GasConfig, rng: np.random.Generator | int | None = None) -> GasOutcome:
    """One run of the station-location search; ``rng`` defaults to ``config.seed``."""
    if rng is None:
        rng = config.seed
    valid = validity_table(net)
    return adaptive_search(net.n, valid, config, rng, engine=make_engine(net, config))


def child_seeds(master: int, count: int) -> list[int]:
    return [int(s) for s in np.random.SeedSequence(master).generate_state(count, dtype=np.uint64)]


@dataclass
class RepeatOutcome:
    n: int
    master_seed: int
    runs: list[GasOutcome]

    @property
    def best_index(self) -> int | None:
        found = [(r.best.weight, k) for k, r in enumerate(self.runs) if r.best is not None]
        return min(found)[1] if found else None

    @property
    def best(self) -> StationCombination | None:
        k = self.best_index
        return None if k is None else self.runs[k].best

    def to_dict(self) -> dict:
        best = self.best
        return {
            "master_seed": self.master_seed,
            "best": None if best is None else str(best),
            "best_weight": None if best is None else best.weight,
            "best_nodes": None if best is None else list(best.nodes),
            "repetitions": [r.to_dict() for r in self.runs],
        }

    def table(self) -> str:
        """Experiment / initial threshold / best result, one column per run."""
        cols = [str(k + 1) for k in range(len(self.runs))]
        taus = [str(r.initial_tau) for r in self.runs]
        bests = [str(r.best) if r.best is not None else "None" for r in self.runs]
        width = max(len(s) for s in cols + taus + bests)
        rows = [("Experiment", cols), ("Initial tau", taus), ("Best Result", bests)]
        return "\n".join(f"{name:<12}| " + " ".join(c.rjust(width) for c in cells) for name, cells in rows)


def repeat_solve(net: Network, config: GasConfig, seeds: Sequence[int] | None = None) -> RepeatOutcome:
    """Independent runs with child seeds of ``config.seed``; keeps the lightest result."""
    seeds = child_seeds(config.seed, config.repetitions) if seeds is None else list(seeds)
    engine = make_engine(net, config)
    valid = validity_table(net)
    config.check(net.n)
    runs = [adaptive_search(net.n, valid, config, s, engine=engine) for s in seeds]
    return RepeatOutcome(net.n, config.seed, runs)
