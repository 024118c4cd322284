"""Classical charging-station location model.

Road networks, trip routes, accessible sets, the validity predicate, its
Boolean-expression form, and an exhaustive ground-truth optimizer.

Station combinations are handled as integer bit masks: bit ``i - 1`` holds
``S_i``.  The same integer is the basis-state index of the station register
in the simulator (qubit 0 is ``S_1``), so no conversion is needed between
the classical and quantum sides.
"""
from __future__ import annotations

import heapq
import itertools
import json
from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources
from pathlib import Path
from typing import Iterable, Iterator, Union

import numpy as np

ORIGIN = "O"
DEST = "D"
MAX_BRUTE_FORCE_NODES = 25

Node = Union[int, str]  # network node index (1-based), or ORIGIN / DEST


class NetworkError(ValueError):
    """Malformed or inconsistent network instance."""


class InstanceTooLarge(ValueError):
    """Instance exceeds an enumeration or simulation guard."""


@dataclass(frozen=True)
class Trip:
    origin: int
    dest: int
    route: tuple[int, ...] | None = None


@dataclass(frozen=True)
class TripPath:
    """A fixed origin-to-destination route with its accessible sets.

    ``accessible`` maps ``ORIGIN``, each route node and ``DEST`` to the
    frozenset of nodes (route indices or ``DEST``) reachable from it.
    """

    nodes: tuple[int, ...]
    cumulative: tuple[float, ...]
    accessible: dict

    @property
    def origin(self) -> int:
        return self.nodes[0]

    @property
    def dest(self) -> int:
        return self.nodes[-1]

    @property
    def length(self) -> float:
        return self.cumulative[-1]

    def checked_nodes(self) -> list[Node]:
        """Nodes whose isolation must be checked, in path order (O first)."""
        return [ORIGIN, *self.nodes]


@dataclass(frozen=True)
class Network:
    names: tuple[str, ...]
    edges: tuple[tuple[int, int, float], ...]
    range_miles: float
    trips: tuple[Trip, ...]
    name: str = ""
    _adjacency: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.range_miles <= 0:
            raise NetworkError(f"range must be positive, got {self.range_miles}")
        n = len(self.names)
        if len(set(self.names)) != n:
            raise NetworkError("duplicate node names")
        adj: dict[int, dict[int, float]] = {i: {} for i in range(1, n + 1)}
        for a, b, d in self.edges:
            if not (1 <= a <= n and 1 <= b <= n):
                raise NetworkError(f"edge ({a}, {b}) references unknown node")
            if a == b:
                raise NetworkError(f"self-loop at node {a}")
            if not d > 0:
                raise NetworkError(f"edge ({a}, {b}) has non-positive distance {d}")
            if b in adj[a]:
                raise NetworkError(f"duplicate edge ({a}, {b})")
            adj[a][b] = float(d)
            adj[b][a] = float(d)
        object.__setattr__(self, "_adjacency", adj)
        for trip in self.trips:
            for v in (trip.origin, trip.dest):
                if not 1 <= v <= n:
                    raise NetworkError(f"trip references unknown node {v}")
            if trip.origin == trip.dest:
                raise NetworkError(f"trip from node {trip.origin} to itself")
            if trip.route is not None:
                self._check_route(trip)

    def _check_route(self, trip: Trip) -> None:
        route = trip.route
        if route[0] != trip.origin or route[-1] != trip.dest:
            raise NetworkError(f"route {route} does not join {trip.origin} and {trip.dest}")
        if len(set(route)) != len(route):
            raise NetworkError(f"route {route} revisits a node")
        for a, b in zip(route, route[1:]):
            if b not in self._adjacency.get(a, {}):
                raise NetworkError(f"route {route} uses missing edge ({a}, {b})")

    @property
    def n(self) -> int:
        return len(self.names)

    def distance(self, a: int, b: int) -> float:
        return self._adjacency[a][b]

    def neighbors(self, a: int) -> dict[int, float]:
        return self._adjacency[a]

    def index(self, name: str) -> int:
        try:
            return self.names.index(name) + 1
        except ValueError:
            raise NetworkError(f"unknown node {name!r}") from None

    @cached_property
    def paths(self) -> tuple[TripPath, ...]:
        """Preprocessed routes, one per trip."""
        out = []
        for trip in self.trips:
            route = trip.route or shortest_route(self, trip.origin, trip.dest)
            out.append(make_trip_path(self, route))
        return tuple(out)


def load_network(source: str | Path | dict) -> Network:
    """Parse a network document (JSON text, a path, or a decoded mapping)."""
    if isinstance(source, dict):
        doc = source
    else:
        text = source
        if isinstance(source, Path) or (isinstance(source, str) and not source.lstrip().startswith("{")):
            text = Path(source).read_text()
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise NetworkError(f"malformed network document: {exc}") from exc
    try:
        names = tuple(str(x) for x in doc["nodes"])
        range_miles = float(doc["range_miles"])
        raw_edges = doc["edges"]
        raw_trips = doc["trips"]
    except (KeyError, TypeError) as exc:
        raise NetworkError(f"missing or malformed field: {exc}") from exc

    lookup = {name: i for i, name in enumerate(names, start=1)}

    def idx(name) -> int:
        try:
            return lookup[str(name)]
        except KeyError:
            raise NetworkError(f"unknown node {name!r}") from None

    edges = []
    for item in raw_edges:
        if len(item) != 3:
            raise NetworkError(f"edge entry must be [a, b, miles], got {item!r}")
        a, b, miles = item
        edges.append((idx(a), idx(b), float(miles)))

    if raw_trips == "all_pairs":
        hubs = {idx(h) for h in doc.get("exclude_hubs", [])}
        ends = [i for i in range(1, len(names) + 1) if i not in hubs]
        trips = [Trip(a, b) for a, b in itertools.combinations(ends, 2)]
    elif isinstance(raw_trips, list):
        trips = []
        for item in raw_trips:
            try:
                o, d = idx(item["origin"]), idx(item["dest"])
            except (KeyError, TypeError) as exc:
                raise NetworkError(f"malformed trip entry {item!r}") from exc
            route = item.get("route")
            trips.append(Trip(o, d, tuple(idx(v) for v in route) if route else None))
    else:
        raise NetworkError(f"trips must be 'all_pairs' or a list, got {raw_trips!r}")

    net = Network(names, tuple(edges), range_miles, tuple(trips), name=str(doc.get("name", "")))
    for trip in net.trips:
        if trip.route is None:
            shortest_route(net, trip.origin, trip.dest)  # raises if disconnected
    return net


def builtin_network(name: str) -> Network:
    """Load one of the bundled instances (``corridor`` or ``illinois``)."""
    ref = resources.files("qcslp") / "data" / f"{name}.json"
    if not ref.is_file():
        raise NetworkError(f"no bundled network named {name!r}")
    return load_network(ref.read_text())


def shortest_route(net: Network, origin: int, dest: int) -> tuple[int, ...]:
    """Minimum-mileage route; ties go to the lexicographically smallest node sequence."""
    heap = [(0.0, (origin,))]
    done: set[int] = set()
    while heap:
        dist, path = heapq.heappop(heap)
        node = path[-1]
        if node in done:
            continue
        if node == dest:
            return path
        done.add(node)
        for nxt, d in net.neighbors(node).items():
            if nxt not in done:
                heapq.heappush(heap, (dist + d, path + (nxt,)))
    raise NetworkError(f"node {dest} unreachable from node {origin}")


def accessible_sets(nodes: Iterable[int], cumulative: Iterable[float], range_miles: float) -> dict:
    """Accessible set of every node on a route, plus the auxiliary O and D.

    Thresholds are inclusive.  O reaches route nodes within R/2; a route
    node reaches later nodes within R; D is reachable from a node only
    when the remaining distance is within R/2.
    """
    nodes = tuple(nodes)
    cum = tuple(cumulative)
    total = cum[-1]
    half = range_miles / 2
    sets: dict = {}
    start = [v for v, c in zip(nodes, cum) if c <= half]
    if total <= half:
        start.append(DEST)
    sets[ORIGIN] = frozenset(start)
    for p, v in enumerate(nodes):
        reach = [w for w, c in zip(nodes[p + 1:], cum[p + 1:]) if c - cum[p] <= range_miles]
        if total - cum[p] <= half:
            reach.append(DEST)
        sets[v] = frozenset(reach)
    sets[DEST] = frozenset()
    return sets


def make_trip_path(net: Network, route: Iterable[int]) -> TripPath:
    route = tuple(route)
    cum = [0.0]
    for a, b in zip(route, route[1:]):
        cum.append(cum[-1] + net.distance(a, b))
    return TripPath(route, tuple(cum), accessible_sets(route, cum, net.range_miles))


# -- station combinations ---------------------------------------------------

def to_bitstring(mask: int, n: int) -> str:
    """Render with S_1 leftmost."""
    return "".join("1" if mask >> i & 1 else "0" for i in range(n))


def from_bitstring(bits: str) -> int:
    return sum(1 << i for i, ch in enumerate(bits) if ch == "1")


def stations_of(mask: int) -> tuple[int, ...]:
    out, i = [], 1
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return tuple(out)


def mask_of(stations: Iterable[int]) -> int:
    return sum(1 << (i - 1) for i in set(stations))


def weight(mask: int) -> int:
    return bin(mask).count("1")


@dataclass(frozen=True, order=True)
class StationCombination:
    mask: int
    n: int

    @classmethod
    def from_nodes(cls, nodes: Iterable[int], n: int) -> "StationCombination":
        return cls(mask_of(nodes), n)

    @classmethod
    def parse(cls, bits: str) -> "StationCombination":
        if set(bits) - {"0", "1"}:
            raise ValueError(f"not a bitstring: {bits!r}")
        return cls(from_bitstring(bits), len(bits))

    @property
    def nodes(self) -> tuple[int, ...]:
        return stations_of(self.mask)

    @property
    def weight(self) -> int:
        return weight(self.mask)

    def __str__(self) -> str:
        return to_bitstring(self.mask, self.n)


# -- validity -----------------------------------------------------------------

def _has_station(mask: int, node: Node) -> bool:
    if node == ORIGIN or node == DEST:
        return True
    return bool(mask >> (node - 1) & 1)


def is_isolated(mask: int, path: TripPath, node: Node) -> bool:
    """A selected node with no selected station (or D) in its accessible set."""
    if not _has_station(mask, node):
        return False
    return not any(_has_station(mask, j) for j in path.accessible[node])


def is_valid(combo: int | StationCombination, net: Network) -> bool:
    if isinstance(combo, StationCombination):
        if combo.n != net.n:
            raise ValueError(f"combination has {combo.n} bits, network has {net.n} nodes")
        combo = combo.mask
    if combo < 0 or combo >> net.n:
        raise ValueError(f"mask {combo} does not fit {net.n} nodes")
    return not any(is_isolated(combo, path, i) for path in net.paths for i in path.checked_nodes())


def validity_table(net: Network, paths: Iterable[TripPath] | None = None) -> np.ndarray:
    """Validity of every mask ``0 .. 2^n - 1`` as a boolean array."""
    n = net.n
    masks = np.arange(1 << n, dtype=np.int64)
    bits = [np.ones(1 << n, dtype=bool)] + [(masks >> k & 1).astype(bool) for k in range(n)]

    def station(node: Node) -> np.ndarray:
        return bits[0] if node in (ORIGIN, DEST) else bits[node]

    ok = np.ones(1 << n, dtype=bool)
    for path in net.paths if paths is None else paths:
        for i in path.checked_nodes():
            covered = np.zeros(1 << n, dtype=bool)
            for j in path.accessible[i]:
                covered |= station(j)
            ok &= ~station(i) | covered
    return ok


def hamming_weights(n: int) -> np.ndarray:
    masks = np.arange(1 << n, dtype=np.int64)
    return sum(((masks >> k) & 1) for k in range(n)).astype(np.int64) if n else np.zeros(1, np.int64)


@dataclass(frozen=True)
class BruteForceResult:
    optimum: float  # math.inf when infeasible
    optimal: tuple[int, ...]
    valid_count: int
    counts_by_weight: dict

    @property
    def feasible(self) -> bool:
        return bool(self.optimal)


def brute_force_optimum(net: Network) -> BruteForceResult:
    """Enumerate all 2^n combinations; return the minimum count and every optimum."""
    if net.n > MAX_BRUTE_FORCE_NODES:
        raise InstanceTooLarge(f"{net.n} nodes exceeds brute-force limit {MAX_BRUTE_FORCE_NODES}")
    ok = validity_table(net)
    w = hamming_weights(net.n)
    valid = np.flatnonzero(ok)
    counts = {int(k): int(c) for k, c in zip(*np.unique(w[valid], return_counts=True))}
    if valid.size == 0:
        return BruteForceResult(float("inf"), (), 0, counts)
    best = int(w[valid].min())
    optimal = tuple(int(x) for x in valid[w[valid] == best])
    return BruteForceResult(best, optimal, int(valid.size), counts)


# -- Boolean expression -------------------------------------------------------

class BooleanExpr:
    """Node of an AND/OR/NOT tree over station variables."""

    def evaluate(self, mask: int) -> bool:
        raise NotImplementedError

    def evaluate_all(self, n: int) -> np.ndarray:
        raise NotImplementedError

    def variables(self) -> Iterator[Node]:
        for child in getattr(self, "children", ()):
            yield from child.variables()


@dataclass(frozen=True)
class Var(BooleanExpr):
    node: Node

    def evaluate(self, mask: int) -> bool:
        return _has_station(mask, self.node)

    def evaluate_all(self, n: int) -> np.ndarray:
        if self.node in (ORIGIN, DEST):
            return np.ones(1 << n, dtype=bool)
        return (np.arange(1 << n, dtype=np.int64) >> (self.node - 1) & 1).astype(bool)

    def variables(self):
        yield self.node

    def __str__(self):
        return f"S_{self.node}"


@dataclass(frozen=True)
class Not(BooleanExpr):
    child: BooleanExpr

    @property
    def children(self):
        return (self.child,)

    def evaluate(self, mask):
        return not self.child.evaluate(mask)

    def evaluate_all(self, n):
        return ~self.child.evaluate_all(n)

    def __str__(self):
        return f"~{self.child}"


@dataclass(frozen=True)
class And(BooleanExpr):
    children: tuple[BooleanExpr, ...]

    def evaluate(self, mask):
        return all(c.evaluate(mask) for c in self.children)

    def evaluate_all(self, n):
        out = np.ones(1 << n, dtype=bool)
        for c in self.children:
            out &= c.evaluate_all(n)
        return out

    def __str__(self):
        return "(" + " & ".join(map(str, self.children)) + ")" if self.children else "1"


@dataclass(frozen=True)
class Or(BooleanExpr):
    children: tuple[BooleanExpr, ...]

    def evaluate(self, mask):
        return any(c.evaluate(mask) for c in self.children)

    def evaluate_all(self, n):
        out = np.zeros(1 << n, dtype=bool)
        for c in self.children:
            out |= c.evaluate_all(n)
        return out

    def __str__(self):
        return "(" + " | ".join(map(str, self.children)) + ")" if self.children else "0"


def build_validity_expression(net: Network) -> And:
    """``(S_O & S_D) & AND over trips and checked nodes of (~S_i | OR_j S_j)``."""
    clauses: list[BooleanExpr] = [And((Var(ORIGIN), Var(DEST)))]
    for path in net.paths:
        for i in path.checked_nodes():
            reach = tuple(Var(j) for j in sorted(path.accessible[i], key=_node_key))
            clauses.append(Or((Not(Var(i)), *reach)))
    return And(tuple(clauses))


def _node_key(node: Node) -> tuple[int, int]:
    if node == ORIGIN:
        return (0, 0)
    if node == DEST:
        return (2, 0)
    return (1, node)
