"""Command-line entry point: ``qcslp {solve,brute,check,layout}``.

Exit codes: 0 solved / checks passed, 1 usage or I/O error, 2 infeasible,
3 verification failure.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import gas, grover
from . import oracle as orc
from .net import (
    InstanceTooLarge,
    Network,
    NetworkError,
    brute_force_optimum,
    builtin_network,
    load_network,
    to_bitstring,
)

EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE, EXIT_VERIFY = 0, 1, 2, 3
SEED_ENV = "QCSLP_SEED"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass
class RunReport:
    command: str
    instance: dict
    mode: str | None = None
    outcome: dict | None = None
    verification: dict | None = None
    timing: dict | None = None
    status: str = "ok"
    notes: list[str] = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RunReport":
        return cls(**json.loads(text))

    def to_text(self) -> str:
        inst = self.instance
        lines = [
            f"instance: {inst['name'] or '<unnamed>'}  n={inst['n']}  trips={inst['trips']}  "
            f"range={inst['range_miles']:g} mi",
            f"qubits: validity circuit {inst['validity_qubits']}, grover iteration {inst['grover_qubits']}",
        ]
        if self.mode:
            lines.append(f"mode: {self.mode}")
        out = self.outcome or {}
        if self.command == "solve":
            lines.append("")
            lines.append(out["table"])
            for k, rep in enumerate(out["repetitions"], start=1):
                lines.append(
                    f"run {k}: seed={rep['seed']} initial_tau={rep['initial_tau']} "
                    f"trace={rep['trace']} run_time={rep['run_time']:g}/{rep['budget']:g} "
                    f"attempts={len(rep['attempts'])} best={rep['best']}"
                )
            if out["best"] is None:
                lines.append("best: None")
            else:
                lines.append(f"best: {out['best']}  stations={out['best_nodes']}  weight={out['best_weight']}")
        elif self.command == "brute":
            if out["optimum"] is None:
                lines.append("optimum: None (no valid placement)")
            else:
                lines.append(f"optimum: {out['optimum']} stations")
                for bits, nodes in zip(out["optimal"], out["optimal_nodes"]):
                    lines.append(f"  {bits}  nodes {nodes}")
            lines.append(f"valid combinations: {out['valid_count']} of {2 ** inst['n']}")
            lines.append("valid by weight: " + ", ".join(f"{k}:{v}" for k, v in out["counts_by_weight"].items()))
        elif self.command == "layout":
            lines.append(out["registers"])
        if self.verification:
            for name, res in self.verification.items():
                lines.append(f"[{'PASS' if res['ok'] else 'FAIL'}] {name}: {res['detail']}")
        if self.timing:
            lines.append(f"elapsed: {self.timing['seconds']:.3f} s")
        lines.extend(self.notes)
        return "\n".join(lines)


def resolve_network(spec: str) -> Network:
    path = Path(spec)
    if path.is_file():
        return load_network(path)
    try:
        return builtin_network(spec)
    except NetworkError:
        raise UsageError(f"no such network file or bundled instance: {spec}") from None


def instance_summary(net: Network) -> dict:
    return {
        "name": net.name,
        "n": net.n,
        "trips": len(net.trips),
        "range_miles": net.range_miles,
        "validity_qubits": orc.validity_qubit_count(net.n, len(net.trips)),
        "grover_qubits": orc.grover_qubit_count(net.n, len(net.trips)),
    }


def _seed(value: str | None) -> int:
    if value is None:
        value = os.environ.get(SEED_ENV, "0")
    try:
        seed = int(value)
    except ValueError:
        raise UsageError(f"seed must be an integer, got {value!r}") from None
    if not 0 <= seed < 2**64:
        raise UsageError("seed must fit an unsigned 64-bit integer")
    return seed


def _tau(value: str) -> int | None:
    if value == "random":
        return None
    try:
        return int(value)
    except ValueError:
        raise argparse.ArgumentTypeError("expected an integer or 'random'") from None


def cmd_solve(args) -> tuple[RunReport, int]:
    net = resolve_network(args.network)
    try:
        config = gas.GasConfig(
            growth=args.growth,
            initial_tau=args.initial_tau,
            budget=args.budget,
            repetitions=args.repeats,
            mode=args.mode,
            counter_mode=args.counter,
            seed=_seed(args.seed),
        )
        config.check(net.n)
    except gas.ConfigError as exc:
        raise UsageError(str(exc)) from None
    if args.dump_circuit:
        tau = config.initial_tau if config.initial_tau is not None else net.n + 1
        circ = orc.build_grover_circuit(net, orc.layout_for(net, config.counter_mode), tau)
        Path(args.dump_circuit).write_text(circ.dump())
    start = time.perf_counter()
    try:
        result = gas.repeat_solve(net, config)
    except InstanceTooLarge as exc:
        raise UsageError(str(exc)) from None
    elapsed = time.perf_counter() - start
    outcome = result.to_dict()
    outcome["table"] = result.table()
    report = RunReport("solve", instance_summary(net), mode=config.mode, outcome=outcome)
    if args.timing:
        report.timing = {"seconds": elapsed}
    if result.best is None:
        report.status = "infeasible"
        return report, EXIT_INFEASIBLE
    return report, EXIT_OK


def cmd_brute(args) -> tuple[RunReport, int]:
    net = resolve_network(args.network)
    start = time.perf_counter()
    try:
        res = brute_force_optimum(net)
    except InstanceTooLarge as exc:
        raise UsageError(str(exc)) from None
    elapsed = time.perf_counter() - start
    outcome = {
        "optimum": res.optimum if res.feasible else None,
        "optimal": [to_bitstring(m, net.n) for m in res.optimal],
        "optimal_nodes": [[i + 1 for i in range(net.n) if m >> i & 1] for m in res.optimal],
        "valid_count": res.valid_count,
        "counts_by_weight": {str(k): v for k, v in res.counts_by_weight.items()},
    }
    report = RunReport("brute", instance_summary(net), mode="exhaustive", outcome=outcome)
    if args.timing:
        report.timing = {"seconds": elapsed}
    if not res.feasible:
        report.status = "infeasible"
        return report, EXIT_INFEASIBLE
    return report, EXIT_OK


def run_checks(net: Network, counter_mode: str = "compact", circuit_paths=None) -> dict:
    """Oracle equivalence over every threshold plus the building-block suites."""
    n = net.n
    brute = brute_force_optimum(net)
    checks: dict = {}
    for tau in range(n + 2):
        rep = orc.verify_oracle_equivalence(net, tau, counter_mode, circuit_paths)
        marked = sum(1 for _, c, _f in rep.rows if c < 0)
        expected = sum(v for w, v in brute.counts_by_weight.items() if w < tau)
        ok = rep.ok and marked == expected
        checks[f"oracle tau={tau}"] = {
            "ok": ok,
            "detail": f"marked {marked} (brute force {expected}), mismatches {len(rep.mismatches)}, "
                      f"ancilla residual {rep.ancilla_residual:.1e}",
            "report": rep.to_dict(),
        }
    for mode in ("full", "compact"):
        dev = grover.check_counter(n, mode)
        checks[f"counter {mode}"] = {"ok": dev < 1e-10, "detail": f"max deviation {dev:.1e}"}
    t = grover.counting_width(n)
    fails = grover.check_comparator(t)
    checks[f"comparator t={t}"] = {"ok": not fails, "detail": f"{len(fails)} failing cases"}
    if n <= 10:
        dev = grover.check_diffuser(n)
        checks[f"diffuser n={n}"] = {"ok": dev < 1e-10, "detail": f"max deviation {dev:.1e}"}
    return checks


def cmd_check(args) -> tuple[RunReport, int]:
    net = resolve_network(args.network)
    layout = orc.layout_for(net, args.counter)
    if layout.total > orc.MAX_CIRCUIT_QUBITS:
        raise UsageError(
            f"full-circuit check needs {layout.total} qubits (limit {orc.MAX_CIRCUIT_QUBITS})"
        )
    checks = run_checks(net, args.counter)
    report = RunReport("check", instance_summary(net), mode="circuit", verification=checks)
    if not all(c["ok"] for c in checks.values()):
        report.status = "verification failed"
        return report, EXIT_VERIFY
    return report, EXIT_OK


def cmd_layout(args) -> tuple[RunReport, int]:
    net = resolve_network(args.network)
    layout = orc.layout_for(net, args.counter)
    outcome = {
        "registers": layout.describe(),
        "allocation": {k: list(v) for k, v in layout.registers().items()},
        "total": layout.total,
    }
    return RunReport("layout", instance_summary(net), mode=args.counter, outcome=outcome), EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qcslp", description="Charging-station location by Grover adaptive search.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p):
        p.add_argument("--network", required=True, help="network JSON file or bundled name (corridor, illinois)")
        p.add_argument("--format", choices=("text", "json"), default="text")
        p.add_argument("--counter", choices=("compact", "full"), default="compact",
                       help="station-counter register width")

    p = sub.add_parser("solve", help="run the adaptive search")
    common(p)
    p.add_argument("--seed", default=None, help=f"master seed (default ${SEED_ENV} or 0)")
    p.add_argument("--repeats", type=int, default=gas.DEFAULT_REPETITIONS)
    p.add_argument("--mode", choices=("functional", "circuit"), default="functional")
    p.add_argument("--initial-tau", type=_tau, default=None, help="integer threshold or 'random'")
    p.add_argument("--lambda", dest="growth", type=float, default=gas.DEFAULT_GROWTH)
    p.add_argument("--budget", choices=tuple(gas.BUDGETS), default="alg3")
    p.add_argument("--dump-circuit", default=None, help="write one full Grover iteration as text")
    p.add_argument("--timing", action="store_true", help="include wall-clock time in the report")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("brute", help="exhaustive optimum")
    common(p)
    p.add_argument("--timing", action="store_true")
    p.set_defaults(func=cmd_brute)

    p = sub.add_parser("check", help="verify oracle circuits against the functional oracle")
    common(p)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("layout", help="print the register allocation")
    common(p)
    p.set_defaults(func=cmd_layout)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        report, code = args.func(args)
    except (UsageError, NetworkError, OSError) as exc:
        print(f"qcslp: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    print(report.to_json() if args.format == "json" else report.to_text())
    return code


if __name__ == "__main__":
    sys.exit(main())
