"""Command-line front end.

Four subcommands: ``gen-graph`` writes graph files, ``check`` evaluates
robustness or per-protocol conditions, ``simulate`` runs one configuration
to a verdict with full logs, and ``sweep`` runs batch experiments (success
grids, fault matrices, threshold scans) to CSV files with rendered figures
alongside.

Exit codes: 0 on success (and for satisfied checks / successful runs), 1
when a check is violated or undecided or a simulated run fails its verdict,
2 for configuration and usage errors.  The ``MSRSIM_SEED`` environment
variable supplies a default seed wherever none is given explicitly.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .adversary import AdversaryModel, UniformRandom, UniformRange
from .config import (
    ConfigDoc,
    ConfigError,
    build_simulation_config,
    empty_doc,
    merge_overrides,
    parse_config,
    parse_model,
    parse_protocol,
)
from .engine import (
    run_simulation,
    write_adversary_csv,
    write_trace_csv,
    write_verdict_json,
)
from .experiments import (
    DEFAULT_F_REAL_LEVELS,
    DEFAULT_RADII,
    SweepSpec,
    cross_model_matrix,
    scale_spec,
    success_rate_grid,
    threshold_radius,
    write_grid_csv,
    write_matrix_csv,
    write_threshold_csv,
)
from .fixtures import fig3_graph, fig4_config
from .graph import (
    ENUMERATION_LIMIT,
    ConditionStatus,
    GeometricSpec,
    Graph,
    check_protocol_conditions,
    generate_complete,
    generate_geometric_with_positions,
    is_r_s_robust,
    read_graph,
    sufficient_by_degree,
    write_graph,
    write_positions,
)
from .protocol import Protocol

logger = logging.getLogger(__name__)

ENV_SEED = "MSRSIM_SEED"


def _env_seed() -> int | None:
    raw = os.environ.get(ENV_SEED)
    if raw is None or not raw.strip():
        return None
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{ENV_SEED} must be an integer, got {raw!r}") from None


def _csv_ints(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(p.strip()) for p in text.split(",") if p.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _csv_floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(p.strip()) for p in text.split(",") if p.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _csv_protocols(text: str) -> tuple[Protocol, ...]:
    try:
        return tuple(parse_protocol(p) for p in text.split(",") if p.strip())
    except ConfigError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _csv_models(text: str) -> tuple[AdversaryModel, ...]:
    try:
        return tuple(parse_model(p) for p in text.split(",") if p.strip())
    except ConfigError as exc:
        raise argparse.ArgumentTypeError(str(exc))


# ---------------------------------------------------------------------------
# graph sources shared by gen-graph and check


def _add_graph_source_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--graph", metavar="FILE", help="read an edge-list graph file")
    parser.add_argument("--fixture", choices=("fig3", "fig4"), help="use a built-in graph")
    parser.add_argument("--complete", type=int, metavar="N", help="complete graph on N nodes")
    parser.add_argument("--n", type=int, help="geometric graph: node count")
    parser.add_argument("--side", type=float, default=100.0, help="geometric graph: square side")
    parser.add_argument("--radius", type=float, help="geometric graph: connection radius")
    parser.add_argument("--seed", type=int, help="geometric graph: position seed")


def _graph_from_args(args: argparse.Namespace) -> Graph:
    sources = [
        args.graph is not None,
        args.fixture is not None,
        args.complete is not None,
        args.n is not None,
    ]
    if sum(sources) != 1:
        raise ConfigError(
            "choose exactly one graph source: --graph, --fixture, --complete, or --n/--radius"
        )
    if args.graph is not None:
        return read_graph(args.graph)
    if args.fixture is not None:
        return fig3_graph() if args.fixture == "fig3" else fig4_config().graph
    if args.complete is not None:
        return generate_complete(args.complete)
    if args.radius is None:
        raise ConfigError("a geometric graph needs --radius")
    seed = args.seed if args.seed is not None else _env_seed()
    spec = GeometricSpec(n=args.n, side=args.side, radius=args.radius, seed=seed)
    graph, _ = generate_geometric_with_positions(spec)
    return graph


def _degree_summary(graph: Graph) -> str:
    degs = sorted(graph.degrees())
    return (
        f"n={graph.n} edges={graph.edge_count()} "
        f"min_degree={degs[0]} median_degree={degs[len(degs) // 2]} max_degree={degs[-1]}"
    )


# ---------------------------------------------------------------------------
# gen-graph


def _cmd_gen_graph(args: argparse.Namespace) -> int:
    if args.fixture is None and args.graph is None and args.complete is None and args.n is None:
        raise ConfigError("gen-graph needs --complete, --fixture, or --n/--radius")
    positions = None
    if args.n is not None and args.graph is None and args.complete is None and args.fixture is None:
        if args.radius is None:
            raise ConfigError("a geometric graph needs --radius")
        seed = args.seed if args.seed is not None else _env_seed()
        spec = GeometricSpec(n=args.n, side=args.side, radius=args.radius, seed=seed)
        graph, positions = generate_geometric_with_positions(spec)
    else:
        graph = _graph_from_args(args)
    write_graph(graph, args.out)
    if args.positions:
        if positions is None:
            raise ConfigError("--positions is only meaningful for geometric graphs")
        write_positions(positions, args.positions)
    print(_degree_summary(graph))
    return 0


# ---------------------------------------------------------------------------
# check


def _check_robustness(graph: Graph, r: int, s: int) -> int:
    if sufficient_by_degree(graph, r):
        print(f"robust ({r},{s}): yes (degree certificate, every in-degree >= {r} + n/2)")
        return 0
    if graph.n <= ENUMERATION_LIMIT:
        ok = is_r_s_robust(graph, r, s)
        print(f"robust ({r},{s}): {'yes' if ok else 'no'} (exact enumeration)")
        return 0 if ok else 1
    print(
        f"robust ({r},{s}): undecided "
        f"(n={graph.n} exceeds the enumeration limit {ENUMERATION_LIMIT} "
        "and the degree certificate does not apply)"
    )
    return 1


def _cmd_check(args: argparse.Namespace) -> int:
    graph = _graph_from_args(args)
    wants_rs = args.r is not None or args.s is not None
    wants_protocol = args.protocol is not None
    if wants_rs == wants_protocol:
        raise ConfigError("give either --r/--s or --protocol (with --f), not both")
    if wants_rs:
        if args.r is None or args.s is None:
            raise ConfigError("robustness checks need both --r and --s")
        return _check_robustness(graph, args.r, args.s)
    protocol = parse_protocol(args.protocol)
    report = check_protocol_conditions(graph, args.f, protocol)
    for entry in report.entries:
        print(f"{entry.name}: {entry.status.value} ({entry.detail})")
    print(f"overall: {report.overall.value}")
    return 0 if report.overall is ConditionStatus.SATISFIED else 1


# ---------------------------------------------------------------------------
# simulate


def _merge_simulate_overrides(doc: ConfigDoc, args: argparse.Namespace) -> None:
    if args.graph is not None:
        merge_overrides(doc, "graph", source="file", path=args.graph)
    if args.complete is not None:
        merge_overrides(doc, "graph", source="complete", n=args.complete)
    if args.n is not None or args.radius is not None:
        merge_overrides(doc, "graph", source="geometric")
    merge_overrides(
        doc,
        "graph",
        n=args.n,
        side=args.side,
        radius=args.radius,
        seed=args.graph_seed,
    )
    graph_sec = doc["graph"]
    if "source" in graph_sec and graph_sec["source"].text.strip().lower() == "geometric":
        if "side" not in graph_sec:
            merge_overrides(doc, "graph", side=100.0)
    merge_overrides(doc, "protocol", name=args.protocol)
    merge_overrides(
        doc,
        "adversary",
        model=args.model,
        f=args.f,
        f_real=args.f_real,
        policy=args.policy,
        cycle_hosts=",".join(map(str, args.cycle_hosts)) if args.cycle_hosts else None,
        cycle_period=args.cycle_period,
        strategy=args.strategy,
        value=args.value,
        low=args.low,
        high=args.high,
        magnitude=args.magnitude,
        seed=args.adversary_seed,
        omit_final_broadcast="true" if args.omit_final_broadcast else None,
    )
    merge_overrides(
        doc,
        "engine",
        gamma=args.gamma,
        max_rounds=args.max_rounds,
        consensus_tol=args.consensus_tol,
        stall_rounds=args.stall_rounds,
        master_seed=args.seed,
    )
    if "master_seed" not in doc["engine"]:
        env = _env_seed()
        if env is not None:
            merge_overrides(doc, "engine", master_seed=env)


def _cmd_simulate(args: argparse.Namespace) -> int:
    if args.fixture is not None:
        if args.config is not None:
            raise ConfigError("--fixture and --config are mutually exclusive")
        cfg = fig4_config() if args.fixture == "fig4" else None
        if cfg is None:
            raise ConfigError("only the fig4 fixture is runnable; fig3 is a bare graph")
        from dataclasses import replace

        updates: dict[str, object] = {}
        if args.max_rounds is not None:
            updates["max_rounds"] = args.max_rounds
        if args.consensus_tol is not None:
            updates["consensus_tol"] = args.consensus_tol
        if args.stall_rounds is not None:
            updates["stall_rounds"] = args.stall_rounds
        if args.gamma is not None:
            updates["gamma"] = args.gamma
        if args.seed is not None:
            updates["master_seed"] = args.seed
        if updates:
            cfg = replace(cfg, **updates)
    else:
        doc = parse_config(args.config) if args.config else empty_doc()
        _merge_simulate_overrides(doc, args)
        cfg = build_simulation_config(doc)

    result = run_simulation(cfg)
    payload = result.verdict.to_dict()
    payload["rounds_executed"] = result.rounds_executed
    payload["stalled"] = result.stalled
    print(json.dumps(payload, indent=2))

    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_trace_csv(result, out / "trace.csv")
        write_adversary_csv(result, out / "adversary.csv")
        write_verdict_json(result, out / "verdict.json")
        if not args.no_figures:
            from .figures import save_trajectory

            save_trajectory(result, out / "trajectory.png")
        logger.info("wrote run outputs to %s", out)
    return 0 if (result.verdict.safety_ok and result.verdict.consensus_ok) else 1


# ---------------------------------------------------------------------------
# sweep


def _base_sweep_spec(
    args: argparse.Namespace,
    protocol: Protocol,
    model: AdversaryModel,
    f: int,
    default_radii: tuple[float, ...] = DEFAULT_RADII,
) -> SweepSpec:
    base_seed = args.base_seed
    if base_seed is None:
        base_seed = _env_seed()
    if base_seed is None:
        base_seed = 0
    spec = SweepSpec(
        protocol=protocol,
        model=model,
        f=f,
        n=args.n,
        side=args.side,
        radii=args.radii if args.radii is not None else default_radii,
        f_real_levels=args.f_real_levels,
        topologies=args.topologies,
        trials=args.trials,
        base_seed=base_seed,
        policy=UniformRandom(),
        strategy=UniformRange(-100.0, 0.0),
        max_rounds=args.max_rounds,
        stall_rounds=args.stall_rounds,
    )
    if args.scale is not None:
        spec = scale_spec(spec, args.scale)
    return spec


def _cmd_sweep(args: argparse.Namespace) -> int:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    jobs = args.jobs if args.jobs is not None else (os.cpu_count() or 1)

    if args.preset == "table3a":
        protocols = list(Protocol)
        models = list(AdversaryModel)
        spec = _base_sweep_spec(args, protocols[0], models[0], args.f, default_radii=(70.0,))
        result = cross_model_matrix(protocols, models, spec, jobs=jobs)
        write_matrix_csv(result, out / "matrix.csv")
        if not args.no_figures:
            from .figures import save_matrix

            save_matrix(result, out / "matrix.png")
        for p in protocols:
            row = " ".join(f"{result.max_f_real[(p, m)]:3d}" for m in models)
            print(f"{str(p):4s} {row}")
        return 0

    if args.preset == "fig8":
        pairs = [
            (Protocol.P1, AdversaryModel.M1),
            (Protocol.P2, AdversaryModel.M2),
            (Protocol.P2A, AdversaryModel.M2),
            (Protocol.P3, AdversaryModel.M3),
        ]
        results = []
        for f in args.f_levels:
            for protocol, model in pairs:
                spec = _base_sweep_spec(args, protocol, model, f)
                results.append(threshold_radius(spec, jobs=jobs))
        write_threshold_csv(results, out / "thresholds.csv")
        if not args.no_figures:
            from .figures import save_thresholds

            save_thresholds(results, out / "thresholds.png")
        for res in results:
            found = [r for r in res.thresholds.values() if r is not None]
            mean = f"{float(np.mean(found)):.1f}" if found else "none"
            print(
                f"{res.spec.protocol}/{res.spec.model} f={res.spec.f}: "
                f"mean threshold {mean} ({len(found)}/{len(res.thresholds)} topologies)"
            )
        return 0

    # explicit modes
    if args.mode is None:
        raise ConfigError("sweep needs --preset or --mode")
    if args.mode != "matrix" and (args.protocol is None or args.model is None):
        raise ConfigError(f"sweep --mode {args.mode} needs --protocol and --model")
    if args.mode == "matrix":
        protocol = parse_protocol(args.protocol) if args.protocol else Protocol.MSR
        model = parse_model(args.model) if args.model else AdversaryModel.STATIC
        spec = _base_sweep_spec(args, protocol, model, args.f, default_radii=(70.0,))
    else:
        protocol = parse_protocol(args.protocol)
        model = parse_model(args.model)
        spec = _base_sweep_spec(args, protocol, model, args.f)

    if args.mode == "grid":
        result = success_rate_grid(spec, jobs=jobs)
        write_grid_csv(result, out / "grid.csv")
        if not args.no_figures:
            from .figures import save_grid

            save_grid(result, out / "grid.png")
        print(f"grid written for {protocol}/{model}: {len(result.successes)} cells")
        return 0
    if args.mode == "threshold":
        result = threshold_radius(spec, jobs=jobs)
        write_threshold_csv([result], out / "thresholds.csv")
        if not args.no_figures:
            from .figures import save_thresholds

            save_thresholds([result], out / "thresholds.png")
        found = [r for r in result.thresholds.values() if r is not None]
        mean = f"{float(np.mean(found)):.1f}" if found else "none"
        print(f"{protocol}/{model} f={spec.f}: mean threshold {mean}")
        return 0
    if args.mode == "matrix":
        protocols = args.protocols or tuple(Protocol)
        models = args.models or tuple(AdversaryModel)
        result = cross_model_matrix(list(protocols), list(models), spec, jobs=jobs)
        write_matrix_csv(result, out / "matrix.csv")
        if not args.no_figures:
            from .figures import save_matrix

            save_matrix(result, out / "matrix.png")
        for p in result.protocols:
            row = " ".join(f"{result.max_f_real[(p, m)]:3d}" for m in result.models)
            print(f"{str(p):4s} {row}")
        return 0
    raise ConfigError(f"unknown sweep mode {args.mode!r}")


# ---------------------------------------------------------------------------
# parser


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="msrsim",
        description="Resilient-consensus simulations under mobile adversaries.",
    )
    parser.add_argument("--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-graph", help="generate a graph file")
    _add_graph_source_args(g)
    g.add_argument("--out", required=True, help="output edge-list path")
    g.add_argument("--positions", help="also write node positions CSV (geometric only)")
    g.set_defaults(func=_cmd_gen_graph)

    c = sub.add_parser("check", help="robustness and protocol-condition checks")
    _add_graph_source_args(c)
    c.add_argument("--r", type=int, help="robustness parameter r")
    c.add_argument("--s", type=int, help="robustness parameter s")
    c.add_argument("--protocol", help="evaluate this protocol's conditions instead")
    c.add_argument("--f", type=int, default=0, help="fault bound for --protocol (default 0)")
    c.set_defaults(func=_cmd_check)

    s = sub.add_parser("simulate", help="run one configuration")
    s.add_argument("--config", help="configuration file")
    s.add_argument("--fixture", choices=("fig4",), help="run a built-in scenario")
    s.add_argument("--graph", help="graph file (overrides config)")
    s.add_argument("--complete", type=int, metavar="N", help="complete graph on N nodes")
    s.add_argument("--n", type=int, help="geometric graph node count")
    s.add_argument("--side", type=float, help="geometric square side (default 100)")
    s.add_argument("--radius", type=float, help="geometric connection radius")
    s.add_argument("--graph-seed", type=int, help="geometric position seed")
    s.add_argument("--protocol", help="protocol name (msr, p1, p2, p2a, p3)")
    s.add_argument("--model", help="adversary model (static, m1, m2, m3)")
    s.add_argument("--f", type=int, help="designed fault bound")
    s.add_argument("--f-real", type=int, help="actual adversary count")
    s.add_argument("--policy", help="movement policy (stationary, random, cycle)")
    s.add_argument("--cycle-hosts", type=_csv_ints, help="cycle host list, e.g. 4,2,3,5")
    s.add_argument("--cycle-period", type=int, help="rounds between cycle moves")
    s.add_argument("--strategy", help="attack strategy (constant, uniform, alternating)")
    s.add_argument("--value", type=float, help="constant strategy value")
    s.add_argument("--low", type=float, help="uniform strategy lower bound")
    s.add_argument("--high", type=float, help="uniform strategy upper bound")
    s.add_argument("--magnitude", type=float, help="alternating strategy magnitude")
    s.add_argument("--adversary-seed", type=int, help="separate adversary RNG seed")
    s.add_argument(
        "--omit-final-broadcast",
        action="store_true",
        help="departing M2/M3 hosts send nothing in their final round",
    )
    s.add_argument("--gamma", type=float, help="weight floor (default 1/n)")
    s.add_argument("--max-rounds", type=int, help="round budget")
    s.add_argument("--consensus-tol", type=float, help="agreement tolerance")
    s.add_argument("--stall-rounds", type=int, help="no-progress exit (0 disables)")
    s.add_argument("--seed", type=int, help="master seed")
    s.add_argument("--out-dir", help="write trace.csv, adversary.csv, verdict.json here")
    s.add_argument("--no-figures", action="store_true", help="skip figure rendering")
    s.set_defaults(func=_cmd_simulate)

    w = sub.add_parser("sweep", help="batch experiments over topologies")
    w.add_argument("--preset", choices=("table3a", "fig8"), help="standard experiment")
    w.add_argument("--mode", choices=("grid", "matrix", "threshold"), help="custom experiment")
    w.add_argument("--protocol", help="protocol for grid/threshold modes")
    w.add_argument("--model", help="adversary model for grid/threshold modes")
    w.add_argument("--protocols", type=_csv_protocols, help="protocol list for matrix mode")
    w.add_argument("--models", type=_csv_models, help="model list for matrix mode")
    w.add_argument("--f", type=int, default=5, help="designed fault bound (default 5)")
    w.add_argument(
        "--f-levels",
        type=_csv_ints,
        default=(1, 2, 3, 4, 5),
        help="fault bounds for the fig8 preset (default 1..5)",
    )
    w.add_argument("--n", type=int, default=100, help="node count (default 100)")
    w.add_argument("--side", type=float, default=100.0, help="square side (default 100)")
    w.add_argument(
        "--radii",
        type=_csv_floats,
        help="radius grid (default 20..70 step 5; matrix modes use 70 alone)",
    )
    w.add_argument(
        "--f-real-levels",
        type=_csv_ints,
        default=DEFAULT_F_REAL_LEVELS,
        help="adversary counts to scan (default 0..10)",
    )
    w.add_argument("--topologies", type=int, default=10, help="fresh topologies (default 10)")
    w.add_argument("--trials", type=int, default=1, help="trials per cell (default 1)")
    w.add_argument("--base-seed", type=int, help="seed for the topology set")
    w.add_argument("--scale", type=float, help="shrink n, widen radii, keep density")
    w.add_argument("--jobs", type=int, help="worker processes (default: cpu count)")
    w.add_argument("--max-rounds", type=int, default=10_000)
    w.add_argument("--stall-rounds", type=int, default=500)
    w.add_argument("--out-dir", required=True, help="directory for CSV and figure outputs")
    w.add_argument("--no-figures", action="store_true", help="skip figure rendering")
    w.set_defaults(func=_cmd_sweep)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
