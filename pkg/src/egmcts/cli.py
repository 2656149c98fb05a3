"""Command-line entry points: plan a target, run the training loop, benchmark
planners, build reaction graphs, and score route matches.

Exit codes: 0 success (plan: solved), 2 plan ran but found no route, 1 error.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Optional, Sequence

from . import noc as noc_mod
from .baselines import (DfsParams, RolloutParams, plan_eg_mcts_0,
                        plan_greedy_dfs, plan_mcts_rollout)
from .config import RunConfig, apply_overrides, load_config, resolve_path
from .errors import EgmctsError
from .items import Item, StockSet
from .metrics import BenchmarkRow, aggregate, efficiency_csv, quality_csv
from .network import NetworkScorer, load_weights, save_weights
from .phase1 import run_phase1, validation_csv
from .remote import RemoteOracle, RemoteStock
from .routes import extract_route, load_route, matching_degree, route_to_dict
from .search import ConstantScorer, plan
from .seeding import derive_rng
from .synthetic import SyntheticDomain
from .tree import to_dot

ALGORITHMS = ("egmcts", "egmcts0", "greedy-dfs", "mcts-rollout")


def _open_oracle(cfg: RunConfig, base: Path):
    spec = cfg.oracle
    if spec.startswith("synthetic:"):
        domain = SyntheticDomain.load(resolve_path(base, spec.split(":", 1)[1]))
        oracle = domain
        default_stock = domain.stock
    elif spec.startswith("remote:"):
        _, host, port = spec.split(":", 2)
        oracle = RemoteOracle.connect_tcp(host, int(port))
        default_stock = RemoteStock(oracle)
    elif spec.startswith("stdio:"):
        oracle = RemoteOracle.spawn(spec.split(":", 1)[1])
        default_stock = RemoteStock(oracle)
    else:
        raise EgmctsError(f"unknown oracle spec {spec!r}")
    if cfg.stock == "oracle":
        stock = default_stock
    elif cfg.stock.startswith("file:"):
        lines = resolve_path(base, cfg.stock.split(":", 1)[1]).read_text().splitlines()
        stock = StockSet(line.strip() for line in lines if line.strip())
    else:
        raise EgmctsError(f"unknown stock spec {cfg.stock!r}")
    return oracle, stock


def _load_targets(path: Path, oracle) -> list[Item]:
    ids = [line.strip() for line in path.read_text().splitlines() if line.strip()]
    return [oracle.item(i) for i in ids]


def _scorer(cfg: RunConfig, base: Path, untrained: bool):
    if untrained or cfg.weights is None:
        return ConstantScorer(0.5), None
    weights = load_weights(resolve_path(base, cfg.weights))
    return NetworkScorer(weights), weights


def _write_json(path: Path, doc: dict) -> None:
    path.write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")


def cmd_plan(args) -> int:
    base = Path(args.config).parent
    cfg = apply_overrides(load_config(args.config), args)
    out_dir = resolve_path(base, cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    oracle, stock = _open_oracle(cfg, base)
    scorer, weights = _scorer(cfg, base, args.untrained)
    target = oracle.item(args.target)
    rng = derive_rng(cfg.seed, "plan", target.id)
    outcome = plan(target, stock, oracle, scorer, cfg.search, rng)

    provenance = cfg.provenance(weights.version if weights is not None else None)
    doc = dict(provenance)
    doc.update(outcome.to_dict())
    _write_json(out_dir / f"plan_{target.id}.outcome.json", doc)
    if outcome.solved:
        route = extract_route(outcome.tree)
        route_doc = dict(provenance)
        route_doc.update(route_to_dict(route, stock))
        _write_json(out_dir / f"plan_{target.id}.route.json", route_doc)
    if args.dump_tree:
        (out_dir / f"plan_{target.id}.tree.dot").write_text(to_dot(outcome.tree))
    return 0 if outcome.solved else 2


def cmd_train(args) -> int:
    base = Path(args.config).parent
    cfg = apply_overrides(load_config(args.config), args)
    if cfg.train_targets is None or cfg.validation_targets is None:
        raise EgmctsError("training needs targets.train and targets.validation in the config")
    out_dir = resolve_path(base, cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    oracle, stock = _open_oracle(cfg, base)
    train_targets = _load_targets(resolve_path(base, cfg.train_targets), oracle)
    val_targets = _load_targets(resolve_path(base, cfg.validation_targets), oracle)

    weights, records = run_phase1(
        train_targets, val_targets, stock, oracle, cfg.phase1,
        seed=cfg.seed, train_config=cfg.train, artifacts_dir=out_dir / "phase1")
    save_weights(out_dir / "weights.egn", weights, seed=cfg.seed,
                 training_round=records[-1].round_index,
                 metadata=cfg.provenance(weights.version))
    (out_dir / "validation.csv").write_text(validation_csv(records))
    return 0


def _run_algorithm(algorithm: str, target: Item, stock, oracle, cfg: RunConfig,
                   scorer) -> BenchmarkRow:
    rng = derive_rng(cfg.seed, "bench", algorithm, target.id)
    if algorithm == "egmcts":
        outcome = plan(target, stock, oracle, scorer, cfg.search, rng)
        if outcome.solved:
            outcome.route = extract_route(outcome.tree)
    elif algorithm == "egmcts0":
        outcome = plan_eg_mcts_0(target, stock, oracle, cfg.search, rng)
        if outcome.solved:
            outcome.route = extract_route(outcome.tree)
    elif algorithm == "greedy-dfs":
        outcome = plan_greedy_dfs(target, stock, oracle,
                                  DfsParams(iteration_limit=cfg.search.iteration_limit,
                                            k=cfg.search.k))
    elif algorithm == "mcts-rollout":
        outcome = plan_mcts_rollout(target, stock, oracle,
                                    RolloutParams(c=cfg.search.c,
                                                  iteration_limit=cfg.search.iteration_limit,
                                                  k=cfg.search.k), rng)
    else:
        raise EgmctsError(f"unknown algorithm {algorithm!r}")
    iterations = (outcome.iterations_to_first_solution if outcome.solved
                  else cfg.search.iteration_limit)
    return BenchmarkRow(
        algorithm=algorithm, target_id=target.id, solved=outcome.solved,
        iterations=iterations,
        expanded_reaction_nodes=outcome.expanded_reaction_nodes,
        expanded_molecule_nodes=outcome.expanded_molecule_nodes,
        route_length=len(outcome.route) if outcome.route is not None else None,
    )


def _bench_worker(payload) -> BenchmarkRow:
    config_path, overrides, algorithm, target_id = payload
    args = argparse.Namespace(**overrides)
    base = Path(config_path).parent
    cfg = apply_overrides(load_config(config_path), args)
    oracle, stock = _open_oracle(cfg, base)
    scorer, _ = _scorer(cfg, base, overrides.get("untrained", False))
    target = oracle.item(target_id)
    return _run_algorithm(algorithm, target, stock, oracle, cfg, scorer)


def cmd_bench(args) -> int:
    base = Path(args.config).parent
    cfg = apply_overrides(load_config(args.config), args)
    algorithms = [a.strip() for a in args.algorithms.split(",") if a.strip()]
    for algo in algorithms:
        if algo not in ALGORITHMS:
            print(f"unknown algorithm {algo!r}; known: {', '.join(ALGORITHMS)}",
                  file=sys.stderr)
            return 1
    if cfg.test_targets is None:
        raise EgmctsError("benchmarking needs targets.test in the config")
    out_dir = resolve_path(base, cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    oracle, stock = _open_oracle(cfg, base)
    targets = _load_targets(resolve_path(base, cfg.test_targets), oracle)
    scorer, weights = _scorer(cfg, base, args.untrained)

    rows: list[BenchmarkRow] = []
    jobs = cfg.jobs
    if jobs > 1 and cfg.oracle.startswith("synthetic:"):
        overrides = {k: getattr(args, k, None) for k in
                     ("seed", "iterations", "k", "c", "z", "stop_on_first",
                      "oracle", "weights", "jobs", "output_dir")}
        overrides["untrained"] = args.untrained
        payloads = [(args.config, overrides, algo, t.id)
                    for algo in algorithms for t in targets]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_bench_worker, payloads))
    else:
        for algo in algorithms:
            for target in targets:
                rows.append(_run_algorithm(algo, target, stock, oracle, cfg, scorer))

    summary = aggregate(rows, iteration_limit=cfg.search.iteration_limit)
    provenance = cfg.provenance(weights.version if weights is not None else None)
    stamp = (f"# config_hash={provenance['config_hash']} seed={provenance['seed']} "
             f"weights_version={provenance['weights_version']}\n")
    (out_dir / "efficiency.csv").write_text(stamp + efficiency_csv(summary))
    (out_dir / "quality.csv").write_text(stamp + quality_csv(summary))
    _write_json(out_dir / "bench_rows.json", {
        **provenance,
        "rows": [
            {
                "algorithm": r.algorithm, "target": r.target_id, "solved": r.solved,
                "iterations": r.iterations, "route_length": r.route_length,
            } for r in rows
        ],
    })
    return 0


def cmd_noc(args) -> int:
    records = noc_mod.load_records(args.records)
    stock_ids = [line.strip() for line in Path(args.stock).read_text().splitlines()
                 if line.strip()]
    graph = noc_mod.build_noc(records, StockSet(stock_ids))
    out_dir = Path(args.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    nodes_csv, edges_csv = noc_mod.graph_csv(graph)
    (out_dir / "nodes.csv").write_text(nodes_csv)
    (out_dir / "edges.csv").write_text(edges_csv)
    selected = noc_mod.filter_targets(graph, args.min_outdegree, args.min_cost)
    (out_dir / "filtered_targets.txt").write_text("\n".join(selected) + ("\n" if selected else ""))
    if args.split:
        sizes = tuple(int(x) for x in args.split.split(","))
        manifest = noc_mod.make_split(selected, sizes, args.seed)
        _write_json(out_dir / "split.json", manifest)
    return 0


def cmd_match(args) -> int:
    generated = load_route(args.generated)
    reference = load_route(args.reference)
    report = matching_degree(generated, reference)
    doc = {
        "matched_steps": report.matched_steps,
        "total_steps": report.total_steps,
        "degree": report.degree,
    }
    print(json.dumps(doc, sort_keys=True))
    if args.out:
        _write_json(Path(args.out), doc)
    return 0


def cmd_make_domain(args) -> int:
    from .synthetic import random_domain

    domain = random_domain(seed=args.seed)
    domain.save(args.out)
    return 0


def _add_common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", required=True, help="run configuration JSON")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--iterations", type=int, default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--c", type=float, default=None)
    p.add_argument("--z", type=float, default=None)
    p.add_argument("--jobs", type=int, default=None)
    p.add_argument("--oracle", default=None,
                   help="synthetic:<path> | remote:<host>:<port> | stdio:<command>")
    p.add_argument("--weights", default=None)
    p.add_argument("--stop-on-first", choices=("true", "false"), default=None)
    p.add_argument("--output-dir", default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="egmcts")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", help="plan one target")
    _add_common_flags(p)
    p.add_argument("target")
    p.add_argument("--untrained", action="store_true",
                   help="use the constant 0.5 scorer instead of trained weights")
    p.add_argument("--dump-tree", action="store_true")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("train", help="run the self-play training loop")
    _add_common_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("bench", help="benchmark planners over the test targets")
    _add_common_flags(p)
    p.add_argument("--algorithms", default=",".join(ALGORITHMS))
    p.add_argument("--untrained", action="store_true")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("noc", help="build a reaction graph and filter targets")
    p.add_argument("--records", required=True)
    p.add_argument("--stock", required=True)
    p.add_argument("--min-outdegree", type=int, default=2)
    p.add_argument("--min-cost", type=int, default=4)
    p.add_argument("--split", default=None, help="train,validation,test sizes")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output-dir", default="noc_out")
    p.set_defaults(func=cmd_noc)

    p = sub.add_parser("match", help="score a generated route against a reference")
    p.add_argument("--generated", required=True)
    p.add_argument("--reference", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("make-domain", help="generate a synthetic domain file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_make_domain)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except EgmctsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
