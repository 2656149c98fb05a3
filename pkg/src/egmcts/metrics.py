"""Benchmark bookkeeping: per-target rows, cross-algorithm summary tables, and
fingerprint similarity statistics."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Optional, Sequence

from .errors import EmptySet, MismatchedTargets
from .fingerprints import tanimoto_matrix
from .items import Item

DEFAULT_LIMITS = (100, 200, 300, 400, 500)


@dataclass(frozen=True)
class BenchmarkRow:
    """One (algorithm, target) result.  iterations is the first-solution
    iteration when solved; unsolved targets are charged the full limit when
    averaged."""

    algorithm: str
    target_id: str
    solved: bool
    iterations: int
    expanded_reaction_nodes: Optional[int] = None
    expanded_molecule_nodes: Optional[int] = None
    route_length: Optional[int] = None

    def __post_init__(self):
        if self.solved != (self.route_length is not None):
            raise ValueError("route_length must be present exactly for solved rows")


@dataclass(frozen=True)
class AlgorithmSummary:
    algorithm: str
    success_rates: dict[int, float]  # iteration limit -> fraction solved
    avg_iterations: float
    avg_reaction_nodes: Optional[float]
    avg_molecule_nodes: Optional[float]
    longest_route_count: int
    shortest_route_count: int
    avg_route_length: Optional[float]


@dataclass(frozen=True)
class BenchmarkSummary:
    algorithms: tuple[AlgorithmSummary, ...]
    n_targets: int
    n_common_solved: int


def aggregate(rows: Sequence[BenchmarkRow], limits: Sequence[int] = DEFAULT_LIMITS,
              iteration_limit: int = 500) -> BenchmarkSummary:
    """Summarizes rows into per-algorithm success rates at each limit, average
    iterations (unsolved charged the full limit), node counts, and the
    longest/shortest route tallies over the commonly solved targets.

    Ties for longest (or shortest) route credit every tied algorithm.
    """
    if not rows:
        raise MismatchedTargets("no rows to aggregate")
    by_algo: dict[str, dict[str, BenchmarkRow]] = {}
    for row in rows:
        per = by_algo.setdefault(row.algorithm, {})
        if row.target_id in per:
            raise MismatchedTargets(
                f"duplicate row for {row.algorithm}/{row.target_id}")
        per[row.target_id] = row
    target_sets = {algo: frozenset(per) for algo, per in by_algo.items()}
    reference = next(iter(target_sets.values()))
    for algo, targets in target_sets.items():
        if targets != reference:
            raise MismatchedTargets(f"algorithm {algo} covers a different target set")

    common = [t for t in sorted(reference)
              if all(by_algo[a][t].solved for a in by_algo)]
    summaries = []
    for algo in sorted(by_algo):
        per = by_algo[algo]
        n = len(per)
        rates = {}
        for limit in limits:
            rates[limit] = sum(1 for r in per.values()
                               if r.solved and r.iterations <= limit) / n
        avg_iter = sum(r.iterations if r.solved else iteration_limit
                       for r in per.values()) / n
        t_counts = [r.expanded_reaction_nodes for r in per.values()]
        m_counts = [r.expanded_molecule_nodes for r in per.values()]
        avg_t = (sum(t_counts) / n) if all(c is not None for c in t_counts) else None
        avg_m = (sum(m_counts) / n) if all(c is not None for c in m_counts) else None

        lrn = srn = 0
        lengths = []
        for t in common:
            mine = by_algo[algo][t].route_length
            lengths.append(mine)
            all_lengths = [by_algo[a][t].route_length for a in by_algo]
            if mine == max(all_lengths):
                lrn += 1
            if mine == min(all_lengths):
                srn += 1
        avg_len = sum(lengths) / len(lengths) if lengths else None
        summaries.append(AlgorithmSummary(
            algorithm=algo, success_rates=rates, avg_iterations=avg_iter,
            avg_reaction_nodes=avg_t, avg_molecule_nodes=avg_m,
            longest_route_count=lrn, shortest_route_count=srn,
            avg_route_length=avg_len))
    return BenchmarkSummary(algorithms=tuple(summaries), n_targets=len(reference),
                            n_common_solved=len(common))


def efficiency_csv(summary: BenchmarkSummary, limits: Sequence[int] = DEFAULT_LIMITS) -> str:
    """Success rate / average iteration / node count table."""
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["algorithm"] + [f"success_rate_{l}" for l in limits]
                    + ["avg_iterations", "avg_reaction_nodes", "avg_molecule_nodes"])
    for s in summary.algorithms:
        row = [s.algorithm]
        row += [f"{100.0 * s.success_rates[l]:.2f}" for l in limits]
        row.append(f"{s.avg_iterations:.2f}")
        row.append("-" if s.avg_reaction_nodes is None else f"{s.avg_reaction_nodes:.2f}")
        row.append("-" if s.avg_molecule_nodes is None else f"{s.avg_molecule_nodes:.2f}")
        writer.writerow(row)
    return buf.getvalue()


def quality_csv(summary: BenchmarkSummary) -> str:
    """Route-length table over the commonly solved targets."""
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["algorithm", "longest_routes", "shortest_routes",
                     "avg_route_length", "common_solved_targets"])
    for s in summary.algorithms:
        writer.writerow([
            s.algorithm, s.longest_route_count, s.shortest_route_count,
            "-" if s.avg_route_length is None else f"{s.avg_route_length:.2f}",
            summary.n_common_solved,
        ])
    return buf.getvalue()


@dataclass(frozen=True)
class SimilarityStat:
    item_id: str
    s_max: float
    s_avg: float


def similarity_stats(test_items: Sequence[Item],
                     train_items: Sequence[Item]) -> list[SimilarityStat]:
    """Per test item, the highest and mean Tanimoto similarity to the training
    set, over the 2048-bit fingerprints."""
    if not test_items or not train_items:
        raise EmptySet("similarity statistics need non-empty item sets")
    sims = tanimoto_matrix([i.fingerprint for i in test_items],
                           [i.fingerprint for i in train_items])
    return [
        SimilarityStat(item_id=item.id, s_max=float(row.max()), s_avg=float(row.mean()))
        for item, row in zip(test_items, sims)
    ]
