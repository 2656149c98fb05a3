"""The self-play training loop: plan the training targets, harvest and merge
experience, retrain the network, validate, and stop when validation stalls."""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from .errors import OracleUnavailable
from .experience import ExperienceSet, collect_experience, merge_experience
from .items import ExpansionOracle, Item, Stock
from .network import (EgnWeights, NetworkScorer, TrainConfig, init_weights,
                      save_weights, train)
from .search import SearchParams, plan
from .seeding import derive_rng

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Phase1Params:
    """Loop thresholds and the planning parameters used inside the loop.

    epsilon1/epsilon2 are the published stopping thresholds (success-rate and
    average-iteration improvements); window is how many previous rounds the
    current one must beat.
    """

    epsilon1: float = 0.015
    epsilon2: float = 3.0
    window: int = 5
    max_rounds: int = 10
    planning: SearchParams = field(default_factory=SearchParams)
    accumulate: bool = False

    def __post_init__(self):
        if self.epsilon1 <= 0 or self.epsilon2 <= 0:
            raise ValueError("epsilon thresholds must be positive")
        if self.window < 1:
            raise ValueError("window must be >= 1")
        if self.max_rounds < 1:
            raise ValueError("max_rounds must be >= 1")


@dataclass(frozen=True)
class ValidationRecord:
    round_index: int
    success_rate: float
    avg_iterations: float


def should_continue(history: Sequence[ValidationRecord],
                    current: ValidationRecord, p: Phase1Params) -> bool:
    """True iff the current round beats the recent window on either metric:
    success rate up by more than epsilon1, or average iterations down by more
    than epsilon2."""
    if not history:
        raise ValueError("history must be non-empty; round 1 always continues")
    best_rate = max(r.success_rate for r in history)
    best_iters = min(r.avg_iterations for r in history)
    return (current.success_rate - best_rate > p.epsilon1
            or best_iters - current.avg_iterations > p.epsilon2)


def _validation_sweep(targets: Sequence[Item], stock: Stock, oracle: ExpansionOracle,
                      weights: EgnWeights, params: SearchParams, seed: int,
                      round_index: int) -> ValidationRecord:
    scorer = NetworkScorer(weights)
    solved = 0
    iters_total = 0.0
    for target in targets:
        rng = derive_rng(seed, "validate", round_index, target.id)
        outcome = plan(target, stock, oracle, scorer, params, rng)
        if outcome.solved:
            solved += 1
            iters_total += outcome.iterations_to_first_solution
        else:
            iters_total += params.iteration_limit
    return ValidationRecord(round_index=round_index,
                            success_rate=solved / len(targets),
                            avg_iterations=iters_total / len(targets))


def run_phase1(train_targets: Sequence[Item], validation_targets: Sequence[Item],
               stock: Stock, oracle: ExpansionOracle, params: Phase1Params,
               seed: int, train_config: Optional[TrainConfig] = None,
               initial_weights: Optional[EgnWeights] = None,
               artifacts_dir=None) -> tuple[EgnWeights, list[ValidationRecord]]:
    """Runs training rounds until the validation loop condition fails or the
    round cap is hit; returns the best-validation-round weights snapshot.

    Round i plans every training target with the previous round's network
    (round 1 with the random init), merges the harvested experience, trains,
    then sweeps the validation set with the new network.
    """
    if not train_targets or not validation_targets:
        raise ValueError("target sets must be non-empty")
    train_ids = {t.id for t in train_targets}
    if train_ids & {t.id for t in validation_targets}:
        raise ValueError("train and validation targets must be disjoint")
    if train_config is None:
        train_config = TrainConfig(seed=seed)
    weights = initial_weights if initial_weights is not None else init_weights(seed)

    records: list[ValidationRecord] = []
    best: tuple[float, float, EgnWeights] | None = None
    accumulated = ExperienceSet()
    out_dir = Path(artifacts_dir) if artifacts_dir is not None else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)

    round_index = 0
    while True:
        round_index += 1
        scorer = NetworkScorer(weights)
        experience = accumulated if params.accumulate else ExperienceSet(round_index)
        experience.round_index = round_index
        try:
            for target in train_targets:
                rng = derive_rng(seed, "train", round_index, target.id)
                outcome = plan(target, stock, oracle, scorer, params.planning, rng)
                merge_experience(collect_experience(outcome.tree), experience)
        except OracleUnavailable:
            if out_dir is not None:
                _write_round_logs(out_dir, round_index, experience, None, records, seed)
            raise
        samples = experience.training_samples()
        weights, report = train(weights, samples, train_config)
        log.info("round %d: trained on %d pairs, final loss %.5f",
                 round_index, report.samples, report.final_loss)

        record = _validation_sweep(validation_targets, stock, oracle, weights,
                                   params.planning, seed, round_index)
        records.append(record)
        log.info("round %d: validation success %.3f, avg iterations %.2f",
                 round_index, record.success_rate, record.avg_iterations)
        if out_dir is not None:
            _write_round_logs(out_dir, round_index, experience, weights, records, seed)

        key = (record.success_rate, -record.avg_iterations)
        if best is None or key > (best[0], best[1]):
            best = (record.success_rate, -record.avg_iterations, weights)

        if round_index >= params.max_rounds:
            break
        if round_index >= 2:
            history = records[max(0, round_index - 1 - params.window):round_index - 1]
            if not should_continue(history, record, params):
                break
    assert best is not None
    return best[2], records


def validation_csv(records: Sequence[ValidationRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["round", "success_rate", "avg_iterations"])
    for r in records:
        writer.writerow([r.round_index, f"{r.success_rate:.6f}", f"{r.avg_iterations:.4f}"])
    return buf.getvalue()


def _write_round_logs(out_dir: Path, round_index: int, experience: ExperienceSet,
                      weights: Optional[EgnWeights], records, seed: int) -> None:
    round_dir = out_dir / f"round_{round_index:03d}"
    round_dir.mkdir(parents=True, exist_ok=True)
    experience.save(round_dir / "experience.jsonl")
    if weights is not None:
        save_weights(round_dir / "weights.egn", weights, seed=seed,
                     training_round=round_index)
    (out_dir / "validation.csv").write_text(validation_csv(records))
