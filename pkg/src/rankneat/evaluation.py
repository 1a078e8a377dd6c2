"""Leave-X-participants-out cross-validation and multi-run aggregation.

Folds hold out whole participants so no player identity leaks between
train and test. Runs reshuffle the fold assignment and reseed training;
aggregates are means with Student-t 95% confidence intervals across runs.
Every (run, fold) job is independent, so the matrix parallelizes freely.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy import stats as scipy_stats

from . import core, neat, sgd
from .data import PairDataset, WindowedSession
from .errors import TooFewParticipantsError, TooFewValuesError
from .neat import GenerationStats, NeatConfig
from .sgd import SgdConfig


@dataclass(frozen=True)
class Fold:
    index: int
    held_out: frozenset[str]
    train_sessions: tuple[WindowedSession, ...]
    test_sessions: tuple[WindowedSession, ...]


@dataclass(frozen=True)
class FoldPlan:
    folds: tuple[Fold, ...]
    k: int


def plan_folds(sessions: list[WindowedSession], k: int, seed) -> FoldPlan:
    """Shuffle participants and partition them into k near-equal test groups."""
    if k < 2:
        raise ValueError("k must be at least 2: a single fold has no train/test split")
    participants = sorted({s.participant_id for s in sessions})
    if len(participants) < k:
        raise TooFewParticipantsError(
            f"need at least {k} participants for {k} folds, got {len(participants)}"
        )
    rng = np.random.default_rng(seed)
    shuffled = [participants[i] for i in rng.permutation(len(participants))]
    groups = np.array_split(np.array(shuffled, dtype=object), k)
    folds = []
    for i, group in enumerate(groups):
        held_out = frozenset(group.tolist())
        folds.append(Fold(
            index=i,
            held_out=held_out,
            train_sessions=tuple(s for s in sessions if s.participant_id not in held_out),
            test_sessions=tuple(s for s in sessions if s.participant_id in held_out),
        ))
    return FoldPlan(folds=tuple(folds), k=k)


def confidence_interval(values) -> tuple[float, float]:
    """Mean and 95% half-width using Student-t with n-1 degrees of freedom."""
    values = np.asarray(values, dtype=float)
    if values.size < 2:
        raise TooFewValuesError("confidence interval needs at least 2 values")
    mean = float(values.mean())
    s = float(values.std(ddof=1))
    t = float(scipy_stats.t.ppf(0.975, values.size - 1))
    return mean, t * s / float(np.sqrt(values.size))


@dataclass(frozen=True)
class TrainerSpec:
    """Which trainer to run and the hyperparameters it should start from.

    Per-job seed and iteration budget are filled in by the harness.
    """

    name: str
    sgd_config: SgdConfig = SgdConfig()
    neat_config: NeatConfig = NeatConfig()

    def __post_init__(self):
        if self.name not in ("ranknet", "rankneat"):
            raise ValueError(f"unknown trainer {self.name!r}")


@dataclass
class JobResult:
    run: int
    fold: int
    trajectory: core.TrainTrajectory
    generation_stats: list[GenerationStats] | None = None


def _job_seed(master_seed: int, run: int, fold: int) -> int:
    return int(np.random.SeedSequence([master_seed, run, fold]).generate_state(1)[0])


def run_job(trainer: TrainerSpec, train_sessions, test_sessions,
            preference_threshold: float, budget: int, run: int, fold: int,
            master_seed: int) -> JobResult:
    """Train one (run, fold) cell of the experiment matrix."""
    training = PairDataset.from_sessions(train_sessions, preference_threshold)
    test = PairDataset.from_sessions(test_sessions, preference_threshold)
    seed = _job_seed(master_seed, run, fold)
    if trainer.name == "ranknet":
        cfg = replace(trainer.sgd_config, epochs=budget, seed=seed)
        init_rng = np.random.default_rng([seed, 0])
        initial = core.random_ranker(training.dimension, init_rng)
        trajectory = sgd.train(initial, training, test, cfg)
        return JobResult(run=run, fold=fold, trajectory=trajectory)
    cfg = replace(trainer.neat_config, seed=seed)
    result = neat.evolve(training, test, cfg, budget)
    return JobResult(run=run, fold=fold, trajectory=result.trajectory,
                     generation_stats=result.stats)


def _run_job_args(args) -> JobResult:
    return run_job(*args)


@dataclass
class ExperimentReport:
    """Aggregated test/train accuracy curves for one trainer configuration."""

    trainer: str
    preference_threshold: float
    k: int
    runs: int
    budget: int
    seed: int
    iterations: list[int]
    mean_test: list[float]
    ci_test: list[float]
    mean_train: list[float]
    ci_train: list[float]
    per_run_test: list[list[float]]
    best_mean_acc: float
    best_run_acc: float
    jobs: list[JobResult]

    def to_json_dict(self) -> dict:
        per_iteration = [
            {
                "iteration": it,
                "mean_test_acc": mt,
                "ci_test_acc": ct,
                "mean_train_acc": mtr,
                "ci_train_acc": ctr,
            }
            for it, mt, ct, mtr, ctr in zip(
                self.iterations, self.mean_test, self.ci_test,
                self.mean_train, self.ci_train)
        ]
        return {
            "trainer": self.trainer,
            "P_t": self.preference_threshold,
            "K": self.k,
            "runs": self.runs,
            "budget": self.budget,
            "seed": self.seed,
            "best_mean_acc": self.best_mean_acc,
            "best_run_acc": self.best_run_acc,
            "per_iteration": per_iteration,
            "meta": {"created_unix": time.time()},
        }

    def to_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_dict(), fh, indent=2)
            fh.write("\n")


def aggregate_jobs(jobs: list[JobResult], trainer: str, preference_threshold: float,
                   k: int, runs: int, budget: int, seed: int) -> ExperimentReport:
    """Mean over folds within a run, then mean and 95% CI across runs."""
    jobs = sorted(jobs, key=lambda j: (j.run, j.fold))
    iterations = jobs[0].trajectory.iterations()
    for job in jobs:
        if job.trajectory.iterations() != iterations:
            raise ValueError("jobs disagree on the iteration grid")

    def run_curve(run: int, values) -> np.ndarray:
        rows = [values(j.trajectory) for j in jobs if j.run == run]
        return np.mean(rows, axis=0)

    per_run_test = [run_curve(r, core.TrainTrajectory.test_accuracies)
                    for r in range(runs)]
    per_run_train = [run_curve(r, core.TrainTrajectory.train_accuracies)
                     for r in range(runs)]

    test_matrix = np.stack(per_run_test)
    train_matrix = np.stack(per_run_train)
    mean_test = test_matrix.mean(axis=0)
    mean_train = train_matrix.mean(axis=0)
    if runs >= 2:
        ci_test = [confidence_interval(test_matrix[:, t])[1]
                   for t in range(len(iterations))]
        ci_train = [confidence_interval(train_matrix[:, t])[1]
                    for t in range(len(iterations))]
    else:
        ci_test = [0.0] * len(iterations)
        ci_train = [0.0] * len(iterations)

    return ExperimentReport(
        trainer=trainer,
        preference_threshold=preference_threshold,
        k=k,
        runs=runs,
        budget=budget,
        seed=seed,
        iterations=list(iterations),
        mean_test=[float(v) for v in mean_test],
        ci_test=[float(v) for v in ci_test],
        mean_train=[float(v) for v in mean_train],
        ci_train=[float(v) for v in ci_train],
        per_run_test=[[float(v) for v in row] for row in per_run_test],
        best_mean_acc=float(mean_test.max()),
        best_run_acc=float(test_matrix.max(axis=1).max()),
        jobs=jobs,
    )


def run_experiment(sessions: list[WindowedSession], trainer: TrainerSpec,
                   preference_threshold: float, k: int, runs: int, budget: int,
                   seed: int, jobs: int = 1) -> ExperimentReport:
    """The full protocol: k folds x `runs` repetitions, each independently seeded.

    Every repetition reshuffles the fold assignment; seeds for shuffling and
    training all derive from the master seed, so a repeat of the experiment
    is bit-identical.
    """
    if runs < 1:
        raise ValueError("runs must be at least 1")
    if budget < 1:
        raise ValueError("budget must be at least 1")
    job_args = []
    for run in range(runs):
        plan = plan_folds(sessions, k, seed=[seed, run])
        for fold in plan.folds:
            job_args.append((trainer, fold.train_sessions, fold.test_sessions,
                             preference_threshold, budget, run, fold.index, seed))

    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_job_args, job_args))
    else:
        results = [_run_job_args(args) for args in job_args]

    return aggregate_jobs(results, trainer.name, preference_threshold,
                          k, runs, budget, seed)


def load_report_json(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)
