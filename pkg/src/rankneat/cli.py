"""Command-line front end.

Subcommands cover the pipeline end to end: `gen-synth` writes a synthetic
corpus, `build-pairs` reports pair volumes per preference threshold,
`train` runs the cross-validated experiment for one trainer, `compare`
aligns two experiment reports on a common iteration grid, and `report`
renders accuracy curves as CSV plus matplotlib figures.

Configuration comes from defaults, then an optional key=value file, then
flags; unknown config keys are rejected. Exit codes: 0 ok, 2 data error,
3 training error, 4 config error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path

from . import neat, plotting, synthetic
from .data import PairDataset, ingest
from .errors import (
    ConfigError,
    DataError,
    GridMismatchError,
    RankneatError,
    TrainingError,
    EmptyDatasetError,
    TooFewParticipantsError,
    TooFewValuesError,
)
from .evaluation import ExperimentReport, TrainerSpec, load_report_json, run_experiment
from .neat import NeatConfig
from .sgd import SgdConfig
from .synthetic import SyntheticSpec

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_DATA_ERROR = 2
EXIT_TRAINING_ERROR = 3
EXIT_CONFIG_ERROR = 4


@dataclass
class RunConfig:
    """Every knob with a documented default; flags override file values."""

    # dataset
    window_seconds: float = 3.0
    lag_seconds: float = 1.0
    preference_threshold: float = 0.25
    # sgd trainer
    batch_number: int = 10
    learning_rate: float = 0.01
    # neat trainer
    population_size: int = 100
    compatibility_threshold: float = 3.0
    elitism_per_species: int = 2
    edge_add_rate: float = 0.5
    edge_delete_rate: float = 0.5
    weight_mutation_rate: float = 0.8
    weight_perturb_std: float = 0.5
    weight_replace_rate: float = 0.1
    survival_threshold: float = 0.2
    stagnation_limit: int = 15
    crossover_rate: float = 0.75
    compat_disjoint_coeff: float = 1.0
    compat_weight_coeff: float = 0.5
    # experiment
    trainer: str = "rankneat"
    folds: int = 10
    runs: int = 5
    budget: int = 1500
    seed: int = 0
    jobs: int = 1
    # synthetic corpus
    dimension: int = 32
    signal_fraction: float = 0.5
    n_participants: int = 30
    windows_per_session: int = 40
    label_noise_std: float = 0.25

    def sgd_config(self) -> SgdConfig:
        return SgdConfig(batch_number=self.batch_number,
                         learning_rate=self.learning_rate)

    def neat_config(self) -> NeatConfig:
        return NeatConfig(
            population_size=self.population_size,
            compatibility_threshold=self.compatibility_threshold,
            elitism_per_species=self.elitism_per_species,
            edge_add_rate=self.edge_add_rate,
            edge_delete_rate=self.edge_delete_rate,
            weight_mutation_rate=self.weight_mutation_rate,
            weight_perturb_std=self.weight_perturb_std,
            weight_replace_rate=self.weight_replace_rate,
            survival_threshold=self.survival_threshold,
            stagnation_limit=self.stagnation_limit,
            crossover_rate=self.crossover_rate,
            compat_disjoint_coeff=self.compat_disjoint_coeff,
            compat_weight_coeff=self.compat_weight_coeff,
        )

    def trainer_spec(self) -> TrainerSpec:
        return TrainerSpec(name=self.trainer, sgd_config=self.sgd_config(),
                           neat_config=self.neat_config())

    def synthetic_spec(self) -> SyntheticSpec:
        return SyntheticSpec(
            dimension=self.dimension,
            signal_fraction=self.signal_fraction,
            n_participants=self.n_participants,
            windows_per_session=self.windows_per_session,
            label_noise_std=self.label_noise_std,
            seed=self.seed,
        )


_CONFIG_TYPES = {f.name: f.type for f in dataclasses.fields(RunConfig)}
_COERCE = {"float": float, "int": int, "str": str}


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """Parse `key = value` lines; comments start with #."""
    values: dict = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{line_no}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in _CONFIG_TYPES:
            raise ConfigError(f"{source}:{line_no}: unknown config key {key!r}")
        try:
            values[key] = _COERCE[_CONFIG_TYPES[key]](value)
        except ValueError:
            raise ConfigError(
                f"{source}:{line_no}: cannot parse {value!r} as {_CONFIG_TYPES[key]}"
            ) from None
    return values


def dump_config(cfg: RunConfig) -> str:
    lines = []
    for field in dataclasses.fields(RunConfig):
        value = getattr(cfg, field.name)
        rendered = repr(value) if isinstance(value, float) else str(value)
        lines.append(f"{field.name} = {rendered}")
    return "\n".join(lines) + "\n"


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """defaults < config file < command-line flags."""
    values: dict = {}
    if getattr(args, "config", None):
        path = Path(args.config)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        values.update(parse_config_text(path.read_text(encoding="utf-8"), str(path)))
    for key in _CONFIG_TYPES:
        flag_value = getattr(args, key, None)
        if flag_value is not None:
            values[key] = flag_value
    try:
        return RunConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def _atomic_write(path: Path, writer) -> None:
    tmp = path.with_name(path.name + ".tmp")
    writer(tmp)
    os.replace(tmp, path)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="key=value config file")
    parser.add_argument("--dump-config", action="store_true",
                        help="print the effective config and exit")
    parser.add_argument("--seed", type=int, help="master seed")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rankneat",
                     description="Pairwise preference learning: neuroevolution vs SGD")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-synth", parents=[], help="write a synthetic corpus")
    _add_common(p)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--dim", dest="dimension", type=int)
    p.add_argument("--participants", dest="n_participants", type=int)
    p.add_argument("--windows", dest="windows_per_session", type=int)
    p.add_argument("--signal-fraction", dest="signal_fraction", type=float)
    p.add_argument("--noise-std", dest="label_noise_std", type=float)
    p.set_defaults(func=cmd_gen_synth)

    p = sub.add_parser("build-pairs", help="report pair counts per threshold")
    _add_common(p)
    p.add_argument("--features", required=True)
    p.add_argument("--annotations", required=True)
    p.add_argument("--pt", dest="thresholds", type=float, action="append",
                   help="preference threshold; repeatable")
    p.add_argument("--window-seconds", dest="window_seconds", type=float)
    p.add_argument("--lag-seconds", dest="lag_seconds", type=float)
    p.set_defaults(func=cmd_build_pairs)

    p = sub.add_parser("train", help="run the cross-validated experiment")
    _add_common(p)
    p.add_argument("--features", required=True)
    p.add_argument("--annotations", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--trainer", choices=["ranknet", "rankneat"])
    p.add_argument("--pt", dest="preference_threshold", type=float)
    p.add_argument("--bn", dest="batch_number", type=int)
    p.add_argument("--pop", dest="population_size", type=int)
    p.add_argument("--budget", type=int)
    p.add_argument("--runs", type=int)
    p.add_argument("--folds", type=int)
    p.add_argument("--jobs", type=int)
    p.add_argument("--window-seconds", dest="window_seconds", type=float)
    p.add_argument("--lag-seconds", dest="lag_seconds", type=float)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("compare", help="align two reports on a common grid")
    _add_common(p)
    p.add_argument("report_a")
    p.add_argument("report_b")
    p.add_argument("--out", required=True, help="comparison CSV path")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("report", help="render curves as CSV and figures")
    _add_common(p)
    p.add_argument("reports", nargs="+", help="experiment report JSON files")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_report)

    return parser


def cmd_gen_synth(args, cfg: RunConfig) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    spec = cfg.synthetic_spec()
    sessions, truth = synthetic.generate(spec)
    features_path = out / "features.csv"
    annotations_path = out / "annotations.csv"
    synthetic.write_corpus(sessions, features_path, annotations_path,
                           cfg.window_seconds, cfg.lag_seconds)
    truth_payload = truth.to_json_dict()
    truth_payload["signal_indices"] = sorted(spec.signal_indices())
    _atomic_write(out / "truth.json", lambda p: Path(p).write_text(
        json.dumps(truth_payload, indent=2) + "\n", encoding="utf-8"))
    print(f"wrote {len(sessions)} sessions x {spec.windows_per_session} windows "
          f"(d={spec.dimension}) to {out}")
    return EXIT_OK


def cmd_build_pairs(args, cfg: RunConfig) -> int:
    thresholds = args.thresholds or [cfg.preference_threshold]
    sessions = ingest(args.features, args.annotations,
                      cfg.window_seconds, cfg.lag_seconds)
    counts = {}
    for pt in thresholds:
        counts[pt] = len(PairDataset.from_sessions(sessions, pt))
        print(f"P_t={pt}: {counts[pt]} pairs")
    if len(thresholds) > 1:
        lo, hi = min(thresholds), max(thresholds)
        if counts[lo] > 0:
            print(f"volume ratio P_t={hi} vs P_t={lo}: {counts[hi] / counts[lo]:.3f}")
    return EXIT_OK


def cmd_train(args, cfg: RunConfig) -> int:
    sessions = ingest(args.features, args.annotations,
                      cfg.window_seconds, cfg.lag_seconds)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        report = run_experiment(
            sessions, cfg.trainer_spec(), cfg.preference_threshold,
            k=cfg.folds, runs=cfg.runs, budget=cfg.budget, seed=cfg.seed,
            jobs=cfg.jobs,
        )
    except (ValueError, RankneatError) as exc:
        raise TrainingError(str(exc)) from exc
    write_experiment_artifacts(report, out)
    print(f"{report.trainer}: best mean test accuracy "
          f"{100 * report.best_mean_acc:.1f}% (best run {100 * report.best_run_acc:.1f}%)")
    print(f"report written to {out / 'report.json'}")
    return EXIT_OK


def write_experiment_artifacts(report: ExperimentReport, out: Path) -> None:
    for job in report.jobs:
        stem = f"run{job.run}_fold{job.fold}"
        _atomic_write(out / f"trajectory_{stem}.csv", job.trajectory.to_csv)
        if job.generation_stats is not None:
            _atomic_write(out / f"evolution_{stem}.csv",
                          lambda p, s=job.generation_stats: neat.write_evolution_log(s, p))
            _atomic_write(out / f"champions_{stem}.jsonl",
                          lambda p, s=job.generation_stats: neat.write_champion_checkpoints(s, p))
    _atomic_write(out / "report.json", report.to_json)


def _best_summary(report: dict) -> str:
    rows = report["per_iteration"]
    best = max(rows, key=lambda r: r["mean_test_acc"])
    return (f"{report['trainer']}: {100 * best['mean_test_acc']:.1f} "
            f"±{100 * best['ci_test_acc']:.1f} [{100 * report['best_run_acc']:.1f}] "
            f"at iteration {best['iteration']}")


def cmd_compare(args, cfg: RunConfig) -> int:
    report_a = load_report_json(args.report_a)
    report_b = load_report_json(args.report_b)
    if report_a["budget"] != report_b["budget"]:
        raise GridMismatchError(
            f"budgets differ: {report_a['budget']} vs {report_b['budget']}"
        )
    rows_a = {r["iteration"]: r for r in report_a["per_iteration"]}
    rows_b = {r["iteration"]: r for r in report_b["per_iteration"]}
    grid = sorted(set(rows_a) & set(rows_b))
    if not grid:
        raise GridMismatchError("reports share no iteration points")

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    name_a, name_b = report_a["trainer"], report_b["trainer"]

    def write(path):
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write("iteration,"
                     f"mean_test_{name_a},ci_test_{name_a},"
                     f"mean_test_{name_b},ci_test_{name_b},mean_diff\n")
            for it in grid:
                a, b = rows_a[it], rows_b[it]
                fh.write(f"{it},{a['mean_test_acc']!r},{a['ci_test_acc']!r},"
                         f"{b['mean_test_acc']!r},{b['ci_test_acc']!r},"
                         f"{a['mean_test_acc'] - b['mean_test_acc']!r}\n")

    _atomic_write(out, write)
    print(_best_summary(report_a))
    print(_best_summary(report_b))
    final = grid[-1]
    diff = rows_a[final]["mean_test_acc"] - rows_b[final]["mean_test_acc"]
    print(f"final-iteration mean difference ({name_a} - {name_b}): {100 * diff:+.2f} pp")
    print(f"comparison written to {out}")
    return EXIT_OK


def cmd_report(args, cfg: RunConfig) -> int:
    reports = [load_report_json(path) for path in args.reports]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    def write_csv(path):
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write("trainer,P_t,iteration,mean_test_acc,ci_test_acc,"
                     "mean_train_acc,ci_train_acc\n")
            for report in reports:
                for row in report["per_iteration"]:
                    fh.write(f"{report['trainer']},{report['P_t']},{row['iteration']},"
                             f"{row['mean_test_acc']!r},{row['ci_test_acc']!r},"
                             f"{row['mean_train_acc']!r},{row['ci_train_acc']!r}\n")

    _atomic_write(out / "accuracy_curves.csv", write_csv)
    plotting.save_accuracy_figure(reports, out / "accuracy_curves.png")
    for report in reports:
        stem = f"train_test_{report['trainer']}_pt{report['P_t']}"
        plotting.save_train_test_figure(report, out / f"{stem}.png")
    for report in reports:
        print(_best_summary(report))
    print(f"report artifacts written to {out}")
    return EXIT_OK


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = resolve_config(args)
        if args.dump_config:
            print(dump_config(cfg), end="")
            return EXIT_OK
        return args.func(args, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except (TrainingError, EmptyDatasetError, TooFewParticipantsError,
            TooFewValuesError) as exc:
        print(f"training error: {exc}", file=sys.stderr)
        return EXIT_TRAINING_ERROR
    except (DataError, GridMismatchError, FileNotFoundError,
            ZeroDivisionError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA_ERROR
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR


if __name__ == "__main__":
    sys.exit(main())
