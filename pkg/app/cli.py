"""
Command-Line Interface
gen-dataset -> train -> optimize -> analyze, plus one-shot `eval`.

Every command computes everything it needs before it writes a file, so a
validation failure never leaves partial artifacts behind.
Exit status: 0 success, 2 bad input or configuration, 1 internal error.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional

from pydantic import ValidationError

from app.config import settings
from app.core.exceptions import ConfigError, FinRayError
from app.core.logging import setup_logging
from app.core.rng import RNG_ALGORITHM
from app.schemas.design import DesignPoint
from app.schemas.run import RunConfig
from app.services import dataset as dataset_service
from app.services import grid_search as grid_service
from app.services import mlp, oracle, pareto
from app.services.nsga2 import write_generation_stats

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_USER = 2


# ==================== Helpers ====================

def _load_config(args: argparse.Namespace) -> RunConfig:
    return RunConfig.load(args.config).with_seed(args.seed).resolved()


def _reports_dir(path: str) -> Path:
    reports = Path(path)
    reports.mkdir(parents=True, exist_ok=True)
    return reports


def _ensure_parent(path: str) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    return target


def _parse_design(text: str) -> DesignPoint:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 3:
        raise ConfigError("--design", f"expected t_beam,t_cross,spacing, got {text!r}")
    try:
        values = [float(p) for p in parts]
    except ValueError:
        raise ConfigError("--design", f"non-numeric value in {text!r}")
    return DesignPoint.from_values(values)


def _format_validation_error(e: ValidationError) -> str:
    return "; ".join(
        f"{'.'.join(str(part) for part in err['loc']) or 'config'}: {err['msg']}" for err in e.errors()
    )


# ==================== Commands ====================

def cmd_gen_dataset(args: argparse.Namespace, config: RunConfig) -> int:
    out = args.out or config.paths.dataset
    data = oracle.generate_dataset(config.design_space, config.oracle)
    dataset_service.write_csv(data, out)
    print(f"records={len(data)} seed={config.oracle.seed} noise_sigma={config.oracle.noise_sigma} out={out}")
    return EXIT_OK


def cmd_train(args: argparse.Namespace, config: RunConfig) -> int:
    training = config.training
    data = dataset_service.read_csv(args.data or config.paths.dataset)
    split = dataset_service.split(data, seed=training.split_seed, ratios=training.ratios, k=training.k)

    dataset_service.outlier_warnings(data)
    correlation = dataset_service.correlation_matrix(data)

    grid_rows = None
    mlp_config = training.mlp
    if args.grid_search:
        mlp_config, grid_rows = grid_service.grid_search(data, split, training.grid_search, base=training.mlp)

    model, curve = mlp.train(data, split, mlp_config)
    cv = mlp.cross_validate(data, split, mlp_config)

    designs = data.design_matrix()
    responses = data.response_matrix()
    metrics = {
        part: mlp.evaluate_metrics(model, designs[rows], responses[rows]).model_dump()
        for part, rows in (("train", split.train), ("validation", split.validation), ("test", split.test))
    }
    metrics["config"] = mlp_config.model_dump(mode="json")
    metrics["seed"] = mlp_config.seed
    metrics["rng"] = RNG_ALGORITHM

    # Nothing is written until every computation above has succeeded.
    out_model = args.out_model or config.paths.model
    reports = _reports_dir(args.reports or config.paths.reports)
    mlp.save_model(model, out_model)
    mlp.write_loss_curve(curve, reports / "loss_curves.csv")
    mlp.write_cv_curves(cv, reports / "cv_loss_curves.csv")
    (reports / "metrics.json").write_text(json.dumps(metrics, indent=2) + "\n", encoding="utf-8")
    dataset_service.write_correlation_csv(correlation, reports / "correlation.csv")
    if grid_rows is not None:
        grid_service.write_grid_csv(grid_rows, reports / "grid_search.csv")

    test = metrics["test"]
    print(
        f"model={out_model} hidden={list(mlp_config.hidden_sizes)} activation={mlp_config.hidden_activation} "
        f"test_r2={[round(v, 4) for v in test['r2']]}"
    )
    return EXIT_OK


def cmd_optimize(args: argparse.Namespace, config: RunConfig) -> int:
    model = mlp.load_model(args.model or config.paths.model)
    front, result = pareto.optimize(model, config.nsga)

    out_front = _ensure_parent(args.out_front or config.paths.front)
    reports = _reports_dir(args.reports or config.paths.reports)
    pareto.write_front_csv(front, out_front)
    write_generation_stats(result.stats, reports / "generations.csv")
    print(f"front={out_front} members={len(front)} seed={config.nsga.seed}")
    return EXIT_OK


def cmd_analyze(args: argparse.Namespace, config: RunConfig) -> int:
    front = pareto.read_front_csv(args.front or config.paths.front)
    model = mlp.load_model(args.model or config.paths.model)

    labelled = pareto.select_points(front)
    n_random, seed = config.validation.n_random, config.validation.seed
    samples = pareto.random_samples(model, n_random, seed)
    report = pareto.validate_front(labelled, model, n_random, seed, samples=samples)
    comparison = pareto.compare_to_truth(labelled, config.oracle.model_copy(update={"noise_sigma": 0.0}))
    dataset_path = Path(config.paths.dataset)
    overlay = dataset_service.read_csv(dataset_path) if dataset_path.exists() else None

    reports = _reports_dir(args.out_report or config.paths.reports)
    pareto.write_front_csv(labelled, reports / "front_labelled.csv")
    pareto.write_validation_json(report, reports / "validation.json")
    pareto.write_comparison_csv(comparison, reports / "comparison.csv")
    pareto.write_plot_points(labelled, overlay, samples[1], reports / "plot_points.csv")

    for row in comparison:
        print(
            f"{row.label.value}: design={list(row.design.as_tuple())} "
            f"d={row.predicted.d:.3f}/{row.truth.d:.3f} ({row.err_d_pct:.3f}%) "
            f"f={row.predicted.f:.3f}/{row.truth.f:.3f} ({row.err_f_pct:.3f}%)"
        )
    print(f"dominating_samples={report.n_dominating}/{report.n_samples}")
    return EXIT_OK


def cmd_eval(args: argparse.Namespace, config: RunConfig) -> int:
    design = _parse_design(args.design)
    model = mlp.load_model(args.model or config.paths.model)
    fx, fy, dx, dy = (float(v) for v in model.predict([design.as_tuple()])[0])
    objectives = pareto.compose_objectives((fx, fy, dx, dy))
    print(f"fx={fx!r} fy={fy!r} dx={dx!r} dy={dy!r} f={objectives.f!r} d={objectives.d!r}")
    return EXIT_OK


COMMANDS: Dict[str, Callable[[argparse.Namespace, RunConfig], int]] = {
    "gen-dataset": cmd_gen_dataset,
    "train": cmd_train,
    "optimize": cmd_optimize,
    "analyze": cmd_analyze,
    "eval": cmd_eval,
}


# ==================== Parser ====================

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="finray",
        description="Surrogate-assisted Fin-Ray finger design optimization",
    )
    parser.add_argument("--config", default=None, help="run configuration JSON")
    parser.add_argument("--seed", type=int, default=None, help="global seed (overrides the config)")
    parser.add_argument("--log-level", default=None, help="overrides LOG_LEVEL")

    # Global flags are also accepted after the command name.
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)

    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen-dataset", parents=[common], help="evaluate the design grid with the oracle")
    gen.add_argument("--out", default=None)

    train = sub.add_parser("train", parents=[common], help="train the surrogate")
    train.add_argument("--data", default=None)
    train.add_argument("--out-model", default=None)
    train.add_argument("--reports", default=None)
    train.add_argument("--grid-search", action="store_true", help="pick the architecture by K-fold grid search")

    opt = sub.add_parser("optimize", parents=[common], help="run NSGA-II over the surrogate")
    opt.add_argument("--model", default=None)
    opt.add_argument("--out-front", default=None)
    opt.add_argument("--reports", default=None)

    analyze = sub.add_parser("analyze", parents=[common], help="label, validate and check a front")
    analyze.add_argument("--front", default=None)
    analyze.add_argument("--model", default=None)
    analyze.add_argument("--out-report", default=None)

    ev = sub.add_parser("eval", parents=[common], help="predict responses for one design")
    ev.add_argument("--design", required=True, help="t_beam,t_cross,spacing in mm")
    ev.add_argument("--model", default=None)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args.log_level or settings.LOG_LEVEL, settings.LOG_JSON)

    try:
        config = _load_config(args)
        return COMMANDS[args.command](args, config)
    except FinRayError as e:
        print(f"error: {e.message}", file=sys.stderr)
        return EXIT_USER if e.user_error else EXIT_INTERNAL
    except ValidationError as e:
        print(f"error: {_format_validation_error(e)}", file=sys.stderr)
        return EXIT_USER
    except (FileNotFoundError, IsADirectoryError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USER
    except Exception:
        logger.exception("Unexpected failure", extra={"command": args.command})
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
