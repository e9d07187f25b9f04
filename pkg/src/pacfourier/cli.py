"""Command-line front end: ``pacfourier gen|train|select|oracle|verify``.

Reports are JSON on stdout (or ``--out``); tables go to ``--csv``. Floats are
rounded to 9 significant digits and, unless ``--timings`` is given, a fixed
``--seed`` makes every report byte-identical across runs.

Exit codes: 0 success, 1 a ``verify`` check failed, 2 usage or configuration
error (including size caps), 3 data error.
"""

from __future__ import annotations

import csv
import functools
import json
import math
import sys
import time
from pathlib import Path

import click
import numpy as np

from .data import LABEL_RULES, LabeledDataset, SyntheticSpec, generate, load_csv, load_json, parse_indices, save_csv, save_json, split
from .errors import DataError, DegenerateFeatureError, PacFourierError
from .estimation import (
    coefficient_deviation_bound,
    empirical_moments,
    parity_sup_sq,
    projection_deviation_bound,
)
from .experiments import LEARNERS, cell_seed, error_sweep
from .fourier import enumerate_subsets, parity_eval, subset_from_indices, subset_indices
from .learners import bound_U, fit_fourier, fit_generic_basis, fit_l2_polyreg, misclassification
from .oracle import (
    ExactProblem,
    erm_exhaustive,
    exact_error_value,
    exact_popt,
    problem_from_spec,
    projection_norm1,
    projection_norm2_sq,
    sandwich,
)
from .selection import select

EXIT_OK, EXIT_CHECK_FAILED, EXIT_CONFIG, EXIT_DATA = 0, 1, 2, 3
ORACLE_AUTO_DIM = 16


# ------------------------------------------------------------------ helpers


def round_floats(obj):
    """Round every float to 9 significant digits; NaN and infinities become null."""
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return float(f"{x:.9g}") if math.isfinite(x) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, dict):
        return {k: round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [round_floats(v) for v in obj]
    return obj


def emit(report: dict, out: str | None) -> None:
    text = json.dumps(round_floats(report), indent=2) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        click.echo(text, nl=False)


def write_table(path: str, header: list[str], rows) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([f"{v:.9g}" if isinstance(v, float) else v for v in row])


def handle_errors(fn):
    """Map library exceptions onto the documented exit codes."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (DataError, DegenerateFeatureError) as exc:
            click.echo(f"data error: {exc}", err=True)
            sys.exit(EXIT_DATA)
        except (PacFourierError, ValueError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_CONFIG)

    return wrapper


def _floats(text: str | None) -> tuple[float, ...] | None:
    if text is None or text == "":
        return None
    return tuple(float(v) for v in str(text).replace(",", " ").split())


def _ints(text: str | None) -> tuple[int, ...] | None:
    if text is None or text == "":
        return None
    return tuple(int(v) for v in str(text).replace(",", " ").split())


def synthetic_options(fn):
    options = [
        click.option("--d", "dim", type=int, help="Number of features for synthetic data."),
        click.option("--n", "n", type=int, default=10000, show_default=True, help="Synthetic sample size."),
        click.option("--rule", type=click.Choice(LABEL_RULES), default="dictator", show_default=True),
        click.option("--subset", default="0", show_default=True, help="Relevant features, e.g. '0,1,2'."),
        click.option("--table", default=None, help="Junta truth table over the subset, e.g. '1,-1,-1,1'."),
        click.option("--weights", default=None, help="Linear-threshold weights, one per feature."),
        click.option("--threshold", type=float, default=0.0, show_default=True),
        click.option("--bias", type=float, default=None, help="Pr(x_j=+1) shared by every feature."),
        click.option("--biases", default=None, help="Per-feature Pr(x_j=+1), comma separated."),
        click.option("--noise", type=float, default=0.0, show_default=True, help="Label flip rate."),
        click.option("--seed", type=int, default=0, show_default=True, help="Master seed for all randomness."),
    ]
    for opt in reversed(options):
        fn = opt(fn)
    return fn


def data_options(fn):
    fn = click.option(
        "--encoding", type=click.Choice(["auto", "pm1", "zero_one"]), default="auto", show_default=True
    )(fn)
    fn = click.option(
        "--data", "data_path", type=click.Path(exists=True, dir_okay=False), default=None,
        help="CSV or JSON dataset (last CSV column is the label). Overrides the synthetic options.",
    )(fn)
    return synthetic_options(fn)


def output_options(fn):
    fn = click.option("--timings", is_flag=True, help="Add wall-clock timings (breaks byte-identical output).")(fn)
    fn = click.option("--csv", "csv_path", type=click.Path(dir_okay=False), default=None, help="Write a CSV table.")(fn)
    fn = click.option("--out", type=click.Path(dir_okay=False), default=None, help="Write the JSON report here.")(fn)
    return fn


def build_spec(kw: dict) -> SyntheticSpec:
    if kw.get("dim") is None:
        raise click.UsageError("give --data PATH or a synthetic dimension --d")
    d = kw["dim"]
    biases = _floats(kw.get("biases"))
    if biases is None and kw.get("bias") is not None:
        biases = (kw["bias"],) * d
    return SyntheticSpec(
        d=d,
        n=kw["n"],
        seed=kw["seed"],
        rule=kw["rule"],
        subset=parse_indices(kw["subset"]) if kw.get("subset") else (),
        table=_ints(kw.get("table")),
        weights=_floats(kw.get("weights")),
        threshold=kw["threshold"],
        biases=biases,
        noise=kw["noise"],
    )


def load_source(kw: dict) -> tuple[LabeledDataset, SyntheticSpec | None, dict]:
    path = kw.get("data_path")
    if path:
        data = load_json(path) if path.lower().endswith(".json") else load_csv(path, kw["encoding"])
        return data, None, {"path": path, "n": data.n, "d": data.d}
    spec = build_spec(kw)
    return generate(spec), spec, {"synthetic": spec.to_dict()}


def maybe_problem(spec: SyntheticSpec | None, enabled: bool) -> ExactProblem | None:
    if spec is None or not enabled or spec.d > ORACLE_AUTO_DIM:
        return None
    return problem_from_spec(spec)


class Stopwatch:
    def __init__(self, enabled: bool):
        self.enabled = enabled
        self.marks: dict[str, float] = {}
        self._t = time.perf_counter()

    def mark(self, name: str) -> None:
        now = time.perf_counter()
        self.marks[name] = now - self._t
        self._t = now

    def attach(self, report: dict) -> dict:
        if self.enabled:
            report["timings"] = self.marks
        return report


def _config_callback(ctx, _param, value):
    if value:
        try:
            cfg = json.loads(Path(value).read_text())
        except json.JSONDecodeError as exc:
            raise click.BadParameter(f"config is not valid JSON: {exc}")
        if not isinstance(cfg, dict):
            raise click.BadParameter("config must be a JSON object keyed by subcommand")
        ctx.default_map = cfg
    return value


# ----------------------------------------------------------------- commands


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.option(
    "--config", type=click.Path(exists=True, dir_okay=False), callback=_config_callback, is_eager=True,
    expose_value=False, help="JSON file of per-subcommand defaults, e.g. {\"train\": {\"k\": 2}}; flags win.",
)
@click.version_option(package_name="artifact")
def main():
    """Fourier-based PAC learning, feature selection and exact oracles on {-1,+1}^d."""


@main.command()
@synthetic_options
@click.option("--out", type=click.Path(dir_okay=False), required=True, help="Dataset file (.csv or .json).")
@click.option("--encoding", type=click.Choice(["pm1", "zero_one"]), default="pm1", show_default=True)
@click.option("--header/--no-header", default=True, show_default=True)
@handle_errors
def gen(out, encoding, header, **kw):
    """Write a seeded synthetic dataset and print its recipe."""
    spec = build_spec(kw)
    data = generate(spec)
    if out.lower().endswith(".json"):
        save_json(data, out)
    else:
        save_csv(data, out, encoding=encoding, header=header)
    emit(
        {
            "command": "gen",
            "seed": spec.seed,
            "spec": spec.to_dict(),
            "path": out,
            "label_mean": float(data.labels.mean()),
            "feature_means": data.features.mean(axis=0).tolist(),
        },
        None,
    )


def _parity_basis(moments, d: int, k: int):
    masks = enumerate_subsets(d, k)
    funcs = [lambda X, S=S: parity_eval(moments, S, X) for S in masks]
    names = ["psi{" + ",".join(map(str, subset_indices(S))) + "}" for S in masks]
    return masks, funcs, names


@main.command()
@data_options
@click.option("--algorithm", type=click.Choice(["fourier", "l2reg", "basis"]), default="fourier", show_default=True)
@click.option("--k", type=int, required=True, help="Degree.")
@click.option("--test-fraction", type=float, default=0.2, show_default=True)
@click.option("--moment-fraction", type=float, default=None, help="Fourier only: rows reserved for moments.")
@click.option("--tune-threshold", is_flag=True, help="Fourier only: pick theta like the regression learner.")
@click.option("--delta", type=float, default=0.05, show_default=True, help="Confidence for the deviation bounds.")
@click.option("--oracle/--no-oracle", default=True, show_default=True, help=f"Exact metrics for synthetic d <= {ORACLE_AUTO_DIM}.")
@click.option("--model-out", type=click.Path(dir_okay=False), default=None, help="Write the fitted model JSON.")
@output_options
@handle_errors
def train(algorithm, k, test_fraction, moment_fraction, tune_threshold, delta, oracle, model_out, out, csv_path, timings, **kw):
    """Fit a learner, evaluate it on a held-out split, and report bounds."""
    watch = Stopwatch(timings)
    data, spec, source = load_source(kw)
    train_set, test_set = split(data, test_fraction, cell_seed(kw["seed"], 1))
    watch.mark("load")
    extra = {}
    if algorithm == "fourier":
        model = fit_fourier(train_set, k, moment_fraction=moment_fraction, tune_threshold=tune_threshold)
        moments = model.moments
    elif algorithm == "l2reg":
        model = fit_l2_polyreg(train_set, k)
        moments = empirical_moments(train_set)
    else:
        moments = empirical_moments(train_set)
        masks, funcs, names = _parity_basis(moments, data.d, k)
        model = fit_generic_basis(train_set, funcs, names=names)
        extra = {"basis_family": "parity", "basis_moments": moments.to_dict(), "basis_subsets": [list(subset_indices(S)) for S in masks]}
    watch.mark("fit")

    metrics = {
        "train_error": misclassification(model, train_set),
        "test_error": misclassification(model, test_set),
    }
    if k >= 1:
        ck = parity_sup_sq(moments, k)
        eps = coefficient_deviation_bound(train_set.n, data.d, k, delta, ck)
        eps2 = projection_deviation_bound(train_set.n, data.d, k, delta, ck)
        metrics.update({"c_k": ck, "epsilon": eps, "epsilon2": eps2, "u_of_epsilon2": bound_U(eps2)})
    problem = maybe_problem(spec, oracle)
    if problem is not None:
        popt = exact_popt(problem, k).popt
        err = exact_error_value(problem, model)
        metrics.update({"exact_error": err, "popt": popt, "regret": err - popt})
        if k >= 1:
            metrics.update({"bound_2popt_2eps": 2 * popt + 2 * metrics["epsilon"], "u_bound": popt + metrics["u_of_epsilon2"]})
    watch.mark("evaluate")

    model_dict = {**model.to_dict(), **extra}
    if model_out:
        Path(model_out).write_text(json.dumps(model_dict, indent=2) + "\n")
    if csv_path:
        _write_model_table(csv_path, model, extra)
    report = {
        "command": "train",
        "config": {"algorithm": algorithm, "k": k, "test_fraction": test_fraction, "moment_fraction": moment_fraction,
                   "tune_threshold": tune_threshold, "delta": delta},
        "seed": kw["seed"],
        "data": {**source, "n_train": train_set.n, "n_test": test_set.n},
        "metrics": metrics,
        "model": model_dict,
        "artifacts": {"model": model_out, "csv": csv_path, "report": out},
    }
    emit(watch.attach(report), out)


def _write_model_table(path: str, model, extra: dict) -> None:
    if model.kind == "fourier":
        rows = [(" ".join(map(str, subset_indices(S))), c) for S, c in sorted(model.expansion.terms.items())]
        write_table(path, ["subset", "coef"], rows)
    elif model.kind == "monomial":
        rows = [(" ".join(map(str, a)), c) for a, c in model.polynomial.terms.items()]
        write_table(path, ["exponents", "coef"], rows)
    else:
        rows = [(" ".join(map(str, s)), float(c)) for s, c in zip(extra["basis_subsets"], model.basis_coefs)]
        write_table(path, ["subset", "coef"], rows)


@main.command(name="select")
@data_options
@click.option("--k", type=int, required=True, help="Number of features to keep.")
@click.option("--method", type=click.Choice(["score1", "score2"]), default="score1", show_default=True)
@click.option("--search", type=click.Choice(["exhaustive", "greedy"]), default="exhaustive", show_default=True)
@click.option("--naive", is_flag=True, help="score1 without leave-one-out.")
@click.option("--test-fraction", type=float, default=0.2, show_default=True)
@click.option("--oracle/--no-oracle", default=True, show_default=True)
@output_options
@handle_errors
def select_cmd(k, method, search, naive, test_fraction, oracle, out, csv_path, timings, **kw):
    """Pick k features by score1/score2 and report the embedded predictor."""
    watch = Stopwatch(timings)
    data, spec, source = load_source(kw)
    train_set, test_set = split(data, test_fraction, cell_seed(kw["seed"], 1))
    report = select(train_set, k, method=method, search=search, naive=naive)
    watch.mark("select")
    metrics = {
        "train_error": misclassification(report.predictor, train_set),
        "test_error": misclassification(report.predictor, test_set),
    }
    if spec is not None and spec.rule != "linear_threshold":
        metrics["planted"] = list(spec.subset)
        metrics["planted_recovered"] = report.chosen == subset_from_indices(spec.subset)
    problem = maybe_problem(spec, oracle)
    if problem is not None:
        popt = exact_popt(problem, k).popt
        err = exact_error_value(problem, report.predictor)
        metrics.update({"exact_error": err, "popt": popt, "bound_2popt_1mpopt": 2 * popt * (1 - popt)})
    if csv_path:
        report.write_scores_csv(csv_path)
    out_report = {
        "command": "select",
        "config": {"k": k, "method": method, "search": search, "naive": naive, "test_fraction": test_fraction},
        "seed": kw["seed"],
        "data": {**source, "n_train": train_set.n, "n_test": test_set.n},
        "metrics": metrics,
        "selection": report.to_dict(),
        "artifacts": {"csv": csv_path, "report": out},
    }
    emit(watch.attach(out_report), out)


@main.command()
@synthetic_options
@click.option("--problem", "problem_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Problem JSON (biases, label kind, values). Overrides the synthetic options.")
@click.option("--k", type=int, required=True)
@click.option("--erm/--no-erm", default=True, show_default=True, help="Cross-check by exhaustive junta search (k <= 4).")
@click.option("--save-problem", type=click.Path(dir_okay=False), default=None)
@output_options
@handle_errors
def oracle(problem_path, k, erm, save_problem, out, csv_path, timings, **kw):
    """Exact Popt, sandwich bounds and the exhaustive-search cross-check."""
    watch = Stopwatch(timings)
    if problem_path:
        problem = ExactProblem.load(problem_path)
        source = {"path": problem_path}
    else:
        spec = build_spec(kw)
        problem = problem_from_spec(spec)
        source = {"synthetic": spec.to_dict()}
    if save_problem:
        problem.save(save_problem)
    popt = exact_popt(problem, k)
    sw = sandwich(problem, k)
    result = {
        "popt": popt.popt,
        "argmax": list(subset_indices(popt.argmax_J)),
        "norm1": popt.norm1,
        "sandwich": {"lower": sw.lower, "popt": sw.popt, "upper": sw.upper},
    }
    if erm and k <= 4:
        e = erm_exhaustive(problem, k)
        result["erm"] = {
            "error": e.error,
            "best_J": list(subset_indices(e.best_J)),
            "best_g": list(e.best_g),
            "literal_error": e.literal_error,
            "agrees": abs(e.error - popt.popt) <= 1e-9,
        }
    watch.mark("oracle")
    if csv_path:
        rows = [
            (" ".join(map(str, subset_indices(J))), projection_norm1(problem, J), projection_norm2_sq(problem, J))
            for J in enumerate_subsets(problem.dim, k)
        ]
        write_table(csv_path, ["subset", "norm1", "norm2_sq"], rows)
    report = {
        "command": "oracle",
        "config": {"k": k, "erm": erm},
        "seed": kw["seed"],
        "problem": {**source, "d": problem.dim, "stochastic": problem.stochastic},
        "result": result,
        "artifacts": {"csv": csv_path, "problem": save_problem, "report": out},
    }
    emit(watch.attach(report), out)


def _grid(ns: str | None, n_exps: str | None) -> list[int]:
    if ns:
        return [int(v) for v in ns.replace(",", " ").split()]
    if n_exps:
        lo, hi = (int(v) for v in n_exps.split(":"))
        return [2**e for e in range(lo, hi + 1)]
    return []


@main.command()
@synthetic_options
@click.option("--learner", type=click.Choice(LEARNERS), default="fourier", show_default=True)
@click.option("--k", type=int, required=True)
@click.option("--ns", default=None, help="Sample sizes, e.g. '256,1024,4096'.")
@click.option("--n-exps", default=None, help="Powers of two lo:hi, e.g. '8:16'.")
@click.option("--reps", type=int, default=20, show_default=True, help="Seeds per sample size.")
@click.option("--delta", type=float, default=0.05, show_default=True)
@click.option("--popt-k", type=int, default=None, help="Junta size for Popt (default k).")
@click.option("--max-slope", type=float, default=-0.3, show_default=True)
@click.option("--min-r2", type=float, default=0.8, show_default=True)
@output_options
@handle_errors
def verify(learner, k, ns, n_exps, reps, delta, popt_k, max_slope, min_r2, out, csv_path, timings, **kw):
    """Sweep n, compare exact errors with Popt and 2 Popt + 2 eps, fit the regret slope."""
    watch = Stopwatch(timings)
    grid = _grid(ns, n_exps)
    if not grid:
        raise click.UsageError("empty sample-size grid: give --ns or --n-exps")
    spec = build_spec(kw)
    sweep = error_sweep(spec, k, grid, reps, kw["seed"], learner=learner, delta=delta, popt_k=popt_k)
    watch.mark("sweep")

    checks = {}
    lower_ok = all(p.mean_error >= sweep.popt - 2 * p.std_error / math.sqrt(reps) - 1e-12 for p in sweep.points)
    checks["above_popt"] = {"passed": lower_ok}
    if k >= 1:
        checks["within_2popt_2eps"] = {"passed": all(p.mean_error <= p.bound for p in sweep.points)}
    if len(grid) >= 2:
        if sweep.slope is None:
            checks["regret_slope"] = {"passed": False, "reason": "; ".join(sweep.notes)}
        else:
            checks["regret_slope"] = {"value": sweep.slope, "threshold": max_slope, "passed": sweep.slope <= max_slope}
            checks["regret_r2"] = {"value": sweep.r2, "threshold": min_r2, "passed": sweep.r2 >= min_r2}
    passed = all(c["passed"] for c in checks.values())

    if csv_path:
        rows = [(p.n, p.mean_error, p.std_error, sweep.popt, p.regret, p.epsilon, p.bound, p.u_bound) for p in sweep.points]
        write_table(csv_path, ["n", "mean_error", "std_error", "popt", "regret", "epsilon", "bound", "u_bound"], rows)
    report = {
        "command": "verify",
        "config": {"learner": learner, "k": k, "ns": grid, "reps": reps, "delta": delta, "popt_k": popt_k,
                   "max_slope": max_slope, "min_r2": min_r2},
        "seed": kw["seed"],
        "sweep": sweep.to_dict(),
        "checks": checks,
        "passed": passed,
        "artifacts": {"csv": csv_path, "report": out},
    }
    emit(watch.attach(report), out)
    if not passed:
        sys.exit(EXIT_CHECK_FAILED)


if __name__ == "__main__":  # pragma: no cover
    main()
