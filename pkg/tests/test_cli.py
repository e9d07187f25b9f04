import json

import numpy as np
import pytest
from click.testing import CliRunner

from pacfourier.cli import main, round_floats
from pacfourier.data import SyntheticSpec, generate, load_csv
from pacfourier.experiments import planted_junta_spec
from pacfourier.oracle import problem_from_spec


def run(args, code=0):
    result = CliRunner().invoke(main, [str(a) for a in args])
    if code is not None:
        assert result.exit_code == code, result.output
    return result


def report(args):
    return json.loads(run(args).stdout)


def test_round_floats_nine_digits():
    assert round_floats({"a": 1 / 3, "b": [2.0, float("nan")], "c": np.float64(1e-20) * 3}) == {
        "a": 0.333333333,
        "b": [2.0, None],
        "c": 3e-20,
    }


def test_train_fourier_on_maj3():
    r = report(["train", "--d", 8, "--n", 5000, "--rule", "majority", "--subset", "0,1,2", "--k", 3])
    assert r["metrics"]["test_error"] <= 0.01
    assert r["metrics"]["exact_error"] <= 0.01
    assert r["model"]["kind"] == "fourier" and r["model"]["theta"] == 0.0


def test_train_degree_zero_is_constant():
    r = report(["train", "--d", 4, "--n", 300, "--noise", 0.3, "--k", 0])
    assert [t["subset"] for t in r["model"]["expansion"]["terms"]] == [[]]


@pytest.mark.parametrize("algorithm", ["l2reg", "basis"])
def test_train_other_algorithms(algorithm, tmp_path):
    model = tmp_path / "m.json"
    table = tmp_path / "m.csv"
    r = report(["train", "--d", 5, "--n", 2000, "--noise", 0.1, "--k", 2, "--algorithm", algorithm,
                "--model-out", model, "--csv", table])
    assert r["model"]["kind"] == ("monomial" if algorithm == "l2reg" else "basis")
    assert json.loads(model.read_text())["kind"] == r["model"]["kind"]
    assert table.read_text().splitlines()[0] in ("exponents,coef", "subset,coef")
    assert r["metrics"]["exact_error"] <= 0.15


def test_missing_path_is_usage_error():
    result = run(["train", "--data", "/definitely/not/here.csv", "--k", 1], code=2)
    assert "does not exist" in result.output


def test_bad_data_exit_code(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("1,-1,1\n-1,7,1\n")
    result = run(["train", "--data", bad, "--k", 1], code=3)
    assert "row 1" in result.output


def test_degenerate_feature_exit_code(tmp_path):
    deg = tmp_path / "deg.csv"
    deg.write_text("1,1,1\n1,-1,-1\n1,1,-1\n1,-1,1\n1,1,1\n")
    run(["train", "--data", deg, "--k", 1, "--test-fraction", 0.2], code=3)


def test_no_source_is_usage_error():
    run(["train", "--k", 1], code=2)


def test_gen_then_train_from_file(tmp_path):
    path = tmp_path / "d.csv"
    r = report(["gen", "--d", 6, "--n", 400, "--rule", "parity", "--subset", "1,4", "--seed", 3, "--out", path])
    assert r["spec"]["seed"] == 3
    data = load_csv(path)
    assert data.n == 400 and np.array_equal(data.labels, data.features[:, 1] * data.features[:, 4])
    t = report(["train", "--data", path, "--k", 2, "--seed", 3])
    assert t["data"]["path"] == str(path)
    assert "exact_error" not in t["metrics"]
    jpath = tmp_path / "d.json"
    run(["gen", "--d", 6, "--n", 400, "--seed", 3, "--out", jpath])
    assert report(["train", "--data", jpath, "--k", 1])["data"]["n"] == 400


def test_select_examples(tmp_path):
    scores = tmp_path / "scores.csv"
    r = report(["select", "--d", 5, "--n", 500, "--noise", 0.2, "--k", 5, "--csv", scores])
    assert r["selection"]["chosen"] == [0, 1, 2, 3, 4]
    assert scores.read_text().startswith("subset,score")
    run(["select", "--d", 30, "--n", 100, "--k", 10], code=2)


def test_select_recovers_planted_junta_with_score1():
    rng = np.random.default_rng(2024)
    hits = 0
    for seed in range(40):
        spec = planted_junta_spec(rng, 15, 5 * 10**4, 3, 0.1, seed)
        r = report([
            "select", "--d", 15, "--n", spec.n, "--rule", "junta_table", "--noise", 0.1, "--seed", seed,
            "--subset", ",".join(map(str, spec.subset)), "--table", ",".join(map(str, spec.table)),
            "--k", 3, "--method", "score1", "--no-oracle",
        ])
        hits += r["metrics"]["planted_recovered"]
    assert hits >= 0.95 * 40


def test_oracle_examples(tmp_path):
    r = report(["oracle", "--d", 3, "--rule", "majority", "--subset", "0,1,2", "--k", 1])["result"]
    assert r["popt"] == 0.25 and r["erm"]["agrees"]
    assert r["sandwich"] == {"lower": 0.25, "popt": 0.25, "upper": 0.375}
    assert report(["oracle", "--d", 2, "--rule", "parity", "--subset", "0,1", "--k", 1])["result"]["popt"] == 0.5
    result = run(["oracle", "--d", 23, "--k", 1], code=2)
    assert "22" in result.output


def test_oracle_problem_file_roundtrip(tmp_path):
    saved = tmp_path / "p.json"
    table = tmp_path / "norms.csv"
    first = report(["oracle", "--d", 4, "--noise", 0.2, "--bias", 0.7, "--k", 2, "--save-problem", saved])
    again = report(["oracle", "--problem", saved, "--k", 2, "--csv", table])
    assert again["result"] == first["result"]
    assert first["result"]["popt"] == pytest.approx(0.2)
    assert len(table.read_text().splitlines()) == 1 + 11


def test_verify_passes_and_fails():
    base = ["verify", "--d", 4, "--noise", 0.2, "--bias", 0.8, "--k", 4, "--ns", "64,256,1024", "--reps", 10]
    ok = report(base + ["--max-slope", "0"])
    assert ok["passed"] and ok["checks"]["above_popt"]["passed"]
    assert len(ok["sweep"]["points"]) == 3
    bad = run(base + ["--max-slope", "-5"], code=1)
    assert json.loads(bad.stdout)["checks"]["regret_slope"]["passed"] is False
    run(["verify", "--d", 4, "--k", 1], code=2)


def test_verify_regret_slope_on_noisy_dictator(tmp_path):
    curve = tmp_path / "curve.csv"
    r = report(["verify", "--d", 8, "--noise", 0.2, "--bias", 0.85, "--k", 8, "--popt-k", 1,
                "--n-exps", "8:16", "--reps", 20, "--csv", curve])
    assert r["sweep"]["slope"] < 0 and r["sweep"]["slope"] <= -0.3
    assert r["sweep"]["r2"] >= 0.8
    points = r["sweep"]["points"]
    assert all(p["mean_error"] >= r["sweep"]["popt"] - 2 * p["std_error"] / np.sqrt(20) for p in points)
    assert len(curve.read_text().splitlines()) == 10


@pytest.mark.parametrize(
    "args",
    [
        ["train", "--d", 5, "--n", 500, "--noise", 0.1, "--k", 2, "--seed", 7],
        ["select", "--d", 6, "--n", 500, "--noise", 0.1, "--k", 2, "--seed", 7],
        ["oracle", "--d", 4, "--noise", 0.1, "--k", 2, "--seed", 7],
        ["verify", "--d", 3, "--noise", 0.1, "--k", 3, "--ns", "32,64", "--reps", 3, "--max-slope", "10", "--min-r2", "0", "--seed", 7],
    ],
)
def test_reports_are_byte_identical(args):
    first, second = run(args, code=None), run(args, code=None)
    assert first.exit_code in (0, 1)
    assert first.stdout == second.stdout


def test_seed_changes_data():
    a = report(["train", "--d", 5, "--n", 500, "--noise", 0.1, "--k", 2, "--seed", 1])
    b = report(["train", "--d", 5, "--n", 500, "--noise", 0.1, "--k", 2, "--seed", 2])
    assert a["model"] != b["model"]


def test_config_file_precedence(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"train": {"k": 2, "dim": 4, "n": 300}}))
    r = report(["--config", cfg, "train"])
    assert r["config"]["k"] == 2 and r["data"]["synthetic"]["d"] == 4
    r = report(["--config", cfg, "train", "--k", 1])
    assert r["config"]["k"] == 1


def test_timings_are_opt_in():
    args = ["oracle", "--d", 3, "--k", 1]
    assert "timings" not in report(args)
    assert "oracle" in report(args + ["--timings"])["timings"]


def test_cli_train_matches_library():
    spec = SyntheticSpec(d=5, n=1000, seed=4, noise=0.1)
    r = report(["train", "--d", 5, "--n", 1000, "--noise", 0.1, "--seed", 4, "--k", 1])
    problem = problem_from_spec(spec)
    assert r["metrics"]["popt"] == pytest.approx(0.1)
    assert generate(spec).n == r["data"]["n_train"] + r["data"]["n_test"]
    assert problem.dim == 5
