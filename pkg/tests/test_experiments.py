"""Experiment registry, report serialization, and the CLI wrapper."""

import json
import math
import os

import numpy as np
import pytest
from fractions import Fraction

from centroidkit import cli, experiments, reporting
from centroidkit.rng import block_slices, derive_seed, derived_rng

ALL_EXPERIMENTS = [
    "constants-table",
    "entropy-bound",
    "envelope-sweep",
    "even-moment-bound",
    "exponential-tails",
    "isotropic-identity",
    "large-p-bound",
    "log-concave-moments",
    "minoration-covering",
    "minoration-sparse",
    "minoration-unconditional",
    "order-statistics",
    "rademacher-surrogate",
    "rotational-invariance",
]


def test_seed_derivation_stable_and_distinct():
    assert derive_seed(7, 1) == derive_seed(7, 1)
    assert derive_seed(7, 1) != derive_seed(7, 2)
    assert derive_seed(7, 1) != derive_seed(8, 1)
    a = derived_rng(7, 3).standard_normal(4)
    b = derived_rng(7, 3).standard_normal(4)
    assert np.array_equal(a, b)


def test_block_slices_partition():
    got = list(block_slices(150_000))
    assert got[0][1] == 0
    assert got[-1][2] == 150_000
    assert [i for i, _, _ in got] == list(range(len(got)))
    for (_, _, stop), (_, start, _) in zip(got[:-1], got[1:]):
        assert stop == start


def test_registry_names():
    assert experiments.available() == ALL_EXPERIMENTS


def test_default_config_is_a_copy():
    cfg = experiments.default_config("constants-table")
    cfg["max_dim"] = 99
    assert experiments.default_config("constants-table")["max_dim"] != 99


def test_unknown_experiment_and_key_rejected():
    with pytest.raises(ValueError):
        experiments.run_experiment("nope", {}, seed=0)
    with pytest.raises(ValueError):
        experiments.run_experiment("constants-table", {"bogus": 1}, seed=0)


def test_run_deterministic_and_seed_sensitive():
    cfg = {"samples": 20_000}
    a = experiments.run_experiment("order-statistics", cfg, seed=1)
    b = experiments.run_experiment("order-statistics", cfg, seed=1)
    assert reporting.canonical_json(a) == reporting.canonical_json(b)
    c = experiments.run_experiment("order-statistics", cfg, seed=2)
    assert reporting.canonical_json(a) != reporting.canonical_json(c)


def test_jobs_do_not_change_results():
    cfg = {"max_dim": 4, "max_degree": 4}
    a = experiments.run_experiment("constants-table", cfg, seed=3, jobs=1)
    b = experiments.run_experiment("constants-table", cfg, seed=3, jobs=2)
    assert reporting.canonical_json(a) == reporting.canonical_json(b)
    assert "jobs" not in a["config"]


def test_canonical_json_handles_awkward_scalars():
    text = reporting.canonical_json(
        {"a": np.float64(1.5), "b": Fraction(8, 3), "c": float("nan"), "d": np.int64(4)}
    )
    parsed = json.loads(text)
    assert parsed == {"a": 1.5, "b": "8/3", "c": "nan", "d": 4}
    assert text.endswith("\n")


def test_report_files_written(tmp_path):
    rep = experiments.run_experiment("minoration-sparse", {"dims": [16], "sup_samples": 200}, seed=0)
    assert rep["passed"]
    out = str(tmp_path / "out")
    path = reporting.write_report(rep, out)
    assert os.path.exists(path)
    tables = reporting.write_tables(rep, out)
    assert tables and all(p.endswith(".csv") for p in tables)
    with open(tables[0]) as fh:
        header = fh.readline()
    assert "cell_dim" in header
    plots = reporting.emit_plots(rep, out)
    assert plots
    with open(plots[0]) as fh:
        assert fh.read(100).lstrip().startswith("<svg")


def _write(path, text):
    with open(path, "w") as fh:
        fh.write(text)
    return str(path)


def test_cli_list_and_usage_errors(tmp_path, capsys):
    assert cli.main([]) == 2
    assert cli.main(["list"]) == 0
    out = capsys.readouterr().out
    for name in ALL_EXPERIMENTS:
        assert name in out
    # config without a seed anywhere
    empty = _write(tmp_path / "empty.toml", "\n")
    assert cli.main(["constants-table", "--config", empty]) == 2
    # unknown key inside an experiment table
    bad_key = _write(tmp_path / "bad.toml", "seed = 1\n[constants-table]\nbogus = 2\n")
    assert cli.main(["constants-table", "--config", bad_key]) == 2
    # malformed TOML
    broken = _write(tmp_path / "broken.toml", "seed = [unterminated\n")
    assert cli.main(["constants-table", "--config", broken]) == 2


def test_cli_run_writes_outputs_and_repeats_bytes(tmp_path):
    cfg = _write(
        tmp_path / "cfg.toml",
        "seed = 5\n[constants-table]\nmax_dim = 4\nmax_degree = 4\n",
    )
    out1 = str(tmp_path / "run1")
    out2 = str(tmp_path / "run2")
    assert cli.main(["constants-table", "--config", cfg, "--out", out1]) == 0
    assert cli.main(["constants-table", "--config", cfg, "--out", out2]) == 0
    with open(os.path.join(out1, "report.json"), "rb") as fh:
        first = fh.read()
    with open(os.path.join(out2, "report.json"), "rb") as fh:
        second = fh.read()
    assert first == second
    assert os.path.exists(os.path.join(out1, "timing.json"))
    report = json.loads(first)
    assert report["experiment"] == "constants-table"
    assert report["passed"] is True


def test_cli_failing_assertion_exits_one(tmp_path):
    cfg = _write(
        tmp_path / "fail.toml",
        'seed = 5\n[large-p-bound]\nfamilies = ["gaussian"]\np_grid = [4]\n'
        "outer = 150\nsaa = 5000\nbound = 0.0001\n",
    )
    out = str(tmp_path / "failing")
    assert cli.main(["large-p-bound", "--config", cfg, "--out", out]) == 1
    with open(os.path.join(out, "report.json")) as fh:
        report = json.load(fh)
    assert report["passed"] is False
