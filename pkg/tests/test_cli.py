import json
import subprocess
import sys

import numpy as np
import pytest

from ddecomp.cli import EXIT_DATA, EXIT_IO, EXIT_NUMERICAL, EXIT_OK, EXIT_USAGE, main
from ddecomp.generators import gen_low_rank
from ddecomp.io import read_factors, read_matrix, read_report, write_matrix


TIMING_KEYS = ("wall_ms", "wall_time", "per_iter_ms", "per_iter_slope")


def _strip_wall(obj):
    if isinstance(obj, dict):
        return {k: _strip_wall(v) for k, v in obj.items() if k not in TIMING_KEYS}
    if isinstance(obj, list):
        return [_strip_wall(v) for v in obj]
    return obj


def test_generate_then_decompose(tmp_path, capsys):
    mat = tmp_path / "a.mtx"
    assert main(["generate", "--gen", "low_rank:n=20,k=3", "--seed", "4", "--out", str(mat)]) == EXIT_OK
    np.testing.assert_array_equal(read_matrix(mat), gen_low_rank(20, 3, 4))
    prefix = tmp_path / "fac"
    code = main(
        ["decompose", "--input", str(mat), "--rank", "3", "--lambda", "0", "--init", "svd", "--seed", "0", "--out", str(prefix), "--normalize"]
    )
    assert code == EXIT_OK
    triple, manifest = read_factors(prefix)
    assert manifest["gauge_normalized"] is True
    assert np.linalg.norm(triple.product() - gen_low_rank(20, 3, 4)) < 1e-10
    trace = read_report(str(prefix) + ".trace.json")
    assert trace["solver"]["init"] == "svd_warm_start" and trace["trace"]["status"] == "converged"
    assert "iterations=" in capsys.readouterr().out


def test_decompose_from_generator_and_config(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("[matrix]\nkind = low_rank\nn = 15\nk = 2\n[regularizer]\nlambda = 1e-3\nalpha = 1e-2\n[solver]\nrank = 2\nmax_iters = 7\ntol = 1e-300\n")
    prefix = tmp_path / "f"
    assert main(["decompose", "--config", str(cfg), "--seed", "1", "--out", str(prefix)]) == EXIT_OK
    trace = read_report(str(prefix) + ".trace.json")
    assert trace["regularizer"]["alpha2"] == 1e-2
    assert len(trace["trace"]["residual"]) == 7
    assert trace["source"]["generator"]["kind"] == "low_rank"


def test_generate_csv_format(tmp_path):
    out = tmp_path / "ex.csv"
    assert main(["generate", "--gen", "paper_example:example_id=ex34", "--seed", "0", "--out", str(out), "--format", "csv"]) == 0
    np.testing.assert_array_equal(read_matrix(out), np.diag([2.0, 3.0, 5.0]))


@pytest.mark.parametrize(
    "argv",
    [
        ["decompose", "--gen", "low_rank:n=10,k=2", "--rank", "2", "--out", "x"],
        ["decompose", "--gen", "low_rank:n=10,k=2", "--seed", "0", "--out", "x"],
        ["decompose", "--seed", "0", "--rank", "2", "--out", "x"],
        ["generate", "--gen", "mystery:n=3", "--seed", "0", "--out", "x"],
        ["generate", "--gen", "low_rank:n=3,q=1", "--seed", "0", "--out", "x"],
        ["decompose", "--gen", "low_rank:n=10,k=2", "--rank", "2", "--lambda", "-1", "--seed", "0", "--out", "x"],
        ["frobnicate"],
    ],
)
def test_usage_errors(tmp_path, monkeypatch, argv):
    monkeypatch.chdir(tmp_path)
    assert main(argv) == EXIT_USAGE


def test_data_error_exit(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("1,2\n3,nan\n")
    assert main(["decompose", "--input", str(bad), "--rank", "1", "--seed", "0", "--out", str(tmp_path / "o")]) == EXIT_DATA
    assert main(["decompose", "--gen", "low_rank:n=5,k=2", "--rank", "9", "--seed", "0", "--out", str(tmp_path / "o")]) == EXIT_DATA


def test_numerical_error_exit(tmp_path):
    zero = tmp_path / "zero.mtx"
    write_matrix(zero, np.zeros((4, 4)))
    code = main(["decompose", "--input", str(zero), "--rank", "2", "--lambda", "0", "--seed", "0", "--out", str(tmp_path / "o")])
    assert code == EXIT_NUMERICAL


def test_io_error_exit(tmp_path):
    assert main(["decompose", "--input", str(tmp_path / "none.mtx"), "--rank", "1", "--seed", "0", "--out", "o"]) == EXIT_IO
    out = tmp_path / "missing_dir" / "a.mtx"
    assert main(["generate", "--gen", "low_rank:n=4,k=1", "--seed", "0", "--out", str(out)]) == EXIT_IO


EXPERIMENT_CONFIGS = {
    "benchmark": "[experiment]\nn = 24\nclasses = low_rank, ill_conditioned\nseeds = 0, 1\ncur_oversample = 2\n[solver]\nrank = 3\ninit = svd\n",
    "perturb": "[experiment]\nn = 20\neps_list = 1e-4, 1e-3\n[solver]\nrank = 2\ninit = svd\n",
    "ablate": "[matrix]\nkind = low_rank\nn = 20\nk = 2\n[experiment]\nbeta_list = 0, 0.1\nkappa_caps = none, 10\n[solver]\nrank = 3\ninit = svd\n",
    "sweep": "[matrix]\nkind = low_rank\nn = 20\nk = 2\n[experiment]\nlambda_grid = 1e-3, 1e-2\nalpha_grid = 1e-3,\n[solver]\nrank = 2\ninit = svd\n",
    "stability": "[matrix]\nkind = low_rank\nn = 20\nk = 2\n[experiment]\nn_seeds = 3\n[solver]\nrank = 2\nmax_iters = 20\n",
    "scaling": "[experiment]\nn_list = 20, 40\n[solver]\nrank = 2\nmax_iters = 5\n",
}


@pytest.mark.parametrize("command", sorted(EXPERIMENT_CONFIGS))
def test_experiment_commands_are_reproducible(tmp_path, command):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text(EXPERIMENT_CONFIGS[command])
    outs = []
    for i in range(2):
        out = tmp_path / f"{command}{i}.json"
        assert main([command, "--config", str(cfg), "--seed", "3", "--out", str(out)]) == EXIT_OK
        outs.append(read_report(out))
    assert outs[0]["kind"] and outs[0]["runs"]
    assert _strip_wall(outs[0]) == _strip_wall(outs[1])


def test_benchmark_report_has_method_rows(tmp_path):
    cfg = tmp_path / "b.cfg"
    cfg.write_text(EXPERIMENT_CONFIGS["benchmark"])
    out = tmp_path / "b.json"
    main(["benchmark", "--config", str(cfg), "--seed", "0", "--out", str(out)])
    runs = read_report(out)["runs"]
    assert len(runs) == 2 * 2 * 4
    assert {"method", "seed", "rel_error", "kappa_d", "iters", "wall_ms"} <= set(runs[-1])


def test_bad_config_is_usage_error(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("[experiment]\nn: 3\n")
    assert main(["benchmark", "--config", str(cfg), "--seed", "0", "--out", str(tmp_path / "r.json")]) == EXIT_USAGE


def test_module_entry_point(tmp_path):
    out = tmp_path / "m.mtx"
    proc = subprocess.run(
        [sys.executable, "-m", "ddecomp", "generate", "--gen", "low_rank:n=5,k=1", "--seed", "0", "--out", str(out)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert json.dumps(read_matrix(out).shape) == "[5, 5]"
