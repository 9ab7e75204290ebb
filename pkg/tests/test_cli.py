import json
import shutil
import subprocess

import numpy as np
import pytest

from transferop import cli, histdens
from transferop.dynamics import SampleSet

A = 1.0 - np.sqrt(2.0) / 2.0


@pytest.fixture
def run(tmp_path, monkeypatch, capsys):
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv("TRANSFEROP_SEED", raising=False)

    def _run(*argv):
        code = cli.main([str(a) for a in argv])
        out, err = capsys.readouterr()
        return code, out, err

    return _run


class TestSimulate:
    def test_count(self, run, tmp_path):
        code, out, _ = run("simulate", "--map", "logistic", "--n", 1000, "--mode", "orbit", "--seed", 7)
        assert code == 0 and "N=1000" in out and "seed=7" in out
        s = SampleSet.from_csv(tmp_path / "samples.csv")
        assert len(s) == 1000 and s.seed == 7

    def test_noisy_in_domain(self, run, tmp_path):
        assert run("simulate", "--noise-sigma", 0.02, "--n", 5000, "--out", "n.csv")[0] == 0
        s = SampleSet.from_csv(tmp_path / "n.csv")
        assert s.x_next.min() >= 0 and s.x_next.max() <= 1 and s.sigma == 0.02

    @pytest.mark.parametrize("mode", ["orbit", "iid_uniform", "evolved_ensemble"])
    def test_byte_identical(self, run, tmp_path, mode):
        run("simulate", "--n", 500, "--mode", mode, "--seed", 3, "--out", "a.csv")
        run("simulate", "--n", 500, "--mode", mode, "--seed", 3, "--out", "b.csv")
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
        assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()

    def test_seed_env_fallback(self, run, tmp_path, monkeypatch):
        monkeypatch.setenv("TRANSFEROP_SEED", "41")
        run("simulate", "--n", 10)
        assert json.loads((tmp_path / "samples.json").read_text())["seed"] == 41
        run("simulate", "--n", 10, "--seed", 2)
        assert json.loads((tmp_path / "samples.json").read_text())["seed"] == 2

    def test_bad_seed_env(self, run, monkeypatch):
        monkeypatch.setenv("TRANSFEROP_SEED", "abc")
        code, _, err = run("simulate", "--n", 10)
        assert code == 1 and err.startswith("error:")

    def test_unwritable(self, run, tmp_path):
        (tmp_path / "file").write_text("x")
        code, _, err = run("simulate", "--n", 10, "--out", "file/sub/s.csv")
        assert code == 2 and err.startswith("error:")


class TestEstimate:
    def test_hist_matches_library(self, run, tmp_path):
        run("simulate", "--n", 100000, "--mode", "evolved_ensemble", "--seed", 1, "--out", "s.csv")
        code, _, _ = run("estimate", "--samples", "s.csv", "--method", "hist", "--k", 100, "--out", "h.csv")
        assert code == 0
        rows = np.loadtxt(tmp_path / "h.csv", delimiter=",", skiprows=1)
        assert rows.shape == (100, 2)
        h = histdens.hist_fit(SampleSet.from_csv(tmp_path / "s.csv").x, 100)
        np.testing.assert_array_equal(rows[:, 1], histdens.hist_eval(h, rows[:, 0]))

    def test_kde_integrates(self, run, tmp_path):
        run("simulate", "--n", 100000, "--mode", "evolved_ensemble", "--seed", 1, "--out", "s.csv")
        code, _, _ = run("estimate", "--samples", "s.csv", "--method", "kde", "--delta", 0.0011,
                         "--grid-lo", 0, "--grid-hi", 1, "--grid-points", 20001, "--out", "k.csv",
                         "--plot-script", "k.gp")
        assert code == 0
        rows = np.loadtxt(tmp_path / "k.csv", delimiter=",", skiprows=1)
        assert abs(np.trapezoid(rows[:, 1], rows[:, 0]) - 1.0) < 0.02
        assert "k.csv" in (tmp_path / "k.gp").read_text()

    def test_unknown_method(self, run):
        code, _, err = run("estimate", "--method", "spline")
        assert code == 1 and err.startswith("error:")

    def test_missing_input(self, run):
        code, _, err = run("estimate", "--samples", "nope.csv", "--method", "hist")
        assert code == 2 and "not found" in err

    def test_invalid_bandwidth(self, run):
        code, _, err = run("estimate", "--method", "kde", "--delta", -1)
        assert code == 1 and err.startswith("error:")


class TestOperator:
    def test_ulam_and_kde(self, run, tmp_path):
        run("simulate", "--n", 20000, "--mode", "evolved_ensemble", "--seed", 2, "--out", "s.csv")
        for method in ("ulam", "kde"):
            code, out, _ = run("operator", "--samples", "s.csv", "--method", method, "--k", 100, "--out-dir", "o")
            assert code == 0 and "converged=True" in out
            P = np.loadtxt(tmp_path / "o" / f"{method}_matrix.csv", delimiter=",", comments="#")
            assert P.shape == (100, 100)
            np.testing.assert_allclose(P.sum(axis=1), 1.0, atol=1e-12)
            st = np.loadtxt(tmp_path / "o" / f"{method}_stationary.csv", delimiter=",", skiprows=1)
            assert abs(st[:, 1].sum() - 1.0) <= 1e-12

    def test_exact_k2(self, run, tmp_path):
        assert run("operator", "--method", "exact", "--k", 2, "--out-dir", "e")[0] == 0
        P = np.loadtxt(tmp_path / "e" / "exact_matrix.csv", delimiter=",", comments="#")
        np.testing.assert_allclose(P, [[A, 1 - A], [A, 1 - A]], atol=1e-3)

    def test_noisy_exact_needs_sigma(self, run):
        assert run("operator", "--method", "noisy-exact", "--k", 10)[0] == 1

    def test_nonconverged(self, run, tmp_path):
        args = ("operator", "--method", "ulam", "--n", 2000, "--k", 20, "--max-iter", 2, "--out-dir", "o")
        code, out, err = run(*args)
        assert code == 2 and "residual" in err and err.startswith("error:")
        assert run(*args, "--allow-nonconverged")[0] == 0


class TestSweepCompare:
    def test_hist_sweep_reports_optimum(self, run, tmp_path):
        code, out, _ = run("sweep", "--method", "hist", "--n", 1000000, "--values", "100,2503", "--seeds", "0",
                           "--out-dir", "w")
        assert code == 0 and "ub_argmin=2503" in out
        summary = json.loads((tmp_path / "w" / "sweep_hist.json").read_text())
        assert summary["ub_argmin"] == 2503 and summary["K_formula"] == 1986

    def test_kde_sweep_reports_optimum(self, run, tmp_path):
        code, _, _ = run("sweep", "--method", "kde", "--n", 1000000, "--range", "1e-3:2e-3:3:log",
                         "--seeds", "0", "--out-dir", "w")
        assert code == 0
        summary = json.loads((tmp_path / "w" / "sweep_kde.json").read_text())
        assert summary["ub_argmin"] == pytest.approx(0.0011, rel=0.1)

    def test_sweep_deterministic(self, run, tmp_path):
        for d in ("a", "b"):
            run("sweep", "--method", "kde", "--n", 3000, "--values", "0.01,0.05", "--n-seeds", 2,
                "--threads", 2, "--out-dir", d)
        for name in ("sweep_kde.csv", "sweep_kde.json", "sweep_kde_curve.csv"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_empty_range(self, run):
        code, _, err = run("sweep", "--values", ",")
        assert code == 1 and err.startswith("error:")

    def test_compare(self, run, tmp_path):
        code, out, _ = run("compare", "--n", 20000, "--n-seeds", 2, "--out-dir", "c")
        assert code == 0
        rows = np.loadtxt(tmp_path / "c" / "compare.csv", delimiter=",", skiprows=1)
        assert rows.shape == (100, 5)
        header = (tmp_path / "c" / "compare.csv").read_text().splitlines()[0]
        assert header.startswith("x,mse_hist,mse_kde")


class TestConfig:
    def test_file_then_flag_override(self, run, tmp_path):
        (tmp_path / "c.cfg").write_text("version = 1\ncommand = simulate\nn = 5  # pairs\nout = c.csv\n")
        assert run("--config", "c.cfg")[0] == 0
        assert len(SampleSet.from_csv(tmp_path / "c.csv")) == 5
        assert run("--config", "c.cfg", "--n", 7)[0] == 0
        assert len(SampleSet.from_csv(tmp_path / "c.csv")) == 7

    @pytest.mark.parametrize("text,fragment", [
        ("command = simulate\nbogus = 1\n", "c.cfg:2: unknown key 'bogus'"),
        ("command = simulate\nn = -4\n", "c.cfg:2: bad value for 'n'"),
        ("command = simulate\nn\n", "c.cfg:2: expected 'key = value'"),
        ("command = simulate\nmode = spiral\n", "c.cfg:2: 'mode' must be one of"),
        ("version = 9\ncommand = simulate\n", "c.cfg:1: unsupported config version"),
        ("command = fly\n", "c.cfg:1: unknown command"),
        ("command = simulate\nn = 3\nn = 4\n", "c.cfg:3: duplicate key"),
    ])
    def test_line_precise_errors(self, run, tmp_path, text, fragment):
        (tmp_path / "c.cfg").write_text(text)
        code, _, err = run("--config", "c.cfg")
        assert code == 1 and err.startswith("error:") and fragment in err

    def test_no_command(self, run):
        assert run()[0] == 1

    def test_recipes_listed_and_parse(self, run):
        code, out, _ = run("--list-recipes")
        names = out.split()
        assert code == 0 and len(names) >= 9
        for name in names:
            args = cli.parse_args(["--recipe", name])
            assert args.command in cli.COMMANDS

    def test_unknown_recipe(self, run):
        code, _, err = run("--recipe", "nope")
        assert code == 1 and "unknown recipe" in err

    def test_small_recipe_runs(self, run, tmp_path):
        assert run("--recipe", "samples_noisy")[0] == 0
        assert (tmp_path / "runs" / "samples_noisy.csv").is_file()
        assert (tmp_path / "runs" / "samples_noisy.gp").is_file()


@pytest.mark.skipif(shutil.which("transferop") is None, reason="console script not installed")
def test_console_script():
    res = subprocess.run(["transferop", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "simulate" in res.stdout
