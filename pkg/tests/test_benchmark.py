import runpy
from pathlib import Path

BENCH = Path(__file__).resolve().parent.parent / "benchmarks" / "bench_kernels.py"


def test_benchmark_runs(tmp_path, capsys):
    mod = runpy.run_path(str(BENCH))
    mod["main"](["--scale", "0.002", "--repeat", "1", "--json", str(tmp_path / "b.json")])
    out = capsys.readouterr().out
    assert "cell_mass_2d" in out and (tmp_path / "b.json").is_file()
