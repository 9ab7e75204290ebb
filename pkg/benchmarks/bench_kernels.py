"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--scale 1.0] [--repeat 3] [--json out.json]

Each case runs on identical inputs in both backends; the table reports the
best of ``--repeat`` wall-clock runs and the speed-up of the compiled one.
"""
import argparse
import json
import time

import numpy as np

from transferop import _backend


def cases(scale):
    rng = np.random.default_rng(0)
    n = int(200_000 * scale)
    u = rng.random(n)
    mu = rng.random(n)
    xs = np.sort(rng.random(int(1_000_000 * scale)))
    ys = rng.random(xs.size)
    grid = np.linspace(0.01, 0.99, 100)
    edges = np.linspace(0.0, 1.0, 101)
    edges[0], edges[-1] = -np.inf, np.inf
    return {
        "logistic_orbit (noiseless)": lambda k: k.logistic_orbit(0.3141592653, 4.0, n, 0.0, u),
        "logistic_orbit (sigma=0.02)": lambda k: k.logistic_orbit(0.3141592653, 4.0, n, 0.02, u),
        "logistic_evolve x100": lambda k: k.logistic_evolve(u, 4.0, 100),
        "tn_sample": lambda k: k.tn_sample(mu, 0.02, 0.0, 1.0, u),
        "kde1d_eval gaussian": lambda k: k.kde1d_eval(xs, grid, 0.0011, 0),
        "kde1d_eval epanechnikov": lambda k: k.kde1d_eval(xs, grid, 0.0025, 1),
        "cell_mass_1d K=100": lambda k: k.cell_mass_1d(xs, edges, 0.0011, 0),
        "cell_mass_2d K=100": lambda k: k.cell_mass_2d(xs, ys, edges, edges, 0.0017, 0.0017, 0),
    }


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--scale", type=float, default=1.0, help="problem-size multiplier")
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--json", default=None, help="also write results here")
    args = ap.parse_args(argv)

    names = _backend.available()
    mods = {name: _backend.load(name) for name in names}
    rows = []
    print(f"{'case':32s}" + "".join(f"{n:>12s}" for n in names) + ("    speed-up" if len(names) > 1 else ""))
    for label, fn in cases(args.scale).items():
        t = {name: best_of(lambda: fn(mod), args.repeat) for name, mod in mods.items()}
        line = f"{label:32s}" + "".join(f"{t[n]:11.4f}s" for n in names)
        if "cython" in t and "python" in t:
            line += f"{t['python'] / t['cython']:11.1f}x"
        print(line)
        rows.append({"case": label, **{f"{n}_s": t[n] for n in names}})
    if args.json:
        with open(args.json, "w") as fh:
            json.dump({"scale": args.scale, "repeat": args.repeat, "results": rows}, fh, indent=2)


if __name__ == "__main__":
    main()
