"""Benchmark the population tick kernel: compiled extension vs pure Python.

Both backends are imported directly so one process can time them side by
side regardless of TGSIM_BACKEND. Before timing, the two kernels are run
over identical fleets and required to agree bit for bit; a benchmark of
two functions computing different things would be meaningless.

Usage:
    python3 benchmarks/bench_population.py [--houses N] [--ticks N] [--repeat N]
"""

import argparse
import time

import numpy as np

from tgsim import _core_py

try:
    from tgsim import _core
except ImportError:
    _core = None


def build_fleet(n: int, seed: int = 0) -> dict[str, np.ndarray]:
    """Synthetic fleet mirroring the struct-of-arrays layout."""
    rng = np.random.default_rng(seed)
    return {
        "t_in": rng.uniform(20.5, 23.5, n),
        "hvac_on": (rng.random(n) < 0.4).astype(np.uint8),
        "latched": np.zeros(n, dtype=np.uint8),
        "kind": (rng.random(n) < 0.2).astype(np.uint8),  # mostly hysteresis
        "mode_sign": np.ones(n, dtype=np.int8),
        "setpoint": rng.uniform(21.0, 23.0, n),
        "deadband": np.full(n, 1.0),
        "r_thermal": rng.uniform(1.8, 2.5, n),
        "c_thermal": rng.uniform(1.8, 2.5, n),
        "q_hvac": -rng.uniform(10.0, 14.0, n),
        "p_rated": rng.uniform(3.5, 4.5, n),
    }


def run_ticks(kernel, fleet, ticks: int) -> float:
    total = 0.0
    for k in range(ticks):
        total += kernel(
            fleet["t_in"], fleet["hvac_on"], fleet["latched"], fleet["kind"],
            fleet["mode_sign"], fleet["setpoint"], fleet["deadband"],
            fleet["r_thermal"], fleet["c_thermal"], fleet["q_hvac"],
            fleet["p_rated"], 32.0, 1.0 / 60.0, k % 5 == 0,
        )
    return total


def check_parity(n: int, ticks: int = 100) -> None:
    a = build_fleet(n)
    b = {k: v.copy() for k, v in a.items()}
    totals_a = [run_ticks(_core.population_tick, a, 1) for _ in range(ticks)]
    totals_b = [run_ticks(_core_py.population_tick, b, 1) for _ in range(ticks)]
    if totals_a != totals_b or not np.array_equal(a["t_in"], b["t_in"]) \
            or not np.array_equal(a["hvac_on"], b["hvac_on"]):
        raise SystemExit("compiled and python kernels disagree; benchmark aborted")


def best_time(kernel, n: int, ticks: int, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        fleet = build_fleet(n)
        run_ticks(kernel, fleet, 10)  # warm up
        fleet = build_fleet(n)
        t0 = time.perf_counter()
        run_ticks(kernel, fleet, ticks)
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--houses", type=int, default=10_000)
    ap.add_argument("--ticks", type=int, default=200)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    n, ticks = args.houses, args.ticks
    steps = n * ticks
    print(f"population tick: {n} houses, {ticks} ticks, best of {args.repeat}")

    t_py = best_time(_core_py.population_tick, n, ticks, args.repeat)
    print(f"  python  : {t_py:8.3f} s  {steps / t_py / 1e6:7.2f}M house-steps/s")

    if _core is None:
        print("  compiled: not built (pip install -e . compiles it)")
        return
    check_parity(min(n, 2000))
    t_c = best_time(_core.population_tick, n, ticks, args.repeat)
    print(f"  compiled: {t_c:8.3f} s  {steps / t_c / 1e6:7.2f}M house-steps/s"
          f"  ({t_py / t_c:.1f}x)")


if __name__ == "__main__":
    main()
