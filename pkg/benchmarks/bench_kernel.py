"""Compare the compiled and pure-Python menu-search kernels.

Usage::

    python benchmarks/bench_kernel.py [--episodes N] [--sessions N] [--repeat R]

Both backends train on the same seed, so the benchmark also checks that the
resulting Q-tables and session traces are identical.
"""
import argparse
import time

import numpy as np

from menuabc.kernel import available_backends
from menuabc.simulator import (MenuLayout, ModelParameters, QLearningConfig,
                               _rollout, train_policy)


def _best_of(fn, repeat):
    best, value = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        value = fn()
        best = min(best, time.perf_counter() - t0)
    return best, value


def run(episodes, sessions, repeat):
    params = ModelParameters(f_dur=300.0, d_sel=200.0, p_rec=0.3, p_sem=0.5, variant="v3")
    layout, hyper = MenuLayout(), QLearningConfig()
    results = {}
    for name in available_backends():
        t_train, policy = _best_of(
            lambda: train_policy(params, episodes, hyper, np.random.default_rng(1), layout, name),
            repeat)
        t_sim, out = _best_of(
            lambda: _rollout(policy, params, sessions, np.random.default_rng(2), 0, name),
            repeat)
        results[name] = (t_train, t_sim, policy, out)
        print(f"{name:>7}: train {episodes} episodes {t_train:8.3f} s "
              f"({1e6 * t_train / episodes:7.2f} us/episode)   "
              f"simulate {sessions} sessions {t_sim:8.3f} s "
              f"({1e6 * t_sim / sessions:7.2f} us/session)")
    if len(results) == 2:
        (tc, sc, qc, oc), (tp, sp, qp, op) = results["cython"], results["python"]
        same = (np.array_equal(qc.q_values, qp.q_values)
                and all(np.array_equal(oc[k], op[k]) for k in oc))
        print(f"speedup: train x{tp / tc:.0f}, simulate x{sp / sc:.0f}; "
              f"outputs identical: {same}")
    else:
        print("compiled backend not built; only the pure-Python kernel was timed")
    return results


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--episodes", type=int, default=20_000)
    p.add_argument("--sessions", type=int, default=2_500)
    p.add_argument("--repeat", type=int, default=3)
    a = p.parse_args(argv)
    run(a.episodes, a.sessions, a.repeat)


if __name__ == "__main__":
    main()
