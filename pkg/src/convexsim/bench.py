"""Benchmark the numba kernels against their numpy twins.

Run with ``python -m convexsim.bench``. The first numba timing includes JIT
compilation unless the on-disk cache is warm.
"""

from __future__ import annotations

import argparse
import time

from ._backend import get_backend, numba_available, set_backend
from .generators import path_graph, random_chordal, random_cycle_free_lattice, random_tree
from .graphs import geodesic_hull_mask, monophonic_hull_mask
from .semilattices import join_closure_mask
from .bitsets import mask_of


def _time(fn, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def _workloads(size: int):
    tree = random_tree(size, seed=1)
    chordal = random_chordal(min(size, 64), seed=2, max_clique=4)
    lattice = random_cycle_free_lattice(min(size, 32), seed=3)
    path = path_graph(size)
    tree_sample = mask_of(range(0, tree.n, max(tree.n // 6, 1)))
    chordal_sample = mask_of(range(0, chordal.n, max(chordal.n // 6, 1)))
    lattice_sample = mask_of(range(0, lattice.n, max(lattice.n // 6, 1)))

    def fresh_graph(g):
        # drop cached distance matrices so the kernel, not the cache, is timed
        return type(g)(g.n, g.edges)

    return [
        ("all_pairs_distances(path)", lambda: fresh_graph(path).dist),
        ("all_pairs_distances(tree)", lambda: fresh_graph(tree).dist),
        ("monophonic_hull(tree)", lambda: monophonic_hull_mask(tree, tree_sample)),
        ("monophonic_hull(chordal)", lambda: monophonic_hull_mask(chordal, chordal_sample)),
        ("geodesic_hull(path)", lambda: geodesic_hull_mask(path, mask_of([0, path.n - 1]))),
        ("join_closure(lattice)", lambda: join_closure_mask(lattice, lattice_sample)),
    ]


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="compare numba and numpy kernel backends")
    parser.add_argument("--size", type=int, default=512)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args(argv)

    backends = ["numpy"]
    if numba_available():
        backends.insert(0, "numba")
    else:
        print("numba not importable; timing the numpy path only")

    results: dict[str, dict[str, float]] = {}
    for backend in backends:
        set_backend(backend)
        assert get_backend() == backend
        for name, fn in _workloads(args.size):
            fn()  # warm-up (JIT compile, allocation)
            results.setdefault(name, {})[backend] = _time(fn, args.repeat)

    width = max(len(n) for n in results)
    header = f"{'kernel'.ljust(width)}  " + "  ".join(f"{b:>12}" for b in backends)
    if len(backends) == 2:
        header += f"  {'speedup':>8}"
    print(header)
    for name, times in results.items():
        row = f"{name.ljust(width)}  " + "  ".join(f"{times[b] * 1e3:>10.3f}ms" for b in backends)
        if len(backends) == 2 and times["numba"] > 0:
            row += f"  {times['numpy'] / times['numba']:>7.1f}x"
        print(row)
    set_backend("auto")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
