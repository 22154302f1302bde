"""Compare the compiled and pure-Python kernel backends.

    python benchmarks/bench_kernels.py --nodes 1000 --edges 10000 --repeat 3

Each backend runs betweenness, closeness and Louvain on the same graphs;
the script checks that results are identical and prints best-of-N times.
"""

from __future__ import annotations

import argparse
import itertools
import random
import time

from narrative_dynamics import kernels
from narrative_dynamics.graph import RetweetNetwork, betweenness_centrality, closeness_centrality
from narrative_dynamics.narratives import CoocNetwork, louvain
from narrative_dynamics.synthetic import scale_free_digraph


def retweet_graph(n: int, m: int, seed: int) -> RetweetNetwork:
    nodes = tuple(f"n{i:06d}" for i in range(n))
    return RetweetNetwork(nodes, {(nodes[a], nodes[b]): 1 for a, b in scale_free_digraph(n, m, seed)})


def cooc_graph(n: int, groups: int, seed: int) -> CoocNetwork:
    rng = random.Random(seed)
    nodes = [f"g{i:05d}" for i in range(n)]
    edges = {}
    for a, b in itertools.combinations(range(n), 2):
        same = a % groups == b % groups
        if rng.random() < (0.15 if same else 0.002):
            edges[(nodes[a], nodes[b])] = rng.randint(1, 5)
    return CoocNetwork(nodes, edges)


def best_of(fn, repeat: int):
    best, result = float("inf"), None
    for _ in range(repeat):
        start = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - start)
    return best, result


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--nodes", type=int, default=1000)
    parser.add_argument("--edges", type=int, default=10_000)
    parser.add_argument("--cooc-nodes", type=int, default=600)
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    backends = ["python"]
    try:
        kernels.get_backend("cython")
        backends.insert(0, "cython")
    except ImportError:
        print("compiled kernels unavailable; timing the Python backend only")

    net = retweet_graph(args.nodes, args.edges, args.seed)
    cooc = cooc_graph(args.cooc_nodes, 12, args.seed)
    tasks = {
        "betweenness": lambda impl: betweenness_centrality(net, workers=args.workers, backend=impl),
        "closeness": lambda impl: closeness_centrality(net, workers=args.workers, backend=impl),
        "louvain": lambda impl: louvain(cooc, seed=args.seed, backend=impl).membership,
    }
    print(f"retweet graph {net.node_count} nodes / {net.edge_count} edges; "
          f"co-occurrence graph {len(cooc.nodes)} nodes / {len(cooc.edges)} edges; workers={args.workers}")
    print(f"{'kernel':<12}" + "".join(f"{b:>12}" for b in backends) + ("     speedup  identical" if len(backends) == 2 else ""))
    for name, task in tasks.items():
        times, outputs = [], []
        for b in backends:
            t, out = best_of(lambda: task(kernels.get_backend(b)), args.repeat)
            times.append(t)
            outputs.append(out)
        row = f"{name:<12}" + "".join(f"{t:>11.3f}s" for t in times)
        if len(backends) == 2:
            row += f"{times[1] / times[0]:>11.1f}x  {outputs[0] == outputs[1]!s:>9}"
        print(row)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
