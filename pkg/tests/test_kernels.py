import os
import random
import subprocess
import sys

import numpy as np
import pytest

import oracles
from narrative_dynamics import kernels
from narrative_dynamics.graph import RetweetNetwork, centrality_report
from narrative_dynamics.narratives import CoocNetwork, louvain
from narrative_dynamics.synthetic import scale_free_digraph

needs_cython = pytest.mark.skipif(kernels.BACKEND != "cython", reason="compiled kernels not built")


def scale_free_net(n, m, seed=0):
    edges = scale_free_digraph(n, m, seed)
    nodes = tuple(f"n{i:05d}" for i in range(n))
    return RetweetNetwork(nodes, {(nodes[a], nodes[b]): 1 for a, b in edges})


def test_block_ranges_depend_only_on_n():
    for n in (0, 1, 63, 64, 65, 5000, 10_000):
        blocks = kernels.block_ranges(n)
        assert sum(hi - lo for lo, hi in blocks) == n
        assert all(b[1] == c[0] for b, c in zip(blocks, blocks[1:]))


def test_scale_free_generator_shape():
    edges = scale_free_digraph(500, 3000, seed=1)
    assert len(edges) == 3000 == len(set(edges))
    assert all(a != b for a, b in edges)
    assert edges == scale_free_digraph(500, 3000, seed=1)


@needs_cython
@pytest.mark.parametrize("seed", range(3))
def test_backends_agree_exactly(seed):
    net = scale_free_net(400, 2400, seed)
    py = centrality_report(net, backend=kernels.get_backend("python"))
    cy = centrality_report(net, backend=kernels.get_backend("cython"))
    assert py.records == cy.records


@pytest.mark.parametrize("backend", ["python", pytest.param("cython", marks=needs_cython)])
def test_worker_count_does_not_change_results(backend):
    net = scale_free_net(600, 3000, 4)
    impl = kernels.get_backend(backend)
    one = centrality_report(net, workers=1, backend=impl)
    four = centrality_report(net, workers=4, backend=impl)
    assert one.records == four.records


@needs_cython
def test_louvain_backends_agree():
    rng = random.Random(3)
    nodes = [f"g{i}" for i in range(60)]
    edges = {}
    for a in range(60):
        for b in range(a + 1, 60):
            if rng.random() < (0.4 if a // 15 == b // 15 else 0.02):
                edges[(nodes[a], nodes[b])] = rng.randint(1, 3)
    net = CoocNetwork(nodes, edges)
    py = louvain(net, seed=1, backend=kernels.get_backend("python"))
    cy = louvain(net, seed=1, backend=kernels.get_backend("cython"))
    assert py.membership == cy.membership and py.modularity == cy.modularity


def test_pure_python_env_switch():
    env = dict(os.environ, NARRDYN_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from narrative_dynamics.kernels import BACKEND; print(BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


def test_unknown_backend():
    with pytest.raises(ValueError):
        kernels.get_backend("fortran")


def test_python_kernel_matches_oracle_on_small_graph():
    rng = random.Random(11)
    nodes, edges = oracles.random_digraph(rng, 9, 0.3)
    net = RetweetNetwork(tuple(nodes), edges)
    indptr, indices, rindptr, rindices = net.csr()
    raw = kernels.betweenness_raw(indptr, indices, rindptr, rindices, backend=kernels.get_backend("python"))
    ref = oracles.betweenness(nodes, edges)
    assert np.allclose(raw, [ref[v] for v in nodes], atol=1e-12)
