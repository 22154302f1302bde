"""Pure-Python kernels; the fallback for the compiled ``_ckernels`` module.

Every function mirrors its Cython twin operation for operation, so both
produce bit-identical floating-point results on the same inputs.
"""

from __future__ import annotations

from collections import deque

MOVE_EPS = 1e-12


def brandes_block(indptr, indices, rindptr, rindices, start, stop, out):
    """Accumulate unnormalized betweenness from sources ``start..stop-1`` into ``out``.

    Unweighted directed shortest paths. Predecessors are recovered from the
    reverse adjacency (``dist[v] == dist[w] - 1``) instead of stored lists.
    """
    indptr = indptr.tolist()
    indices = indices.tolist()
    rindptr = rindptr.tolist()
    rindices = rindices.tolist()
    n = len(indptr) - 1
    dist = [-1] * n
    sigma = [0.0] * n
    delta = [0.0] * n
    acc = out.tolist()
    for s in range(start, stop):
        stack = []
        dist[s] = 0
        sigma[s] = 1.0
        queue = deque([s])
        while queue:
            v = queue.popleft()
            stack.append(v)
            dv = dist[v] + 1
            for p in range(indptr[v], indptr[v + 1]):
                w = indices[p]
                if dist[w] < 0:
                    dist[w] = dv
                    queue.append(w)
                if dist[w] == dv:
                    sigma[w] += sigma[v]
        for idx in range(len(stack) - 1, -1, -1):
            w = stack[idx]
            dw = dist[w] - 1
            coeff = (1.0 + delta[w]) / sigma[w]
            for p in range(rindptr[w], rindptr[w + 1]):
                v = rindices[p]
                if dist[v] == dw:
                    delta[v] += sigma[v] * coeff
            if w != s:
                acc[w] += delta[w]
        for v in stack:
            dist[v] = -1
            sigma[v] = 0.0
            delta[v] = 0.0
    out[:] = acc


def closeness_block(rindptr, rindices, start, stop, out):
    """Wasserman-Faust closeness over incoming geodesics for targets ``start..stop-1``."""
    rindptr = rindptr.tolist()
    rindices = rindices.tolist()
    n = len(rindptr) - 1
    dist = [-1] * n
    for v in range(start, stop):
        dist[v] = 0
        queue = deque([v])
        seen = [v]
        total = 0
        while queue:
            u = queue.popleft()
            du = dist[u] + 1
            for p in range(rindptr[u], rindptr[u + 1]):
                w = rindices[p]
                if dist[w] < 0:
                    dist[w] = du
                    total += du
                    queue.append(w)
                    seen.append(w)
        reach = len(seen)
        if reach > 1 and total > 0 and n > 1:
            out[v] = ((reach - 1.0) / (n - 1.0)) * ((reach - 1.0) / total)
        else:
            out[v] = 0.0
        for u in seen:
            dist[u] = -1


def local_moves(indptr, indices, weights, k, order, comm, tot, size, resolution, m):
    """Louvain phase one: greedy single-node moves until a full pass makes none.

    ``comm``, ``tot`` and ``size`` are updated in place. Returns the number
    of moves made. A node may also leave for an empty community when that
    beats every neighbouring option.
    """
    indptr_l = indptr.tolist()
    indices_l = indices.tolist()
    weights_l = weights.tolist()
    k_l = k.tolist()
    order_l = order.tolist()
    comm_l = comm.tolist()
    tot_l = tot.tolist()
    size_l = size.tolist()
    n = len(k_l)
    neigh_w = [0.0] * n
    mark = [False] * n
    eps = MOVE_EPS * m
    scale = resolution / (2.0 * m)
    total_moves = 0
    while True:
        moves = 0
        for i in order_l:
            ci = comm_l[i]
            ki = k_l[i]
            touched = []
            for p in range(indptr_l[i], indptr_l[i + 1]):
                j = indices_l[p]
                if j == i:
                    continue
                cj = comm_l[j]
                if not mark[cj]:
                    mark[cj] = True
                    touched.append(cj)
                neigh_w[cj] += weights_l[p]
            tot_l[ci] -= ki
            size_l[ci] -= 1
            best_c = ci
            best_gain = neigh_w[ci] - tot_l[ci] * ki * scale
            for c in touched:
                if c == ci:
                    continue
                gain = neigh_w[c] - tot_l[c] * ki * scale
                if gain > best_gain + eps:
                    best_gain = gain
                    best_c = c
            if best_gain < -eps and size_l[ci] > 0:
                e = 0
                while size_l[e] > 0:
                    e += 1
                best_c = e
            tot_l[best_c] += ki
            size_l[best_c] += 1
            comm_l[i] = best_c
            if best_c != ci:
                moves += 1
            for c in touched:
                neigh_w[c] = 0.0
                mark[c] = False
        total_moves += moves
        if moves == 0:
            break
    comm[:] = comm_l
    tot[:] = tot_l
    size[:] = size_l
    return total_moves
