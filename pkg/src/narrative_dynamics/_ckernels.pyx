# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels for betweenness, closeness and Louvain local moves.

Signatures and arithmetic order match ``_pykernels`` exactly. The
betweenness and closeness kernels run without the GIL so that callers can
spread source blocks over threads.
"""

import numpy as np
cimport numpy as cnp
from libc.stdlib cimport malloc, free

cnp.import_array()

ctypedef long long idx_t

cdef double MOVE_EPS = 1e-12


def brandes_block(const idx_t[::1] indptr, const idx_t[::1] indices,
                  const idx_t[::1] rindptr, const idx_t[::1] rindices,
                  idx_t start, idx_t stop, double[::1] out):
    cdef idx_t n = indptr.shape[0] - 1
    cdef idx_t *dist = <idx_t *> malloc(n * sizeof(idx_t))
    cdef idx_t *order = <idx_t *> malloc(n * sizeof(idx_t))
    cdef double *sigma = <double *> malloc(n * sizeof(double))
    cdef double *delta = <double *> malloc(n * sizeof(double))
    cdef idx_t s, v, w, p, head, tail, idx, dv, dw
    cdef double coeff
    if dist == NULL or order == NULL or sigma == NULL or delta == NULL:
        free(dist); free(order); free(sigma); free(delta)
        raise MemoryError()
    with nogil:
        for v in range(n):
            dist[v] = -1
            sigma[v] = 0.0
            delta[v] = 0.0
        for s in range(start, stop):
            # BFS; ``order`` doubles as queue and stack (visit order)
            dist[s] = 0
            sigma[s] = 1.0
            head = 0
            tail = 0
            order[tail] = s
            tail += 1
            while head < tail:
                v = order[head]
                head += 1
                dv = dist[v] + 1
                for p in range(indptr[v], indptr[v + 1]):
                    w = indices[p]
                    if dist[w] < 0:
                        dist[w] = dv
                        order[tail] = w
                        tail += 1
                    if dist[w] == dv:
                        sigma[w] += sigma[v]
            idx = tail - 1
            while idx >= 0:
                w = order[idx]
                dw = dist[w] - 1
                coeff = (1.0 + delta[w]) / sigma[w]
                for p in range(rindptr[w], rindptr[w + 1]):
                    v = rindices[p]
                    if dist[v] == dw:
                        delta[v] += sigma[v] * coeff
                if w != s:
                    out[w] += delta[w]
                idx -= 1
            for idx in range(tail):
                v = order[idx]
                dist[v] = -1
                sigma[v] = 0.0
                delta[v] = 0.0
    free(dist); free(order); free(sigma); free(delta)


def closeness_block(const idx_t[::1] rindptr, const idx_t[::1] rindices,
                    idx_t start, idx_t stop, double[::1] out):
    cdef idx_t n = rindptr.shape[0] - 1
    cdef idx_t *dist = <idx_t *> malloc(n * sizeof(idx_t))
    cdef idx_t *queue = <idx_t *> malloc(n * sizeof(idx_t))
    cdef idx_t v, u, w, p, head, tail, du, total, idx
    cdef double reach
    if dist == NULL or queue == NULL:
        free(dist); free(queue)
        raise MemoryError()
    with nogil:
        for v in range(n):
            dist[v] = -1
        for v in range(start, stop):
            dist[v] = 0
            head = 0
            tail = 0
            queue[tail] = v
            tail += 1
            total = 0
            while head < tail:
                u = queue[head]
                head += 1
                du = dist[u] + 1
                for p in range(rindptr[u], rindptr[u + 1]):
                    w = rindices[p]
                    if dist[w] < 0:
                        dist[w] = du
                        total += du
                        queue[tail] = w
                        tail += 1
            reach = <double> tail
            if tail > 1 and total > 0 and n > 1:
                out[v] = ((reach - 1.0) / (n - 1.0)) * ((reach - 1.0) / <double> total)
            else:
                out[v] = 0.0
            for idx in range(tail):
                dist[queue[idx]] = -1
    free(dist); free(queue)


def local_moves(const idx_t[::1] indptr, const idx_t[::1] indices,
                const double[::1] weights, const double[::1] k,
                const idx_t[::1] order, idx_t[::1] comm, double[::1] tot,
                idx_t[::1] size, double resolution, double m):
    cdef idx_t n = k.shape[0]
    cdef double *neigh_w = <double *> malloc(n * sizeof(double))
    cdef char *mark = <char *> malloc(n * sizeof(char))
    cdef idx_t *touched = <idx_t *> malloc(n * sizeof(idx_t))
    cdef idx_t i, j, p, q, ci, cj, c, best_c, e, n_touched, oi
    cdef idx_t moves, total_moves = 0
    cdef double ki, gain, best_gain
    cdef double eps = MOVE_EPS * m
    cdef double scale = resolution / (2.0 * m)
    if neigh_w == NULL or mark == NULL or touched == NULL:
        free(neigh_w); free(mark); free(touched)
        raise MemoryError()
    with nogil:
        for i in range(n):
            neigh_w[i] = 0.0
            mark[i] = 0
        while True:
            moves = 0
            for oi in range(order.shape[0]):
                i = order[oi]
                ci = comm[i]
                ki = k[i]
                n_touched = 0
                for p in range(indptr[i], indptr[i + 1]):
                    j = indices[p]
                    if j == i:
                        continue
                    cj = comm[j]
                    if not mark[cj]:
                        mark[cj] = 1
                        touched[n_touched] = cj
                        n_touched += 1
                    neigh_w[cj] += weights[p]
                tot[ci] -= ki
                size[ci] -= 1
                best_c = ci
                best_gain = neigh_w[ci] - tot[ci] * ki * scale
                for q in range(n_touched):
                    c = touched[q]
                    if c == ci:
                        continue
                    gain = neigh_w[c] - tot[c] * ki * scale
                    if gain > best_gain + eps:
                        best_gain = gain
                        best_c = c
                if best_gain < -eps and size[ci] > 0:
                    e = 0
                    while size[e] > 0:
                        e += 1
                    best_c = e
                tot[best_c] += ki
                size[best_c] += 1
                comm[i] = best_c
                if best_c != ci:
                    moves += 1
                for q in range(n_touched):
                    c = touched[q]
                    neigh_w[c] = 0.0
                    mark[c] = 0
            total_moves += moves
            if moves == 0:
                break
    free(neigh_w); free(mark); free(touched)
    return total_moves
