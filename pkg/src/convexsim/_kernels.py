"""Hot numeric kernels with numba-JIT and pure numpy/python twins.

Every public function here dispatches on :func:`convexsim._backend.get_backend`
per call, so flipping the backend (env flag or ``set_backend``) takes effect
immediately. The two implementations of each kernel are checked against each
other in the test suite and timed against each other by ``convexsim.bench``.

Graphs enter as CSR adjacency (``indptr``, ``indices``, both int32); vertex
sets as bool arrays.
"""

from __future__ import annotations

from collections import deque

import numpy as np

from ._backend import get_backend, numba_available

if numba_available():
    from numba import njit
else:  # pragma: no cover - exercised only on numba-less installs
    def njit(*args, **kwargs):
        def wrap(fn):
            return fn
        if args and callable(args[0]):
            return args[0]
        return wrap


# ---------------------------------------------------------------------------
# all-pairs BFS distances

@njit(cache=True)
def _all_pairs_bfs_nb(indptr, indices, n):  # pragma: no cover - jitted
    dist = np.full((n, n), -1, np.int32)
    queue = np.empty(n, np.int32)
    for s in range(n):
        drow = dist[s]
        drow[s] = 0
        queue[0] = s
        head, tail = 0, 1
        while head < tail:
            u = queue[head]
            head += 1
            du = drow[u]
            for k in range(indptr[u], indptr[u + 1]):
                v = indices[k]
                if drow[v] < 0:
                    drow[v] = du + 1
                    queue[tail] = v
                    tail += 1
    return dist


def _all_pairs_bfs_np(indptr, indices, n):
    dist = np.full((n, n), -1, np.int32)
    nbrs = [indices[indptr[u]:indptr[u + 1]] for u in range(n)]
    for s in range(n):
        drow = dist[s]
        drow[s] = 0
        frontier = np.array([s], dtype=np.int32)
        d = 0
        while frontier.size:
            d += 1
            cand = np.concatenate([nbrs[int(u)] for u in frontier])
            cand = cand[drow[cand] < 0]
            if cand.size == 0:
                break
            frontier = np.unique(cand)
            drow[frontier] = d
    return dist


def all_pairs_distances(indptr, indices, n):
    """N x N matrix of unweighted shortest-path lengths, -1 when unreachable."""
    if get_backend() == "numba":
        return _all_pairs_bfs_nb(indptr, indices, n)
    return _all_pairs_bfs_np(indptr, indices, n)


# ---------------------------------------------------------------------------
# single-source BFS

@njit(cache=True)
def _bfs_nb(indptr, indices, n, src):  # pragma: no cover - jitted
    dist = np.full(n, -1, np.int32)
    queue = np.empty(n, np.int32)
    dist[src] = 0
    queue[0] = src
    head, tail = 0, 1
    while head < tail:
        u = queue[head]
        head += 1
        du = dist[u]
        for k in range(indptr[u], indptr[u + 1]):
            v = indices[k]
            if dist[v] < 0:
                dist[v] = du + 1
                queue[tail] = v
                tail += 1
    return dist


def _bfs_np(indptr, indices, n, src):
    dist = np.full(n, -1, np.int32)
    dist[src] = 0
    dq = deque([src])
    while dq:
        u = dq.popleft()
        du = dist[u]
        for v in indices[indptr[u]:indptr[u + 1]]:
            if dist[v] < 0:
                dist[v] = du + 1
                dq.append(int(v))
    return dist


def bfs_distances(indptr, indices, n, src):
    """Distances from a single source, -1 when unreachable."""
    if get_backend() == "numba":
        return _bfs_nb(indptr, indices, n, src)
    return _bfs_np(indptr, indices, n, src)


# ---------------------------------------------------------------------------
# connected components of an induced (masked) subgraph

@njit(cache=True)
def _masked_components_nb(indptr, indices, active):  # pragma: no cover - jitted
    n = active.size
    labels = np.full(n, -1, np.int32)
    queue = np.empty(n, np.int32)
    c = 0
    for s in range(n):
        if active[s] and labels[s] < 0:
            labels[s] = c
            queue[0] = s
            head, tail = 0, 1
            while head < tail:
                u = queue[head]
                head += 1
                for k in range(indptr[u], indptr[u + 1]):
                    v = indices[k]
                    if active[v] and labels[v] < 0:
                        labels[v] = c
                        queue[tail] = v
                        tail += 1
            c += 1
    return labels, c


def _masked_components_np(indptr, indices, active):
    n = active.size
    labels = np.full(n, -1, np.int32)
    c = 0
    for s in range(n):
        if active[s] and labels[s] < 0:
            labels[s] = c
            dq = deque([s])
            while dq:
                u = dq.popleft()
                for v in indices[indptr[u]:indptr[u + 1]]:
                    if active[v] and labels[v] < 0:
                        labels[v] = c
                        dq.append(int(v))
            c += 1
    return labels, c


def masked_components(indptr, indices, active):
    """Component labels of the subgraph induced by ``active``; -1 elsewhere."""
    if get_backend() == "numba":
        return _masked_components_nb(indptr, indices, active)
    return _masked_components_np(indptr, indices, active)


# ---------------------------------------------------------------------------
# BFS parents inside an induced subgraph (for shortest-path extraction)

@njit(cache=True)
def _masked_parents_nb(indptr, indices, allowed, src):  # pragma: no cover - jitted
    n = allowed.size
    parent = np.full(n, -2, np.int32)
    queue = np.empty(n, np.int32)
    parent[src] = -1
    queue[0] = src
    head, tail = 0, 1
    while head < tail:
        u = queue[head]
        head += 1
        for k in range(indptr[u], indptr[u + 1]):
            v = indices[k]
            if allowed[v] and parent[v] == -2:
                parent[v] = u
                queue[tail] = v
                tail += 1
    return parent


def _masked_parents_np(indptr, indices, allowed, src):
    n = allowed.size
    parent = np.full(n, -2, np.int32)
    parent[src] = -1
    dq = deque([src])
    while dq:
        u = dq.popleft()
        for v in indices[indptr[u]:indptr[u + 1]]:
            if allowed[v] and parent[v] == -2:
                parent[v] = u
                dq.append(int(v))
    return parent


def masked_bfs_parents(indptr, indices, allowed, src):
    """BFS tree parents within the ``allowed`` subgraph (-1 root, -2 unreached)."""
    if get_backend() == "numba":
        return _masked_parents_nb(indptr, indices, allowed, src)
    return _masked_parents_np(indptr, indices, allowed, src)


# ---------------------------------------------------------------------------
# one growth pass of the shortest-path interval operator

@njit(cache=True)
def _geodesic_grow_nb(dist, mem_idx, out):  # pragma: no cover - jitted
    k = mem_idx.size
    n = dist.shape[0]
    for a in range(k):
        u = mem_idx[a]
        du = dist[u]
        for b in range(a + 1, k):
            v = mem_idx[b]
            duv = du[v]
            if duv < 0:
                continue
            dv = dist[v]
            for w in range(n):
                if not out[w] and du[w] >= 0 and dv[w] >= 0 and du[w] + dv[w] == duv:
                    out[w] = True


def _geodesic_grow_np(dist, mem_idx, out):
    k = mem_idx.size
    for a in range(k):
        u = mem_idx[a]
        du = dist[u]
        for b in range(a + 1, k):
            v = mem_idx[b]
            duv = du[v]
            if duv < 0:
                continue
            dv = dist[v]
            hit = (du >= 0) & (dv >= 0) & (du + dv == duv)
            out |= hit


def geodesic_grow(dist, members):
    """Add every vertex on a shortest path between two current members.

    ``members`` is a bool array, modified in place; returns it for chaining.
    """
    mem_idx = np.flatnonzero(members).astype(np.int32)
    if get_backend() == "numba":
        _geodesic_grow_nb(dist, mem_idx, members)
    else:
        _geodesic_grow_np(dist, mem_idx, members)
    return members


# ---------------------------------------------------------------------------
# closure under a binary join table

@njit(cache=True)
def _join_closure_nb(table, mem):  # pragma: no cover - jitted
    changed = True
    while changed:
        changed = False
        idx = np.flatnonzero(mem)
        k = idx.size
        for a in range(k):
            for b in range(a + 1, k):
                w = table[idx[a], idx[b]]
                if not mem[w]:
                    mem[w] = True
                    changed = True
    return mem


def _join_closure_np(table, mem):
    while True:
        idx = np.flatnonzero(mem)
        joins = table[np.ix_(idx, idx)].ravel()
        before = int(mem.sum())
        mem[joins] = True
        if int(mem.sum()) == before:
            return mem


def join_closure(table, members):
    """Close a bool member array under the pairwise join table, in place."""
    if get_backend() == "numba":
        return _join_closure_nb(table, members)
    return _join_closure_np(table, members)
