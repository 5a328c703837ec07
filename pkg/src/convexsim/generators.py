"""Seeded instance generators for graphs and semilattices.

Every generator validates its output (chordality, semilattice axioms,
cycle-freeness) before returning, so a generated file can never violate the
structural assumptions of the protocol that consumes it.
"""

from __future__ import annotations

import random

from .errors import InputError
from .graphs import Graph, clique_number, lexbfs_peo
from .semilattices import Semilattice, is_cycle_free
from .simulation import derive_rng

GRAPH_KINDS = ("path", "star", "cycle", "complete", "random-tree", "random-chordal")
LATTICE_KINDS = ("chain-lattice", "vee-lattice", "subset-lattice-minus-empty",
                 "random-cycle-free-lattice")
ALL_KINDS = GRAPH_KINDS + LATTICE_KINDS


def path_graph(n: int) -> Graph:
    return Graph(n, [(i, i + 1) for i in range(n - 1)])


def star_graph(n: int) -> Graph:
    if n < 2:
        raise InputError("star needs at least two vertices")
    return Graph(n, [(0, i) for i in range(1, n)])


def cycle_graph(n: int) -> Graph:
    if n < 3:
        raise InputError("cycle needs at least three vertices")
    return Graph(n, [(i, (i + 1) % n) for i in range(n)])


def complete_graph(n: int) -> Graph:
    return Graph(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


def random_tree(n: int, seed: int) -> Graph:
    """Uniform random attachment: vertex i hangs off an earlier vertex."""
    rng = derive_rng(seed, "random-tree", n)
    edges = [(rng.randrange(i), i) for i in range(1, n)]
    g = Graph(n, edges)
    assert g.is_tree()
    return g


def random_chordal(n: int, seed: int, max_clique: int = 3) -> Graph:
    """Iterated simplicial construction: each new vertex attaches to a random
    subset of a random existing clique, so the result is chordal with clique
    number exactly ``max_clique`` (when n allows it)."""
    if max_clique < 2:
        raise InputError("max_clique must be at least 2")
    rng = derive_rng(seed, "random-chordal", n, max_clique)
    base = min(max_clique, n)
    edges = [(i, j) for i in range(base) for j in range(i + 1, base)]
    cliques = [tuple(range(base))]
    for v in range(base, n):
        host = list(rng.choice(cliques))
        size = rng.randint(1, min(len(host), max_clique - 1))
        attach = sorted(rng.sample(host, size))
        edges.extend((a, v) for a in attach)
        cliques.append(tuple(attach + [v]))
    g = Graph(n, edges)
    assert lexbfs_peo(g) is not None
    if n >= max_clique:
        assert clique_number(g) == max_clique
    return g


def chain_lattice(n: int) -> Semilattice:
    return Semilattice([[max(u, v) for v in range(n)] for u in range(n)])


def vee_lattice() -> Semilattice:
    # two incomparable elements below a common top
    return Semilattice([[0, 2, 2], [2, 1, 2], [2, 2, 2]])


def subset_lattice_minus_empty(base: int) -> Semilattice:
    """Nonempty subsets of {1..base} under union; element id = bitmask - 1."""
    if base < 1:
        raise InputError("base must be positive")
    n = (1 << base) - 1
    table = [[((u + 1) | (v + 1)) - 1 for v in range(n)] for u in range(n)]
    return Semilattice(table)


def random_cycle_free_lattice(n: int, seed: int) -> Semilattice:
    """Tree-shaped order: element 0 is the top, every other element hangs
    below a random earlier one; the join is the nearest common ancestor."""
    rng = derive_rng(seed, "random-cycle-free", n)
    parent = [None] + [rng.randrange(i) for i in range(1, n)]

    def ancestors(u):
        chain = [u]
        while parent[chain[-1]] is not None:
            chain.append(parent[chain[-1]])
        return chain

    table = [[0] * n for _ in range(n)]
    for u in range(n):
        anc_u = ancestors(u)
        up = set(anc_u)
        for v in range(n):
            if v in up:
                table[u][v] = v
                continue
            w = v
            while w not in up:
                w = parent[w]
            table[u][v] = w
    lat = Semilattice(table)
    assert is_cycle_free(lat)
    return lat


def generate_instance(kind: str, seed: int = 0, size: int = 8,
                      max_clique: int = 3, base: int = 3):
    """Dispatch by kind; returns a Graph or a Semilattice."""
    if kind == "path":
        return path_graph(size)
    if kind == "star":
        return star_graph(size)
    if kind == "cycle":
        return cycle_graph(size)
    if kind == "complete":
        return complete_graph(size)
    if kind == "random-tree":
        return random_tree(size, seed)
    if kind == "random-chordal":
        return random_chordal(size, seed, max_clique)
    if kind == "chain-lattice":
        return chain_lattice(size)
    if kind == "vee-lattice":
        return vee_lattice()
    if kind == "subset-lattice-minus-empty":
        return subset_lattice_minus_empty(base)
    if kind == "random-cycle-free-lattice":
        return random_cycle_free_lattice(size, seed)
    raise InputError(f"unknown instance kind {kind!r}; choose from {ALL_KINDS}")
