"""Undirected graphs: metrics, chordality machinery, path-based hulls, clique trees.

Vertices are always 0..N-1. All tie-breaks (Lex-BFS, clique enumeration,
spanning-tree edges) go to the smallest identifier so that every consumer of
the same graph derives identical orders.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import _kernels
from .bitsets import bits, bool_to_mask, mask_of, mask_to_bool, mask_to_set
from .errors import CapacityError, InputError

MAX_BRUTE_CLIQUE_VERTICES = 64   # Bron-Kerbosch fallback on non-chordal graphs
MAX_PTOLEMAIC_VERTICES = 13      # exhaustive induced-subgraph sweep


class Graph:
    """Simple loopless undirected graph with canonical 0-based labels."""

    def __init__(self, n: int, edges):
        if n <= 0:
            raise InputError("graph needs at least one vertex")
        seen = set()
        canon = []
        for u, v in edges:
            u, v = int(u), int(v)
            if not (0 <= u < n and 0 <= v < n):
                raise InputError(f"edge ({u},{v}) out of range for n={n}")
            if u == v:
                raise InputError(f"self-loop at vertex {u}")
            e = (u, v) if u < v else (v, u)
            if e in seen:
                raise InputError(f"parallel edge {e}")
            seen.add(e)
            canon.append(e)
        self.n = n
        self.edges = tuple(sorted(canon))

    def __repr__(self):
        return f"Graph(n={self.n}, m={len(self.edges)})"

    def __eq__(self, other):
        return isinstance(other, Graph) and self.n == other.n and self.edges == other.edges

    def __hash__(self):
        return hash((self.n, self.edges))

    @cached_property
    def adj(self) -> tuple[frozenset[int], ...]:
        sets = [set() for _ in range(self.n)]
        for u, v in self.edges:
            sets[u].add(v)
            sets[v].add(u)
        return tuple(frozenset(s) for s in sets)

    @cached_property
    def nbr_masks(self) -> tuple[int, ...]:
        return tuple(mask_of(s) for s in self.adj)

    @cached_property
    def csr(self) -> tuple[np.ndarray, np.ndarray]:
        indptr = np.zeros(self.n + 1, dtype=np.int32)
        for u in range(self.n):
            indptr[u + 1] = indptr[u] + len(self.adj[u])
        indices = np.empty(indptr[-1], dtype=np.int32)
        for u in range(self.n):
            row = sorted(self.adj[u])
            indices[indptr[u]:indptr[u + 1]] = row
        return indptr, indices

    @cached_property
    def dist(self) -> np.ndarray:
        """All-pairs distance matrix, -1 for unreachable pairs."""
        indptr, indices = self.csr
        return _kernels.all_pairs_distances(indptr, indices, self.n)

    @cached_property
    def _connected(self) -> bool:
        if self.n == 1:
            return True
        indptr, indices = self.csr
        return bool((_kernels.bfs_distances(indptr, indices, self.n, 0) >= 0).all())

    def is_connected(self) -> bool:
        return self._connected

    def degree(self, u: int) -> int:
        return len(self.adj[u])

    @cached_property
    def _tree(self) -> bool:
        return len(self.edges) == self.n - 1 and self.is_connected()

    def is_tree(self) -> bool:
        return self._tree

    @cached_property
    def _peo(self):
        return _compute_peo(self)

    @cached_property
    def _clique_number(self) -> int:
        peo = self._peo
        if peo is None:
            return _max_clique_bruteforce(self)
        pos = {v: i for i, v in enumerate(peo)}
        best = 1
        for v in peo:
            later = sum(1 for u in self.adj[v] if pos[u] > pos[v])
            best = max(best, later + 1)
        return best

    def diameter(self) -> int:
        if not self.is_connected():
            raise InputError("diameter undefined for disconnected graph")
        return int(self.dist.max())

    def radius(self) -> int:
        if not self.is_connected():
            raise InputError("radius undefined for disconnected graph")
        return int(self.dist.max(axis=1).min())


# ---------------------------------------------------------------------------
# text format: first line "N M", then M lines "u v"; '#' starts a comment

def parse_graph_text(text: str) -> Graph:
    rows = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            rows.append(line)
    if not rows:
        raise InputError("empty graph file")
    head = rows[0].split()
    if len(head) != 2:
        raise InputError(f"bad header {rows[0]!r}, expected 'N M'")
    n, m = int(head[0]), int(head[1])
    if len(rows) - 1 != m:
        raise InputError(f"header claims {m} edges, file has {len(rows) - 1}")
    edges = []
    for line in rows[1:]:
        parts = line.split()
        if len(parts) != 2:
            raise InputError(f"bad edge line {line!r}")
        edges.append((int(parts[0]), int(parts[1])))
    return Graph(n, edges)


def format_graph_text(g: Graph, comment: str | None = None) -> str:
    out = []
    if comment:
        out.extend(f"# {line}" for line in comment.splitlines())
    out.append(f"{g.n} {len(g.edges)}")
    out.extend(f"{u} {v}" for u, v in g.edges)
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# metrics

def distances_from(g: Graph, u: int) -> np.ndarray:
    """Shortest-path distances from u; -1 marks unreachable vertices."""
    if not 0 <= u < g.n:
        raise InputError(f"vertex {u} out of range")
    indptr, indices = g.csr
    return _kernels.bfs_distances(indptr, indices, g.n, u)


def induced_distances(g: Graph, members: frozenset[int]) -> dict[int, dict[int, int]]:
    """BFS distances computed inside the induced subgraph (not inherited from g)."""
    table = {}
    for s in members:
        dist = {s: 0}
        frontier = [s]
        while frontier:
            nxt = []
            for u in frontier:
                for v in g.adj[u]:
                    if v in members and v not in dist:
                        dist[v] = dist[u] + 1
                        nxt.append(v)
            frontier = nxt
        table[s] = dist
    return table


def center_of_induced(g: Graph, vertices) -> frozenset[int]:
    """Vertices of minimum eccentricity within the induced subgraph."""
    members = frozenset(int(v) for v in vertices)
    if not members:
        raise InputError("center of empty set undefined")
    for v in members:
        if not 0 <= v < g.n:
            raise InputError(f"vertex {v} out of range")
    table = induced_distances(g, members)
    ecc = {}
    for s in members:
        if len(table[s]) != len(members):
            raise InputError("induced subgraph is disconnected")
        ecc[s] = max(table[s].values())
    r = min(ecc.values())
    return frozenset(v for v in members if ecc[v] == r)


# ---------------------------------------------------------------------------
# Lex-BFS, perfect elimination orders, cliques

def _lexbfs_order(g: Graph) -> list[int]:
    # Partition refinement; buckets hold ascending ids, so every tie breaks
    # to the smallest identifier.
    buckets = [list(range(g.n))]
    order = []
    for _ in range(g.n):
        while buckets and not buckets[0]:
            buckets.pop(0)
        v = buckets[0].pop(0)
        order.append(v)
        nv = g.adj[v]
        refined = []
        for bucket in buckets:
            hit = [w for w in bucket if w in nv]
            miss = [w for w in bucket if w not in nv]
            if hit:
                refined.append(hit)
            if miss:
                refined.append(miss)
        buckets = refined
    return order


def _is_peo(g: Graph, order: list[int]) -> bool:
    pos = {v: i for i, v in enumerate(order)}
    for v in order:
        later = [u for u in g.adj[v] if pos[u] > pos[v]]
        if not later:
            continue
        w = min(later, key=pos.__getitem__)
        rest = mask_of(later) & ~(1 << w)
        if rest & ~g.nbr_masks[w]:
            return False
    return True


def lexbfs_peo(g: Graph) -> tuple[int, ...] | None:
    """Perfect elimination order (each vertex simplicial in its suffix), or
    None when the graph is not chordal."""
    return g._peo


def _compute_peo(g: Graph) -> tuple[int, ...] | None:
    order = list(reversed(_lexbfs_order(g)))
    return tuple(order) if _is_peo(g, order) else None


def _max_clique_bruteforce(g: Graph) -> int:
    if g.n > MAX_BRUTE_CLIQUE_VERTICES:
        raise CapacityError(
            f"brute-force clique number capped at {MAX_BRUTE_CLIQUE_VERTICES} vertices"
        )
    nbr = g.nbr_masks
    best = 0

    def expand(r_size: int, p: int, x: int):
        nonlocal best
        if p == 0 and x == 0:
            best = max(best, r_size)
            return
        if r_size + p.bit_count() <= best:
            return
        pivot_candidates = p | x
        pivot = (pivot_candidates & -pivot_candidates).bit_length() - 1
        ext = p & ~nbr[pivot]
        for v in bits(ext):
            bit = 1 << v
            expand(r_size + 1, p & nbr[v], x & nbr[v])
            p &= ~bit
            x |= bit

    expand(0, (1 << g.n) - 1, 0)
    return best


def clique_number(g: Graph) -> int:
    """Size of a maximum clique; PEO-based on chordal graphs, brute force
    (capped) otherwise."""
    return g._clique_number


def maximal_cliques(g: Graph) -> tuple[frozenset[int], ...]:
    """All maximal cliques of a chordal graph, sorted lexicographically."""
    peo = lexbfs_peo(g)
    if peo is None:
        raise InputError("maximal_cliques requires a chordal graph")
    pos = {v: i for i, v in enumerate(peo)}
    candidates = set()
    for v in peo:
        clique = frozenset({v} | {u for u in g.adj[v] if pos[u] > pos[v]})
        candidates.add(clique)
    cliques = [c for c in candidates
               if not any(c < other for other in candidates)]
    return tuple(sorted(cliques, key=sorted))


# ---------------------------------------------------------------------------
# hulls
#
# Monophonic (chordless-path) hull: grow S until, for every connected
# component R of G - S, the neighbourhood N(R) & S is a clique. While some
# component violates this, a chordless path between two non-adjacent
# attachment vertices runs through R, and a shortest x-y path inside
# G[R + {x,y}] is such a path; its vertices belong to the hull. Conversely,
# once every attachment set is a clique, no chordless path between members
# can leave S, so S is convex. The fixpoint is therefore exactly the hull.

def monophonic_hull_mask(g: Graph, mask: int) -> int:
    if mask.bit_count() <= 1:
        return mask
    indptr, indices = g.csr
    members = mask_to_bool(mask, g.n)
    nbr = g.nbr_masks
    while True:
        member_mask = bool_to_mask(members)
        active = ~members
        labels, count = _kernels.masked_components(indptr, indices, active)
        grew = False
        for comp in range(count):
            comp_vertices = np.flatnonzero(labels == comp)
            attach = 0
            for v in comp_vertices:
                attach |= nbr[int(v)]
            attach &= member_mask
            pair = _first_nonadjacent_pair(attach, nbr)
            if pair is None:
                continue
            # a shortest x-y path inside G[R + {x,y}] is chordless in G,
            # so all its vertices belong to the hull
            x, y = pair
            allowed = np.zeros(g.n, dtype=bool)
            allowed[comp_vertices] = True
            allowed[x] = True
            allowed[y] = True
            parent = _kernels.masked_bfs_parents(indptr, indices, allowed, x)
            v = y
            while v != x:
                members[v] = True
                v = int(parent[v])
            grew = True
            break
        if not grew:
            return member_mask


def _first_nonadjacent_pair(mask: int, nbr) -> tuple[int, int] | None:
    ids = list(bits(mask))
    for i, x in enumerate(ids):
        missing = mask & ~nbr[x] & ~(1 << x)
        if missing:
            for y in bits(missing):
                if y > x:
                    return x, y
                # pairs with y < x were already checked from y's side
    return None


def monophonic_hull(g: Graph, vertices) -> frozenset[int]:
    """Least vertex set containing ``vertices`` and every chordless path
    between two of its members."""
    return mask_to_set(monophonic_hull_mask(g, _validated_mask(g, vertices)))


def geodesic_hull_mask(g: Graph, mask: int) -> int:
    if mask.bit_count() <= 1:
        return mask
    members = mask_to_bool(mask, g.n)
    dist = g.dist
    if g.is_tree():
        # one pass suffices: the union of pairwise paths is the Steiner
        # subtree, which is already convex
        _kernels.geodesic_grow(dist, members)
        return bool_to_mask(members)
    while True:
        before = int(members.sum())
        _kernels.geodesic_grow(dist, members)
        if int(members.sum()) == before:
            return bool_to_mask(members)


def geodesic_hull(g: Graph, vertices) -> frozenset[int]:
    """Least vertex set containing ``vertices`` closed under shortest-path
    intervals (v is between u and w iff d(u,v)+d(v,w)=d(u,w))."""
    return mask_to_set(geodesic_hull_mask(g, _validated_mask(g, vertices)))


def _validated_mask(g: Graph, vertices) -> int:
    m = 0
    for v in vertices:
        v = int(v)
        if not 0 <= v < g.n:
            raise InputError(f"vertex {v} out of range for n={g.n}")
        m |= 1 << v
    return m


# ---------------------------------------------------------------------------
# clique trees

@dataclass(frozen=True)
class CliqueTree:
    tree: Graph
    bags: tuple[frozenset[int], ...]
    expanded: bool = False

    def __post_init__(self):
        if self.tree.n != len(self.bags):
            raise InputError("one bag per tree node required")


def validate_clique_tree(ct: CliqueTree, g: Graph) -> None:
    """Raise InputError unless ct is a valid (expanded) clique tree of g."""
    t = ct.tree
    if not t.is_connected() or len(t.edges) != t.n - 1:
        raise InputError("decomposition tree must be a tree")
    covered = set().union(*ct.bags) if ct.bags else set()
    if covered != set(range(g.n)):
        raise InputError("bags do not cover all vertices")
    for u, v in g.edges:
        if not any(u in b and v in b for b in ct.bags):
            raise InputError(f"edge ({u},{v}) not covered by any bag")
    for v in range(g.n):
        holding = [i for i, b in enumerate(ct.bags) if v in b]
        # the bags containing v must induce a connected subtree
        reach = {holding[0]}
        frontier = [holding[0]]
        holding_set = set(holding)
        while frontier:
            nxt = []
            for a in frontier:
                for b in t.adj[a]:
                    if b in holding_set and b not in reach:
                        reach.add(b)
                        nxt.append(b)
            frontier = nxt
        if reach != holding_set:
            raise InputError(f"bags containing vertex {v} are not connected in the tree")
    if ct.expanded:
        for a, b in t.edges:
            if not (ct.bags[a] <= ct.bags[b] or ct.bags[b] <= ct.bags[a]):
                raise InputError(f"tree edge ({a},{b}) lacks nested bags")
    else:
        cliques = set(maximal_cliques(g))
        for i, bag in enumerate(ct.bags):
            if bag not in cliques:
                raise InputError(f"bag {i} is not a maximal clique")


def build_clique_tree(g: Graph) -> CliqueTree:
    """Clique tree of a connected chordal graph: maximum-weight spanning tree
    of the clique graph, weights |intersection|, ties by lexicographic edge."""
    if not g.is_connected():
        raise InputError("clique tree requires a connected graph")
    cliques = maximal_cliques(g)  # raises InputError when not chordal
    k = len(cliques)
    if k == 1:
        ct = CliqueTree(Graph(1, []), cliques, expanded=False)
        validate_clique_tree(ct, g)
        return ct
    weighted = []
    for i in range(k):
        for j in range(i + 1, k):
            w = len(cliques[i] & cliques[j])
            if w > 0:
                weighted.append((-w, i, j))
    weighted.sort()
    parent = list(range(k))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    tree_edges = []
    for _, i, j in weighted:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[ri] = rj
            tree_edges.append((i, j))
            if len(tree_edges) == k - 1:
                break
    if len(tree_edges) != k - 1:
        raise InputError("clique graph is disconnected; graph must be connected")
    ct = CliqueTree(Graph(k, tree_edges), cliques, expanded=False)
    validate_clique_tree(ct, g)
    return ct


def expand_clique_tree(ct: CliqueTree) -> CliqueTree:
    """Subdivide every tree edge with a separator node carrying the bag
    intersection; afterwards every tree edge joins nested bags."""
    if ct.expanded:
        raise InputError("clique tree is already expanded")
    k = ct.tree.n
    if k == 1:
        return CliqueTree(ct.tree, ct.bags, expanded=True)
    bags = list(ct.bags)
    edges = []
    for rank, (a, b) in enumerate(sorted(ct.tree.edges)):
        sep = k + rank
        bags.append(ct.bags[a] & ct.bags[b])
        edges.append((a, sep))
        edges.append((sep, b))
    return CliqueTree(Graph(k + len(ct.tree.edges), edges), tuple(bags), expanded=True)


# ---------------------------------------------------------------------------
# Ptolemaic test

def is_ptolemaic(g: Graph) -> bool:
    """Chordal plus distance-hereditary, the latter by exhaustive check that
    every connected induced subgraph preserves distances."""
    if g.n > MAX_PTOLEMAIC_VERTICES:
        raise CapacityError(
            f"is_ptolemaic brute force capped at {MAX_PTOLEMAIC_VERTICES} vertices"
        )
    if lexbfs_peo(g) is None:
        return False
    full = g.dist
    for mask in range(1, 1 << g.n):
        members = frozenset(bits(mask))
        if len(members) < 3:
            continue
        table = induced_distances(g, members)
        first = next(iter(members))
        if len(table[first]) != len(members):
            continue  # disconnected subset
        for u in members:
            for v in members:
                if table[u][v] != int(full[u, v]):
                    return False
    return True
