"""Independent brute-force oracles and trace validators.

Nothing here calls the primary hull implementations: graph oracles enumerate
simple paths with a plain DFS over their own adjacency maps, semilattice
oracles intersect all join-closed supersets. Deliberately naive; the caps are
the price of independence.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

from .bitsets import bits, mask_of, mask_to_set
from .errors import CapacityError
from .spaces import ALGEBRAIC, MONOPHONIC, ConvexitySpace

ORACLE_MAX_GENERAL_VERTICES = 40    # plain-DFS path enumeration (forests exempt)
ORACLE_MAX_LATTICE_VERTICES = 24    # all-subsets join-closure scan
ORACLE_MAX_INVARIANT_VERTICES = 12  # helly / caratheodory / geometry sweeps
PRUNED_MAX_VERTICES = 128           # chordless-path DFS with pruning
DEFAULT_PATH_BUDGET = 2_000_000


@dataclass
class OracleReport:
    claim: str
    instance: str
    oracle_result: object
    engine_result: object

    @property
    def match(self) -> bool:
        return self.oracle_result == self.engine_result


def _adjacency(g) -> list[set[int]]:
    adj = [set() for _ in range(g.n)]
    for u, v in g.edges:
        adj[u].add(v)
        adj[v].add(u)
    return adj


def _is_forest(g) -> bool:
    parent = list(range(g.n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for u, v in g.edges:
        ru, rv = find(u), find(v)
        if ru == rv:
            return False
        parent[ru] = rv
    return True


def _all_simple_paths_from(adj, u, budget):
    """Every simple path starting at u, by unpruned DFS. Yields vertex lists
    (live: copy before storing)."""
    steps = 0
    path = [u]
    on_path = {u}
    stack = [iter(sorted(adj[u]))]
    while stack:
        it = stack[-1]
        advanced = False
        for w in it:
            steps += 1
            if steps > budget:
                raise CapacityError("oracle path enumeration exceeded its budget")
            if w in on_path:
                continue
            path.append(w)
            on_path.add(w)
            yield path
            stack.append(iter(sorted(adj[w])))
            advanced = True
            break
        if not advanced:
            stack.pop()
            on_path.discard(path.pop())


def _is_chordless(adj, path) -> bool:
    for i, a in enumerate(path):
        for b in path[i + 2:]:
            if b in adj[a]:
                return False
    return True


def _source_intervals(adj, u, kind, budget, targets=None) -> dict[int, frozenset[int]]:
    """For each endpoint v (restricted to ``targets`` when given), the
    vertices on chordless (monophonic) or shortest (geodesic) u-v paths,
    from one exhaustive enumeration of the simple paths leaving u."""
    hits: dict[int, set[int]] = {u: {u}}
    best: dict[int, int] = {u: 0}
    for path in _all_simple_paths_from(adj, u, budget):
        v = path[-1]
        if targets is not None and v not in targets:
            continue
        if kind == MONOPHONIC:
            if _is_chordless(adj, path):
                hits.setdefault(v, set()).update(path)
        else:
            d = len(path) - 1
            if v not in best or d < best[v]:
                best[v] = d
                hits[v] = set(path)
            elif d == best[v]:
                hits[v].update(path)
    return {v: frozenset(s) for v, s in hits.items()}


def oracle_hull_mask(space: ConvexitySpace, mask: int, cache: dict | None = None,
                     budget: int = DEFAULT_PATH_BUDGET) -> int:
    """Definition-level hull recomputation; must equal the primary hull.

    On forests a single interval pass suffices (the union of the pairwise
    paths is the Steiner subtree, which contains every path between its own
    vertices); elsewhere the pass iterates to its fixpoint.
    """
    if cache is None:
        cache = {}
    if space.kind == ALGEBRAIC:
        return _oracle_join_hull_mask(space, mask, cache)
    g = space.backing
    hull_memo: dict[int, int] = cache.setdefault("hulls", {})
    if mask in hull_memo:
        return hull_memo[mask]
    if "forest" not in cache:
        cache["forest"] = _is_forest(g)
    forest = cache["forest"]
    if g.n > ORACLE_MAX_GENERAL_VERTICES and not forest:
        raise CapacityError(
            f"plain-DFS oracle capped at {ORACLE_MAX_GENERAL_VERTICES} vertices on non-forests"
        )
    adj = cache.setdefault("adj", _adjacency(g))
    members = set(bits(mask))
    if forest and g.n > ORACLE_MAX_GENERAL_VERTICES:
        # targeted single pass; caching whole interval maps would be
        # quadratic in n, so only the member pairs are kept
        pairs: dict[tuple[int, int], frozenset[int]] = cache.setdefault("pairs", {})
        ordered = sorted(members)
        grown = set(members)
        for i, u in enumerate(ordered):
            missing = {v for v in ordered[i + 1:] if (u, v) not in pairs}
            if missing:
                found = _source_intervals(adj, u, space.kind, budget, missing)
                for v in missing:
                    pairs[(u, v)] = found.get(v, frozenset({u, v}))
            for v in ordered[i + 1:]:
                grown |= pairs[(u, v)]
        hull_memo[mask] = mask_of(grown)
        return hull_memo[mask]
    sources: dict[int, dict[int, frozenset[int]]] = cache.setdefault("sources", {})
    while True:
        grown = set(members)
        ordered = sorted(members)
        for u in ordered:
            if u not in sources:
                sources[u] = _source_intervals(adj, u, space.kind, budget)
            ivals = sources[u]
            for v in ordered:
                if v > u:
                    grown |= ivals.get(v, {u, v})
        if grown == members or forest:
            hull_memo[mask] = mask_of(grown)
            return hull_memo[mask]
        members = grown


def oracle_hull(space: ConvexitySpace, values, cache: dict | None = None,
                budget: int = DEFAULT_PATH_BUDGET) -> frozenset[int]:
    return mask_to_set(oracle_hull_mask(space, space.validated_mask(values), cache, budget))


def oracle_join_span_mask(space: ConvexitySpace, mask: int) -> int:
    """Joins of all nonempty subsets of the generators; equals the join
    closure, by a route independent of the pairwise fixpoint. Cost 2^|S|,
    so it scales with the generator count rather than the ground set."""
    lat = space.backing
    members = list(bits(mask))
    if len(members) > 20:
        raise CapacityError("join-span oracle capped at 20 generators")
    out = 0
    for sub in range(1, 1 << len(members)):
        acc = None
        for i, v in enumerate(members):
            if (sub >> i) & 1:
                acc = v if acc is None else int(lat.join_table[acc, v])
        out |= 1 << acc
    return out


def _oracle_join_hull_mask(space: ConvexitySpace, mask: int, cache: dict | None = None) -> int:
    """Intersection of all join-closed supersets, scanning every subset."""
    lat = space.backing
    n = lat.n
    if n > ORACLE_MAX_LATTICE_VERTICES:
        raise CapacityError(
            f"join-closure oracle capped at {ORACLE_MAX_LATTICE_VERTICES} elements"
        )
    if mask == 0:
        return 0
    if cache is None:
        cache = {}
    memo: dict[int, int] = cache.setdefault("hulls", {})
    if mask in memo:
        return memo[mask]
    if "closed_sets" in cache:
        closed_sets = cache["closed_sets"]
    elif n <= 16:
        # enumerating the closed sets once makes whole-space sweeps cheap
        closed_sets = cache["closed_sets"] = [
            cand for cand in range(1 << n) if _is_join_closed(lat, cand)
        ]
    else:
        closed_sets = None
    result = (1 << n) - 1
    if closed_sets is not None:
        for cand in closed_sets:
            if cand & mask == mask:
                result &= cand
    else:
        for cand in range(1 << n):
            if cand & mask == mask and cand & result != result and _is_join_closed(lat, cand):
                result &= cand
    memo[mask] = result
    return result


def _is_join_closed(lat, cand: int) -> bool:
    ids = list(bits(cand))
    table = lat.join_table
    for i, u in enumerate(ids):
        for v in ids[i:]:
            if not (cand >> int(table[u, v])) & 1:
                return False
    return True


# ---------------------------------------------------------------------------
# chordless-path DFS with pruning: the mid-size second route for monophonic
# hulls (independent from the primary separator fixpoint)

def pruned_monophonic_hull_mask(g, mask: int, cache: dict | None = None,
                                budget: int = DEFAULT_PATH_BUDGET) -> int:
    if g.n > PRUNED_MAX_VERTICES:
        raise CapacityError(f"pruned DFS hull capped at {PRUNED_MAX_VERTICES} vertices")
    if cache is None:
        cache = {}
    adj = cache.setdefault("adj", _adjacency(g))
    sources: dict[int, dict[int, frozenset[int]]] = cache.setdefault("pruned_sources", {})
    members = set(bits(mask))
    while True:
        grown = set(members)
        ordered = sorted(members)
        for u in ordered:
            if u not in sources:
                sources[u] = _pruned_source_intervals(adj, u, budget)
            ivals = sources[u]
            for v in ordered:
                if v > u:
                    grown |= ivals.get(v, {u, v})
        if grown == members:
            return mask_of(members)
        members = grown


def _pruned_source_intervals(adj, u, budget) -> dict[int, frozenset[int]]:
    """Vertices on chordless u-v paths for every v, by a DFS that only ever
    extends chordless prefixes (the next vertex must avoid the
    neighbourhood of everything before the tip)."""
    hits: dict[int, set[int]] = {u: {u}}
    steps = 0

    def extend(path, on_path, blocked):
        nonlocal steps
        tip = path[-1]
        for w in sorted(adj[tip]):
            steps += 1
            if steps > budget:
                raise CapacityError("pruned DFS exceeded its budget")
            if w in on_path or w in blocked:
                continue
            path.append(w)
            hits.setdefault(w, set()).update(path)
            extend(path, on_path | {w}, blocked | (adj[tip] - {w}))
            path.pop()

    extend([u], {u}, set())
    return {v: frozenset(s) for v, s in hits.items()}


# ---------------------------------------------------------------------------
# invariant oracles

def oracle_extreme_mask(space, mask: int, cache: dict) -> int:
    out = 0
    for a in bits(mask):
        if not (oracle_hull_mask(space, mask & ~(1 << a), cache) >> a) & 1:
            out |= 1 << a
    return out


def oracle_invariants(space: ConvexitySpace, cache: dict | None = None):
    """(helly, caratheodory, is_convex_geometry) by definitional brute force.

    Helly via maximum Helly-independent set (S with empty intersection of the
    deletion hulls), Caratheodory via maximum irredundant set, geometry via
    the hull-of-extreme-points test on every convex set.
    """
    n = space.n
    if n > ORACLE_MAX_INVARIANT_VERTICES:
        raise CapacityError(
            f"invariant oracles capped at {ORACLE_MAX_INVARIANT_VERTICES} ground elements"
        )
    if cache is None:
        cache = {}
    full = (1 << n) - 1
    helly = 1
    cara = 1
    for mask in range(1, 1 << n):
        size = mask.bit_count()
        if size > helly:
            common = full
            for a in bits(mask):
                common &= oracle_hull_mask(space, mask & ~(1 << a), cache)
                if common == 0:
                    break
            if common == 0:
                helly = size
        if size > cara:
            covered = 0
            for a in bits(mask):
                covered |= oracle_hull_mask(space, mask & ~(1 << a), cache)
            if oracle_hull_mask(space, mask, cache) & ~covered:
                cara = size
    convex_sets = {oracle_hull_mask(space, mask, cache) for mask in range(1 << n)}
    geometry = True
    for k in convex_sets:
        if oracle_hull_mask(space, oracle_extreme_mask(space, k, cache), cache) != k:
            geometry = False
            break
    return helly, cara, geometry


# ---------------------------------------------------------------------------
# trace validation

@dataclass
class TraceReport:
    validity_ok: bool
    agreement_ok: bool
    agreement_metric: object
    lemma1_ok: bool
    guarantees_ok: bool
    rounds: int
    decided: bool
    fallback_count: int
    notes: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return (self.validity_ok and self.agreement_ok and self.lemma1_ok
                and self.guarantees_ok and self.decided)


def _bfs_dist(adj, src, n):
    dist = {src: 0}
    frontier = [src]
    while frontier:
        nxt = []
        for u in frontier:
            for w in adj[u]:
                if w not in dist:
                    dist[w] = dist[u] + 1
                    nxt.append(w)
        frontier = nxt
    return dist


def output_diameter(g, outputs) -> int:
    """Diameter of an output set by a validator-local BFS."""
    adj = _adjacency(g)
    values = sorted(set(outputs))
    worst = 0
    for u in values:
        dist = _bfs_dist(adj, u, g.n)
        for v in values:
            if v not in dist:
                return -1  # disconnected outputs
            worst = max(worst, dist[v])
    return worst


def is_chain(lat, outputs) -> bool:
    values = sorted(set(outputs))
    for u, v in combinations(values, 2):
        if lat.join(u, v) not in (u, v):
            return False
    return True


def validity_hull_mask(space: ConvexitySpace, mask: int, cache: dict | None = None) -> int:
    """Oracle hull for validity checks, picking the strongest oracle that
    fits the instance: plain DFS when small or a forest, pruned chordless
    DFS up to the mid-size cap, subset-join span for larger lattices."""
    if space.kind == ALGEBRAIC:
        if space.n <= ORACLE_MAX_LATTICE_VERTICES:
            return _oracle_join_hull_mask(space, mask, cache)
        return oracle_join_span_mask(space, mask)
    g = space.backing
    if g.n <= 16 or _is_forest(g):
        return oracle_hull_mask(space, mask, cache)
    if space.kind == MONOPHONIC and g.n <= PRUNED_MAX_VERTICES:
        # chordless-path counts stay tractable where simple-path counts blow up
        return pruned_monophonic_hull_mask(g, mask, cache)
    if g.n <= ORACLE_MAX_GENERAL_VERTICES:
        return oracle_hull_mask(space, mask, cache)
    raise CapacityError(f"no validity oracle for {space.kind} at n={g.n}")


def validate_trace(trace, scenario, cache: dict | None = None) -> TraceReport:
    """Re-check a finished run: validity against the oracle hull of the
    initial correct inputs, per-protocol agreement, the per-round safe-area
    facts, and the round-model guarantees."""
    from .simulation import check_round_guarantees  # local import, no cycle

    space = scenario.space()
    notes: list[str] = []
    decided = trace.decided_round is not None and trace.error is None

    outputs = sorted(set(trace.outputs.values())) if trace.outputs else []
    if trace.protocol == "sync-consensus":
        metric = len(set(trace.outputs.values()))
        agreement_ok = decided and metric == 1
    elif trace.protocol == "lattice":
        metric = bool(trace.outputs) and is_chain(space.backing, trace.outputs.values())
        agreement_ok = decided and bool(metric)
    else:
        metric = output_diameter(space.backing, trace.outputs.values()) if trace.outputs else -1
        agreement_ok = decided and 0 <= metric <= scenario.agreement_distance

    if trace.outputs:
        x0 = mask_of(scenario.inputs.values())
        try:
            hull0 = validity_hull_mask(space, x0, cache)
            validity_ok = all((hull0 >> y) & 1 for y in trace.outputs.values())
        except CapacityError as exc:
            notes.append(f"validity oracle unavailable: {exc}")
            validity_ok = False
    else:
        validity_ok = False

    lemma1_ok = True
    for rec in trace.rounds:
        x_mask = mask_of(rec.x_before.values())
        hull_x = space.hull_mask(x_mask)
        common = (1 << space.n) - 1
        for i, area in rec.safe_areas.items():
            h = mask_of(area)
            if h == 0 or h & ~hull_x:
                lemma1_ok = False
            common &= h
        if rec.safe_areas and common == 0:
            lemma1_ok = False

    if trace.kind == "async":
        guarantees_ok = check_round_guarantees(trace)
    else:
        guarantees_ok = True

    return TraceReport(
        validity_ok=validity_ok,
        agreement_ok=agreement_ok,
        agreement_metric=metric,
        lemma1_ok=lemma1_ok,
        guarantees_ok=guarantees_ok,
        rounds=trace.rounds_used,
        decided=decided,
        fallback_count=trace.fallback_count,
        notes=notes,
    )
