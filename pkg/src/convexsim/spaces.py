"""Abstract convexity spaces over graphs and semilattices.

A space bundles a ground set 0..N-1 with one of three hull operators:
chordless-path (monophonic) graph convexity, shortest-path (geodesic) graph
convexity, or join closure on a semilattice. Everything downstream
(protocols, oracles, generators) goes through this surface.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

from . import graphs as _g
from . import semilattices as _l
from .bitsets import bits, mask_to_set
from .errors import CapacityError, InputError

MONOPHONIC = "monophonic-graph"
GEODESIC = "geodesic-graph"
ALGEBRAIC = "algebraic-semilattice"
HULL_KINDS = (MONOPHONIC, GEODESIC, ALGEBRAIC)

MAX_DEFINITIONAL_HELLY_VERTICES = 12   # hull enumeration over all 2^N subsets
MAX_HELLY_FAMILY_SETS = 18             # family enumeration over convex sets
MAX_SUBSET_ENUMERATION_VERTICES = 24   # Caratheodory / irredundant sweeps


class ConvexitySpace:
    """Ground set plus hull operator; immutable, hulls memoized per space."""

    def __init__(self, kind: str, backing):
        if kind not in HULL_KINDS:
            raise InputError(f"unknown hull kind {kind!r}")
        if kind == ALGEBRAIC:
            if not isinstance(backing, _l.Semilattice):
                raise InputError("algebraic spaces need a Semilattice backing")
        elif not isinstance(backing, _g.Graph):
            raise InputError("graph spaces need a Graph backing")
        self.kind = kind
        self.backing = backing
        self.n = backing.n
        self._hull_memo: dict[int, int] = {}
        self._full_mask = (1 << self.n) - 1

    def __repr__(self):
        return f"ConvexitySpace({self.kind}, n={self.n})"

    # -- hulls ------------------------------------------------------------

    def hull_mask(self, mask: int) -> int:
        cached = self._hull_memo.get(mask)
        if cached is not None:
            return cached
        if self.kind == MONOPHONIC:
            out = _g.monophonic_hull_mask(self.backing, mask)
        elif self.kind == GEODESIC:
            out = _g.geodesic_hull_mask(self.backing, mask)
        else:
            out = _l.join_closure_mask(self.backing, mask)
        self._hull_memo[mask] = out
        return out

    def hull(self, values) -> frozenset[int]:
        """Least convex superset of ``values``."""
        return mask_to_set(self.hull_mask(self.validated_mask(values)))

    def is_convex_mask(self, mask: int) -> bool:
        return self.hull_mask(mask) == mask

    def validated_mask(self, values) -> int:
        m = 0
        for v in values:
            v = int(v)
            if not 0 <= v < self.n:
                raise InputError(f"value {v} outside ground set 0..{self.n - 1}")
            m |= 1 << v
        return m

    # -- extreme points, free and irredundant sets ------------------------

    def extreme_mask(self, mask: int) -> int:
        out = 0
        for a in bits(mask):
            if not (self.hull_mask(mask & ~(1 << a)) >> a) & 1:
                out |= 1 << a
        return out

    def extreme_points(self, values) -> frozenset[int]:
        """Members whose removal shrinks the hull: a with a outside hull(S - a)."""
        return mask_to_set(self.extreme_mask(self.validated_mask(values)))

    def is_free(self, values) -> bool:
        """Convex and equal to its own extreme points."""
        mask = self.validated_mask(values)
        return self.is_convex_mask(mask) and self.extreme_mask(mask) == mask

    def boundary_mask(self, mask: int) -> int:
        """hull(A) minus the union of hulls of the one-smaller subsets."""
        covered = 0
        for a in bits(mask):
            covered |= self.hull_mask(mask & ~(1 << a))
        return self.hull_mask(mask) & ~covered

    def is_irredundant(self, values) -> bool:
        """Nonempty A whose hull keeps a point outside every deletion hull."""
        mask = self.validated_mask(values)
        if mask == 0:
            raise InputError("irredundancy is undefined for the empty set")
        return self.boundary_mask(mask) != 0

    # -- elimination orders ------------------------------------------------

    @cached_property
    def _elimination_order(self) -> tuple[int, ...] | None:
        order = []
        remaining = self._full_mask
        while remaining:
            ex = self.extreme_mask(remaining)
            if ex == 0:
                return None
            v = (ex & -ex).bit_length() - 1
            order.append(v)
            remaining &= ~(1 << v)
        return tuple(order)

    def convex_elimination_order(self) -> tuple[int, ...] | None:
        """Greedy peel of extreme points, smallest identifier first.

        Every suffix of the returned order is convex. Returns None when some
        nonempty convex remainder has no extreme point, which happens exactly
        when the space is not a convex geometry.
        """
        return self._elimination_order

    def order_position(self) -> dict[int, int]:
        order = self.convex_elimination_order()
        if order is None:
            raise InputError("space admits no convex elimination order")
        return {v: i for i, v in enumerate(order)}

    # -- invariants ----------------------------------------------------------

    def helly_number(self, strategy: str = "auto") -> int:
        """Smallest w such that every w-wise intersecting family of convex
        sets has a common point.

        ``free-set`` uses the maximum free set (valid whenever the space has
        a convex elimination order); ``definitional`` enumerates families of
        convex sets and is capped hard.
        """
        if strategy == "auto":
            strategy = "free-set" if self.convex_elimination_order() is not None else "definitional"
        if strategy == "free-set":
            return self._max_free_set_size()
        if strategy == "definitional":
            return self._helly_definitional()
        raise InputError(f"unknown helly strategy {strategy!r}")

    def _pair_free_graph(self) -> _g.Graph:
        edges = [
            (u, v)
            for u in range(self.n)
            for v in range(u + 1, self.n)
            if self.is_free((u, v))
        ]
        return _g.Graph(self.n, edges)

    def _max_free_set_size(self) -> int:
        # free sets are downward closed and, for all three hull kinds,
        # determined pairwise (cliques of G, chains of the order)
        if self.n == 1:
            return 1
        return _g.clique_number(self._pair_free_graph())

    def _helly_definitional(self) -> int:
        if self.n > MAX_DEFINITIONAL_HELLY_VERTICES:
            raise CapacityError(
                f"definitional Helly capped at {MAX_DEFINITIONAL_HELLY_VERTICES} ground elements"
            )
        convex = sorted({self.hull_mask(m) for m in range(1 << self.n)} - {0})
        c = len(convex)
        if c > MAX_HELLY_FAMILY_SETS:
            raise CapacityError(
                f"family enumeration capped at {MAX_HELLY_FAMILY_SETS} convex sets, space has {c}"
            )
        # Helly number = max size of an inclusion-minimal family with empty
        # intersection (every proper subfamily still intersects), or 1.
        best = 1
        for fam in range(1, 1 << c):
            idx = list(bits(fam))
            if len(idx) <= best:
                continue
            total = self._full_mask
            for i in idx:
                total &= convex[i]
            if total:
                continue
            minimal = True
            for drop in idx:
                rest = self._full_mask
                for i in idx:
                    if i != drop:
                        rest &= convex[i]
                if rest == 0:
                    minimal = False
                    break
            if minimal:
                best = len(idx)
        return best

    def caratheodory_number(self) -> int:
        """Maximum cardinality of an irredundant set (brute force over subsets)."""
        if self.n > MAX_SUBSET_ENUMERATION_VERTICES:
            raise CapacityError(
                f"Caratheodory brute force capped at {MAX_SUBSET_ENUMERATION_VERTICES} ground elements"
            )
        best = 1  # singletons are always irredundant
        for mask in range(1, 1 << self.n):
            if mask.bit_count() > best and self.boundary_mask(mask) != 0:
                best = mask.bit_count()
        return best


def monophonic_space(g: _g.Graph) -> ConvexitySpace:
    return ConvexitySpace(MONOPHONIC, g)


def geodesic_space(g: _g.Graph) -> ConvexitySpace:
    return ConvexitySpace(GEODESIC, g)


def algebraic_space(lat: _l.Semilattice) -> ConvexitySpace:
    return ConvexitySpace(ALGEBRAIC, lat)


# ---------------------------------------------------------------------------
# blocking instances

@dataclass(frozen=True)
class BlockingInstance:
    """Set A with a map mu : A x hull(A) -> A certifying a partition-argument
    lower bound; see verify_blocking_instance for the four conditions."""

    members: tuple[int, ...]
    mu: dict[tuple[int, int], int] = field(compare=False)

    @property
    def m(self) -> int:
        return len(self.members)


def build_blocking_instance(space: ConvexitySpace, values) -> BlockingInstance | None:
    """Construct (A, mu) from a free or irredundant A; None for other sets."""
    mask = space.validated_mask(values)
    members = tuple(bits(mask))
    if len(members) <= 1:
        raise InputError("blocking instances need at least two members")
    hull = tuple(bits(space.hull_mask(mask)))
    mu: dict[tuple[int, int], int] = {}
    if space.is_free(members):
        for x in members:
            for y in hull:  # hull(A) == A for free A
                mu[(x, y)] = y
        return BlockingInstance(members, mu)
    if not space.is_irredundant(members):
        return None
    member_set = set(members)
    for x in members:
        for y in hull:
            if y in member_set:
                mu[(x, y)] = y
                continue
            for b in members:
                if b == x:
                    continue
                if not (space.hull_mask(mask & ~(1 << b)) >> y) & 1:
                    mu[(x, y)] = b
                    break
            else:
                raise InputError(
                    f"no blocking witness for pair ({x},{y}); "
                    "the construction needs one deletion hull avoiding y"
                )
    return BlockingInstance(members, mu)


def verify_blocking_instance(space: ConvexitySpace, inst: BlockingInstance) -> bool:
    """Check the four blocking-instance conditions by direct evaluation."""
    mask = space.validated_mask(inst.members)
    members = tuple(bits(mask))
    if len(members) != inst.m:
        return False
    hull = tuple(bits(space.hull_mask(mask)))
    expected_keys = {(x, y) for x in members for y in hull}
    if set(inst.mu.keys()) != expected_keys:
        raise InputError("mu is not total over A x hull(A)")
    if space.extreme_mask(mask) != mask:
        return False
    member_set = set(members)
    for (x, y), b in inst.mu.items():
        if b not in member_set:
            return False
        if x == y:
            continue
        if b == x:
            return False
        if (space.hull_mask(mask & ~(1 << b)) >> y) & 1:
            return False
    return True
