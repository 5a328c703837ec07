"""Join-semilattices given by explicit join tables, plus order-theoretic queries.

The loader validates the full semilattice axioms (idempotent, commutative,
associative) so that downstream code never has to reason about implied joins.
"""

from __future__ import annotations

from functools import cached_property
from itertools import combinations

import numpy as np

from . import _kernels
from .bitsets import bits, bool_to_mask, mask_to_bool
from .errors import CapacityError, InputError
from .graphs import Graph, lexbfs_peo

MAX_ASSOCIATIVITY_CHECK = 64   # exhaustive N^3 validation at load
MAX_BREADTH_VERTICES = 16      # breadth brute force enumerates all 2^N subsets


class Semilattice:
    """Finite join-semilattice over elements 0..N-1."""

    def __init__(self, join_table):
        table = np.asarray(join_table, dtype=np.int32)
        if table.ndim != 2 or table.shape[0] != table.shape[1]:
            raise InputError("join table must be square")
        n = table.shape[0]
        if n == 0:
            raise InputError("semilattice needs at least one element")
        if n > MAX_ASSOCIATIVITY_CHECK:
            raise CapacityError(
                f"semilattice loader validates exhaustively up to {MAX_ASSOCIATIVITY_CHECK} elements"
            )
        if table.min() < 0 or table.max() >= n:
            raise InputError("join table entries out of range")
        if not (np.diag(table) == np.arange(n)).all():
            raise InputError("join is not idempotent")
        if not (table == table.T).all():
            raise InputError("join is not commutative")
        # (u+v)+w == u+(v+w), checked for all triples
        left = table[table.reshape(-1), :].reshape(n, n, n)
        right = table[np.arange(n)[:, None, None], table[None, :, :]]
        if not (left == right).all():
            raise InputError("join is not associative")
        self.n = n
        self.join_table = table
        self.join_table.setflags(write=False)

    def __repr__(self):
        return f"Semilattice(n={self.n})"

    def join(self, u: int, v: int) -> int:
        return int(self.join_table[u, v])

    @cached_property
    def leq_matrix(self) -> np.ndarray:
        return self.join_table == np.arange(self.n)[None, :]


def parse_semilattice_text(text: str) -> Semilattice:
    rows = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            rows.append(line)
    if not rows:
        raise InputError("empty semilattice file")
    n = int(rows[0])
    if len(rows) - 1 != n:
        raise InputError(f"header claims {n} rows, file has {len(rows) - 1}")
    table = []
    for line in rows[1:]:
        parts = [int(x) for x in line.split()]
        if len(parts) != n:
            raise InputError(f"join table row has {len(parts)} entries, expected {n}")
        table.append(parts)
    return Semilattice(table)


def format_semilattice_text(lat: Semilattice, comment: str | None = None) -> str:
    out = []
    if comment:
        out.extend(f"# {line}" for line in comment.splitlines())
    out.append(str(lat.n))
    out.extend(" ".join(str(int(x)) for x in row) for row in lat.join_table)
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# order queries

def leq(lat: Semilattice, u: int, v: int) -> bool:
    """u is below v in the order induced by the join."""
    _check_elem(lat, u)
    _check_elem(lat, v)
    return lat.join(u, v) == v


def big_join(lat: Semilattice, elements) -> int:
    """Join of a nonempty collection; order-independent by associativity."""
    items = [int(e) for e in elements]
    if not items:
        raise InputError("join of the empty set is undefined")
    for e in items:
        _check_elem(lat, e)
    acc = items[0]
    for e in items[1:]:
        acc = lat.join(acc, e)
    return acc


def comparability_graph(lat: Semilattice) -> Graph:
    """Edge between every pair of distinct comparable elements."""
    edges = [
        (u, v)
        for u in range(lat.n)
        for v in range(u + 1, lat.n)
        if lat.join(u, v) in (u, v)
    ]
    return Graph(lat.n, edges)


def is_cycle_free(lat: Semilattice) -> bool:
    """True when the comparability graph is chordal."""
    return lexbfs_peo(comparability_graph(lat)) is not None


def height(lat: Semilattice) -> int:
    """Maximum cardinality of a chain."""
    order = sorted(range(lat.n), key=lambda v: int(lat.leq_matrix[:, v].sum()))
    longest = [1] * lat.n
    for i, v in enumerate(order):
        for u in order[:i]:
            if u != v and lat.join(u, v) == v:
                longest[v] = max(longest[v], longest[u] + 1)
    return max(longest)


def breadth(lat: Semilattice) -> int:
    """Smallest b such that the join of any set is already the join of at
    most b of its members. Brute force over all subsets."""
    if lat.n > MAX_BREADTH_VERTICES:
        raise CapacityError(f"breadth brute force capped at {MAX_BREADTH_VERTICES} elements")
    n = lat.n
    join_of = np.zeros(1 << n, dtype=np.int32)
    for m in range(1, 1 << n):
        low = m & -m
        v = low.bit_length() - 1
        rest = m ^ low
        join_of[m] = v if rest == 0 else lat.join(int(join_of[rest]), v)
    for b in range(1, n + 1):
        ok = True
        for m in range(1, 1 << n):
            target = join_of[m]
            members = list(bits(m))
            if len(members) <= b:
                continue
            found = False
            for size in range(1, b + 1):
                for sub in combinations(members, size):
                    acc = sub[0]
                    for e in sub[1:]:
                        acc = lat.join(acc, e)
                    if acc == target:
                        found = True
                        break
                if found:
                    break
            if not found:
                ok = False
                break
        if ok:
            return b
    return n


def cycle_free_elimination_order(lat: Semilattice) -> tuple[int, ...]:
    """Perfect elimination order of the chordal comparability graph; it is a
    convex elimination order of the join closure, and the later comparable
    elements of each element form a chain."""
    peo = lexbfs_peo(comparability_graph(lat))
    if peo is None:
        raise InputError("semilattice is not cycle-free")
    return peo


# ---------------------------------------------------------------------------
# closure under join

def join_closure_mask(lat: Semilattice, mask: int) -> int:
    if mask.bit_count() <= 1:
        return mask
    members = mask_to_bool(mask, lat.n)
    _kernels.join_closure(lat.join_table, members)
    return bool_to_mask(members)


def _check_elem(lat: Semilattice, e: int) -> None:
    if not 0 <= e < lat.n:
        raise InputError(f"element {e} out of range for n={lat.n}")
