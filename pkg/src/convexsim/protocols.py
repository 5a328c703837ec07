"""Per-processor protocol logic: safe areas and the four agreement protocols.

Each protocol object is immutable shared configuration (spaces, elimination
orders, decision horizons); per-processor state lives in ProcessorState and
is advanced by pure step functions, so the scheduler owns all sequencing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from itertools import combinations

from .bitsets import bits, mask_to_sorted
from .errors import CapacityError, InputError, PreconditionError, ProtocolViolationError
from .graphs import Graph, lexbfs_peo
from .semilattices import Semilattice, big_join, cycle_free_elimination_order
from .spaces import ALGEBRAIC, ConvexitySpace, monophonic_space

MAX_SAFE_AREA_SENDERS = 20
MAX_SAFE_AREA_SUBSETS = 200_000

BOTTOM = None  # empty message


@dataclass(frozen=True)
class ProcessorState:
    pid: int
    round: int
    value: int
    bag: int | None = None
    decided: bool = False
    output: int | None = None


@dataclass
class RoundInbox:
    """Received round-t messages: sender -> payload, absent senders omitted."""

    payloads: dict[int, object]

    @property
    def senders(self) -> tuple[int, ...]:
        return tuple(sorted(self.payloads))

    def project(self, index: int) -> dict[int, int]:
        return {j: p[index] for j, p in self.payloads.items()}


# ---------------------------------------------------------------------------
# the safe-area step

def safe_area_mask(space: ConvexitySpace, values: dict[int, int], f: int) -> int:
    """Intersection of the hulls of the value sets of every (|P_i|-f)-subset
    of the heard-from processors; empty intersections short-circuit."""
    senders = sorted(values)
    if len(senders) <= f:
        raise PreconditionError(
            f"safe area needs more than f={f} senders, got {len(senders)}"
        )
    if len(senders) > MAX_SAFE_AREA_SENDERS:
        raise CapacityError(f"safe area capped at {MAX_SAFE_AREA_SENDERS} senders")
    if math.comb(len(senders), f) > MAX_SAFE_AREA_SUBSETS:
        raise CapacityError("safe area subset enumeration too large")
    for j in senders:
        v = values[j]
        if not 0 <= v < space.n:
            raise InputError(f"value {v} from sender {j} outside the ground set")
    seen: set[int] = set()
    result = (1 << space.n) - 1
    for dropped in combinations(senders, f):
        gone = set(dropped)
        vmask = 0
        for j in senders:
            if j not in gone:
                vmask |= 1 << values[j]
        if vmask in seen:
            continue
        seen.add(vmask)
        result &= space.hull_mask(vmask)
        if result == 0:
            return 0
    return result


def safe_area(space: ConvexitySpace, inbox: RoundInbox, f: int) -> frozenset[int]:
    values = {j: p for j, p in inbox.payloads.items() if p is not BOTTOM}
    return frozenset(bits(safe_area_mask(space, values, f)))


# ---------------------------------------------------------------------------
# trees

class TreeAgreement:
    """Iterated safe-area step on a tree: move to the latest vertex (in the
    shared elimination labelling) of the center of the safe area."""

    def __init__(self, space: ConvexitySpace):
        if space.kind == ALGEBRAIC:
            raise InputError("tree protocol needs a graph space")
        g: Graph = space.backing
        if not g.is_tree():
            raise InputError("tree protocol requires a tree graph")
        self.space = space
        self.graph = g
        peo = lexbfs_peo(g)
        assert peo is not None  # trees are chordal
        self.position = {v: i for i, v in enumerate(peo)}
        diameter = max(g.diameter(), 1)
        self.horizon = math.ceil(math.log2(diameter)) + 2

    def phi(self, h_mask: int) -> int:
        """Latest center vertex of the (convex, hence isometric) safe area."""
        members = mask_to_sorted(h_mask)
        if len(members) == 1:
            return members[0]
        dist = self.graph.dist
        # two-sweep: eccentricities inside a subtree come from a diametral pair
        a = members[0]
        u = max(members, key=lambda w: dist[a, w])
        v = max(members, key=lambda w: dist[u, w])
        best_ecc = None
        center = []
        for w in members:
            ecc = max(dist[u, w], dist[v, w])
            if best_ecc is None or ecc < best_ecc:
                best_ecc = ecc
                center = [w]
            elif ecc == best_ecc:
                center.append(w)
        return max(center, key=self.position.__getitem__)

    def step(self, values: dict[int, int], f: int) -> tuple[int, int]:
        """One round: returns (new value, safe-area mask)."""
        h = safe_area_mask(self.space, values, f)
        if h == 0:
            raise ProtocolViolationError("empty safe area in tree step")
        return self.phi(h), h


class TreeProtocol:
    """Driver wrapper: plain value payloads, tree horizon."""

    name = "tree"
    payload_arity = 1

    def __init__(self, space: ConvexitySpace, f: int):
        self.engine = TreeAgreement(space)
        self.space = space
        self.f = f
        self.horizon = self.engine.horizon

    def initial_state(self, pid: int, value: int) -> ProcessorState:
        return ProcessorState(pid=pid, round=0, value=value)

    def outgoing(self, state: ProcessorState):
        return state.value

    def step(self, state: ProcessorState, inbox: RoundInbox):
        values = {j: p for j, p in inbox.payloads.items() if p is not BOTTOM}
        value, h = self.engine.step(values, self.f)
        info = {"safe_area": mask_to_sorted(h)}
        return replace(state, round=state.round + 1, value=value), info


# ---------------------------------------------------------------------------
# chordal graphs via expanded clique trees

class ChordalProtocol:
    """Couple a tree run over the expanded clique tree (bag coordinates)
    with safe areas in the graph itself (value coordinates)."""

    name = "chordal"
    payload_arity = 2

    def __init__(self, space: ConvexitySpace, clique_tree, f: int):
        if not clique_tree.expanded:
            raise InputError("chordal protocol needs an expanded clique tree")
        self.space = space
        self.graph = space.backing
        self.f = f
        self.bags = clique_tree.bags
        self.bag_masks = tuple(space.validated_mask(b) for b in clique_tree.bags)
        self.tree = clique_tree.tree
        self.tree_engine = TreeAgreement(monophonic_space(clique_tree.tree))
        peo = lexbfs_peo(self.graph)
        if peo is None:
            raise InputError("chordal protocol requires a chordal graph")
        self.position = {v: i for i, v in enumerate(peo)}
        self.horizon = self.tree_engine.horizon

    def initial_bag(self, value: int) -> int:
        for b, bag in enumerate(self.bags):
            if value in bag:
                return b
        raise InputError(f"value {value} not covered by any bag")

    def initial_state(self, pid: int, value: int) -> ProcessorState:
        return ProcessorState(pid=pid, round=0, value=value, bag=self.initial_bag(value))

    def outgoing(self, state: ProcessorState):
        return (state.value, state.bag)

    def _pick_value(self, bag: int, h_graph: int) -> int | None:
        joint = self.bag_masks[bag] & h_graph
        if joint == 0:
            return None
        return min(bits(joint), key=self.position.__getitem__)

    def step(self, state: ProcessorState, inbox: RoundInbox):
        bag_values = {j: p[1] for j, p in inbox.payloads.items() if p is not BOTTOM}
        graph_values = {j: p[0] for j, p in inbox.payloads.items() if p is not BOTTOM}
        next_bag, h_tree = self.tree_engine.step(bag_values, self.f)
        h_graph = safe_area_mask(self.space, graph_values, self.f)
        if h_graph == 0:
            raise ProtocolViolationError("empty graph safe area in chordal step")
        fallback = False
        value = self._pick_value(next_bag, h_graph)
        if value is None:
            # The chosen bag misses the graph safe area. That can happen at
            # the fringe of the tree safe area (lying senders may pair a bag
            # with an unrelated value and pin the bag coordinate to a leaf).
            # Move to the nearest usable bag, preferring the tree safe area;
            # the graph safe area is nonempty and the bags cover the graph,
            # so the outer search always succeeds and the new value stays
            # inside the safe area.
            fallback = True
            tree_dist = self.tree.dist
            candidates = [
                b for b in bits(h_tree) if (self.bag_masks[b] & h_graph) != 0
            ]
            if not candidates:
                candidates = [
                    b for b in range(self.tree.n)
                    if (self.bag_masks[b] & h_graph) != 0
                ]
            next_bag = min(candidates, key=lambda b: (int(tree_dist[next_bag, b]), b))
            value = self._pick_value(next_bag, h_graph)
        info = {
            "safe_area": mask_to_sorted(h_graph),
            "tree_safe_area": mask_to_sorted(h_tree),
            "fallback": fallback,
        }
        return replace(state, round=state.round + 1, value=value, bag=next_bag), info


# ---------------------------------------------------------------------------
# cycle-free semilattices

class LatticeProtocol:
    """Safe-area iteration on the join closure: join everything while the
    area has a non-extreme point, otherwise take the latest element."""

    name = "lattice"
    payload_arity = 1

    def __init__(self, space: ConvexitySpace, f: int):
        if space.kind != ALGEBRAIC:
            raise InputError("lattice protocol needs an algebraic space")
        self.space = space
        self.lattice: Semilattice = space.backing
        self.f = f
        order = cycle_free_elimination_order(self.lattice)
        self.position = {v: i for i, v in enumerate(order)}
        self.horizon = self.lattice.n

    def initial_state(self, pid: int, value: int) -> ProcessorState:
        return ProcessorState(pid=pid, round=0, value=value)

    def outgoing(self, state: ProcessorState):
        return state.value

    def phi(self, h_mask: int) -> int:
        members = mask_to_sorted(h_mask)
        if self.space.extreme_mask(h_mask) != h_mask:
            return big_join(self.lattice, members)
        return max(members, key=self.position.__getitem__)

    def step(self, state: ProcessorState, inbox: RoundInbox):
        values = {j: p for j, p in inbox.payloads.items() if p is not BOTTOM}
        h = safe_area_mask(self.space, values, self.f)
        if h == 0:
            raise ProtocolViolationError("empty safe area in lattice step")
        info = {"safe_area": mask_to_sorted(h)}
        return replace(state, round=state.round + 1, value=self.phi(h)), info


def lattice_step(space: ConvexitySpace, inbox: RoundInbox, f: int) -> int:
    """One-shot form of the lattice update, for direct use."""
    proto = LatticeProtocol(space, f)
    values = {j: p for j, p in inbox.payloads.items() if p is not BOTTOM}
    h = safe_area_mask(space, values, f)
    if h == 0:
        raise ProtocolViolationError("empty safe area in lattice step")
    return proto.phi(h)


def tree_step(space: ConvexitySpace, inbox: RoundInbox, f: int) -> int:
    """One-shot form of the tree update, for direct use."""
    engine = TreeAgreement(space)
    values = {j: p for j, p in inbox.payloads.items() if p is not BOTTOM}
    value, _ = engine.step(values, f)
    return value


def chordal_step(space: ConvexitySpace, clique_tree, value_inbox: RoundInbox,
                 bag_inbox: RoundInbox, f: int, current: ProcessorState | None = None,
                 ) -> tuple[int, int]:
    """One-shot form of the chordal update: returns (value, bag)."""
    proto = ChordalProtocol(space, clique_tree, f)
    payloads = {}
    for j, v in value_inbox.payloads.items():
        b = bag_inbox.payloads.get(j)
        payloads[j] = BOTTOM if v is BOTTOM or b is BOTTOM else (v, b)
    state = current or ProcessorState(pid=-1, round=0, value=0, bag=0)
    new, _ = proto.step(state, RoundInbox(payloads))
    return new.value, new.bag


# ---------------------------------------------------------------------------
# synchronous multivalued Byzantine agreement
#
# Round 0: the designated sender broadcasts its message. Rounds 1-2 reduce
# the multivalued problem to a binary one (at most one candidate survives
# among correct processors). The remaining 3(f+1) rounds run a phase-king
# loop on the bit "my candidate was overwhelmingly confirmed"; the king of
# each phase breaks symmetry when no quorum formed. Total rounds 3f+6.

BA_SENDER_ROUND = 0
BA_ECHO_ROUND = 1
BA_CONFIRM_ROUND = 2


def ba_total_rounds(f: int) -> int:
    return 3 + 3 * (f + 1)


class BAProcessor:
    """One correct processor's state inside one BA instance."""

    def __init__(self, n: int, f: int, sender: int, me: int, domain: int,
                 message: int | None):
        self.n = n
        self.f = f
        self.sender = sender
        self.me = me
        self.domain = domain
        self.message = message  # own input when me == sender
        self.v: int | None = None       # value attributed to the sender
        self.candidate: int | None = None
        self.bit = 0
        self.proposal: int | None = None
        self.proposals_heard = 0

    # -- outgoing ---------------------------------------------------------

    def outgoing(self, rnd: int):
        if rnd == BA_SENDER_ROUND:
            return self.message if self.me == self.sender else None
        if rnd == BA_ECHO_ROUND:
            return self.v
        if rnd == BA_CONFIRM_ROUND:
            return self.v
        phase, sub = divmod(rnd - 3, 3)
        if sub == 0:
            return self.bit
        if sub == 1:
            return self.proposal
        return self.bit if self.me == phase % self.n else None

    # -- incoming ---------------------------------------------------------

    def receive(self, rnd: int, msgs: dict[int, object]):
        if rnd == BA_SENDER_ROUND:
            got = msgs.get(self.sender)
            self.v = got if self._valid_value(got) else None
        elif rnd == BA_ECHO_ROUND:
            counts = self._count_values(msgs)
            top = self._argmax(counts)
            self.v = top if top is not None and counts[top] >= self.n - self.f else None
        elif rnd == BA_CONFIRM_ROUND:
            counts = self._count_values(msgs)
            top = self._argmax(counts)
            self.candidate = top
            self.bit = 1 if top is not None and counts[top] >= self.n - self.f else 0
        else:
            phase, sub = divmod(rnd - 3, 3)
            if sub == 0:
                ones = sum(1 for m in msgs.values() if m == 1)
                zeros = sum(1 for m in msgs.values() if m == 0)
                if zeros >= self.n - self.f:
                    self.proposal = 0
                elif ones >= self.n - self.f:
                    self.proposal = 1
                else:
                    self.proposal = None
            elif sub == 1:
                zeros = sum(1 for m in msgs.values() if m == 0)
                ones = sum(1 for m in msgs.values() if m == 1)
                if zeros > self.f:
                    self.bit = 0
                elif ones > self.f:
                    self.bit = 1
                self.proposals_heard = zeros + ones
            else:
                king = phase % self.n
                if self.proposals_heard < self.n - self.f:
                    got = msgs.get(king)
                    self.bit = got if got in (0, 1) else 0

    def decision(self) -> int | None:
        if self.bit == 1 and self.candidate is not None:
            return self.candidate
        return None

    # -- helpers ------------------------------------------------------------

    def _valid_value(self, m) -> bool:
        return isinstance(m, int) and 0 <= m < self.domain

    def _count_values(self, msgs) -> dict[int, int]:
        counts: dict[int, int] = {}
        for m in msgs.values():
            if self._valid_value(m):
                counts[m] = counts.get(m, 0) + 1
        return counts

    @staticmethod
    def _argmax(counts: dict[int, int]) -> int | None:
        if not counts:
            return None
        best = max(counts.values())
        return min(v for v, c in counts.items() if c == best)


def consensus_area_mask(space: ConvexitySpace, decided: dict[int, int], f: int) -> int:
    """Intersection of the hulls of all (n-f)-subsets of the decided vector."""
    return safe_area_mask(space, decided, f)


def consensus_output(space: ConvexitySpace, decided: dict[int, int], f: int) -> int:
    """Deterministic output from the commonly decided message vector: the
    smallest identifier inside the consensus area."""
    h = consensus_area_mask(space, decided, f)
    if h == 0:
        raise ProtocolViolationError("empty consensus area; resilience too low")
    return next(bits(h))


def multivalued_ba(n: int, f: int, sender: int, message: int | None, domain: int,
                   byzantine=(), byzantine_fn=None, ba_cls=None) -> dict[int, int | None]:
    """Drive one agreement instance to completion; returns each correct
    processor's decision (None meaning no message).

    All correct processors decide the same element; when the sender is
    correct they decide its message. ``byzantine_fn(round, sender, receiver)``
    supplies the faulty processors' per-receiver messages.
    """
    cls = ba_cls or BAProcessor
    byz = set(byzantine)
    correct = [i for i in range(n) if i not in byz]
    procs = {i: cls(n, f, sender, i, domain, message if i == sender else None)
             for i in correct}
    for rnd in range(ba_total_rounds(f)):
        out = {i: procs[i].outgoing(rnd) for i in correct}
        for i in correct:
            msgs = {}
            for j in range(n):
                if j in byz:
                    msgs[j] = byzantine_fn(rnd, j, i) if byzantine_fn else None
                else:
                    msgs[j] = out[j]
            procs[i].receive(rnd, msgs)
    return {i: procs[i].decision() for i in correct}


def sync_convex_consensus(space: ConvexitySpace, inputs: dict[int, int], f: int,
                          byzantine=(), byzantine_fn=None, ba_cls=None,
                          default: int = 0) -> dict[int, int]:
    """Exact agreement on one hull point: n parallel agreement instances
    (one per sender), undecided slots mapped to the default value, then the
    shared output map. Needs n > max(3f, w*f) for the space's Helly number w.

    ``byzantine_fn(instance, round, sender, receiver)`` supplies faulty
    messages; ``ba_cls`` swaps in any subroutine honoring the same contract.
    """
    byz = set(byzantine)
    n = len(inputs) + len(byz)
    correct = [i for i in range(n) if i not in byz]
    if set(inputs) != set(correct):
        raise InputError("inputs must cover exactly the correct processors")
    decided: dict[int, int] = {}
    for s in range(n):
        fn = (lambda rnd, j, i, s=s: byzantine_fn(s, rnd, j, i)) if byzantine_fn else None
        decisions = multivalued_ba(n, f, s, inputs.get(s), space.n,
                                   byzantine=byz, byzantine_fn=fn, ba_cls=ba_cls)
        values = set(decisions.values())
        if len(values) != 1:
            raise ProtocolViolationError(f"agreement subroutine split on instance {s}")
        d = values.pop()
        if s in inputs and d != inputs[s]:
            raise ProtocolViolationError(f"agreement subroutine broke sender validity on {s}")
        decided[s] = default if d is None else d
    y = consensus_output(space, decided, f)
    return {i: y for i in correct}
