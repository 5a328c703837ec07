"""Deterministic simulation of the Byzantine round models.

Asynchronous runs: per round the adversary proposes delivery sets and the
faulty senders' values, subject to the three model guarantees (enforced by
the scheduler, which falls back to full delivery on violation):

  1. every correct processor hears at least n-f senders,
  2. any two correct processors share at least n-f senders,
  3. a faulty sender shows at most one value per round across receivers.

Synchronous runs drive the parallel Byzantine-agreement instances of the
convex consensus protocol in lock step; there faulty senders may equivocate
freely.

All randomness flows from the scenario seed through a counter-based stream
derivation (blake2b of seed and coordinates), so runs are replayable
byte for byte.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field, replace
from functools import lru_cache

from .bitsets import mask_to_sorted
from .errors import InputError, ProtocolViolationError
from .graphs import clique_number, parse_graph_text, build_clique_tree, expand_clique_tree
from .protocols import (
    BOTTOM,
    BAProcessor,
    ChordalProtocol,
    LatticeProtocol,
    RoundInbox,
    TreeProtocol,
    ba_total_rounds,
    consensus_area_mask,
    consensus_output,
)
from .semilattices import height, is_cycle_free, parse_semilattice_text
from .spaces import (
    ALGEBRAIC,
    GEODESIC,
    MONOPHONIC,
    ConvexitySpace,
    algebraic_space,
    geodesic_space,
    monophonic_space,
)

PROTOCOLS = ("tree", "chordal", "lattice", "sync-consensus")
ADVERSARIES = ("silent", "consistent-lie", "partition-delay", "equivocate",
               "replay-then-corrupt")


def derive_rng(seed: int, *coords) -> random.Random:
    """Independent stream for (seed, coords); stable across platforms."""
    h = hashlib.blake2b(digest_size=8)
    h.update((int(seed) & (2 ** 64 - 1)).to_bytes(8, "little", signed=False))
    for c in coords:
        h.update(str(c).encode() + b"\x00")
    return random.Random(int.from_bytes(h.digest(), "little"))


# ---------------------------------------------------------------------------
# scenarios

@dataclass(frozen=True)
class Scenario:
    scenario_id: str
    space_kind: str              # 'graph' | 'semilattice'
    hull_kind: str               # hull kind constant
    instance_text: str           # graph / semilattice text format
    protocol: str
    n: int
    f: int
    faulty: tuple[int, ...]
    inputs: dict[int, int]       # correct processor -> input value
    adversary: str
    adversary_params: dict = field(default_factory=dict)
    seed: int = 0
    round_cap: int = 64
    agreement_distance: int = 1

    def __post_init__(self):
        if self.protocol not in PROTOCOLS:
            raise InputError(f"unknown protocol {self.protocol!r}")
        if self.adversary not in ADVERSARIES:
            raise InputError(f"unknown adversary {self.adversary!r}")
        if self.n <= 0 or self.f < 0:
            raise InputError("need n > 0 and f >= 0")
        if len(self.faulty) > self.f:
            raise InputError("faulty set larger than f")
        if any(not 0 <= p < self.n for p in self.faulty):
            raise InputError("faulty ids out of range")
        correct = set(range(self.n)) - set(self.faulty)
        if set(self.inputs) != correct:
            raise InputError("inputs must cover exactly the correct processors")
        ground = self.ground_size()
        for i, v in self.inputs.items():
            if not 0 <= v < ground:
                raise InputError(f"input {v} of processor {i} outside the ground set")

    def backing(self):
        return _parse_instance(self.space_kind, self.instance_text)

    def ground_size(self) -> int:
        return self.backing().n

    def space(self) -> ConvexitySpace:
        return _space_for(self.space_kind, self.hull_kind, self.instance_text)

    def correct(self) -> tuple[int, ...]:
        return tuple(sorted(set(range(self.n)) - set(self.faulty)))

    def resilience_bound(self) -> int:
        """Minimal n that makes this scenario compliant."""
        if self.protocol == "tree":
            return 3 * self.f + 1
        if self.protocol == "chordal":
            return (clique_number(self.backing()) + 1) * self.f + 1
        if self.protocol == "lattice":
            return (height(self.backing()) + 1) * self.f + 1
        w = self.space().helly_number()
        return max(3 * self.f, w * self.f) + 1

    def compliant(self) -> bool:
        if self.protocol == "lattice" and not is_cycle_free(self.backing()):
            return False
        return self.n >= self.resilience_bound()


@lru_cache(maxsize=256)
def _parse_instance(space_kind: str, text: str):
    if space_kind == "graph":
        return parse_graph_text(text)
    if space_kind == "semilattice":
        return parse_semilattice_text(text)
    raise InputError(f"unknown space kind {space_kind!r}")


@lru_cache(maxsize=256)
def _space_for(space_kind: str, hull_kind: str, text: str) -> ConvexitySpace:
    backing = _parse_instance(space_kind, text)
    if hull_kind == MONOPHONIC:
        return monophonic_space(backing)
    if hull_kind == GEODESIC:
        return geodesic_space(backing)
    if hull_kind == ALGEBRAIC:
        return algebraic_space(backing)
    raise InputError(f"unknown hull kind {hull_kind!r}")


@lru_cache(maxsize=128)
def _expanded_clique_tree(text: str):
    g = _parse_instance("graph", text)
    return expand_clique_tree(build_clique_tree(g))


def build_protocol(scenario: Scenario):
    space = scenario.space()
    if scenario.protocol == "tree":
        return TreeProtocol(space, scenario.f)
    if scenario.protocol == "chordal":
        ct = _expanded_clique_tree(scenario.instance_text)
        return ChordalProtocol(space, ct, scenario.f)
    if scenario.protocol == "lattice":
        return LatticeProtocol(space, scenario.f)
    raise InputError(f"{scenario.protocol} is not an asynchronous protocol")


# ---------------------------------------------------------------------------
# traces

@dataclass
class RoundRecord:
    round: int
    x_before: dict[int, int]
    bags_before: dict[int, int] | None
    inboxes: dict[int, dict[int, object]]   # receiver -> delivered sender -> payload
    safe_areas: dict[int, tuple[int, ...]]
    tree_safe_areas: dict[int, tuple[int, ...]] | None
    chosen: dict[int, object]
    fallbacks: tuple[int, ...]
    adversary_rejected: bool


@dataclass
class Trace:
    kind: str                    # 'async' | 'sync'
    scenario_id: str
    seed: int
    protocol: str
    n: int
    f: int
    faulty: tuple[int, ...]
    rounds: list[RoundRecord] = field(default_factory=list)
    outputs: dict[int, int] = field(default_factory=dict)
    decided_round: int | None = None
    timed_out: bool = False
    error: str | None = None
    fallback_count: int = 0
    ba_messages: list[dict] = field(default_factory=list)   # sync runs only
    summary: dict = field(default_factory=dict)

    @property
    def rounds_used(self) -> int:
        return self.decided_round if self.decided_round is not None else len(self.rounds)

    def to_jsonl(self) -> str:
        lines = []
        for rec in self.rounds:
            for pid in sorted(rec.inboxes):
                payload = {
                    "type": "round",
                    "scenario": self.scenario_id,
                    "seed": self.seed,
                    "round": rec.round,
                    "processor": pid,
                    "value_before": rec.x_before.get(pid),
                    "bag_before": None if rec.bags_before is None else rec.bags_before.get(pid),
                    "inbox": {str(j): _payload_json(p) for j, p in sorted(rec.inboxes[pid].items())},
                    "safe_area": list(rec.safe_areas.get(pid, ())),
                    "tree_safe_area": None if rec.tree_safe_areas is None
                        else list(rec.tree_safe_areas.get(pid, ())),
                    "chosen": _payload_json(rec.chosen.get(pid)),
                    "fallback": pid in rec.fallbacks,
                    "adversary_rejected": rec.adversary_rejected,
                    "decided": self.decided_round is not None and rec.round >= self.decided_round - 1,
                }
                lines.append(json.dumps(payload, sort_keys=True, separators=(",", ":")))
        for msg in self.ba_messages:
            lines.append(json.dumps(msg, sort_keys=True, separators=(",", ":")))
        lines.append(json.dumps({"type": "summary", **self.summary},
                                sort_keys=True, separators=(",", ":")))
        return "\n".join(lines) + "\n"


def _payload_json(p):
    if isinstance(p, tuple):
        return list(p)
    return p


def finish_summary(trace: Trace, scenario: Scenario, agreement_metric, validity: bool) -> None:
    trace.summary = {
        "scenario": trace.scenario_id,
        "seed": trace.seed,
        "rounds_to_decide": trace.decided_round,
        "output_set": sorted(set(trace.outputs.values())),
        "diameter_or_chain_check": agreement_metric,
        "validity_check": validity,
        "fallback_count": trace.fallback_count,
        "timed_out": trace.timed_out,
        "error": trace.error,
        "compliant": scenario.compliant(),
    }


# ---------------------------------------------------------------------------
# adversaries (asynchronous model)

class _AsyncAdversary:
    """Base policy: full delivery, silent faulty senders."""

    def __init__(self, scenario: Scenario, protocol):
        self.scenario = scenario
        self.protocol = protocol
        self.run_rng = derive_rng(scenario.seed, "adversary", scenario.adversary)

    def faulty_payload(self, k: int, t: int, rng: random.Random):
        return BOTTOM

    def delivery(self, t: int, rng: random.Random) -> dict[int, set[int]]:
        everyone = set(range(self.scenario.n))
        return {i: set(everyone) for i in self.scenario.correct()}

    def _random_payload(self, rng: random.Random):
        value = rng.randrange(self.scenario.ground_size())
        if self.protocol.payload_arity == 2:
            return (value, rng.randrange(self.protocol.tree.n))
        return value


class _Silent(_AsyncAdversary):
    pass


class _ConsistentLie(_AsyncAdversary):
    """Every faulty sender shows one fixed lie to everyone, all run long."""

    def __init__(self, scenario, protocol):
        super().__init__(scenario, protocol)
        self.lies = {}
        for k in scenario.faulty:
            params = scenario.adversary_params
            if "value" in params and protocol.payload_arity == 1:
                self.lies[k] = int(params["value"])
            elif "value" in params and "bag" in params:
                self.lies[k] = (int(params["value"]), int(params["bag"]))
            else:
                self.lies[k] = self._random_payload(derive_rng(scenario.seed, "lie", k))

    def faulty_payload(self, k, t, rng):
        return self.lies[k]


class _PartitionDelay(_AsyncAdversary):
    """Delay a fixed set of f correct senders so every correct processor
    hears exactly n-f senders; faulty senders keep sending a fixed lie."""

    def __init__(self, scenario, protocol):
        super().__init__(scenario, protocol)
        correct = list(scenario.correct())
        rng = derive_rng(scenario.seed, "partition")
        self.delayed = set(rng.sample(correct, min(scenario.f, max(len(correct) - 1, 0))))
        self.lies = {k: self._random_payload(derive_rng(scenario.seed, "lie", k))
                     for k in scenario.faulty}

    def faulty_payload(self, k, t, rng):
        return self.lies[k]

    def delivery(self, t, rng):
        kept = set(range(self.scenario.n)) - self.delayed
        return {i: set(kept) for i in self.scenario.correct()}


class _ReplayThenCorrupt(_AsyncAdversary):
    """Faulty senders replay an assigned input value, then after the
    configured round start sending values directed by the blocking map."""

    def __init__(self, scenario, protocol):
        super().__init__(scenario, protocol)
        params = scenario.adversary_params
        self.assigned = {int(k): int(v) for k, v in params.get("assigned", {}).items()}
        self.corrupt_after = int(params.get("corrupt_after", 2))
        self.mu = {tuple(int(x) for x in key.split(",")): int(v)
                   for key, v in params.get("mu", {}).items()}
        self.crashed = {int(k) for k in params.get("crashed", [])}

    def faulty_payload(self, k, t, rng):
        if k in self.crashed:
            return BOTTOM
        base = self.assigned.get(k)
        if base is None:
            return BOTTOM
        if t < self.corrupt_after:
            value = base
        else:
            targets = sorted({y for (x, y) in self.mu if x == base})
            value = self.mu[(base, rng.choice(targets))] if targets else base
        if self.protocol.payload_arity == 2:
            try:
                bag = self.protocol.initial_bag(value)
            except InputError:
                bag = 0
            return (value, bag)
        return value


_ASYNC_POLICIES = {
    "silent": _Silent,
    "consistent-lie": _ConsistentLie,
    "partition-delay": _PartitionDelay,
    "replay-then-corrupt": _ReplayThenCorrupt,
}


def _validated_payload(protocol, space, payload):
    """Clamp out-of-domain Byzantine payloads to no-message."""
    if payload is BOTTOM:
        return BOTTOM
    if protocol.payload_arity == 2:
        if (isinstance(payload, tuple) and len(payload) == 2
                and isinstance(payload[0], int) and 0 <= payload[0] < space.n
                and isinstance(payload[1], int) and 0 <= payload[1] < protocol.tree.n):
            return payload
        return BOTTOM
    if isinstance(payload, int) and 0 <= payload < space.n:
        return payload
    return BOTTOM


# ---------------------------------------------------------------------------
# asynchronous runner

def run_async(scenario: Scenario) -> Trace:
    """Deterministic asynchronous-round execution of a tree, chordal, or
    lattice scenario; ends at the protocol's decision horizon or the cap."""
    if scenario.protocol == "sync-consensus":
        raise InputError("sync-consensus runs under run_sync")
    space = scenario.space()
    protocol = build_protocol(scenario)
    policy = _ASYNC_POLICIES[scenario.adversary](scenario, protocol)
    correct = scenario.correct()
    faulty = tuple(sorted(scenario.faulty))
    trace = Trace(
        kind="async", scenario_id=scenario.scenario_id, seed=scenario.seed,
        protocol=scenario.protocol, n=scenario.n, f=scenario.f, faulty=faulty,
    )
    states = {i: protocol.initial_state(i, scenario.inputs[i]) for i in correct}
    horizon = min(protocol.horizon, scenario.round_cap)

    for t in range(horizon):
        rng = derive_rng(scenario.seed, "round", t)
        broadcasts = {i: protocol.outgoing(states[i]) for i in correct}
        faulty_payloads = {
            k: _validated_payload(protocol, space,
                                  policy.faulty_payload(k, t, derive_rng(scenario.seed, "faulty", t, k)))
            for k in faulty
        }
        delivery = policy.delivery(t, rng)
        rejected = False
        inboxes = _build_inboxes(scenario, correct, faulty, broadcasts, faulty_payloads, delivery)
        if not _delivery_ok(scenario, inboxes):
            rejected = True
            full = {i: set(range(scenario.n)) for i in correct}
            inboxes = _build_inboxes(scenario, correct, faulty, broadcasts, faulty_payloads, full)

        record = RoundRecord(
            round=t,
            x_before={i: states[i].value for i in correct},
            bags_before={i: states[i].bag for i in correct} if protocol.payload_arity == 2 else None,
            inboxes=inboxes,
            safe_areas={},
            tree_safe_areas={} if protocol.payload_arity == 2 else None,
            chosen={},
            fallbacks=(),
            adversary_rejected=rejected,
        )
        fallbacks = []
        try:
            new_states = {}
            for i in correct:
                new_states[i], info = protocol.step(states[i], RoundInbox(inboxes[i]))
                record.safe_areas[i] = info["safe_area"]
                if protocol.payload_arity == 2:
                    record.tree_safe_areas[i] = info["tree_safe_area"]
                    if info["fallback"]:
                        fallbacks.append(i)
                record.chosen[i] = protocol.outgoing(new_states[i])
        except ProtocolViolationError as exc:
            record.fallbacks = tuple(fallbacks)
            trace.rounds.append(record)
            trace.error = str(exc)
            return trace
        record.fallbacks = tuple(fallbacks)
        trace.fallback_count += len(fallbacks)
        trace.rounds.append(record)
        states = new_states

    if protocol.horizon <= scenario.round_cap:
        trace.decided_round = protocol.horizon
        for i in correct:
            states[i] = replace(states[i], decided=True, output=states[i].value)
        trace.outputs = {i: states[i].output for i in correct}
    else:
        trace.timed_out = True
    return trace


def _build_inboxes(scenario, correct, faulty, broadcasts, faulty_payloads, delivery):
    # delivery is fully adversary-controlled (even a processor's own message
    # may be delayed); the model guarantees are what the scheduler enforces
    inboxes = {}
    faulty_set = set(faulty)
    for i in correct:
        allowed = set(delivery.get(i, set()))
        inbox = {}
        for j in sorted(allowed):
            if not 0 <= j < scenario.n:
                continue
            if j in faulty_set:
                if faulty_payloads[j] is not BOTTOM:
                    inbox[j] = faulty_payloads[j]
            else:
                inbox[j] = broadcasts[j]
        inboxes[i] = inbox
    return inboxes


def _delivery_ok(scenario, inboxes) -> bool:
    need = scenario.n - scenario.f
    senders = {i: set(inbox) for i, inbox in inboxes.items()}
    for i, s in senders.items():
        if len(s) < need:
            return False
    ids = sorted(senders)
    for a in range(len(ids)):
        for b in range(a + 1, len(ids)):
            if len(senders[ids[a]] & senders[ids[b]]) < need:
                return False
    return True


def check_round_guarantees(trace: Trace) -> bool:
    """Re-validate the three round-model guarantees from the raw trace."""
    if trace.kind != "async":
        raise InputError("round guarantees apply to asynchronous traces")
    need = trace.n - trace.f
    faulty = set(trace.faulty)
    for rec in trace.rounds:
        senders = {i: set(inbox) for i, inbox in rec.inboxes.items()}
        for s in senders.values():
            if len(s) < need:
                return False
        ids = sorted(senders)
        for a in range(len(ids)):
            for b in range(a + 1, len(ids)):
                if len(senders[ids[a]] & senders[ids[b]]) < need:
                    return False
        for k in faulty:
            shown = {
                _canon_payload(inbox[k]) for inbox in rec.inboxes.values() if k in inbox
            }
            if len(shown) > 1:
                return False
    return True


def _canon_payload(p):
    return tuple(p) if isinstance(p, (tuple, list)) else p


# ---------------------------------------------------------------------------
# synchronous runner (convex consensus via parallel BA instances)

class _SyncAdversary:
    """Chooses every message of every faulty processor, per receiver."""

    def __init__(self, scenario: Scenario):
        self.scenario = scenario

    def message(self, instance, rnd, sender, receiver, domain, rng):
        name = self.scenario.adversary
        if name == "silent":
            return None
        if name == "equivocate":
            # per-receiver values: omissions, garbage, and plausible lies
            r = rng.random()
            if r < 0.15:
                return None
            if rnd >= 3:
                return rng.randrange(2)
            return rng.randrange(domain)
        if name == "consistent-lie":
            shared = derive_rng(self.scenario.seed, "sync-lie", instance, rnd, sender)
            if rnd >= 3:
                return shared.randrange(2)
            return shared.randrange(domain)
        return None


def run_sync(scenario: Scenario) -> Trace:
    """Lock-step execution of convex consensus: n parallel multivalued-BA
    instances, then the shared deterministic output map."""
    if scenario.protocol != "sync-consensus":
        raise InputError("run_sync only drives sync-consensus scenarios")
    space = scenario.space()
    n, f = scenario.n, scenario.f
    correct = scenario.correct()
    faulty = tuple(sorted(scenario.faulty))
    adversary = _SyncAdversary(scenario)
    trace = Trace(
        kind="sync", scenario_id=scenario.scenario_id, seed=scenario.seed,
        protocol=scenario.protocol, n=n, f=f, faulty=faulty,
    )
    domain = space.n
    procs = {
        (s, i): BAProcessor(n, f, sender=s, me=i, domain=domain,
                            message=scenario.inputs.get(s) if s == i else None)
        for s in range(n)
        for i in correct
    }
    total = ba_total_rounds(f)
    faulty_set = set(faulty)
    for rnd in range(total):
        per_instance_out = {}
        for s in range(n):
            out = {i: procs[(s, i)].outgoing(rnd) for i in correct}
            per_instance_out[s] = out
        round_log = {"type": "sync-round", "round": rnd, "messages": {}}
        for s in range(n):
            for i in correct:
                msgs = {}
                for j in range(n):
                    if j in faulty_set:
                        rng = derive_rng(scenario.seed, "sync", s, rnd, j, i)
                        msgs[j] = adversary.message(s, rnd, j, i, domain, rng)
                    else:
                        msgs[j] = per_instance_out[s][j]
                procs[(s, i)].receive(rnd, msgs)
                round_log["messages"].setdefault(str(s), {})[str(i)] = {
                    str(j): msgs[j] for j in sorted(msgs) if msgs[j] is not None
                }
        trace.ba_messages.append(round_log)

    # BA contract: unanimity per instance, sender validity for correct senders
    decided_vec: dict[int, int] = {}
    for s in range(n):
        decisions = {procs[(s, i)].decision() for i in correct}
        if len(decisions) != 1:
            trace.error = f"BA instance {s} decided {sorted(map(str, decisions))}"
            return trace
        d = decisions.pop()
        if s in scenario.inputs and d != scenario.inputs[s]:
            trace.error = f"BA instance {s} broke sender validity"
            return trace
        decided_vec[s] = 0 if d is None else d  # bottom maps to default value 0

    try:
        h = consensus_area_mask(space, decided_vec, f)
        output = consensus_output(space, decided_vec, f)
    except ProtocolViolationError as exc:
        trace.error = str(exc)
        return trace
    trace.rounds.append(RoundRecord(
        round=total,
        x_before=dict(scenario.inputs),
        bags_before=None,
        inboxes={i: dict(decided_vec) for i in correct},
        safe_areas={i: mask_to_sorted(h) for i in correct},
        tree_safe_areas=None,
        chosen={i: output for i in correct},
        fallbacks=(),
        adversary_rejected=False,
    ))
    trace.decided_round = total
    trace.outputs = {i: output for i in correct}
    return trace


def run_scenario(scenario: Scenario) -> Trace:
    if scenario.protocol == "sync-consensus":
        return run_sync(scenario)
    return run_async(scenario)
