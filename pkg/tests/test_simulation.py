import pytest

from convexsim.errors import InputError
from convexsim.generators import path_graph, vee_lattice
from convexsim.graphs import format_graph_text
from convexsim.semilattices import format_semilattice_text
from convexsim.simulation import (
    Scenario,
    check_round_guarantees,
    derive_rng,
    finish_summary,
    run_async,
    run_scenario,
    run_sync,
)
from convexsim.spaces import ALGEBRAIC, MONOPHONIC

P9 = format_graph_text(path_graph(9))
VEE = format_semilattice_text(vee_lattice())


def tree_scenario(**kw):
    base = dict(
        scenario_id="sim-test", space_kind="graph", hull_kind=MONOPHONIC,
        instance_text=P9, protocol="tree", n=4, f=1, faulty=(3,),
        inputs={0: 0, 1: 8, 2: 4}, adversary="silent", seed=0,
    )
    base.update(kw)
    return Scenario(**base)


def test_scenario_validation():
    with pytest.raises(InputError):
        tree_scenario(faulty=(1, 2))           # more faulty than f
    with pytest.raises(InputError):
        tree_scenario(inputs={0: 0, 1: 8})     # inputs must cover correct set
    with pytest.raises(InputError):
        tree_scenario(inputs={0: 0, 1: 8, 2: 99})
    with pytest.raises(InputError):
        tree_scenario(protocol="nonsense")
    with pytest.raises(InputError):
        tree_scenario(adversary="nonsense")


def test_compliance_predicate():
    assert tree_scenario().compliant()
    assert not tree_scenario(n=3, f=1, faulty=(2,), inputs={0: 0, 1: 8}).compliant()


def test_derive_rng_stability():
    a = derive_rng(42, "round", 3).random()
    b = derive_rng(42, "round", 3).random()
    c = derive_rng(42, "round", 4).random()
    assert a == b != c


@pytest.mark.parametrize("adversary", ["silent", "consistent-lie", "partition-delay"])
def test_async_adversaries_satisfy_guarantees(adversary):
    for seed in range(5):
        trace = run_async(tree_scenario(adversary=adversary, seed=seed))
        assert trace.error is None and trace.decided_round is not None
        assert check_round_guarantees(trace)


def test_partition_delay_hits_exact_bound():
    trace = run_async(tree_scenario(adversary="partition-delay", seed=2))
    for rec in trace.rounds:
        for inbox in rec.inboxes.values():
            assert len(inbox) == 3  # exactly n - f senders


def test_async_determinism():
    a = run_async(tree_scenario(adversary="partition-delay", seed=9))
    b = run_async(tree_scenario(adversary="partition-delay", seed=9))
    assert a.to_jsonl() == b.to_jsonl()
    c = run_async(tree_scenario(adversary="partition-delay", seed=10))
    assert a.to_jsonl() != c.to_jsonl()


def test_round_cap_times_out():
    trace = run_async(tree_scenario(round_cap=1))
    assert trace.timed_out and not trace.outputs


def test_crash_faults_equivalent_to_silent():
    # silent adversary = crash faults; correct processors always decide
    for seed in range(3):
        trace = run_async(tree_scenario(adversary="silent", seed=seed))
        assert set(trace.outputs) == {0, 1, 2}
        for rec in trace.rounds:
            for inbox in rec.inboxes.values():
                assert 3 not in inbox


def test_full_delivery_when_no_faults():
    sc = tree_scenario(f=0, faulty=(), inputs={0: 0, 1: 8, 2: 4, 3: 6})
    trace = run_async(sc)
    assert trace.error is None
    diam = max(abs(a - b) for a in trace.outputs.values() for b in trace.outputs.values())
    assert diam <= 1


def test_all_protocols_converge_without_faults():
    from convexsim.generators import random_chordal, random_cycle_free_lattice
    from convexsim.graphs import format_graph_text as fgt
    from convexsim.oracles import validate_trace
    from convexsim.semilattices import format_semilattice_text as fst

    g = random_chordal(16, 3, max_clique=3)
    sc = Scenario(scenario_id="nofault-chordal", space_kind="graph",
                  hull_kind=MONOPHONIC, instance_text=fgt(g), protocol="chordal",
                  n=4, f=0, faulty=(), inputs={0: 1, 1: 9, 2: 4, 3: 14},
                  adversary="silent", seed=0)
    trace = run_async(sc)
    assert trace.error is None and validate_trace(trace, sc).ok

    lat = random_cycle_free_lattice(10, 4)
    sl = Scenario(scenario_id="nofault-lattice", space_kind="semilattice",
                  hull_kind=ALGEBRAIC, instance_text=fst(lat), protocol="lattice",
                  n=4, f=0, faulty=(), inputs={0: 1, 1: 5, 2: 9, 3: 2},
                  adversary="silent", seed=0)
    trace = run_async(sl)
    assert trace.error is None and validate_trace(trace, sl).ok


def test_summary_fields():
    sc = tree_scenario()
    trace = run_async(sc)
    finish_summary(trace, sc, agreement_metric=0, validity=True)
    for key in ("rounds_to_decide", "output_set", "diameter_or_chain_check",
                "validity_check", "fallback_count"):
        assert key in trace.summary
    assert trace.to_jsonl().count('"type":"summary"') == 1


def test_trace_jsonl_per_processor_records():
    trace = run_async(tree_scenario())
    lines = trace.to_jsonl().strip().split("\n")
    round_lines = [ln for ln in lines if '"type":"round"' in ln]
    assert len(round_lines) == trace.decided_round * 3  # one per (round, correct processor)


def test_sync_consensus_silent_and_equivocate():
    sc = Scenario(
        scenario_id="sync-test", space_kind="semilattice", hull_kind=ALGEBRAIC,
        instance_text=VEE, protocol="sync-consensus", n=4, f=1, faulty=(2,),
        inputs={0: 0, 1: 1, 3: 0}, adversary="equivocate", seed=5,
    )
    trace = run_sync(sc)
    assert trace.error is None
    assert len(set(trace.outputs.values())) == 1
    assert trace.decided_round == 9  # 3f+6 rounds for f=1

    crash = Scenario(
        scenario_id="sync-crash", space_kind="semilattice", hull_kind=ALGEBRAIC,
        instance_text=VEE, protocol="sync-consensus", n=4, f=1, faulty=(2,),
        inputs={0: 0, 1: 1, 3: 0}, adversary="silent", seed=1,
    )
    t2 = run_sync(crash)
    assert t2.error is None and len(set(t2.outputs.values())) == 1


def test_star_rounds_collapse_to_an_edge():
    # whenever the hull of the round's values has diameter two, the next
    # values must already sit inside one clique (diameter at most one)
    from convexsim.generators import random_tree, star_graph
    from convexsim.spaces import monophonic_space

    checked = 0
    for gi, g in enumerate([star_graph(6), random_tree(12, 31), random_tree(24, 32)]):
        text = format_graph_text(g)
        space = monophonic_space(g)
        dist = g.dist
        for seed in range(12):
            rng = derive_rng(seed, "star-step", gi)
            inputs = {i: rng.randrange(g.n) for i in range(3)}
            sc = Scenario(
                scenario_id="star", space_kind="graph", hull_kind=MONOPHONIC,
                instance_text=text, protocol="tree", n=4, f=1, faulty=(3,),
                inputs=inputs, adversary=["silent", "consistent-lie"][seed % 2],
                seed=seed,
            )
            trace = run_async(sc)
            assert trace.error is None
            for rec in trace.rounds:
                hull = space.hull(rec.x_before.values())
                dx = max(int(dist[a, b]) for a in hull for b in hull)
                if dx == 2:
                    ys = sorted(set(rec.chosen.values()))
                    dy = max(int(dist[a, b]) for a in ys for b in ys)
                    assert dy <= 1, (gi, seed, rec.round)
                    checked += 1
    assert checked > 0


def test_run_scenario_dispatch():
    assert run_scenario(tree_scenario()).kind == "async"
    sc = Scenario(
        scenario_id="sync-test", space_kind="semilattice", hull_kind=ALGEBRAIC,
        instance_text=VEE, protocol="sync-consensus", n=4, f=0, faulty=(),
        inputs={0: 0, 1: 1, 2: 0, 3: 1}, adversary="silent", seed=0,
    )
    assert run_scenario(sc).kind == "sync"
