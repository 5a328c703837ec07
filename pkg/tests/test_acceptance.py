"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Run with ``pytest tests/test_acceptance.py -v -s``. Every sweep is fully
seeded; re-running reproduces identical results.
"""

import math
import time
from functools import lru_cache

import pytest

from convexsim.bitsets import mask_of
from convexsim.generators import (
    cycle_graph,
    path_graph,
    random_chordal,
    random_cycle_free_lattice,
    random_tree,
    vee_lattice,
)
from convexsim.graphs import clique_number, format_graph_text, lexbfs_peo
from convexsim.oracles import oracle_invariants, validate_trace
from convexsim.scenarios import emit_lower_bound_scenario, format_config, parse_config
from convexsim.semilattices import (
    big_join,
    breadth,
    cycle_free_elimination_order,
    format_semilattice_text,
    height,
    leq,
)
from convexsim.simulation import (
    Scenario,
    _expanded_clique_tree,
    derive_rng,
    finish_summary,
    run_scenario,
)
from convexsim.spaces import (
    ALGEBRAIC,
    GEODESIC,
    MONOPHONIC,
    algebraic_space,
    build_blocking_instance,
    geodesic_space,
    monophonic_space,
    verify_blocking_instance,
)

ADVERSARY_CYCLE = ("silent", "consistent-lie", "partition-delay")


def _report(criterion: int, ok: bool, detail: str) -> None:
    print(f"\nCRITERION {criterion}: {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, f"criterion {criterion}: {detail}"


def _scenario(label, kind, hull, text, protocol, n, f, seed, ground, adversary=None):
    rng = derive_rng(seed, "acceptance", label, n, f)
    faulty = tuple(sorted(rng.sample(range(n), f))) if f else ()
    correct = [i for i in range(n) if i not in faulty]
    inputs = {i: rng.randrange(ground) for i in correct}
    return Scenario(
        scenario_id=label, space_kind=kind, hull_kind=hull,
        instance_text=text, protocol=protocol, n=n, f=f, faulty=faulty,
        inputs=inputs, adversary=adversary or ADVERSARY_CYCLE[seed % 3], seed=seed,
    )


# ---------------------------------------------------------------------------
# fixture corpora (seeded, shared across criteria)

@lru_cache(maxsize=1)
def tree_corpus():
    graphs = [("path", path_graph(n)) for n in (5, 33, 257, 1025)]
    rng = derive_rng(20260808, "c1-tree-sizes")
    for i in range(50):
        n = rng.randint(4, 512)
        graphs.append((f"tree{i}", random_tree(n, seed=1000 + i)))
    return graphs


@lru_cache(maxsize=1)
def chordal_corpus():
    out = []
    rng = derive_rng(20260808, "c4-sizes")
    for i in range(50):
        omega = (i % 3) + 2
        n = rng.randint(max(omega, 6), 64)
        out.append(random_chordal(n, seed=2000 + i, max_clique=omega))
    return out


@lru_cache(maxsize=1)
def lattice_corpus():
    out = []
    rng = derive_rng(20260808, "c5-sizes")
    for i in range(50):
        n = rng.randint(4, 32)
        out.append(random_cycle_free_lattice(n, seed=3000 + i))
    return out


# ---------------------------------------------------------------------------
# shared sweeps

@pytest.fixture(scope="session")
def tree_sweep():
    stats = {
        "runs": 0, "failures": [], "contraction_violations": [],
        "lemma1_violations": 0, "elapsed": 0.0,
    }
    start = time.time()
    for label, g in tree_corpus():
        text = format_graph_text(g)
        bound = math.ceil(math.log2(max(g.diameter(), 1))) + 2
        dist = g.dist
        cache = {}
        for n, f in ((4, 1), (7, 2)):
            for seed in range(100):
                sc = _scenario(f"c1-{label}", "graph", MONOPHONIC, text,
                               "tree", n, f, seed, g.n)
                trace = run_scenario(sc)
                report = validate_trace(trace, sc, cache)
                stats["runs"] += 1
                if trace.error or not report.decided:
                    stats["failures"].append((label, n, f, seed, trace.error or "timeout"))
                    continue
                if trace.decided_round > bound:
                    stats["failures"].append((label, n, f, seed, f"rounds {trace.decided_round} > {bound}"))
                if not (0 <= report.agreement_metric <= 1):
                    stats["failures"].append((label, n, f, seed, f"diameter {report.agreement_metric}"))
                if not report.validity_ok or not report.guarantees_ok:
                    stats["failures"].append((label, n, f, seed, "validity/guarantees"))
                if not report.lemma1_ok:
                    stats["lemma1_violations"] += 1
                for rec in trace.rounds:
                    dx = _diameter(dist, rec.x_before.values())
                    dy = _diameter(dist, rec.chosen.values())
                    if dy > dx // 2 + 1:
                        stats["contraction_violations"].append((label, n, f, seed, rec.round, dx, dy))
    stats["elapsed"] = time.time() - start
    return stats


def _diameter(dist, values):
    vals = sorted(set(values))
    worst = 0
    for i, a in enumerate(vals):
        for b in vals[i + 1:]:
            worst = max(worst, int(dist[a, b]))
    return worst


@pytest.fixture(scope="session")
def chordal_sweep():
    stats = {"runs": 0, "failures": [], "fallbacks": 0, "lemma1_violations": 0}
    for gi, g in enumerate(chordal_corpus()):
        omega = clique_number(g)
        f = 2 if gi % 5 == 0 else 1
        n = (omega + 1) * f + 1
        text = format_graph_text(g)
        tprime = _expanded_clique_tree(text).tree
        bound = math.ceil(math.log2(max(tprime.n, 1))) + 2
        cache = {}
        for seed in range(20):
            sc = _scenario(f"c4-{gi}", "graph", MONOPHONIC, text,
                           "chordal", n, f, seed, g.n)
            trace = run_scenario(sc)
            report = validate_trace(trace, sc, cache)
            stats["runs"] += 1
            stats["fallbacks"] += trace.fallback_count
            if trace.error or not report.decided:
                stats["failures"].append((gi, seed, trace.error or "timeout"))
                continue
            if trace.decided_round > bound:
                stats["failures"].append((gi, seed, f"rounds {trace.decided_round} > {bound}"))
            if not (0 <= report.agreement_metric <= 1):
                stats["failures"].append((gi, seed, f"not a clique: diameter {report.agreement_metric}"))
            if not report.validity_ok or not report.guarantees_ok:
                stats["failures"].append((gi, seed, "validity/guarantees"))
            if not report.lemma1_ok:
                stats["lemma1_violations"] += 1
    return stats


@pytest.fixture(scope="session")
def lattice_sweep():
    stats = {"runs": 0, "failures": [], "lemma1_violations": 0}
    for li, lat in enumerate(lattice_corpus()):
        h = height(lat)
        f = 1
        n = (h + 1) * f + 1
        text = format_semilattice_text(lat)
        space = algebraic_space(lat)
        order = cycle_free_elimination_order(lat)
        pos = {v: i for i, v in enumerate(order)}
        cache = {}
        for seed in range(10):
            sc = _scenario(f"c5-{li}", "semilattice", ALGEBRAIC, text,
                           "lattice", n, f, seed, lat.n)
            trace = run_scenario(sc)
            report = validate_trace(trace, sc, cache)
            stats["runs"] += 1
            if trace.error or not report.decided:
                stats["failures"].append((li, seed, trace.error or "timeout"))
                continue
            if not report.agreement_ok:
                stats["failures"].append((li, seed, "outputs not a chain"))
            if not report.validity_ok or not report.guarantees_ok:
                stats["failures"].append((li, seed, "validity/guarantees"))
            if trace.decided_round > lat.n:
                stats["failures"].append((li, seed, f"{trace.decided_round} rounds > |V|={lat.n}"))
            if not report.lemma1_ok:
                stats["lemma1_violations"] += 1
            # outputs sit between some correct input and the join of them all
            top = big_join(lat, sc.inputs.values())
            for i, y in trace.outputs.items():
                if not leq(lat, y, top) or not any(leq(lat, x, y) for x in sc.inputs.values()):
                    stats["failures"].append((li, seed, f"output {y} outside the input band"))
            # progress property: while the earliest input is not chosen,
            # the hull strictly shrinks
            for rec in trace.rounds:
                xs = set(rec.x_before.values())
                ys = set(rec.chosen.values())
                low = min(xs, key=pos.__getitem__)
                if low not in ys:
                    hx = space.hull_mask(mask_of(xs))
                    hy = space.hull_mask(mask_of(ys))
                    if not (hy & ~hx == 0 and hy != hx):
                        stats["failures"].append((li, seed, rec.round, "no strict hull progress"))
    return stats


@pytest.fixture(scope="session")
def sync_sweep():
    fixtures = []
    g_chordal = random_chordal(12, seed=77, max_clique=3)
    fixtures.append(("mono", "graph", MONOPHONIC, format_graph_text(g_chordal),
                     g_chordal.n, monophonic_space(g_chordal).helly_number()))
    g_tree = random_tree(10, seed=7)
    fixtures.append(("geo", "graph", GEODESIC, format_graph_text(g_tree),
                     g_tree.n, geodesic_space(g_tree).helly_number()))
    lat = random_cycle_free_lattice(8, seed=11)
    fixtures.append(("lat", "semilattice", ALGEBRAIC, format_semilattice_text(lat),
                     lat.n, algebraic_space(lat).helly_number()))

    stats = {"runs": 0, "failures": [], "lemma1_violations": 0, "max_rounds": 0}
    for name, kind, hull, text, ground, omega in fixtures:
        for f in (1, 2):
            n = max(3 * f, omega * f) + 1
            for seed in range(100):
                sc = _scenario(f"c6-{name}", kind, hull, text,
                               "sync-consensus", n, f, seed, ground,
                               adversary="equivocate")
                trace = run_scenario(sc)
                report = validate_trace(trace, sc)
                stats["runs"] += 1
                stats["max_rounds"] = max(stats["max_rounds"], trace.rounds_used)
                if trace.error or not report.decided:
                    stats["failures"].append((name, f, seed, trace.error or "timeout"))
                    continue
                if report.agreement_metric != 1:
                    stats["failures"].append((name, f, seed, "outputs not unanimous"))
                if not report.validity_ok:
                    stats["failures"].append((name, f, seed, "output outside hull"))
                if trace.rounds_used > 6 * (f + 1):
                    stats["failures"].append((name, f, seed, f"rounds {trace.rounds_used}"))
                if not report.lemma1_ok:
                    stats["lemma1_violations"] += 1
    return stats


# ---------------------------------------------------------------------------
# criteria

def test_criterion_1_tree_convergence(tree_sweep):
    ok = not tree_sweep["failures"] and tree_sweep["elapsed"] < 300
    _report(1, ok,
            f"{tree_sweep['runs']} tree runs, {len(tree_sweep['failures'])} failures, "
            f"{tree_sweep['elapsed']:.1f}s (target < 300s); "
            f"first failures: {tree_sweep['failures'][:3]}")


def test_criterion_2_per_round_contraction(tree_sweep):
    bad = tree_sweep["contraction_violations"]
    _report(2, not bad,
            f"every round of the tree sweep satisfied D(Y) <= floor(D(X)/2)+1; "
            f"violations: {bad[:3]} ({len(bad)} total)")


def test_criterion_3_safe_area_soundness(tree_sweep, chordal_sweep, lattice_sweep, sync_sweep):
    total = sum(s["lemma1_violations"] for s in
                (tree_sweep, chordal_sweep, lattice_sweep, sync_sweep))
    runs = sum(s["runs"] for s in (tree_sweep, chordal_sweep, lattice_sweep, sync_sweep))
    _report(3, total == 0,
            f"safe areas nonempty, inside hull(X(t)), and jointly intersecting "
            f"across {runs} runs; violations={total}")


def test_criterion_4_chordal_agreement(chordal_sweep):
    ok = not chordal_sweep["failures"]
    _report(4, ok,
            f"{chordal_sweep['runs']} chordal runs, {len(chordal_sweep['failures'])} failures, "
            f"fallback events={chordal_sweep['fallbacks']} (flagged, not failures); "
            f"first failures: {chordal_sweep['failures'][:3]}")


def test_criterion_5_lattice_agreement(lattice_sweep):
    ok = not lattice_sweep["failures"]
    _report(5, ok,
            f"{lattice_sweep['runs']} lattice runs, {len(lattice_sweep['failures'])} failures; "
            f"first failures: {lattice_sweep['failures'][:3]}")


def test_criterion_6_sync_convex_consensus(sync_sweep):
    ok = not sync_sweep["failures"]
    _report(6, ok,
            f"{sync_sweep['runs']} synchronous runs, {len(sync_sweep['failures'])} failures, "
            f"max rounds {sync_sweep['max_rounds']} <= 6*(f+1); "
            f"first failures: {sync_sweep['failures'][:3]}")


def test_criterion_7_invariant_coincidences():
    mismatches = []
    for i in range(200):
        rng = derive_rng(i, "c7-chordal")
        g = random_chordal(rng.randint(4, 12), seed=4000 + i, max_clique=rng.choice((2, 3, 4)))
        space = monophonic_space(g)
        helly, cara, _ = oracle_invariants(space)
        if helly != clique_number(g):
            mismatches.append(("chordal", i, "helly", helly, clique_number(g)))
        if cara > 2:
            mismatches.append(("chordal", i, "caratheodory", cara))
        if space.helly_number() != helly or space.caratheodory_number() != cara:
            mismatches.append(("chordal", i, "primary/oracle"))
    for i in range(200):
        rng = derive_rng(i, "c7-lattice")
        lat = random_cycle_free_lattice(rng.randint(3, 10), seed=5000 + i)
        space = algebraic_space(lat)
        helly, cara, _ = oracle_invariants(space)
        if helly != height(lat):
            mismatches.append(("lattice", i, "helly", helly, height(lat)))
        if cara != breadth(lat):
            mismatches.append(("lattice", i, "breadth", cara, breadth(lat)))
        if space.helly_number() != helly or space.caratheodory_number() != cara:
            mismatches.append(("lattice", i, "primary/oracle"))
    _report(7, not mismatches,
            f"400 instances: Helly=clique number and Caratheodory<=2 on chordal, "
            f"Helly=height and Caratheodory=breadth on cycle-free lattices; "
            f"mismatches: {mismatches[:3]} ({len(mismatches)} total)")


def test_criterion_8_convex_geometry_certification():
    bad = []
    for gi, g in enumerate(chordal_corpus()):
        if monophonic_space(g).convex_elimination_order() is None:
            bad.append(("chordal", gi))
    for i in range(40):
        rng = derive_rng(i, "c8")
        g = random_chordal(rng.randint(4, 12), seed=4000 + i, max_clique=rng.choice((2, 3, 4)))
        if monophonic_space(g).convex_elimination_order() is None:
            bad.append(("small-chordal", i))
    if monophonic_space(cycle_graph(4)).convex_elimination_order() is not None:
        bad.append(("c4", "expected none"))
    if monophonic_space(cycle_graph(6)).convex_elimination_order() is not None:
        bad.append(("c6", "expected none"))
    _report(8, not bad,
            f"every chordal fixture peels completely, the four- and six-cycles do not; "
            f"bad: {bad[:3]}")


def test_criterion_9_blocking_instances():
    failures = []
    free_sets = []
    irredundant_sets = []

    for gi, g in enumerate(chordal_corpus()):
        space = monophonic_space(g)
        rng = derive_rng(gi, "c9-free")
        peo = lexbfs_peo(g)
        pos = {v: i for i, v in enumerate(peo)}
        for v in peo:
            later = sorted(u for u in g.adj[v] if pos[u] > pos[v])
            if later and len(free_sets) < 60:
                free_sets.append((space, g, (v, *later)))
        dist = g.dist
        for _ in range(6):
            u, v = rng.sample(range(g.n), 2)
            if dist[u, v] >= 2 and len(irredundant_sets) < 70:
                irredundant_sets.append((space, g, (u, v)))
        if len(free_sets) >= 60 and len(irredundant_sets) >= 70:
            break

    for li, lat in enumerate(lattice_corpus()):
        space = algebraic_space(lat)
        rng = derive_rng(li, "c9-lat")
        for _ in range(8):
            k = rng.randint(2, min(4, lat.n))
            members = tuple(sorted(rng.sample(range(lat.n), k)))
            if len(free_sets) < 100 and space.is_free(members):
                free_sets.append((space, lat, members))
            elif len(irredundant_sets) < 100 and space.is_irredundant(members):
                irredundant_sets.append((space, lat, members))
        if len(free_sets) >= 100 and len(irredundant_sets) >= 100:
            break

    assert len(free_sets) == 100 and len(irredundant_sets) == 100
    count = 0
    for space, backing, members in (free_sets + irredundant_sets):
        inst = build_blocking_instance(space, members)
        if inst is None or not verify_blocking_instance(space, inst):
            failures.append((space.kind, members))
            continue
        kind = "graph" if space.kind != ALGEBRAIC else "semilattice"
        text = (format_graph_text(backing) if kind == "graph"
                else format_semilattice_text(backing))
        cfg = emit_lower_bound_scenario(space, text, kind, inst, f=1)
        parsed = parse_config(format_config([cfg]))
        if parsed[0].n != (inst.m + 1) or parsed[0].adversary != "replay-then-corrupt":
            failures.append(("config", members))
        count += 1
    _report(9, not failures and count >= 200,
            f"{len(free_sets)} free and {len(irredundant_sets)} irredundant sets built, "
            f"verified, and emitted as schema-valid lower-bound configs; "
            f"failures: {failures[:3]}")


def test_criterion_10_determinism():
    p33 = format_graph_text(path_graph(33))
    tree = format_graph_text(random_tree(64, seed=4))
    chordal = format_graph_text(random_chordal(24, seed=6, max_clique=3))
    lattice = format_semilattice_text(random_cycle_free_lattice(12, seed=8))
    vee = format_semilattice_text(vee_lattice())
    picks = [
        ("graph", MONOPHONIC, p33, "tree", 4, 1, 3),
        ("graph", MONOPHONIC, p33, "tree", 7, 2, 9),
        ("graph", MONOPHONIC, tree, "tree", 4, 1, 5),
        ("graph", MONOPHONIC, tree, "tree", 7, 2, 11),
        ("graph", MONOPHONIC, chordal, "chordal", 5, 1, 2),
        ("graph", MONOPHONIC, chordal, "chordal", 9, 2, 7),
        ("semilattice", ALGEBRAIC, lattice, "lattice", 4, 1, 13),
        ("semilattice", ALGEBRAIC, vee, "lattice", 4, 1, 1),
        ("graph", MONOPHONIC, chordal, "sync-consensus", 7, 2, 21),
        ("semilattice", ALGEBRAIC, lattice, "sync-consensus", 7, 1, 17),
    ]
    mismatches = []
    for idx, (kind, hull, text, protocol, n, f, seed) in enumerate(picks):
        blobs = []
        for _ in range(3):
            sc = _scenario(f"c10-{idx}", kind, hull, text, protocol, n, f, seed,
                           ground=_ground_of(kind, text))
            trace = run_scenario(sc)
            report = validate_trace(trace, sc)
            finish_summary(trace, sc, report.agreement_metric, report.validity_ok)
            blobs.append(trace.to_jsonl())
        if len(set(blobs)) != 1:
            mismatches.append(idx)
    _report(10, not mismatches,
            f"10 scenarios re-run 3x produced byte-identical traces and summaries; "
            f"mismatches: {mismatches}")


def _ground_of(kind, text):
    from convexsim.simulation import _parse_instance

    return _parse_instance(kind, text).n
