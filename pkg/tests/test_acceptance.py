"""Acceptance suite: one test per release criterion, each printing a
pass/fail line with its measured runtime.  Tolerances are exact (rational
arithmetic); runtime budgets are asserted where stated.
"""

import itertools
import random
import time
from fractions import Fraction as F

import pytest

from coopcore.balancedness import effective_coalitions, is_balanced, quick_is_balanced
from coopcore.combinatorics import count_uniform_hypergraphs, enumerate_uniform_hypergraphs
from coopcore.geometry import (
    GramContext,
    cramer_coefficients,
    eta,
    eta_dot,
    gram_matrix,
    project_multi,
    project_multi_dual,
    projection_coefficients,
    update_gramian,
)
from coopcore.mbc import MBC_COUNTS, generate
from coopcore.model import (
    coalition,
    full_coalition,
    payment,
    permutohedron_game,
    random_game,
    vector,
)
from coopcore.polyhedra import core_vertices, determinant, lp_is_balanced
from coopcore.properties import is_feasible, maximal_unbalanced, vital_exact_set
from coopcore.stability import REASON_BLOCKING, REASON_GS, is_blind_spot, is_core_stable

from conftest import names_to_mask


def report(number: int, label: str, started: float) -> None:
    print(f"[criterion {number:2d}] PASS {label} ({time.perf_counter() - started:.2f}s)")


def test_criterion_01_mbc_counts(store6):
    started = time.perf_counter()
    t0 = time.perf_counter()
    for n in (2, 3, 4, 5):
        assert len(generate(n)) == MBC_COUNTS[n]
    small = time.perf_counter() - t0
    assert small < 5.0
    assert len(store6) == MBC_COUNTS[6]
    six = store6.cache("generation-seconds", lambda: None)
    assert six is not None and six < 300.0
    with pytest.raises(ValueError):
        generate(7)  # desk-scale gate: n = 7 needs the explicit opt-in
    report(1, f"collection counts 2..6 (n<=5 in {small:.2f}s, n=6 in {six:.0f}s)", started)


def test_criterion_02_balancedness_witnesses(three_player_a5, three_player_pairs8, store3):
    started = time.perf_counter()
    ok, witness = is_balanced(three_player_a5, store3)
    assert not ok and witness.coalitions == (1, 6)
    value = sum((w * three_player_a5.worth(m) for m, w in witness.items()), F(0))
    assert value == 13

    ok, witness = is_balanced(three_player_pairs8, store3)
    assert not ok and witness.coalitions == (3, 5, 6)
    value = sum((w * three_player_pairs8.worth(m) for m, w in witness.items()), F(0))
    assert value == 12
    assert time.perf_counter() - started < 1.0
    report(2, "non-balancedness witnesses {a,bc}->13 and {ab,ac,bc}->12", started)


def test_criterion_03_oracle_equivalence(store5):
    started = time.perf_counter()
    rng = random.Random(20230908)
    games = [random_game(rng, 5) for _ in range(500)]
    t0 = time.perf_counter()
    via_collections = [quick_is_balanced(g, store5) for g in games]
    t_mbc = time.perf_counter() - t0
    t0 = time.perf_counter()
    via_lp = [lp_is_balanced(g) for g in games]
    t_lp = time.perf_counter() - t0
    assert via_collections == via_lp
    elapsed = time.perf_counter() - started
    assert elapsed < 30.0
    ratio = t_lp / t_mbc if t_mbc else float("inf")
    report(3, f"500-game oracle agreement (speed ratio {ratio:.1f}x, informational)", started)


def test_criterion_04_min_additive_five(min_additive_five, store5):
    started = time.perf_counter()
    g = min_additive_five
    eff = effective_coalitions(g, store5)
    expected_eff = {names_to_mask(g, s) for s in ("bc", "bd", "be", "acd", "ace", "ade")}
    assert eff - {g.grand} == expected_eff

    ve = vital_exact_set(g, store5)
    assert ve == expected_eff | {1 << i for i in range(5)}
    assert len(ve) == 11

    assert core_vertices(g) == [vector([0, 0, 1, 1, 1]), vector([2, 1, 0, 0, 0])]

    verdict = is_core_stable(g, store5, exhaustive=True)
    assert not verdict.stable and verdict.reason == REASON_GS
    failing = {d.collection for d in verdict.regions if d.outcome == "gs-fail"}
    known_pair = (names_to_mask(g, "ace"), names_to_mask(g, "ade"))
    assert known_pair in failing
    # the first witness is one of the three symmetric sibling pairs
    triples = {names_to_mask(g, s) for s in ("acd", "ace", "ade")}
    assert set(verdict.collection) <= triples and len(verdict.collection) == 2
    elapsed = time.perf_counter() - started
    assert elapsed < 120.0
    report(4, "five-player fixture: effective set, 11 vital-exact, vertices, instability", started)


def test_criterion_05_three_fifths_game(four_person_06, store4):
    started = time.perf_counter()
    g = four_person_06
    assert effective_coalitions(g, store4) == {g.grand}
    ve = vital_exact_set(g, store4)
    assert ve == {m for m in range(1, 15) if m.bit_count() in (1, 3)}
    assert len(ve) == 8

    verdict = is_core_stable(g, store4, exhaustive=True)
    assert not verdict.stable and verdict.reason == REASON_BLOCKING
    blocking = {d.collection for d in verdict.regions if d.outcome == "blocking"}
    known_pair = (coalition([0, 1, 2]), coalition([0, 2, 3]))  # {abc, acd}
    assert known_pair in blocking
    a, b = verdict.collection
    assert a | b == g.grand and a.bit_count() == b.bit_count() == 3
    elapsed = time.perf_counter() - started
    assert elapsed < 5.0
    report(5, "four-player three-fifths game: blocking instability", started)


def test_criterion_06_six_player_game(six_player_unstable, store6):
    started = time.perf_counter()
    g = six_player_unstable
    ve = vital_exact_set(g, store6)
    expected = {1 << i for i in range(6)} | {
        names_to_mask(g, s) for s in ("be", "cf", "ace", "bcf", "abdf", "bcde", "cdef")
    }
    assert ve == expected

    verdict = is_core_stable(g, store6, exhaustive=True)
    assert not verdict.stable and verdict.reason == REASON_GS
    failing = {d.collection for d in verdict.regions if d.outcome == "gs-fail"}
    known_pair = tuple(sorted((names_to_mask(g, "ace"), names_to_mask(g, "cdef"))))
    assert known_pair in failing
    candidates = {names_to_mask(g, s) for s in ("ace", "bcde", "cdef")}
    assert set(verdict.collection) <= candidates
    elapsed = time.perf_counter() - started
    assert elapsed < 1800.0
    report(6, "six-player fixture: 13 vital-exact coalitions, unstable core", started)


def test_criterion_07_convex_games_stable(library):
    started = time.perf_counter()
    for n in (3, 4, 5):
        verdict = is_core_stable(permutohedron_game(n), library.get(n))
        assert verdict.stable
    elapsed = time.perf_counter() - started
    assert elapsed < 600.0
    report(7, "permutohedron games n=3,4,5 report stable cores", started)


def test_criterion_08_maximal_unbalanced_counts():
    started = time.perf_counter()
    assert [len(maximal_unbalanced(n)) for n in (2, 3, 4, 5)] == [2, 6, 32, 370]
    t0 = time.perf_counter()
    assert len(maximal_unbalanced(6)) == 11292
    six = time.perf_counter() - t0
    assert six < 600.0
    report(8, f"maximal unbalanced counts 2..6 (n=6 in {six:.0f}s)", started)


def test_criterion_09_species_counts():
    started = time.perf_counter()
    counts = count_uniform_hypergraphs(2, 3, 3)
    assert counts == [1, 7] and sum(counts) == 8
    for k in (1, 2, 3):
        for p in (1, 2, 3):
            closed = count_uniform_hypergraphs(k, p, 5)
            brute = [len(enumerate_uniform_hypergraphs(k, p, n)) for n in range(2, 6)]
            assert closed == brute
    elapsed = time.perf_counter() - started
    assert elapsed < 5.0
    report(9, "uniform hypergraph counts match the worked total and enumeration", started)


def _random_preimputation(rng, game):
    x = [F(rng.randint(-20, 40), rng.randint(1, 4)) for _ in range(game.n - 1)]
    x.append(game.worth(game.grand) - sum(x, F(0)))
    return tuple(x)


def test_criterion_10_projector_suite():
    started = time.perf_counter()
    rng = random.Random(77)
    checked = 0
    while checked < 1000:
        n = rng.randint(3, 6)
        game = random_game(rng, n)
        x = _random_preimputation(rng, game)
        size = rng.randint(1, n - 1)
        masks = rng.sample(range(1, game.grand), size)
        ctx = GramContext.empty(n)
        ok = True
        for m in masks:
            ctx = update_gramian(ctx, m)
            if ctx.dependent:
                ok = False
                break
        assert ctx.det_g == determinant(gram_matrix(n, masks[: len(ctx.coalitions)]))
        if not ok:
            continue
        gamma = projection_coefficients(game, masks, x)
        projected = project_multi(game, masks, x)
        # membership on every hyperplane
        assert all(payment(projected, m) == game.worth(m) for m in masks)
        # the residual is exactly the normal-span combination
        rebuilt = list(x)
        for w, m in zip(gamma, masks):
            rebuilt = [a + w * b for a, b in zip(rebuilt, eta(n, m))]
        assert tuple(rebuilt) == projected
        # idempotence and agreement of the three formulations
        assert project_multi(game, masks, projected) == projected
        assert project_multi_dual(game, masks, x) == projected
        det_g, numerators = cramer_coefficients(game, masks, x)
        assert [num / det_g for num in numerators] == gamma
        checked += 1
    elapsed = time.perf_counter() - started
    assert elapsed < 60.0
    report(10, "1000-instance projector property suite", started)


def test_criterion_11_eta_identities(store4):
    started = time.perf_counter()
    for n in (2, 3, 4):
        grand = full_coalition(n)
        for a in range(1, grand + 1):
            assert payment(eta(n, a), grand) == 0
            for b in range(1, grand + 1):
                lhs = tuple(p + q for p, q in zip(eta(n, a), eta(n, b)))
                rhs = tuple(p + q for p, q in zip(eta(n, a | b), eta(n, a & b)))
                assert lhs == rhs
                explicit = sum((p * q for p, q in zip(eta(n, a), eta(n, b))), F(0))
                assert explicit == eta_dot(n, a, b)
    for n in (3, 5, 7):
        grand = full_coalition(n)
        for a in range(1, grand):
            for b in range(1, grand):
                assert eta_dot(n, a, b) != 0

    # balanced <=> a positive combination of the normals vanishes, for every
    # collection on at most four players
    from coopcore.polyhedra import EQ, LinearProgram, solve

    stores = {2: generate(2), 3: generate(3), 4: store4}
    for n in (2, 3, 4):
        grand = full_coalition(n)
        masks = list(range(1, grand + 1))
        sigs = []
        for wc in stores[n]:
            sig = 0
            for m in wc.coalitions:
                sig |= 1 << m
            sigs.append(sig)
        for bits in range(1, 1 << len(masks)):
            collection = [masks[i] for i in range(len(masks)) if bits >> i & 1]
            sig = 0
            for m in collection:
                sig |= 1 << m
            union = 0
            for s in sigs:
                if s & ~sig == 0:
                    union |= s
            balanced = union == sig and union != 0

            # positive combination test in floor form: theta_j = phi_j + t
            # with phi >= 0, maximizing the common floor t under a scale
            # normalization; positive optimum <=> positive vanishing combo
            k = len(collection)
            lp = LinearProgram([F(0)] * k + [F(1)], "max")
            lp.nonneg = [True] * (k + 1)
            etas = [eta(n, m) for m in collection]
            for i in range(n):
                lp.add([e[i] for e in etas] + [sum(e[i] for e in etas)], EQ, F(0))
            lp.add([F(1)] * k + [F(k)], EQ, F(1))
            out = solve(lp)
            vanishing = out.optimal and out.value > 0
            assert vanishing == balanced, (n, collection)
    elapsed = time.perf_counter() - started
    assert elapsed < 120.0
    report(11, "normal-vector identities and the balancedness equivalence", started)


def test_criterion_12_blind_spots(store3, store4, blind_spot_three, four_person_06):
    started = time.perf_counter()
    assert is_blind_spot([3, 5], store3)

    # every game with a feasible blind region must be declared unstable
    for g, store in ((blind_spot_three, store3), (four_person_06, store4)):
        grand = g.grand
        proper = [m for m in range(1, grand)]
        blind_regions = []
        for size in (2, 3):
            for combo in itertools.combinations(proper, size):
                if is_blind_spot(combo, store) and is_feasible(
                    g, combo, proper, store, with_witness=False
                ).feasible:
                    blind_regions.append(combo)
        assert blind_regions
        assert not is_core_stable(g, store).stable
    elapsed = time.perf_counter() - started
    assert elapsed < 5.0
    report(12, "blind-spot detection and its instability consequence", started)
