import itertools
import logging
import random
from fractions import Fraction as F

from coopcore.balancedness import is_balanced
from coopcore.mbc import WeightedCollection
from coopcore.model import (
    Game,
    coalition,
    full_coalition,
    min_of_additive,
    payment,
    permutohedron_game,
)
from coopcore.properties import is_feasible, vital_exact_set
from coopcore.stability import (
    REASON_BLOCKING,
    REASON_GS,
    REASON_NOT_BALANCED,
    REASON_SINGLETON,
    REASON_STABLE,
    candidate_collections,
    is_blind_spot,
    is_core_stable,
    outvote_value,
    ve_core_describing,
)

from conftest import names_to_mask


def test_blind_spot_examples(store3, store5, min_additive_five):
    assert is_blind_spot([3, 5], store3)
    assert not is_blind_spot([3], store3)
    g = min_additive_five
    assert not is_blind_spot([names_to_mask(g, "ace"), names_to_mask(g, "ade")], store5)


def test_ve_core_describing(min_additive_five, store5, store3):
    g = min_additive_five
    ve = vital_exact_set(g, store5)
    ok, culprit = ve_core_describing(g, ve)
    assert ok and culprit is None

    add = min_of_additive(3, [(1, 2, 3)])
    ok, _ = ve_core_describing(add, [1, 2, 4])
    assert ok

    # dropping a needed coalition breaks the description
    ok, culprit = ve_core_describing(g, set(ve) - {names_to_mask(g, "bc")})
    assert not ok


def test_outvote_partition_collection_never_witnesses(min_additive_five, store5):
    """With the collection {singletons of S, complement}, the non-outvoting
    row collapses to the payment bound of S itself, which the region denies."""
    g = min_additive_five
    ve = vital_exact_set(g, store5)
    ace, ade = names_to_mask(g, "ace"), names_to_mask(g, "ade")
    singles = [1 << i for i in (0, 2, 4)]
    partition = WeightedCollection(
        tuple(sorted(singles + [g.grand ^ ace])), (F(1),) * 4
    )
    out = outvote_value(g, [ace, ade], ace, partition, ve)
    assert out.witness is None


def test_outvote_witness_exists_on_failing_region(min_additive_five, store5):
    g = min_additive_five
    ve = vital_exact_set(g, store5)
    ace, ade = names_to_mask(g, "ace"), names_to_mask(g, "ade")
    region = [ace, ade]
    hits = 0
    for mask in region:
        for wc in candidate_collections(g, ve, mask, store5):
            out = outvote_value(g, region, mask, wc, ve)
            if out.witness is not None:
                assert out.value == g.worth(g.grand)
                x = out.witness
                assert payment(x, g.grand) == g.worth(g.grand)
                assert payment(x, mask) < g.worth(mask)
                hits += 1
                break
    assert hits == 2


def test_unbalanced_game_verdict(three_player_pairs8, store3):
    verdict = is_core_stable(three_player_pairs8, store3)
    assert not verdict.stable and verdict.reason == REASON_NOT_BALANCED


def test_singleton_not_exact_verdict(blind_spot_three, store3):
    verdict = is_core_stable(blind_spot_three, store3)
    assert not verdict.stable and verdict.reason == REASON_SINGLETON


def test_three_fifths_game_blocking(four_person_06, store4):
    verdict = is_core_stable(four_person_06, store4)
    assert not verdict.stable and verdict.reason == REASON_BLOCKING
    triples = {m for m in range(1, 15) if m.bit_count() == 3}
    assert set(verdict.collection) <= triples and len(verdict.collection) == 2
    a, b = verdict.collection
    assert a | b == full_coalition(4)

    exhaustive = is_core_stable(four_person_06, store4, exhaustive=True)
    blocking = {d.collection for d in exhaustive.regions if d.outcome == "blocking"}
    # {abc, acd} is one of the six symmetric blocking pairs
    assert (coalition([0, 1, 2]), coalition([0, 2, 3])) in blocking
    assert len(blocking) == 6


def test_min_additive_game_unstable(min_additive_five, store5):
    g = min_additive_five
    verdict = is_core_stable(g, store5)
    assert not verdict.stable and verdict.reason == REASON_GS
    triples = {names_to_mask(g, s) for s in ("acd", "ace", "ade")}
    assert set(verdict.collection) <= triples

    exhaustive = is_core_stable(g, store5, exhaustive=True)
    examined = {d.collection for d in exhaustive.regions if d.outcome != "extendable-skip"}
    subsets = set()
    for size in (1, 2, 3):
        subsets.update(itertools.combinations(sorted(triples), size))
    assert examined == subsets
    failing = {d.collection for d in exhaustive.regions if d.outcome == "gs-fail"}
    # {ace, ade} fails alongside its two symmetric twins
    assert (names_to_mask(g, "ace"), names_to_mask(g, "ade")) in failing


def test_convex_games_stable(library):
    for n in (3, 4, 5):
        verdict = is_core_stable(permutohedron_game(n), library.get(n))
        assert verdict.stable and verdict.reason == REASON_STABLE


def test_additive_game_stable(store3):
    verdict = is_core_stable(min_of_additive(3, [(1, 2, 3)]), store3)
    assert verdict.stable


def test_verdict_invariant_under_relabeling(four_person_06, min_additive_five, blind_spot_three, store3, store4, store5):
    rng = random.Random(4)
    fixtures = (
        (four_person_06, store4),
        (min_additive_five, store5),
        (blind_spot_three, store3),
        (permutohedron_game(3), store3),
    )
    for g, store in fixtures:
        base = is_core_stable(g, store).stable
        for _ in range(3):
            perm = list(range(g.n))
            rng.shuffle(perm)
            relabeled = Game(
                g.n,
                {
                    sum(1 << perm[i] for i in range(g.n) if m >> i & 1): g.worth(m)
                    for m in range(1, g.grand + 1)
                },
            )
            assert is_core_stable(relabeled, store).stable == base


def test_blind_feasible_regions_force_instability(store3, store4, blind_spot_three, four_person_06):
    """Any game with a feasible blind region must be declared unstable."""
    for g, store in ((blind_spot_three, store3), (four_person_06, store4)):
        grand = g.grand
        proper = [m for m in range(1, grand)]
        found_blind = False
        for size in (2, 3):
            for combo in itertools.combinations(proper, size):
                report = is_feasible(g, combo, proper, store, with_witness=False)
                if report.feasible and is_blind_spot(combo, store):
                    found_blind = True
                    break
            if found_blind:
                break
        assert found_blind
        assert not is_core_stable(g, store).stable


def test_conjunction_diagnostic_logs_disagreement(min_additive_five, store5, caplog):
    with caplog.at_level(logging.WARNING, logger="coopcore.stability"):
        verdict = is_core_stable(min_additive_five, store5, exhaustive=True, diagnose_conjunction=True)
    assert not verdict.stable
    # the first failing pair itself has a joint witness
    assert verdict.details.get("conjunction") is True
    # the triple region is where the per-program and joint tests disagree
    assert any("disagree" in rec.message for rec in caplog.records)


def _brute_force_unstable(game, store, denom=6):
    """Sampling oracle for three players: every region witness must be
    dominated by some core lattice point for the core to be stable."""
    from coopcore.properties import game_region_tester

    grand = game.grand
    proper = list(range(1, grand))
    total = game.worth(grand)
    lattice = []
    span = int(total * denom) + 2 * denom
    for a in range(-denom, span):
        for b in range(-denom, span):
            x = (F(a, denom), F(b, denom), total - F(a + b, denom))
            if all(payment(x, m) >= game.worth(m) for m in proper):
                lattice.append(x)
    tester = game_region_tester(game, store, proper)
    for size in (1, 2, 3):
        for combo in itertools.combinations(proper, size):
            if not tester.feasible(combo):
                continue
            witness = tester.witness(combo)
            dominated = False
            for y in lattice:
                for mask in combo:
                    if payment(y, mask) <= game.worth(mask) and all(
                        y[i] > witness[i] for i in range(game.n) if mask >> i & 1
                    ):
                        dominated = True
                        break
                if dominated:
                    break
            if not dominated:
                return True  # an undominated sampled point: core not stable
    return False


def test_three_player_verdicts_match_sampling_oracle(store3):
    games = [
        permutohedron_game(3),
        min_of_additive(3, [(1, 2, 3)]),
        Game(3, {3: 2, 5: 2, 7: 3}),
        Game(3, {1: 1, 3: 2, 5: 2, 7: 4}),
    ]
    for g in games:
        if not is_balanced(g, store3)[0]:
            continue
        verdict = is_core_stable(g, store3)
        oracle_unstable = _brute_force_unstable(g, store3)
        if oracle_unstable:
            assert not verdict.stable
        else:
            assert verdict.stable
