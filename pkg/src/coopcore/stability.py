"""Core stability via nested balancedness.

A balanced game has a stable core exactly when no region of the preimputation
space outside the core contains a point that cannot be outvoted.  The test
pipeline stacks the known necessary conditions (balancedness, exact
singletons, strictly vital-exact coalitions describing the core), a
sufficient condition (every feasible collection holding a minimal extendable
coalition), and finally one family of small linear programs per remaining
feasible region.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from .model import Coalition, Game, members, payment
from .mbc import MbcStore, WeightedCollection
from .polyhedra import (
    GE,
    EQ,
    ONE,
    ZERO,
    LinearProgram,
    LpOutcome,
    minimize_payment,
    solve,
    strictly_feasible,
)
from .balancedness import is_balanced, scan
from .parallel import parallel_map
from .properties import (
    game_region_tester,
    is_blocking,
    is_exact,
    is_extendable,
    vital_exact_set,
)

log = logging.getLogger(__name__)

REASON_NOT_BALANCED = "not-balanced"
REASON_SINGLETON = "singleton-not-exact"
REASON_DESCRIBING = "ve-not-core-describing"
REASON_BLOCKING = "blocking-collection"
REASON_GS = "gs-condition-failed"
REASON_STABLE = "all-checks-passed"


@dataclass(frozen=True)
class RegionDisposition:
    collection: tuple[Coalition, ...]
    outcome: str  # "blocking" | "extendable-skip" | "blind-spot" | "gs-fail" | "gs-pass"


@dataclass(frozen=True)
class StabilityVerdict:
    stable: bool
    reason: str
    collection: Optional[tuple[Coalition, ...]] = None
    coalition: Optional[Coalition] = None
    witness: Optional[tuple] = None
    regions: tuple[RegionDisposition, ...] = ()
    details: dict = field(default_factory=dict)


def ve_core_describing(game: Game, family: Iterable[Coalition]) -> tuple[bool, Optional[Coalition]]:
    """Whether the family's payment bounds alone already cut out the core:
    the minimal payment of every other coalition over the family-described
    polytope must reach that coalition's worth."""
    fam = sorted(set(family))
    grand = game.grand
    for target in range(1, grand):
        if target in fam:
            continue
        out = minimize_payment(game, target, fam)
        if out.status == "unbounded":
            return False, target
        if not out.optimal:
            raise ValueError("the family does not describe a nonempty polytope")
        if out.value < game.worth(target):
            return False, target
    return True, None


def is_blind_spot(collection: Iterable[Coalition], store: MbcStore) -> bool:
    """A feasible region none of whose points can be dominated while paying
    every aggrieved coalition at least as much: for every member, the
    collection plus that member's singletons contains a balanced collection."""
    masks = sorted(set(collection))
    if not masks:
        raise ValueError("the empty collection has no region to be blind")
    sig_base = 0
    for m in masks:
        sig_base |= 1 << m
    for mask in masks:
        sig = sig_base
        for i in members(mask):
            sig |= 1 << (1 << i)
        if not _contains_collection(store, sig):
            return False
    return True


def _contains_collection(store: MbcStore, allowed_sig: int) -> bool:
    sigs = _collection_signatures(store)
    return any(s & ~allowed_sig == 0 for s in sigs)


def _collection_signatures(store: MbcStore) -> list[int]:
    def build():
        out = []
        for wc in store.collections:
            sig = 0
            for m in wc.coalitions:
                sig |= 1 << m
            out.append(sig)
        return out

    return store.cache("signatures", build)


# ---------------------------------------------------------------------------
# outvoting programs


def candidate_collections(
    game: Game, ve: frozenset[Coalition], mask: Coalition, store: MbcStore
) -> list[WeightedCollection]:
    """The minimal balanced collections usable against outvoting via `mask`:
    inside (VE beyond the coalition's subsets) + the complement + the
    coalition's singletons, and containing at least one such singleton."""
    grand = game.grand
    singles = {1 << i for i in members(mask)}
    allowed = {m for m in ve if m & ~mask != 0} | {grand ^ mask} | singles
    sig_allowed = 0
    for m in allowed:
        sig_allowed |= 1 << m
    sig_singles = 0
    for m in singles:
        sig_singles |= 1 << m
    out = []
    for wc, sig in zip(store.collections, _collection_signatures(store)):
        if sig & ~sig_allowed == 0 and sig & sig_singles:
            out.append(wc)
    return out


def _region_rows(game: Game, ve: Sequence[Coalition], region: frozenset[Coalition], lp: LinearProgram) -> list[int]:
    """Append the region's rows (weak outside, flipped-strict inside) and
    return the indices of the strict rows."""
    n = game.n
    grand = game.grand
    total = game.worth(grand)
    strict_rows = []
    for mask in ve:
        if mask in region:
            comp = grand ^ mask
            strict_rows.append(len(lp.rows))
            lp.add(
                [ONE if comp >> i & 1 else ZERO for i in range(n)], GE, total - game.worth(mask)
            )
        else:
            lp.add([ONE if mask >> i & 1 else ZERO for i in range(n)], GE, game.worth(mask))
    return strict_rows


def _nonbasic_row(game: Game, mask: Coalition, collection: WeightedCollection) -> tuple[list[Fraction], Fraction]:
    """The constraint keeping a preimputation non-outvoted via `mask` under
    the given balanced collection: its singleton-weighted payments inside the
    coalition must reach what the rest of the collection cannot supply."""
    n = game.n
    grand = game.grand
    total = game.worth(grand)
    singles = {1 << i for i in members(mask)}
    coeffs = [ZERO] * n
    rhs = total
    for m, w in collection.items():
        if m in singles:
            coeffs[(m).bit_length() - 1] = w
        else:
            worth = total - game.worth(mask) if m == grand ^ mask else game.worth(m)
            rhs -= w * worth
    return coeffs, rhs


@dataclass(frozen=True)
class OutvoteProgram:
    """The minimization program deciding whether a region holds a
    preimputation that the given balanced collection protects from outvoting
    via the given coalition: region rows (weak outside, flipped-strict
    inside) plus the collection's non-outvoting row."""

    region: tuple[Coalition, ...]
    coalition: Coalition
    collection: WeightedCollection
    family: tuple[Coalition, ...]

    def build(self, game: Game, with_efficiency: bool) -> tuple[LinearProgram, list[int]]:
        n = game.n
        lp = LinearProgram([ONE] * n, "min")
        if with_efficiency:
            lp.add([ONE] * n, EQ, game.worth(game.grand))
        strict = _region_rows(game, self.family, frozenset(self.region), lp)
        coeffs, rhs = _nonbasic_row(game, self.coalition, self.collection)
        lp.add(coeffs, GE, rhs)
        return lp, strict


def outvote_value(
    game: Game,
    region: Iterable[Coalition],
    mask: Coalition,
    collection: WeightedCollection,
    ve: Optional[Iterable[Coalition]] = None,
) -> LpOutcome:
    """Value of the non-outvoted-witness program for (region, coalition,
    collection).

    Returns value v(N) with a witness exactly when the region contains a
    preimputation satisfying the collection's non-outvoting constraint
    (strict region rows honored through the uniform-slack phase); otherwise
    the relaxed minimum of x(N), or infeasible.
    """
    region = frozenset(region)
    if mask not in region:
        raise ValueError("the coalition must belong to the region's collection")
    if ve is None:
        ve = [m for m in range(1, game.grand)]
    if not any(m in {1 << i for i in members(mask)} for m in collection.coalitions):
        raise ValueError("the collection must contain a singleton of the coalition")
    program = OutvoteProgram(tuple(sorted(region)), mask, collection, tuple(sorted(set(ve))))
    lp, strict = program.build(game, with_efficiency=True)
    witness = strictly_feasible(lp, strict)
    total = game.worth(game.grand)
    if witness is not None:
        return LpOutcome("optimal", total, witness)
    relaxed, _ = program.build(game, with_efficiency=False)
    out = solve(relaxed)
    if not out.optimal:
        return LpOutcome("infeasible")
    return LpOutcome("optimal", out.value, None)


def region_admits_unvoted(
    game: Game,
    region: Sequence[Coalition],
    ve: frozenset[Coalition],
    store: MbcStore,
) -> tuple[bool, dict]:
    """Whether for every aggrieved coalition of the region some balanced
    collection certifies a non-outvoted preimputation (the per-program form
    of the nested balancedness condition)."""
    chosen: dict[Coalition, WeightedCollection] = {}
    for mask in region:
        hit = None
        for wc in candidate_collections(game, ve, mask, store):
            out = outvote_value(game, region, mask, wc, ve)
            if out.optimal and out.witness is not None:
                hit = wc
                break
        if hit is None:
            return False, {}
        chosen[mask] = hit
    return True, {"collections": chosen}


def _conjunction_witness(
    game: Game,
    region: Sequence[Coalition],
    ve: frozenset[Coalition],
    store: MbcStore,
    cap: int = 2000,
) -> Optional[bool]:
    """Diagnostic: one preimputation satisfying some non-outvoting constraint
    for every aggrieved coalition simultaneously.  Returns None when the
    combination space exceeds the cap."""
    per_coalition = [candidate_collections(game, ve, mask, store) for mask in region]
    if any(not c for c in per_coalition):
        return False
    combos = 1
    for c in per_coalition:
        combos *= len(c)
        if combos > cap:
            return None
    ve_sorted = sorted(ve)
    n = game.n
    total = game.worth(game.grand)
    for pick in itertools.product(*per_coalition):
        lp = LinearProgram([ONE] * n, "min")
        lp.add([ONE] * n, EQ, total)
        strict = _region_rows(game, ve_sorted, frozenset(region), lp)
        for mask, wc in zip(region, pick):
            coeffs, rhs = _nonbasic_row(game, mask, wc)
            lp.add(coeffs, GE, rhs)
        if strictly_feasible(lp, strict) is not None:
            return True
    return False


# ---------------------------------------------------------------------------
# the pipeline


def is_core_stable(
    game: Game,
    store: MbcStore,
    max_region_size: Optional[int] = None,
    exhaustive: bool = False,
    diagnose_conjunction: bool = False,
    threads: Optional[int] = None,
) -> StabilityVerdict:
    """Decide whether the core is a stable set.

    Necessary-condition pre-filters run first; surviving games have every
    feasible collection of strictly vital-exact coalitions examined in
    canonical order (size, then sorted masks).  A blocking or blind region,
    or a region passing the per-coalition outvoting programs, certifies
    instability; the first such region (canonical order) is the witness.
    With `exhaustive`, later regions are still classified for the report.
    """
    balanced, violation = is_balanced(game, store)
    if not balanced:
        return StabilityVerdict(False, REASON_NOT_BALANCED, witness=(violation,))
    grand = game.grand
    for i in range(game.n):
        if not is_exact(game, 1 << i, store):
            return StabilityVerdict(False, REASON_SINGLETON, coalition=1 << i)
    ve = vital_exact_set(game, store)
    describing, culprit = ve_core_describing(game, ve)
    if not describing:
        return StabilityVerdict(False, REASON_DESCRIBING, coalition=culprit)

    extendable = {m for m in ve if is_extendable(game, m, store)}
    if extendable >= ve:
        # every feasible collection then holds a minimal extendable member
        return StabilityVerdict(
            True, REASON_STABLE, details={"shortcut": "all-vital-exact-extendable"}
        )

    tester = game_region_tester(game, store, ve)
    ve_sorted = sorted(ve)
    sig_pool = _collection_signatures(store)
    ve_sig = 0
    for m in ve_sorted:
        ve_sig |= 1 << m
    balanced_inside = [sig for sig in sig_pool if sig & ~ve_sig == 0]
    cap = max_region_size if max_region_size is not None else len(ve_sorted)

    # pass 1: list the feasible collections and scan them for a blocking one,
    # a necessary condition that preempts the outvoting programs entirely
    feasible: list[tuple[Coalition, ...]] = []
    first_blocking: Optional[tuple[Coalition, ...]] = None
    for size in range(1, cap + 1):
        candidates = []
        for combo in itertools.combinations(ve_sorted, size):
            sig = 0
            for m in combo:
                sig |= 1 << m
            if any(b & ~sig == 0 for b in balanced_inside):
                continue  # holds a balanced collection: region empty by design
            candidates.append(combo)
        flags = parallel_map(tester.feasible, candidates, threads)
        for combo, ok in zip(candidates, flags):
            if not ok:
                continue
            if is_blocking(game.n, combo) and first_blocking is None:
                first_blocking = combo
                if not exhaustive:
                    return StabilityVerdict(
                        False,
                        REASON_BLOCKING,
                        collection=combo,
                        regions=(RegionDisposition(combo, "blocking"),),
                    )
            feasible.append(combo)

    # pass 2: classify the remaining regions; the first one admitting a
    # non-outvoted preimputation (canonical order) decides instability
    dispositions: list[RegionDisposition] = []
    first_unstable: Optional[StabilityVerdict] = None
    if first_blocking is not None:
        first_unstable = StabilityVerdict(False, REASON_BLOCKING, collection=first_blocking)
    for combo in feasible:
        if is_blocking(game.n, combo):
            dispositions.append(RegionDisposition(combo, "blocking"))
            continue
        if any(
            m in extendable and not any(t != m and t & ~m == 0 for t in combo)
            for m in combo
        ):
            # a minimal extendable member dominates the whole region
            dispositions.append(RegionDisposition(combo, "extendable-skip"))
            continue
        if first_unstable is not None and not exhaustive:
            break
        if is_blind_spot(combo, store):
            dispositions.append(RegionDisposition(combo, "blind-spot"))
            if first_unstable is None:
                first_unstable = StabilityVerdict(
                    False, REASON_GS, collection=combo, details={"blind_spot": True}
                )
            continue
        admits, info = region_admits_unvoted(game, combo, ve, store)
        if admits:
            if diagnose_conjunction:
                joint = _conjunction_witness(game, combo, ve, store)
                info["conjunction"] = joint
                if joint is False:
                    log.warning(
                        "per-program outvoting test and conjunction program "
                        "disagree on region %s", combo,
                    )
            dispositions.append(RegionDisposition(combo, "gs-fail"))
            if first_unstable is None:
                first_unstable = StabilityVerdict(
                    False, REASON_GS, collection=combo, details=info
                )
        else:
            dispositions.append(RegionDisposition(combo, "gs-pass"))

    if first_unstable is not None:
        return StabilityVerdict(
            first_unstable.stable,
            first_unstable.reason,
            first_unstable.collection,
            first_unstable.coalition,
            first_unstable.witness,
            tuple(dispositions),
            first_unstable.details,
        )
    return StabilityVerdict(True, REASON_STABLE, regions=tuple(dispositions))
