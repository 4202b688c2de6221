"""Coalition predicates (exactness, vitality, strict vital-exactness,
extendability) and collection predicates (feasibility, unbalancedness,
maximal unbalanced enumeration).

Each predicate is the nonemptiness of a basic polyhedron and is decided by
the generalized Bondareva-Shapley test on a bumped or restricted game, never
by floating point.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from .model import Coalition, Game, full_coalition, members, payment
from .mbc import MbcLibrary, MbcStore, mapped_collections
from .polyhedra import (
    GE,
    EQ,
    LE,
    ONE,
    ZERO,
    LinearProgram,
    core_vertices,
    solve,
    strictly_feasible,
)
from .balancedness import scan
from .model import subgame as take_subgame


def _flip_increase(game: Game, mask: Coalition) -> dict[Coalition, Fraction]:
    """Worth increase putting the complement's worth at v(N) - v(S)."""
    grand = game.grand
    new = game.worth(grand) - game.worth(mask)
    delta = new - game.worth(grand ^ mask)
    return {grand ^ mask: delta} if delta > 0 else {}


def is_exact(game: Game, mask: Coalition, store: MbcStore) -> bool:
    """Some core element pays the coalition exactly its worth."""
    s = scan(game, store)
    if not s.balanced:
        raise ValueError("exactness is defined for balanced games only")
    if mask == game.grand:
        return True
    if mask == 0:
        raise ValueError("the empty coalition has no exactness")
    return s.bumped_is_balanced(_flip_increase(game, mask))


def is_vital(game: Game, mask: Coalition, library: MbcLibrary) -> bool:
    """The subgame core on the coalition is full-dimensional: every minimal
    balanced collection on it other than the coalition itself stays strictly
    below the coalition worth (Gillies' criterion)."""
    if mask == 0:
        raise ValueError("the empty coalition has no vitality")
    k = mask.bit_count()
    if k == 1:
        return True
    target = game.worth(mask)
    store = library.get(k)
    for wc in mapped_collections(store, mask):
        if wc.coalitions == (mask,):
            continue
        total = ZERO
        for sub, w in wc.items():
            total += w * game.worth(sub)
        if total >= target:
            return False
    return True


def is_strictly_vital_exact(game: Game, mask: Coalition, store: MbcStore) -> bool:
    """Some core element is tight on the coalition and strictly slack on all
    its proper subcoalitions."""
    if mask == 0 or mask == game.grand:
        raise ValueError("strict vital-exactness concerns proper nonempty coalitions")
    s = scan(game, store)
    if not s.balanced:
        raise ValueError("strict vital-exactness is defined for balanced games only")
    tight = s.bumped_tight_coalitions(_flip_increase(game, mask))
    if tight is None:  # flipped game unbalanced: not even exact
        return False
    return not any(t != mask and t & ~mask == 0 for t in tight)


def vital_exact_set(game: Game, store: MbcStore) -> frozenset[Coalition]:
    """All proper coalitions that are strictly vital-exact."""
    grand = game.grand
    return frozenset(
        m for m in range(1, grand) if is_strictly_vital_exact(game, m, store)
    )


def _extension_increases(game: Game, mask: Coalition, z: Sequence[Fraction]) -> dict[Coalition, Fraction]:
    """Worth increases forcing a core element to restrict to z on the
    coalition's players: singletons pinned from below at z_i, complements
    N minus {i} raised to v(N) - z_i where that is an increase."""
    grand = game.grand
    total = game.worth(grand)
    increases: dict[Coalition, Fraction] = {}
    for pos, player in enumerate(members(mask)):
        single = 1 << player
        dz = z[pos] - game.worth(single)
        if dz > 0:
            increases[single] = dz
        comp = grand ^ single
        dc = (total - z[pos]) - game.worth(comp)
        if dc > 0:
            increases[comp] = dc
    return increases


def is_extendable(game: Game, mask: Coalition, store: MbcStore) -> bool:
    """Every core element of the subgame extends to a core element of the
    full game; checked on the subgame core vertices."""
    if mask == 0:
        raise ValueError("the empty coalition has no extendability")
    if mask == game.grand:
        return True
    s = scan(game, store)
    if not s.balanced:
        raise ValueError("extendability is defined for balanced games only")
    sub = take_subgame(game, mask)
    vertices = core_vertices(sub)  # raises if the subgame core is empty
    for z in vertices:
        if not s.bumped_is_balanced(_extension_increases(game, mask, z)):
            return False
    return True


# ---------------------------------------------------------------------------
# feasible collections


@dataclass(frozen=True)
class FeasibleCollectionReport:
    collection: tuple[Coalition, ...]
    feasible: bool
    blocking: bool
    witness: Optional[tuple[Fraction, ...]] = None


class RegionTester:
    """Feasibility of collections w.r.t. a fixed core-describing family.

    The region of a collection Q contains the preimputations whose payment is
    below worth exactly on Q.  Rewriting its strict rows through complements
    shows only the minimal balanced collections inside F union F-complements
    can decide feasibility, so those are filtered once per family.
    """

    def __init__(self, game: Game, store: MbcStore, family: Iterable[Coalition]):
        self.game = game
        self.n = game.n
        grand = game.grand
        self.grand = grand
        self.family = frozenset(family)
        if any(m == 0 or m == grand for m in self.family):
            raise ValueError("the describing family holds proper nonempty coalitions")
        universe = self.family | {grand ^ m for m in self.family} | {grand}
        self.pool = [
            wc for wc in store.collections if all(m in universe for m in wc.coalitions)
        ]
        self.worth = {m: game.worth(m) for m in universe}
        self.worth[grand] = game.worth(grand)

    def feasible(self, collection: Iterable[Coalition]) -> bool:
        q = frozenset(collection)
        if not q <= self.family:
            raise ValueError("the collection must lie inside the describing family")
        grand = self.grand
        total = self.worth[grand]
        qc = {grand ^ m for m in q}
        worth = self.worth
        for wc in self.pool:
            ok = True
            strict = False
            acc = ZERO
            for mask, w in wc.items():
                if mask in qc:
                    strict = True
                    acc += w * (total - worth[grand ^ mask])
                elif mask == grand:
                    acc += w * total
                elif mask in self.family and mask not in q:
                    acc += w * worth[mask]
                else:
                    ok = False
                    break
            if not ok:
                continue
            if acc > total or (strict and acc == total):
                return False
        return True

    def witness(self, collection: Iterable[Coalition]) -> Optional[tuple[Fraction, ...]]:
        """A preimputation in the region, via the uniform-slack program."""
        q = frozenset(collection)
        n = self.n
        lp = LinearProgram([ZERO] * n, "min")
        lp.add([ONE] * n, EQ, self.worth[self.grand])
        strict_rows = []
        for mask in sorted(self.family - q):
            lp.add([ONE if mask >> i & 1 else ZERO for i in range(n)], GE, self.worth[mask])
        for mask in sorted(q):
            comp = self.grand ^ mask
            row = [ONE if comp >> i & 1 else ZERO for i in range(n)]
            strict_rows.append(len(lp.rows))
            lp.add(row, GE, self.worth[self.grand] - self.worth[mask])
        return strictly_feasible(lp, strict_rows)


def is_blocking(n: int, collection: Iterable[Coalition]) -> bool:
    """Every member pairs with another member to cover the grand coalition;
    no point of such a region is dominated at all."""
    masks = list(collection)
    grand = full_coalition(n)
    if not masks:
        return False
    return all(any(a | b == grand for b in masks if b is not a) for a in masks)


def is_feasible(
    game: Game,
    collection: Iterable[Coalition],
    family: Optional[Iterable[Coalition]] = None,
    store: Optional[MbcStore] = None,
    with_witness: bool = True,
) -> FeasibleCollectionReport:
    """Nonemptiness of the region of `collection` w.r.t. `family` (default:
    all proper coalitions), plus the blocking flag and a region witness."""
    if store is None:
        raise ValueError("a minimal balanced collection store is required")
    if family is None:
        family = [m for m in range(1, game.grand)]
    tester = game_region_tester(game, store, family)
    q = tuple(sorted(set(collection)))
    feasible = tester.feasible(q)
    blocking = feasible and is_blocking(game.n, q)
    witness = tester.witness(q) if feasible and with_witness else None
    return FeasibleCollectionReport(q, feasible, blocking, witness)


def game_region_tester(game: Game, store: MbcStore, family: Iterable[Coalition]) -> RegionTester:
    key = ("regions", game.key(), frozenset(family))
    return store.cache(key, lambda: RegionTester(game, store, family))


# ---------------------------------------------------------------------------
# unbalanced collections


def is_unbalanced(n: int, collection: Iterable[Coalition]) -> tuple[bool, Optional[tuple[Fraction, ...]]]:
    """A collection is unbalanced iff some side payment strictly raises the
    payment of each member; returns the witness side payment."""
    masks = sorted(set(collection))
    grand = full_coalition(n)
    if any(m == 0 or m >= grand for m in masks):
        raise ValueError("members must be proper nonempty coalitions")
    if not masks:
        return True, tuple([ZERO] * n)
    lp = LinearProgram([ZERO] * n, "min")
    lp.add([ONE] * n, EQ, ZERO)
    strict_rows = []
    for mask in masks:
        strict_rows.append(len(lp.rows))
        lp.add([ONE if mask >> i & 1 else ZERO for i in range(n)], GE, ZERO)
    witness = strictly_feasible(lp, strict_rows)
    if witness is None:
        return False, None
    return True, witness


def maximal_unbalanced(n: int, threads: Optional[int] = None) -> list[tuple[Coalition, ...]]:
    """All maximal unbalanced collections: one coalition from each
    complementary pair, jointly improvable by a side payment.

    Depth-first over the pairs with an interior witness side payment carried
    along each branch.  Crossing to the other side of the next hyperplane is
    first attempted by an exact line search along that hyperplane's normal.
    When the search fails, the branch is pruned exactly when the grown prefix
    contains a balanced collection -- decided by a partition scan and then a
    containment scan over the minimal balanced collections -- and otherwise a
    linear program recovers the missing witness.  Prefix unbalancedness is
    monotone, so pruned branches never resurface.
    """
    from .mbc import generate as _generate

    grand = full_coalition(n)
    pairs = []
    for mask in range(1, grand):
        comp = grand ^ mask
        if mask < comp:
            pairs.append((mask, comp))
    npairs = len(pairs)

    # balanced-subcollection machinery: signatures indexed by member coalition
    by_member: dict[Coalition, list[int]] = {m: [] for m in range(1, grand)}
    if n >= 2:
        for wc in _generate(n):
            sig = 0
            for m in wc.coalitions:
                sig |= 1 << m
            for m in wc.coalitions:
                if m != grand:
                    by_member[m].append(sig)

    def completes_partition(chosen_set: set[Coalition], new: Coalition) -> bool:
        """Some members of the prefix partition the new coalition's
        complement (the commonest balanced subcollection)."""
        target = grand ^ new
        reachable = 1  # bitset over submasks of target, bit m set if m coverable
        stack = [0]
        seen = {0}
        while stack:
            covered = stack.pop()
            if covered == target:
                return True
            rest = target ^ covered
            low = rest & -rest
            sub = rest
            while True:
                if sub & low and sub in chosen_set:
                    grown = covered | sub
                    if grown not in seen:
                        seen.add(grown)
                        stack.append(grown)
                if sub == 0:
                    break
                sub = (sub - 1) & rest
        return False

    def contains_balanced(chosen_sig: int, new: Coalition) -> bool:
        probe_sig = chosen_sig | (1 << new)
        for sig in by_member[new]:
            if sig & ~probe_sig == 0:
                return True
        return False

    def eta_dot(a: Coalition, b: Coalition) -> Fraction:
        return Fraction(n * (a & b).bit_count() - a.bit_count() * b.bit_count(), n)

    def eta(mask: Coalition) -> tuple[Fraction, ...]:
        share = Fraction(mask.bit_count(), n)
        return tuple((ONE if mask >> i & 1 else ZERO) - share for i in range(n))

    def line_search(
        chosen: list[Coalition], w: Sequence[Fraction], want: Coalition
    ) -> Optional[tuple[Fraction, ...]]:
        """A witness for chosen + [want], moving from w along the normal of
        `want`, or None when that single direction cannot reach the region."""
        norm_sq = eta_dot(want, want)
        lo = -payment(w, want) / norm_sq  # need alpha > lo
        if lo < 0:
            lo = ZERO
        hi: Optional[Fraction] = None
        for mask in chosen:
            d = eta_dot(mask, want)
            if d < 0:
                bound = payment(w, mask) / -d
                if hi is None or bound < hi:
                    hi = bound
        if hi is None:
            alpha = lo + 1
        elif lo < hi:
            alpha = (lo + hi) / 2
        else:
            return None
        direction = eta(want)
        return tuple(a + alpha * b for a, b in zip(w, direction))

    def probe(chosen: list[Coalition]) -> tuple[Fraction, ...]:
        """Max-min-margin side payment for a prefix known to be unbalanced.

        Variables are the first n-1 coordinates (the last balances the sum to
        zero) plus the margin floor t, capped at 1 so the optimum is attained;
        all right-hand sides are zero, so the origin is a starting basis and
        no artificial variables are needed.
        """
        k = n - 1
        lp = LinearProgram([ZERO] * k + [ONE], "max")
        lp.nonneg = [False] * k + [True]
        for mask in chosen:
            row = [ZERO] * (k + 1)
            for i in range(k):
                if mask >> i & 1:
                    row[i] = ONE
            if mask >> k & 1:
                row = [a - ONE for a in row[:k]] + [ZERO]
            row[k] = Fraction(-1)
            lp.add(row, GE, ZERO)
        lp.add([ZERO] * k + [ONE], LE, ONE)
        out = solve(lp)
        assert out.optimal and out.value > 0, "the containment scan certified feasibility"
        y = out.witness[:k]
        return tuple(y) + (-sum(y, ZERO),)

    out: list[tuple[Coalition, ...]] = []

    def cross(chosen: list[Coalition], witness, new: Coalition, chosen_sig: int):
        """A witness for chosen + [new], or None when that side is balanced."""
        found = line_search(chosen, witness, new)
        if found is not None:
            return found
        if completes_partition(set(chosen), new):
            return None
        if contains_balanced(chosen_sig, new):
            return None
        chosen.append(new)
        try:
            return probe(chosen)
        finally:
            chosen.pop()

    def descend(depth: int, chosen: list[Coalition], chosen_sig: int, witness) -> None:
        if depth == npairs:
            out.append(tuple(sorted(chosen)))
            return
        low, high = pairs[depth]
        margin = payment(witness, low)
        first, second = (low, high) if margin > 0 else (high, low)
        if margin == 0:
            first_witness = cross(chosen, witness, first, chosen_sig)
        else:
            first_witness = witness
        if first_witness is not None:
            chosen.append(first)
            descend(depth + 1, chosen, chosen_sig | (1 << first), first_witness)
            chosen.pop()
        second_witness = cross(chosen, witness, second, chosen_sig)
        if second_witness is not None:
            chosen.append(second)
            descend(depth + 1, chosen, chosen_sig | (1 << second), second_witness)
            chosen.pop()

    descend(0, [], 0, tuple([ZERO] * n))
    return sorted(out)
