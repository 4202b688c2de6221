"""Bondareva-Shapley tests, effective coalitions, basic polyhedra, covers.

The sharp Bondareva-Shapley theorem decides core nonemptiness by one weighted
inequality per minimal balanced collection.  A `GameScan` caches, per (game,
store) pair, the weighted worth of every collection plus an inverted
coalition-to-collection index, so that the many single-coalition worth bumps
performed by the property checks (exactness, extendability, ...) only touch
the collections containing a bumped coalition.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Optional

from .model import Coalition, Game, full_coalition, members
from .mbc import MbcLibrary, MbcStore, WeightedCollection, mapped_collections
from .polyhedra import lp_is_balanced, minimize_payment

ZERO = Fraction(0)


class GameScan:
    """Cached evaluation of every minimal balanced collection on a game."""

    def __init__(self, game: Game, store: MbcStore):
        if game.n != store.n:
            raise ValueError("store and game have different player counts")
        self.game = game
        self.store = store
        grand = game.grand
        self.grand_worth = game.worth(grand)
        worth = game.worth
        if game.domain is not None:
            dom = game.domain
            self.indices = [
                i
                for i, wc in enumerate(store.collections)
                if all(m in dom for m in wc.coalitions)
            ]
        else:
            self.indices = range(len(store.collections))
        base: dict[int, Fraction] = {}
        violation: Optional[int] = None
        tight: list[int] = []
        target = self.grand_worth
        cols = store.collections
        for i in self.indices:
            wc = cols[i]
            total = ZERO
            for mask, w in wc.items():
                total += w * worth(mask)
            base[i] = total
            if total > target:
                if violation is None:
                    violation = i
            elif total == target:
                tight.append(i)
        self.base = base
        self.violation = violation
        self.tight = tight
        self._by_coalition: Optional[dict[Coalition, list[tuple[int, Fraction]]]] = None

    @property
    def balanced(self) -> bool:
        return self.violation is None

    def by_coalition(self) -> dict[Coalition, list[tuple[int, Fraction]]]:
        index = self._by_coalition
        if index is None:
            index = {}
            cols = self.store.collections
            for i in self.indices:
                for mask, w in cols[i].items():
                    index.setdefault(mask, []).append((i, w))
            self._by_coalition = index
        return index

    def effective_union(self) -> Coalition:
        union = 0
        cols = self.store.collections
        for i in self.tight:
            for mask in cols[i].coalitions:
                union |= mask
        return union

    def tight_coalitions(self) -> set[Coalition]:
        out: set[Coalition] = set()
        cols = self.store.collections
        for i in self.tight:
            out.update(cols[i].coalitions)
        return out

    # -- worth bumps ------------------------------------------------------
    #
    # For a balanced game and a map of coalition worth increases, only the
    # collections containing an increased coalition can violate the
    # Bondareva-Shapley inequalities of the bumped game.

    def _bump_adjustments(self, increases: Mapping[Coalition, Fraction]) -> dict[int, Fraction]:
        index = self.by_coalition()
        adjust: dict[int, Fraction] = {}
        for mask, delta in increases.items():
            if delta == 0:
                continue
            if delta < 0:
                raise ValueError("bumped worths must not decrease")
            for i, w in index.get(mask, ()):
                adjust[i] = adjust.get(i, ZERO) + w * delta
        return adjust

    def bumped_is_balanced(self, increases: Mapping[Coalition, Fraction]) -> bool:
        if not self.balanced:
            raise ValueError("the base game must be balanced")
        target = self.grand_worth
        base = self.base
        for i, adj in self._bump_adjustments(increases).items():
            if base[i] + adj > target:
                return False
        return True

    def bumped_tight_coalitions(self, increases: Mapping[Coalition, Fraction]) -> Optional[set[Coalition]]:
        """Coalitions in collections tight for the bumped game; None when the
        bumped game is unbalanced."""
        if not self.balanced:
            raise ValueError("the base game must be balanced")
        target = self.grand_worth
        base = self.base
        adjust = self._bump_adjustments(increases)
        for i, adj in adjust.items():
            if base[i] + adj > target:
                return None
        out: set[Coalition] = set()
        cols = self.store.collections
        touched = set(adjust)
        for i in self.tight:
            if i not in touched:
                out.update(cols[i].coalitions)
        for i, adj in adjust.items():
            if base[i] + adj == target:
                out.update(cols[i].coalitions)
        return out


def scan(game: Game, store: MbcStore) -> GameScan:
    return store.cache(("scan", game.key()), lambda: GameScan(game, store))


def is_balanced(game: Game, store: MbcStore) -> tuple[bool, Optional[WeightedCollection]]:
    """Core nonemptiness, with the first violated collection as witness."""
    s = scan(game, store)
    if s.violation is None:
        return True, None
    return False, store.collections[s.violation]


def quick_is_balanced(game: Game, store: MbcStore) -> bool:
    """Single-pass balancedness with early exit and no per-game caching; the
    form used for throughput comparisons against the LP route.

    Weights are cleared to integers by each collection's depth and worths by
    their common denominator, so the scan runs in exact integer arithmetic.
    """
    import math

    def integerized():
        out = []
        for wc in store.collections:
            d = wc.depth()
            out.append((tuple(zip(wc.coalitions, (int(w * d) for w in wc.weights))), d))
        return out

    table = store.cache("integer-weights", integerized)
    scale = math.lcm(*(w.denominator for w in game._worth.values())) if game._worth else 1
    worth = {m: int(v * scale) for m, v in game._worth.items()}
    target = worth.get(game.grand, 0)
    get = worth.get
    for items, d in table:
        total = 0
        for mask, w in items:
            value = get(mask)
            if value is not None:
                total += w * value
        if total > d * target:
            return False
    return True


def effective_coalitions(game: Game, store: MbcStore) -> set[Coalition]:
    """Coalitions receiving exactly their worth at every core element: the
    union of the minimal balanced collections whose inequality is tight."""
    s = scan(game, store)
    if not s.balanced:
        raise ValueError("effective coalitions are defined for balanced games only")
    return s.tight_coalitions()


# ---------------------------------------------------------------------------
# basic polyhedra


@dataclass(frozen=True)
class BasicPolyhedron:
    """x(N) = b_n plus 0/1 rows: weak/strict lower (u1/u2) and upper (d1/d2)
    payment bounds, each a map coalition -> bound."""

    n: int
    b_n: Fraction
    u1: Mapping[Coalition, Fraction] = field(default_factory=dict)
    u2: Mapping[Coalition, Fraction] = field(default_factory=dict)
    d1: Mapping[Coalition, Fraction] = field(default_factory=dict)
    d2: Mapping[Coalition, Fraction] = field(default_factory=dict)

    def __post_init__(self):
        grand = full_coalition(self.n)
        for family in (self.u1, self.u2, self.d1, self.d2):
            for mask in family:
                if mask == 0 or mask == grand or mask > grand:
                    raise ValueError("constraint coalitions must be proper and nonempty")


@dataclass(frozen=True)
class AssociatedGame:
    """The set-system game whose core closure equals the polyhedron."""

    n: int
    f_p: frozenset[Coalition]
    v_p: Mapping[Coalition, Fraction]
    q_p: frozenset[Coalition]  # coalitions whose bound must hold strictly


def associated_game(poly: BasicPolyhedron) -> AssociatedGame:
    """Flip every upper bound x(S) <= b into x(N\\S) >= b_n - b, merge repeated
    coalitions by the largest bound, and remember which bounds are strict.

    A strict bound strictly below a weak bound on the same coalition is
    implied by the weak one, so strictness is kept only where a strict bound
    attains the maximum.
    """
    grand = full_coalition(poly.n)
    bounds: dict[Coalition, Fraction] = {}
    strict_at: dict[Coalition, Fraction] = {}

    def feed(mask: Coalition, bound: Fraction, strict: bool) -> None:
        cur = bounds.get(mask)
        if cur is None or bound > cur:
            bounds[mask] = bound
        if strict:
            prev = strict_at.get(mask)
            if prev is None or bound > prev:
                strict_at[mask] = bound

    for mask, b in poly.u1.items():
        feed(mask, b, False)
    for mask, b in poly.u2.items():
        feed(mask, b, True)
    for mask, b in poly.d1.items():
        feed(grand ^ mask, poly.b_n - b, False)
    for mask, b in poly.d2.items():
        feed(grand ^ mask, poly.b_n - b, True)

    v_p = dict(bounds)
    v_p[0] = ZERO
    v_p[grand] = poly.b_n
    f_p = frozenset(bounds) | {0, grand}
    q_p = frozenset(m for m, b in strict_at.items() if b == bounds[m])
    return AssociatedGame(poly.n, f_p, v_p, q_p)


@dataclass(frozen=True)
class NonemptinessReport:
    nonempty: bool
    violated: Optional[WeightedCollection] = None


def check_nonempty(poly: BasicPolyhedron, store: MbcStore) -> NonemptinessReport:
    """Generalized Bondareva-Shapley test: the polyhedron is nonempty iff
    every minimal balanced collection inside its set system keeps the weighted
    bound sum below b_n, strictly whenever a strict-side coalition occurs."""
    assoc = associated_game(poly)
    f_p = assoc.f_p
    q_p = assoc.q_p
    v_p = assoc.v_p
    target = v_p[full_coalition(poly.n)]
    for wc in store.collections:
        if any(m not in f_p for m in wc.coalitions):
            continue
        total = ZERO
        for mask, w in wc.items():
            total += w * v_p[mask]
        if total > target:
            return NonemptinessReport(False, wc)
        if total == target and any(m in q_p for m in wc.coalitions):
            return NonemptinessReport(False, wc)
    return NonemptinessReport(True)


def is_nonempty(poly: BasicPolyhedron, store: MbcStore) -> bool:
    return check_nonempty(poly, store).nonempty


def core_polyhedron(game: Game) -> BasicPolyhedron:
    grand = game.grand
    u1 = {m: game.worth(m) for m in game.coalitions() if m != grand}
    return BasicPolyhedron(game.n, game.worth(grand), u1=u1)


def domination_polyhedron(game: Game, mask: Coalition, x) -> BasicPolyhedron:
    """Preimputations dominating x via the coalition: strictly better for each
    member, affordable for the coalition."""
    if mask == game.grand or mask == 0:
        raise ValueError("domination requires a proper nonempty coalition")
    u2 = {1 << i: Fraction(x[i]) for i in members(mask)}
    return BasicPolyhedron(game.n, game.worth(game.grand), u2=u2, d1={mask: game.worth(mask)})


# ---------------------------------------------------------------------------
# covers and envelopes


def totally_balanced_cover(game: Game, library: MbcLibrary) -> Game:
    """The pointwise-smallest totally balanced game above v: each coalition's
    worth becomes the best weighted worth over the minimal balanced
    collections on that coalition, always using original worths."""
    n = game.n
    worths: dict[Coalition, Fraction] = {}
    order = sorted(range(1, full_coalition(n) + 1), key=lambda m: m.bit_count())
    for mask in order:
        if mask.bit_count() == 1:
            worths[mask] = game.worth(mask)
            continue
        store = library.get(mask.bit_count())
        best = game.worth(mask)
        for wc in mapped_collections(store, mask):
            total = ZERO
            for sub, w in wc.items():
                total += w * game.worth(sub)
            if total > best:
                best = total
        worths[mask] = best
    return Game(n, worths, players=game.players)


def is_totally_balanced(game: Game, library: MbcLibrary) -> bool:
    """True when every subgame is balanced, i.e. the cover changes nothing."""
    n = game.n
    for mask in range(1, full_coalition(n) + 1):
        k = mask.bit_count()
        if k < 2:
            continue
        store = library.get(k)
        target = game.worth(mask)
        for wc in mapped_collections(store, mask):
            total = ZERO
            for sub, w in wc.items():
                total += w * game.worth(sub)
            if total > target:
                return False
    return True


def lower_envelope(game: Game) -> Game:
    """The exact cover: each proper worth lowered (or raised) to the minimal
    payment the coalition receives over the core."""
    if not lp_is_balanced(game):
        raise ValueError("the lower envelope is defined for balanced games only")
    grand = game.grand
    worths: dict[Coalition, Fraction] = {grand: game.worth(grand)}
    for mask in game.coalitions():
        if mask == grand:
            continue
        out = minimize_payment(game, mask)
        if not out.optimal:
            raise RuntimeError("core payment minimization cannot fail on a balanced game")
        worths[mask] = out.value
    return Game(game.n, worths, players=game.players)
