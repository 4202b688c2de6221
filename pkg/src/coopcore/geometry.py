"""Geometry of the preimputation space: coalition hyperplane normals, exact
projectors onto intersections of payment hyperplanes, incremental Gramians,
reaching collections, and the distance-to-core market-failure measure.

The normal of the hyperplane {x(S) = v(S)} inside the preimputation space is
the side payment with 1 - |S|/n on the members of S and -|S|/n outside; its
pairwise scalar products have the closed form |S inter T| - |S||T|/n, so every
Gram matrix here is rational and all projections are exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Optional, Sequence

from .model import Coalition, Game, PaymentVector, excess, payment
from .polyhedra import ONE, ZERO, GE, EQ, LinearProgram, determinant, solve_square, strictly_feasible


def eta(n: int, mask: Coalition) -> PaymentVector:
    """The side-payment normal of the coalition's payment hyperplane."""
    share = Fraction(mask.bit_count(), n)
    return tuple((ONE if mask >> i & 1 else ZERO) - share for i in range(n))


def eta_dot(n: int, a: Coalition, b: Coalition) -> Fraction:
    """Scalar product of two normals: |a inter b| - |a||b|/n."""
    return Fraction(n * (a & b).bit_count() - a.bit_count() * b.bit_count(), n)


def eta_norm_sq(n: int, mask: Coalition) -> Fraction:
    return eta_dot(n, mask, mask)


def gram_matrix(n: int, coalitions: Sequence[Coalition]) -> list[list[Fraction]]:
    return [[eta_dot(n, a, b) for b in coalitions] for a in coalitions]


def project_single(game: Game, mask: Coalition, x: Sequence[Fraction]) -> PaymentVector:
    """Projection of a preimputation onto the coalition's payment hyperplane;
    when the coalition can improve upon x, the projection dominates x via it."""
    if mask == game.grand or mask == 0:
        raise ValueError("projection requires a proper nonempty coalition")
    gamma = excess(game, mask, x) / eta_norm_sq(game.n, mask)
    direction = eta(game.n, mask)
    return tuple(a + gamma * b for a, b in zip(x, direction))


def projection_coefficients(
    game: Game, coalitions: Sequence[Coalition], x: Sequence[Fraction]
) -> list[Fraction]:
    """The coefficients expressing the projection onto the joint payment
    subspace in the normal basis, from the Gram system."""
    gram = gram_matrix(game.n, coalitions)
    rhs = [excess(game, m, x) for m in coalitions]
    gamma = solve_square(gram, rhs)
    if gamma is None:
        raise ValueError("singular collection")
    return gamma


def project_multi(game: Game, coalitions: Sequence[Coalition], x: Sequence[Fraction]) -> PaymentVector:
    """Projection of a preimputation onto the intersection of the payment
    hyperplanes of an independent collection."""
    coalitions = list(coalitions)
    if not coalitions:
        return tuple(Fraction(a) for a in x)
    gamma = projection_coefficients(game, coalitions, x)
    out = [Fraction(a) for a in x]
    n = game.n
    for g, mask in zip(gamma, coalitions):
        if g == 0:
            continue
        direction = eta(n, mask)
        out = [a + g * b for a, b in zip(out, direction)]
    return tuple(out)


def dual_basis(n: int, coalitions: Sequence[Coalition]) -> list[PaymentVector]:
    """The vectors biorthogonal to the normals within their span: the columns
    of H G^{-1}."""
    k = len(coalitions)
    gram = gram_matrix(n, coalitions)
    etas = [eta(n, m) for m in coalitions]
    columns: list[PaymentVector] = []
    for j in range(k):
        rhs = [ONE if i == j else ZERO for i in range(k)]
        coeffs = solve_square(gram, rhs)
        if coeffs is None:
            raise ValueError("singular collection")
        col = [ZERO] * n
        for c, e in zip(coeffs, etas):
            col = [a + c * b for a, b in zip(col, e)]
        columns.append(tuple(col))
    return columns


def project_multi_dual(game: Game, coalitions: Sequence[Coalition], x: Sequence[Fraction]) -> PaymentVector:
    """The same projection computed through the dual basis, as a cross-check:
    x plus the excess-weighted dual vectors."""
    basis = dual_basis(game.n, coalitions)
    out = [Fraction(a) for a in x]
    for mask, h in zip(coalitions, basis):
        e = excess(game, mask, x)
        if e != 0:
            out = [a + e * b for a, b in zip(out, h)]
    return tuple(out)


def cramer_coefficients(
    game: Game, coalitions: Sequence[Coalition], x: Sequence[Fraction]
) -> tuple[Fraction, list[Fraction]]:
    """(det G, [det G with column S replaced by the excesses]) for each S."""
    gram = gram_matrix(game.n, coalitions)
    det_g = determinant(gram)
    rhs = [excess(game, m, x) for m in coalitions]
    numerators = []
    for j in range(len(coalitions)):
        altered = [row[:j] + [rhs[i]] + row[j + 1 :] for i, row in enumerate(gram)]
        numerators.append(determinant(altered))
    return det_g, numerators


def chi(game: Game, coalitions: Sequence[Coalition], target: Coalition, x: Sequence[Fraction]) -> Fraction:
    """Sign predicate for the projection against another hyperplane: the
    projection onto the collection satisfies the target's payment bound iff
    this value is nonnegative."""
    coalitions = list(coalitions)
    if target in coalitions:
        raise ValueError("the target must lie outside the collection")
    det_g, numerators = cramer_coefficients(game, coalitions, x)
    if det_g == 0:
        raise ValueError("singular collection")
    n = game.n
    total = ZERO
    for num, mask in zip(numerators, coalitions):
        total += num * eta_dot(n, mask, target)
    return total - excess(game, target, x) * det_g


# ---------------------------------------------------------------------------
# incremental Gramians


@dataclass(frozen=True)
class GramContext:
    """Gram data of an ordered collection, extended one coalition at a time.

    The orthogonalized directions are kept unnormalized together with their
    squared norms, so everything stays rational; the Gramian update multiplies
    by the squared norm of the newly orthogonalized direction.  A zero
    determinant marks a dependent collection and is a valid terminal state.
    """

    n: int
    coalitions: tuple[Coalition, ...]
    det_g: Fraction
    directions: tuple[PaymentVector, ...]
    square_norms: tuple[Fraction, ...]

    @classmethod
    def empty(cls, n: int) -> "GramContext":
        return cls(n, (), ONE, (), ())

    @property
    def dependent(self) -> bool:
        return self.det_g == 0

    @property
    def gram(self) -> list[list[Fraction]]:
        return gram_matrix(self.n, self.coalitions)


def update_gramian(ctx: GramContext, mask: Coalition) -> GramContext:
    """Insert a coalition: one Gram-Schmidt step against the cached
    directions, returning the new context (determinant zero on dependence)."""
    if ctx.dependent:
        raise ValueError("cannot extend a dependent collection")
    n = ctx.n
    w = list(eta(n, mask))
    for direction, sq in zip(ctx.directions, ctx.square_norms):
        # a cached direction is a side payment, so its product with the new
        # normal is just the direction's payment of the new coalition
        coef = payment(direction, mask) / sq
        if coef != 0:
            w = [a - coef * b for a, b in zip(w, direction)]
    w_sq = sum((a * a for a in w), ZERO)
    if w_sq == 0:
        return GramContext(n, ctx.coalitions + (mask,), ZERO, ctx.directions, ctx.square_norms)
    return GramContext(
        n,
        ctx.coalitions + (mask,),
        w_sq * ctx.det_g,
        ctx.directions + (tuple(w),),
        ctx.square_norms + (w_sq,),
    )


# ---------------------------------------------------------------------------
# reaching collections and market failure


def violated_coalitions(
    game: Game, x: Sequence[Fraction], family: Optional[Iterable[Coalition]] = None
) -> list[Coalition]:
    """The coalitions of the family (default: all proper ones) that can
    improve upon x."""
    if family is None:
        family = range(1, game.grand)
    return [m for m in sorted(family) if excess(game, m, x) > 0]


def reaching_collections(
    game: Game,
    x: Sequence[Fraction],
    family: Optional[Iterable[Coalition]] = None,
    ctx_factory: Optional[Callable[[], GramContext]] = None,
) -> list[tuple[Coalition, ...]]:
    """Minimal independent subcollections of the violated coalitions whose
    joint projection lands in the core (membership tested on the family).

    Breadth-first by collection size; dependent extensions are pruned through
    the incremental Gramian, and collections already reaching are not grown.
    For a balanced game at least one reaching collection exists.
    """
    if family is None:
        family = list(range(1, game.grand))
    else:
        family = sorted(family)
    violated = violated_coalitions(game, x, family)
    if not violated:
        raise ValueError("the vector already lies in the core described by the family")
    if ctx_factory is None:
        ctx_factory = lambda: GramContext.empty(game.n)

    def in_core(point: Sequence[Fraction]) -> bool:
        return all(excess(game, m, point) <= 0 for m in family)

    base = ctx_factory()
    frontier: list[tuple[tuple[Coalition, ...], GramContext]] = []
    for mask in violated:
        ctx = update_gramian(base, mask)
        if not ctx.dependent:
            frontier.append(((mask,), ctx))
    found: list[tuple[Coalition, ...]] = []
    seen: set[tuple[Coalition, ...]] = {c for c, _ in frontier}
    while frontier:
        next_frontier: list[tuple[tuple[Coalition, ...], GramContext]] = []
        for coalitions, ctx in frontier:
            if in_core(project_multi(game, coalitions, x)):
                found.append(coalitions)
                continue  # reaching nodes are collected, never grown
            for mask in violated:
                if mask <= coalitions[-1]:
                    continue
                grown = coalitions + (mask,)
                if grown in seen:
                    continue
                seen.add(grown)
                extended = update_gramian(ctx, mask)
                if not extended.dependent:
                    next_frontier.append((grown, extended))
        frontier = next_frontier
    if not found:
        raise ValueError("no reaching collection; is the game balanced on the family?")
    # a reaching node reached around a smaller reaching one is not minimal
    sets = [frozenset(c) for c in found]
    minimal = [
        c
        for c, s in zip(found, sets)
        if not any(other < s for other in sets)
    ]
    return sorted(minimal)


@dataclass(frozen=True)
class MarketFailure:
    """Distance-to-core summary: the squared distance (negative inside the
    core), the optimal reallocating side payment, and the collection whose
    projection realizes it (None inside the core)."""

    squared_distance: Fraction
    side_payment: PaymentVector
    collection: Optional[tuple[Coalition, ...]]


def _core_is_full_dimensional(game: Game) -> bool:
    n = game.n
    lp = LinearProgram([ZERO] * n, "min")
    lp.add([ONE] * n, EQ, game.worth(game.grand))
    strict = []
    for mask in range(1, game.grand):
        strict.append(len(lp.rows))
        lp.add([ONE if mask >> i & 1 else ZERO for i in range(n)], GE, game.worth(mask))
    return strictly_feasible(lp, strict) is not None


def market_failure(
    game: Game,
    x: Sequence[Fraction],
    family: Optional[Iterable[Coalition]] = None,
) -> MarketFailure:
    """How far the preimputation is from the core, with the cheapest
    reallocation fixing it.

    Outside the core the value is the squared Euclidean distance and the side
    payment is the shortest one reaching the core (minimum over the minimal
    reaching collections).  Inside, the value is minus the squared distance to
    the nearest payment hyperplane; this signed variant needs a
    full-dimensional core.
    """
    if family is None:
        family = list(range(1, game.grand))
    else:
        family = sorted(family)
    x = tuple(Fraction(a) for a in x)
    violated = violated_coalitions(game, x, family)
    if violated:
        best: Optional[tuple[Fraction, PaymentVector, tuple[Coalition, ...]]] = None
        for coalitions in reaching_collections(game, x, family):
            target = project_multi(game, coalitions, x)
            sigma = tuple(b - a for a, b in zip(x, target))
            sq = sum((s * s for s in sigma), ZERO)
            if best is None or sq < best[0]:
                best = (sq, sigma, coalitions)
        assert best is not None
        return MarketFailure(best[0], best[1], best[2])
    # inside (or on the boundary of) the core: signed variant
    if not _core_is_full_dimensional(game):
        raise ValueError(
            "the signed in-core distance needs a full-dimensional core"
        )
    n = game.n
    best_sq: Optional[Fraction] = None
    best_sigma: PaymentVector = tuple([ZERO] * n)
    for mask in family:
        gamma = excess(game, mask, x) / eta_norm_sq(n, mask)
        sq = gamma * gamma * eta_norm_sq(n, mask)
        if best_sq is None or sq < best_sq:
            best_sq = sq
            direction = eta(n, mask)
            best_sigma = tuple(gamma * d for d in direction)
    assert best_sq is not None
    return MarketFailure(-best_sq, best_sigma, None)
