"""Exact rational linear programming and small-scale vertex enumeration.

The solver is a dense two-phase simplex over `fractions.Fraction` with Bland's
rule, so it terminates on every input and returns exact optima and witnesses.
It is the numeric workhorse behind lower envelopes, extendability checks,
stability programs and the LP-based cross-check oracles; the instances it sees
are small (tens of rows, a handful of structural variables).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .model import Coalition, Game, PaymentVector, payment

ZERO = Fraction(0)
ONE = Fraction(1)

GE = ">="
LE = "<="
EQ = "="


@dataclass
class LinearProgram:
    """min/max of c.x subject to rows `a.x rel b`, variables free by default."""

    objective: list[Fraction]
    sense: str = "min"  # "min" or "max"
    rows: list[tuple[list[Fraction], str, Fraction]] = field(default_factory=list)
    nonneg: Optional[list[bool]] = None

    def add(self, coeffs: Sequence[Fraction], rel: str, rhs: Fraction) -> None:
        if len(coeffs) != len(self.objective):
            raise ValueError("row width does not match the variable count")
        if rel not in (GE, LE, EQ):
            raise ValueError(f"unknown relation {rel!r}")
        self.rows.append(([Fraction(c) for c in coeffs], rel, Fraction(rhs)))


@dataclass(frozen=True)
class LpOutcome:
    status: str  # "optimal" | "infeasible" | "unbounded"
    value: Optional[Fraction] = None
    witness: Optional[tuple[Fraction, ...]] = None

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


def _pivot(tab: list[list[Fraction]], basis: list[int], r: int, c: int) -> None:
    row = tab[r]
    piv = row[c]
    inv = 1 / piv
    tab[r] = [a * inv for a in row]
    row = tab[r]
    for i, other in enumerate(tab):
        if i != r and other[c] != 0:
            f = other[c]
            tab[i] = [a - f * b for a, b in zip(other, row)]
    basis[r] = c


def _run_simplex(tab: list[list[Fraction]], basis: list[int], cost: list[Fraction]) -> str:
    """Minimize cost.x on the tableau (rows = equalities, rhs last column).

    Bland's rule on both the entering and leaving choice guarantees
    termination.  Returns "optimal" or "unbounded"; mutates tab/basis.
    """
    m = len(tab)
    width = len(cost) + 1
    if m == 0:
        return "optimal" if all(c >= 0 for c in cost) else "unbounded"
    # reduced-cost row; its last entry tracks (minus) the objective value
    z = list(cost) + [ZERO]
    for r, b in enumerate(basis):
        if z[b] != 0:
            f = z[b]
            z = [a - f * c for a, c in zip(z, tab[r])]
    while True:
        enter = -1
        for j in range(width - 1):
            if z[j] < 0:
                enter = j
                break
        if enter < 0:
            return "optimal"
        leave = -1
        best = None
        for r in range(m):
            a = tab[r][enter]
            if a > 0:
                ratio = tab[r][-1] / a
                if best is None or ratio < best or (ratio == best and basis[r] < basis[leave]):
                    best = ratio
                    leave = r
        if leave < 0:
            return "unbounded"
        _pivot(tab, basis, leave, enter)
        f = z[enter]
        if f != 0:
            row = tab[leave]
            z = [a - f * b for a, b in zip(z, row)]


def solve(lp: LinearProgram) -> LpOutcome:
    """Exact optimum of the program, with a rational witness vector."""
    nvars = len(lp.objective)
    minimize = lp.sense == "min"
    if lp.sense not in ("min", "max"):
        raise ValueError("sense must be 'min' or 'max'")
    nonneg = lp.nonneg if lp.nonneg is not None else [False] * nvars
    if len(nonneg) != nvars:
        raise ValueError("nonneg flag length must match the variable count")

    # column layout: one column per nonnegative variable, two (x+ - x-) per
    # free variable, then one slack per inequality row.
    cols: list[tuple[int, int]] = []  # (variable index, sign)
    for j in range(nvars):
        cols.append((j, 1))
        if not nonneg[j]:
            cols.append((j, -1))
    nslack = sum(1 for _, rel, _ in lp.rows if rel != EQ)
    width = len(cols) + nslack + 1

    tab: list[list[Fraction]] = []
    slack_col = len(cols)
    slack_of_row: list[int] = []
    for coeffs, rel, rhs in lp.rows:
        row = [coeffs[j] * s for j, s in cols] + [ZERO] * nslack + [rhs]
        if rel == GE:
            row[slack_col] = Fraction(-1)
            slack_of_row.append(slack_col)
            slack_col += 1
        elif rel == LE:
            row[slack_col] = ONE
            slack_of_row.append(slack_col)
            slack_col += 1
        else:
            slack_of_row.append(-1)
        if row[-1] < 0 or (row[-1] == 0 and rel == GE):
            # negating zero-rhs >= rows turns their slack into a basis column
            row = [-a for a in row]
        tab.append(row)

    # initial basis: a slack column with coefficient +1 where available,
    # otherwise an artificial variable.
    m = len(tab)
    basis = [-1] * m
    artificial: list[int] = []
    for r in range(m):
        sc = slack_of_row[r]
        if sc >= 0 and tab[r][sc] == 1:
            basis[r] = sc
    extra = sum(1 for b in basis if b < 0)
    if extra:
        for row in tab:
            rhs = row.pop()
            row.extend([ZERO] * extra)
            row.append(rhs)
        nxt = width - 1
        for r in range(m):
            if basis[r] < 0:
                tab[r][nxt] = ONE
                basis[r] = nxt
                artificial.append(nxt)
                nxt += 1
        width += extra

        phase1 = [ZERO] * (width - 1)
        for a in artificial:
            phase1[a] = ONE
        status = _run_simplex(tab, basis, phase1)
        total = sum((tab[r][-1] for r in range(m) if basis[r] in artificial), ZERO)
        if status != "optimal" or total != 0:
            return LpOutcome("infeasible")
        # drive leftover artificials out of the (degenerate) basis
        art_set = set(artificial)
        for r in range(m):
            if basis[r] in art_set:
                for j in range(width - 1 - extra):
                    if tab[r][j] != 0:
                        _pivot(tab, basis, r, j)
                        break
        keep = [r for r in range(m) if basis[r] not in art_set]
        tab = [[tab[r][j] for j in range(width - 1 - extra)] + [tab[r][-1]] for r in keep]
        basis = [basis[r] for r in keep]
        m = len(tab)
        width -= extra

    cost = [ZERO] * (width - 1)
    for k, (j, s) in enumerate(cols):
        c = lp.objective[j] * s
        cost[k] = c if minimize else -c
    status = _run_simplex(tab, basis, cost)
    if status == "unbounded":
        return LpOutcome("unbounded")

    x = [ZERO] * nvars
    for r, b in enumerate(basis):
        if b < len(cols):
            j, s = cols[b]
            x[j] += s * tab[r][-1]
    value = sum((c * v for c, v in zip(lp.objective, x)), ZERO)
    return LpOutcome("optimal", value, tuple(x))


def max_uniform_slack(
    lp: LinearProgram, strict_rows: Sequence[int]
) -> LpOutcome:
    """Maximize t with each row in `strict_rows` tightened to `a.x >= b + t`.

    The strict system {strict rows satisfied strictly, others weakly} is
    feasible iff the returned status is "unbounded" or the optimal t is
    positive.  The witness is (x..., t).
    """
    strict = set(strict_rows)
    for r in strict:
        if lp.rows[r][1] != GE:
            raise ValueError("only >= rows can carry a uniform slack")
    nvars = len(lp.objective)

    def build(cap: bool) -> LinearProgram:
        obj = [ZERO] * nvars + [ONE]
        aug = LinearProgram(obj, "max")
        aug.nonneg = (list(lp.nonneg) if lp.nonneg else [False] * nvars) + [False]
        for r, (coeffs, rel, rhs) in enumerate(lp.rows):
            t_coeff = Fraction(-1) if r in strict else ZERO
            aug.add(list(coeffs) + [t_coeff], rel, rhs)
        if cap:
            aug.add([ZERO] * nvars + [ONE], LE, ONE)
        return aug

    out = solve(build(cap=False))
    if out.status != "unbounded":
        return out
    capped = solve(build(cap=True))
    return LpOutcome("unbounded", None, capped.witness)


def strictly_feasible(lp: LinearProgram, strict_rows: Sequence[int]) -> Optional[tuple[Fraction, ...]]:
    """A witness x satisfying strict rows strictly and the rest weakly, if any."""
    out = max_uniform_slack(lp, strict_rows)
    if out.status == "unbounded" or (out.optimal and out.value > 0):
        return out.witness[:-1]
    return None


# ---------------------------------------------------------------------------
# game-specific programs


def upper_vector_program(game: Game) -> LinearProgram:
    """min x(N) subject to x(S) >= v(S) for every coalition."""
    n = game.n
    lp = LinearProgram([ONE] * n, "min")
    for mask in game.coalitions():
        row = [ONE if mask >> i & 1 else ZERO for i in range(n)]
        lp.add(row, GE, game.worth(mask))
    return lp


def lp_is_balanced(game: Game) -> bool:
    """LP oracle for core nonemptiness: the minimal total payment of an upper
    vector equals v(N) exactly when the core is nonempty.

    Solved in the shifted variables y = C - x with C the largest worth, which
    turns every row into a <= with nonnegative right-hand side: the slack
    basis is then immediately feasible and no first phase is needed.
    """
    n = game.n
    masks = list(game.coalitions())
    shift = max(game.worth(m) for m in masks)
    if shift < 0:
        shift = ZERO
    lp = LinearProgram([ONE] * n, "max")  # max y(N) <=> min x(N)
    for mask in masks:
        row = [ONE if mask >> i & 1 else ZERO for i in range(n)]
        lp.add(row, LE, shift * mask.bit_count() - game.worth(mask))
    out = solve(lp)
    if not out.optimal:
        raise RuntimeError("the upper-vector program is always feasible and bounded")
    return shift * n - out.value == game.worth(game.grand)


def core_constraint_program(game: Game, coalitions: Optional[Sequence[Coalition]] = None) -> LinearProgram:
    """Rows x(N) = v(N) and x(S) >= v(S) for the given coalitions (default:
    every proper coalition), with a zero objective."""
    n = game.n
    lp = LinearProgram([ZERO] * n, "min")
    lp.add([ONE] * n, EQ, game.worth(game.grand))
    if coalitions is None:
        coalitions = [m for m in game.coalitions() if m != game.grand]
    for mask in coalitions:
        row = [ONE if mask >> i & 1 else ZERO for i in range(n)]
        lp.add(row, GE, game.worth(mask))
    return lp


def minimize_payment(game: Game, target: Coalition, coalitions: Optional[Sequence[Coalition]] = None) -> LpOutcome:
    """min x(T) over {x(N)=v(N), x(S) >= v(S) for S in `coalitions`}."""
    lp = core_constraint_program(game, coalitions)
    lp.objective = [ONE if target >> i & 1 else ZERO for i in range(game.n)]
    return solve(lp)


# ---------------------------------------------------------------------------
# exact linear algebra helpers


def solve_square(matrix: list[list[Fraction]], rhs: list[Fraction]) -> Optional[list[Fraction]]:
    """Solution of a square rational system, or None if singular."""
    k = len(matrix)
    aug = [list(row) + [rhs[i]] for i, row in enumerate(matrix)]
    for col in range(k):
        piv = next((r for r in range(col, k) if aug[r][col] != 0), -1)
        if piv < 0:
            return None
        aug[col], aug[piv] = aug[piv], aug[col]
        inv = 1 / aug[col][col]
        aug[col] = [a * inv for a in aug[col]]
        for r in range(k):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [a - f * b for a, b in zip(aug[r], aug[col])]
    return [aug[r][-1] for r in range(k)]


def matrix_rank(rows: list[list[int]]) -> int:
    """Rank over the rationals of an integer matrix (row list)."""
    work = [list(map(Fraction, row)) for row in rows]
    rank = 0
    ncols = len(work[0]) if work else 0
    for col in range(ncols):
        piv = next((r for r in range(rank, len(work)) if work[r][col] != 0), -1)
        if piv < 0:
            continue
        work[rank], work[piv] = work[piv], work[rank]
        inv = 1 / work[rank][col]
        work[rank] = [a * inv for a in work[rank]]
        for r in range(len(work)):
            if r != rank and work[r][col] != 0:
                f = work[r][col]
                work[r] = [a - f * b for a, b in zip(work[r], work[rank])]
        rank += 1
        if rank == len(work):
            break
    return rank


def determinant(matrix: Sequence[Sequence[Fraction]]) -> Fraction:
    k = len(matrix)
    work = [list(row) for row in matrix]
    det = ONE
    for col in range(k):
        piv = next((r for r in range(col, k) if work[r][col] != 0), -1)
        if piv < 0:
            return ZERO
        if piv != col:
            work[col], work[piv] = work[piv], work[col]
            det = -det
        det *= work[col][col]
        inv = 1 / work[col][col]
        for r in range(col + 1, k):
            if work[r][col] != 0:
                f = work[r][col] * inv
                work[r] = [a - f * b for a, b in zip(work[r], work[col])]
    return det


# ---------------------------------------------------------------------------
# core vertices


def core_vertices(game: Game) -> list[PaymentVector]:
    """All vertices of the core, by combinatorial basis enumeration.

    Every vertex of the core is the unique solution of the efficiency row
    x(N) = v(N) together with n-1 tight coalition constraints of full rank;
    we enumerate those index sets, solve exactly, and keep the feasible
    solutions.  Intended for the small player counts (n <= 7) where the
    extendability checks need subgame cores.
    """
    from itertools import combinations

    n = game.n
    grand = game.grand
    worth = {m: game.worth(m) for m in game.coalitions()}
    proper = [m for m in worth if m != grand]
    if n == 1:
        return [(worth[grand],)]
    total = worth[grand]
    seen: set[tuple] = set()
    out: list[PaymentVector] = []
    eff_row = [ONE] * n
    for combo in combinations(proper, n - 1):
        matrix = [eff_row] + [[ONE if m >> i & 1 else ZERO for i in range(n)] for m in combo]
        rhs = [total] + [worth[m] for m in combo]
        x = solve_square(matrix, rhs)
        if x is None:
            continue
        key = tuple(x)
        if key in seen:
            continue
        seen.add(key)
        if all(payment(x, m) >= worth[m] for m in proper):
            out.append(key)
    if not out:
        raise ValueError("the core is empty")
    return sorted(out)
