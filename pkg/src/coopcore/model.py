"""Core domain types: coalitions as bitmasks, games with exact rational worths,
payment vectors.

Players are indices 0..n-1 and a coalition is an integer bitmask with bit i set
iff player i belongs to it.  All worths, payments and weights are
`fractions.Fraction`; no floating point enters any decision.
"""

from __future__ import annotations

import json
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Optional, Sequence

Coalition = int
PaymentVector = tuple[Fraction, ...]

Rat = Fraction | int | str


def as_fraction(value: Rat) -> Fraction:
    """Coerce an int, 'p/q' string, or Fraction to an exact Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value)
    raise TypeError(f"not an exact rational: {value!r}")


def full_coalition(n: int) -> Coalition:
    return (1 << n) - 1


def coalition(indices: Iterable[int]) -> Coalition:
    mask = 0
    for i in indices:
        mask |= 1 << i
    return mask


def members(mask: Coalition) -> tuple[int, ...]:
    return tuple(i for i in range(mask.bit_length()) if mask >> i & 1)


def cardinality(mask: Coalition) -> int:
    return mask.bit_count()


def proper_coalitions(n: int) -> Iterator[Coalition]:
    """All nonempty coalitions except the grand coalition, ascending by mask."""
    grand = full_coalition(n)
    return (m for m in range(1, grand) if m != grand)


def subsets_of(mask: Coalition) -> Iterator[Coalition]:
    """Nonempty submasks of `mask`, ascending."""
    rest = []
    s = mask
    while s:
        rest.append(s)
        s = (s - 1) & mask
    return iter(sorted(rest))


def format_coalition(mask: Coalition, names: Optional[Sequence[str]] = None) -> str:
    if names is None:
        names = [chr(ord("a") + i) for i in range(mask.bit_length())]
    return "".join(names[i] for i in members(mask))


def payment(x: Sequence[Fraction], mask: Coalition) -> Fraction:
    """x(S): the total payment of coalition S under payment vector x."""
    total = Fraction(0)
    i = 0
    while mask:
        if mask & 1:
            total += x[i]
        mask >>= 1
        i += 1
    return total


def vector(values: Iterable[Rat]) -> PaymentVector:
    return tuple(as_fraction(v) for v in values)


class Game:
    """A transferable-utility game: player count and a worth per coalition.

    Unlisted coalitions have worth 0, matching the usual convention of
    describing a game by its nonzero worths.  An optional `domain` restricts
    the set system on which the game lives; the grand coalition must belong
    to it.
    """

    __slots__ = ("n", "_worth", "domain", "players", "_key")

    def __init__(
        self,
        n: int,
        worths: Optional[Mapping[Coalition, Rat]] = None,
        domain: Optional[Iterable[Coalition]] = None,
        players: Optional[Sequence[str]] = None,
    ):
        if n < 1:
            raise ValueError("a game needs at least one player")
        self.n = n
        grand = full_coalition(n)
        table: dict[Coalition, Fraction] = {}
        if worths:
            for mask, value in worths.items():
                if mask < 0 or mask > grand:
                    raise ValueError(f"coalition {mask:#x} out of range for n={n}")
                value = as_fraction(value)
                if mask == 0:
                    if value != 0:
                        raise ValueError("the empty coalition must have worth 0")
                    continue
                table[mask] = value
        self._worth = table
        if domain is not None:
            dom = frozenset(domain) - {0}
            if grand not in dom:
                raise ValueError("a restricted domain must contain the grand coalition")
            self.domain = dom
        else:
            self.domain = None
        self.players = tuple(players) if players is not None else None
        self._key = None

    @property
    def grand(self) -> Coalition:
        return full_coalition(self.n)

    def worth(self, mask: Coalition) -> Fraction:
        if mask == 0:
            return Fraction(0)
        if self.domain is not None and mask not in self.domain:
            raise KeyError(f"coalition {mask:#x} outside the game's domain")
        return self._worth.get(mask, Fraction(0))

    def coalitions(self) -> Iterator[Coalition]:
        """All coalitions the game is defined on, the grand coalition last."""
        if self.domain is not None:
            return iter(sorted(self.domain))
        return iter(range(1, self.grand + 1))

    def key(self):
        """Hashable content identity, used to key per-game caches."""
        if self._key is None:
            self._key = (
                self.n,
                tuple(sorted((m, w) for m, w in self._worth.items() if w != 0)),
                self.domain,
            )
        return self._key

    def __eq__(self, other) -> bool:
        return isinstance(other, Game) and self.key() == other.key()

    def __hash__(self) -> int:
        return hash(self.key())

    def __repr__(self) -> str:
        return f"Game(n={self.n}, {len(self._worth)} listed worths)"

    def with_worths(self, updates: Mapping[Coalition, Rat]) -> "Game":
        table = dict(self._worth)
        for mask, value in updates.items():
            table[mask] = as_fraction(value)
        return Game(self.n, table, self.domain, self.players)


def excess(game: Game, mask: Coalition, x: Sequence[Fraction]) -> Fraction:
    """e(S, x) = v(S) - x(S); positive when S can improve upon x."""
    return game.worth(mask) - payment(x, mask)


def is_preimputation(game: Game, x: Sequence[Fraction]) -> bool:
    return payment(x, game.grand) == game.worth(game.grand)


def subgame(game: Game, mask: Coalition) -> Game:
    """Restriction of the game to the players of `mask`, re-indexed in order."""
    if mask == 0:
        raise ValueError("cannot take a subgame on the empty coalition")
    player_list = members(mask)
    position = {p: i for i, p in enumerate(player_list)}
    worths: dict[Coalition, Fraction] = {}
    for sub in subsets_of(mask):
        if game.domain is not None and sub not in game.domain:
            continue
        w = game.worth(sub)
        if w != 0 or sub == mask:
            worths[coalition(position[p] for p in members(sub))] = w
    dom = None
    if game.domain is not None:
        dom = {coalition(position[p] for p in members(s)) for s in game.domain if s and s & ~mask == 0}
        dom.add(full_coalition(len(player_list)))
    names = None
    if game.players is not None:
        names = [game.players[p] for p in player_list]
    return Game(len(player_list), worths, dom, names)


def flip_worth(game: Game, flipped: Iterable[Coalition]) -> Game:
    """Replace the worth of each complement N\\S, for S in `flipped`, by
    v(N) - v(S).  Existing complement worths are overwritten; all flips read
    the original game."""
    grand = game.grand
    total = game.worth(grand)
    updates: dict[Coalition, Fraction] = {}
    for mask in flipped:
        if mask == grand:
            raise ValueError("cannot flip the grand coalition")
        if mask == 0:
            raise ValueError("cannot flip the empty coalition")
        updates[grand ^ mask] = total - game.worth(mask)
    return game.with_worths(updates)


def min_of_additive(n: int, vectors: Sequence[Sequence[Rat]]) -> Game:
    """The game v(S) = min over the given additive games of their payment of S.

    Games of this form are exactly the totally balanced ones.
    """
    if not vectors:
        raise ValueError("need at least one additive game")
    rows = [vector(v) for v in vectors]
    for row in rows:
        if len(row) != n:
            raise ValueError("additive game length must equal the player count")
    worths = {}
    for mask in range(1, full_coalition(n) + 1):
        worths[mask] = min(payment(row, mask) for row in rows)
    return Game(n, worths)


def permutohedron_game(n: int) -> Game:
    """The strictly convex game v(S) = |S|(|S|+1)/2, whose core is the
    standard permutohedron."""
    if n < 1:
        raise ValueError("n must be positive")
    worths = {}
    for mask in range(1, full_coalition(n) + 1):
        s = mask.bit_count()
        worths[mask] = Fraction(s * (s + 1), 2)
    return Game(n, worths)


def additive_game(values: Sequence[Rat]) -> Game:
    return min_of_additive(len(values), [values])


# ---------------------------------------------------------------------------
# game file format


def _coalition_from_json(entry, n: int, name_index: Optional[dict[str, int]]) -> Coalition:
    mask = 0
    for item in entry:
        if isinstance(item, str):
            if not name_index:
                raise ValueError(f"player name {item!r} used but no player list given")
            idx = name_index.get(item)
            if idx is None:
                raise ValueError(f"unknown player name {item!r}")
        else:
            idx = int(item)
            if not 0 <= idx < n:
                raise ValueError(f"player index {idx} out of range for n={n}")
        mask |= 1 << idx
    return mask


def game_from_dict(data: Mapping) -> Game:
    n = int(data["n"])
    players = data.get("players")
    if players is not None and len(players) != n:
        raise ValueError("player list length must equal n")
    name_index = {name: i for i, name in enumerate(players)} if players else None
    worths: dict[Coalition, Fraction] = {}
    for item in data.get("worths", []):
        mask = _coalition_from_json(item["coalition"], n, name_index)
        value = item["value"]
        worths[mask] = as_fraction(value if isinstance(value, (int, str)) else str(value))
    domain = None
    if "domain" in data and data["domain"] is not None:
        domain = {_coalition_from_json(entry, n, name_index) for entry in data["domain"]}
    return Game(n, worths, domain, players)


def game_to_dict(game: Game) -> dict:
    data: dict = {"n": game.n}
    if game.players is not None:
        data["players"] = list(game.players)
    worth_items = []
    for mask in sorted(game._worth):
        value = game._worth[mask]
        worth_items.append(
            {
                "coalition": list(members(mask)),
                "value": int(value) if value.denominator == 1 else str(value),
            }
        )
    data["worths"] = worth_items
    if game.domain is not None:
        data["domain"] = [list(members(mask)) for mask in sorted(game.domain)]
    return data


def load_game(path) -> Game:
    with open(path, "r", encoding="utf-8") as fh:
        return game_from_dict(json.load(fh))


def save_game(game: Game, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(game_to_dict(game), fh, indent=2)
        fh.write("\n")


# ---------------------------------------------------------------------------
# random games, used by the benchmark harness and the oracle-equivalence tests


def random_game(rng, n: int, high: int = 5, grand_worth: Rat = 50, max_denominator: int = 16) -> Game:
    """A game with proper-coalition worths uniform in [0, high] with
    denominator at most `max_denominator`, and a fixed grand-coalition worth."""
    worths: dict[Coalition, Fraction] = {}
    for mask in proper_coalitions(n):
        den = rng.randint(1, max_denominator)
        worths[mask] = Fraction(rng.randint(0, high * den), den)
    worths[full_coalition(n)] = as_fraction(grand_worth)
    return Game(n, worths)
