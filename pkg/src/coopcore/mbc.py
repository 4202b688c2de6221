"""Generation and storage of minimal balanced collections.

A collection of coalitions is balanced when positive weights exist making
every player's weights sum to one, and minimal when no proper subcollection is
balanced.  Minimal balanced collections (MBCs) depend only on the player
count, so they are generated once per n -- by Peleg's inductive method, one
player at a time -- and stored for reuse by every analysis.

The induction derives the MBCs on n+1 players from those on n players through
four construction cases:

  1. add the new player to a subset of coalitions whose weights sum to 1;
  2. weights sum below 1: also add the singleton of the new player;
  3. weights sum in (1 - w(D), 1) for some other coalition D: split D into D
     and D + new player;
  4. merge two MBCs whose union has incidence rank |union| - 1, and add the
     new player to a subset whose weight sums under the two systems straddle 1.

Every collection produced is an MBC on the larger player set, every MBC
arises this way, and distinct cases can reproduce the same collection, so
outputs are deduplicated by their sorted coalition masks (the weight system
of an MBC is unique, so masks identify it).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Optional, Sequence

from .model import Coalition, members
from .parallel import parallel_map
from .polyhedra import LinearProgram, matrix_rank, solve, ZERO, ONE, GE, EQ

# reference counts, OEIS A355042
MBC_COUNTS = {2: 2, 3: 6, 4: 42, 5: 1292, 6: 200214, 7: 132422036}

DESK_SCALE_LIMIT = 6  # n = 7 takes CPU-days and is opt-in; n >= 8 has no reference


@dataclass(frozen=True)
class WeightedCollection:
    """Coalitions with their positive balancing weights, masks ascending."""

    coalitions: tuple[Coalition, ...]
    weights: tuple[Fraction, ...]

    def __len__(self) -> int:
        return len(self.coalitions)

    def items(self) -> Iterator[tuple[Coalition, Fraction]]:
        return zip(self.coalitions, self.weights)

    def weight_of(self, mask: Coalition) -> Fraction:
        return self.weights[self.coalitions.index(mask)]

    def is_balanced_on(self, n: int) -> bool:
        cover = [Fraction(0)] * n
        for mask, w in self.items():
            if w <= 0:
                return False
            for i in members(mask):
                cover[i] += w
        return all(c == 1 for c in cover)

    def depth(self) -> int:
        """Least common multiple of the weight denominators."""
        return math.lcm(*(w.denominator for w in self.weights))


def make_collection(pairs: Iterable[tuple[Coalition, Fraction]]) -> WeightedCollection:
    ordered = sorted(pairs)
    return WeightedCollection(tuple(m for m, _ in ordered), tuple(w for _, w in ordered))


def depth(collection: WeightedCollection) -> int:
    return collection.depth()


class MbcStore:
    """All minimal balanced collections on n players, in canonical order."""

    def __init__(self, n: int, collections: Sequence[WeightedCollection]):
        self.n = n
        self.collections = list(collections)
        self._caches: dict = {}

    def __len__(self) -> int:
        return len(self.collections)

    def __iter__(self) -> Iterator[WeightedCollection]:
        return iter(self.collections)

    def cache(self, key, build):
        found = self._caches.get(key)
        if found is None:
            found = self._caches[key] = build()
        return found

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"n={self.n}\n")
            for wc in self.collections:
                masks = ",".join(format(m, "x") for m in wc.coalitions)
                weights = ",".join(str(w) for w in wc.weights)
                fh.write(f"{masks};{weights}\n")

    @classmethod
    def load(cls, path) -> "MbcStore":
        with open(path, "r", encoding="utf-8") as fh:
            header = fh.readline().strip()
            if not header.startswith("n="):
                raise ValueError(f"{path}: missing n= header line")
            n = int(header[2:])
            collections = []
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                mask_part, _, weight_part = line.partition(";")
                masks = tuple(int(tok, 16) for tok in mask_part.split(","))
                weights = tuple(Fraction(tok.strip()) for tok in weight_part.split(","))
                if len(masks) != len(weights):
                    raise ValueError(f"{path}: weights do not match coalitions: {line!r}")
                collections.append(WeightedCollection(masks, weights))
        return cls(n, collections)


def base_store() -> MbcStore:
    """The two MBCs on two players: the grand coalition and the partition."""
    grand = WeightedCollection((3,), (ONE,))
    split = WeightedCollection((1, 2), (ONE, ONE))
    return MbcStore(2, [grand, split])


def _canonical(collections: dict[tuple[Coalition, ...], tuple[Fraction, ...]]) -> list[WeightedCollection]:
    order = sorted(collections, key=lambda masks: (len(masks), masks))
    return [WeightedCollection(masks, collections[masks]) for masks in order]


def add_new_player(store: MbcStore, threads: Optional[int] = None) -> MbcStore:
    """One step of the induction: the MBC store on store.n + 1 players."""
    n = store.n
    p_bit = 1 << n
    found: dict[tuple[Coalition, ...], tuple[Fraction, ...]] = {}
    weight_pool: dict[Fraction, Fraction] = {}

    def intern(w: Fraction) -> Fraction:
        return weight_pool.setdefault(w, w)

    def emit(pairs: list[tuple[Coalition, Fraction]]) -> None:
        pairs.sort()
        masks = tuple(m for m, _ in pairs)
        if masks not in found:
            found[masks] = tuple(intern(w) for _, w in pairs)

    one = ONE

    # cases 1-3, one source collection at a time
    for wc in store.collections:
        masks = wc.coalitions
        lam = wc.weights
        k = len(masks)
        # subset weight sums by lowest-bit recursion
        sums = [ZERO] * (1 << k)
        for bits in range(1, 1 << k):
            low = bits & -bits
            sums[bits] = sums[bits ^ low] + lam[low.bit_length() - 1]
        for bits in range(1 << k):
            lam_i = sums[bits]
            if lam_i > one:
                continue
            grown = [
                (masks[i] | p_bit if bits >> i & 1 else masks[i], lam[i]) for i in range(k)
            ]
            if lam_i == one:
                emit(list(grown))
                continue
            # case 2: the new player also stands alone
            emit(grown + [(p_bit, one - lam_i)])
            # case 3: split one untouched coalition between old and new rosters
            residue = one - lam_i
            for d in range(k):
                if bits >> d & 1:
                    continue
                slack = lam[d] - residue
                if slack > 0:
                    pairs = [grown[i] for i in range(k) if i != d]
                    pairs.append((masks[d], slack))
                    pairs.append((masks[d] | p_bit, residue))
                    emit(pairs)

    # case 4: pairs of distinct collections with near-degenerate union
    collections = store.collections
    sigs: list[int] = []
    for wc in collections:
        sig = 0
        for mask in wc.coalitions:
            sig |= 1 << mask
        sigs.append(sig)
    k_limit = n + 1  # union rank is at most n, so |union| <= n + 1
    count = len(collections)

    def fourth_case(a_range) -> list[list[tuple[Coalition, Fraction]]]:
        produced: list[list[tuple[Coalition, Fraction]]] = []
        for a in a_range:
            sig_a = sigs[a]
            wc_a = collections[a]
            for b in range(a + 1, count):
                union_sig = sig_a | sigs[b]
                k = union_sig.bit_count()
                if k > k_limit:
                    continue
                wc_b = collections[b]
                union_masks = sorted(set(wc_a.coalitions) | set(wc_b.coalitions))
                incidence = [[mask >> i & 1 for mask in union_masks] for i in range(n)]
                if matrix_rank(incidence) != k - 1:
                    continue
                mu = [ZERO] * k
                nu = [ZERO] * k
                index = {mask: i for i, mask in enumerate(union_masks)}
                for mask, w in wc_a.items():
                    mu[index[mask]] = w
                for mask, w in wc_b.items():
                    nu[index[mask]] = w
                mu_sums = [ZERO] * (1 << k)
                nu_sums = [ZERO] * (1 << k)
                for bits in range(1, 1 << k):
                    low = bits & -bits
                    i = low.bit_length() - 1
                    mu_sums[bits] = mu_sums[bits ^ low] + mu[i]
                    nu_sums[bits] = nu_sums[bits ^ low] + nu[i]
                for bits in range(1, 1 << k):
                    mu_i = mu_sums[bits]
                    nu_i = nu_sums[bits]
                    # the interpolation parameter lies in (0,1) iff the two
                    # weight sums straddle 1 strictly
                    if not (mu_i < one < nu_i or nu_i < one < mu_i):
                        continue
                    t = (one - mu_i) / (nu_i - mu_i)
                    s = one - t
                    pairs = []
                    for i in range(k):
                        mask = union_masks[i] | p_bit if bits >> i & 1 else union_masks[i]
                        pairs.append((mask, s * mu[i] + t * nu[i]))
                    produced.append(pairs)
        return produced

    chunk = 512 if threads is None or threads <= 1 else max(1, count // (threads * 8) + 1)
    ranges = [range(lo, min(lo + chunk, count)) for lo in range(0, count, chunk)]
    if threads is not None and threads > 1:
        for produced in parallel_map(fourth_case, ranges, threads):
            for pairs in produced:
                emit(pairs)
    else:
        for rng in ranges:
            for pairs in fourth_case(rng):
                emit(pairs)

    return MbcStore(n + 1, _canonical(found))


def generate(n: int, allow_large: bool = False, threads: Optional[int] = None) -> MbcStore:
    """The full MBC store on n players, built up from the two-player base."""
    if n < 2:
        raise ValueError("minimal balanced collections need at least two players")
    if n > 7:
        raise ValueError("no reference counts exist beyond n = 7; refusing")
    if n > DESK_SCALE_LIMIT and not allow_large:
        raise ValueError(
            "n = 7 takes CPU-days to generate; pass allow_large=True to proceed"
        )
    store = base_store()
    while store.n < n:
        store = add_new_player(store, threads=threads)
    return store


class MbcLibrary:
    """Lazy per-cardinality cache of MBC stores.

    Subgame analyses (vitality, totally balanced covers) need the stores on
    every cardinality up to n; these are cheap for n <= 5 and generated on
    first use.  A preloaded store (for example read from disk) seeds the
    cache.
    """

    def __init__(self, preloaded: Optional[Iterable[MbcStore]] = None):
        self._stores: dict[int, MbcStore] = {}
        for store in preloaded or ():
            self._stores[store.n] = store

    def add(self, store: MbcStore) -> None:
        self._stores[store.n] = store

    def get(self, n: int) -> MbcStore:
        if n == 1:
            return MbcStore(1, [WeightedCollection((1,), (ONE,))])
        store = self._stores.get(n)
        if store is None:
            lower = max((k for k in self._stores if k < n), default=2)
            store = self._stores.get(lower) or base_store()
            self._stores.setdefault(store.n, store)
            while store.n < n:
                store = add_new_player(store)
                self._stores[store.n] = store
        return store


def restrict(store: MbcStore, allowed: Iterable[Coalition]) -> list[WeightedCollection]:
    """The MBCs all of whose coalitions belong to the given set system."""
    allowed_sig = 0
    for mask in allowed:
        allowed_sig |= 1 << mask
    out = []
    for wc in store.collections:
        sig = 0
        for mask in wc.coalitions:
            sig |= 1 << mask
        if sig & ~allowed_sig == 0:
            out.append(wc)
    return out


def mapped_collections(store: MbcStore, mask: Coalition) -> Iterator[WeightedCollection]:
    """The MBCs on the player set of `mask`, expressed in the parent game's
    player indices.  `store` must be the store for |mask| players."""
    player_list = members(mask)
    if store.n != len(player_list):
        raise ValueError("store cardinality does not match the coalition size")
    for wc in store.collections:
        mapped = tuple(
            sum(1 << player_list[i] for i in members(sub)) for sub in wc.coalitions
        )
        yield WeightedCollection(mapped, wc.weights)


def is_balanced_collection(n: int, coalitions: Iterable[Coalition]) -> Optional[WeightedCollection]:
    """A positive balancing weight system for the collection, if one exists.

    Decided exactly by maximizing the minimum weight subject to the
    balancedness equations; the collection is balanced iff the optimum is
    positive (weights are at most 1, so the program is bounded).
    """
    masks = sorted(set(coalitions))
    if not masks or any(m == 0 for m in masks):
        raise ValueError("coalitions must be nonempty")
    k = len(masks)
    # variables: k weights and the floor t; maximize t
    lp = LinearProgram([ZERO] * k + [ONE], "max")
    lp.nonneg = [True] * k + [False]
    for i in range(n):
        row = [ONE if mask >> i & 1 else ZERO for mask in masks] + [ZERO]
        lp.add(row, EQ, ONE)
    for j in range(k):
        row = [ZERO] * (k + 1)
        row[j] = ONE
        row[-1] = Fraction(-1)
        lp.add(row, GE, ZERO)
    out = solve(lp)
    if not out.optimal or out.value <= 0:
        return None
    return make_collection((m, w) for m, w in zip(masks, out.witness[:k]))
