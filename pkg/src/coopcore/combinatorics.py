"""Hypergraph duality with balanced collections, and counting of uniform
hypergraphs.

A d-regular hypergraph is the same data as a balanced collection of depth
dividing d together with its weight system (edge multiplicity / d); dualizing
the incidence matrix swaps regular with uniform.  Uniform hypergraphs are
easy to count: labeled spanning k-uniform hypergraphs of size p are counted
by an inclusion-exclusion over the node set of multisets of k-subsets.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional

from .mbc import WeightedCollection, make_collection
from .polyhedra import matrix_rank


@dataclass(frozen=True)
class Hypergraph:
    """Nodes 0..order-1 and a multiset of edges, kept as a sorted tuple of
    frozensets (one entry per occurrence).  Edges must span the nodes."""

    order: int
    edges: tuple[frozenset[int], ...]

    def __post_init__(self):
        if self.order < 1:
            raise ValueError("a hypergraph needs at least one node")
        covered: set[int] = set()
        for edge in self.edges:
            if not edge:
                raise ValueError("edges must be nonempty")
            if any(not 0 <= v < self.order for v in edge):
                raise ValueError("edge node out of range")
            covered.update(edge)
        if covered != set(range(self.order)):
            raise ValueError("every node must lie in some edge (spanning)")

    @property
    def size(self) -> int:
        return len(self.edges)

    def multiset(self) -> Counter:
        return Counter(self.edges)

    def degrees(self) -> list[int]:
        deg = [0] * self.order
        for edge in self.edges:
            for v in edge:
                deg[v] += 1
        return deg

    def regular_degree(self) -> Optional[int]:
        deg = self.degrees()
        return deg[0] if len(set(deg)) == 1 else None

    def uniform_size(self) -> Optional[int]:
        sizes = {len(edge) for edge in self.edges}
        return next(iter(sizes)) if len(sizes) == 1 else None


def hypergraph(order: int, edges: Iterable[Iterable[int]]) -> Hypergraph:
    # occurrence order is preserved: edge slot j of the dual is node j here,
    # which makes the double dual reproduce the edges slot for slot
    return Hypergraph(order, tuple(frozenset(e) for e in edges))


def dual(h: Hypergraph) -> Hypergraph:
    """Transpose of the incidence matrix: one node per edge occurrence, one
    edge per original node.  Swaps order with size and uniform with regular."""
    edges = [frozenset(j for j, edge in enumerate(h.edges) if v in edge) for v in range(h.order)]
    return hypergraph(h.size, edges)


def regular_to_weighted(h: Hypergraph) -> WeightedCollection:
    """The balanced collection of a regular hypergraph: distinct edges as
    coalitions over the nodes-as-players, weighted by multiplicity/degree."""
    d = h.regular_degree()
    if d is None:
        raise ValueError("the hypergraph is not regular")
    pairs = []
    for edge, count in h.multiset().items():
        mask = 0
        for v in edge:
            mask |= 1 << v
        pairs.append((mask, Fraction(count, d)))
    return make_collection(pairs)


def uniform_to_mbc_check(h: Hypergraph) -> Optional[WeightedCollection]:
    """Convert a uniform hypergraph, via its dual, into a balanced collection
    and return it when it is minimal (no proper balanced subcollection);
    minimality is the full column rank of the collection's incidence."""
    if h.uniform_size() is None:
        raise ValueError("the hypergraph is not uniform")
    collection = regular_to_weighted(dual(h))
    n = h.size  # players of the collection = edges of the original
    rows = [[mask >> i & 1 for mask in collection.coalitions] for i in range(n)]
    if matrix_rank(rows) != len(collection.coalitions):
        return None
    return collection


def collection_to_hypergraph(collection: WeightedCollection) -> Hypergraph:
    """The regular hypergraph of a balanced collection at its depth: each
    coalition appears depth * weight times."""
    d = collection.depth()
    edges = []
    for mask, w in collection.items():
        count = w * d
        assert count.denominator == 1
        edge = frozenset(i for i in range(mask.bit_length()) if mask >> i & 1)
        edges.extend([edge] * int(count))
    order = max(max(e) for e in edges) + 1
    return hypergraph(order, edges)


# ---------------------------------------------------------------------------
# counting


def _multiset_count(m: int, p: int) -> int:
    """Number of p-multisets over m items: the rising factorial over p!."""
    return math.comb(m + p - 1, p)


def count_uniform_hypergraphs(k: int, p: int, max_n: int) -> list[int]:
    """Labeled spanning k-uniform hypergraphs of size p on n nodes, for
    n = 2..max_n: multisets of k-subsets, with non-spanning node sets removed
    by inclusion-exclusion."""
    if k < 1 or p < 1:
        raise ValueError("k and p must be positive")
    out = []
    for n in range(2, max_n + 1):
        total = 0
        for i in range(n + 1):
            term = math.comb(n, i) * _multiset_count(math.comb(i, k), p)
            total += term if (n - i) % 2 == 0 else -term
        out.append(total)
    return out


def enumerate_uniform_hypergraphs(k: int, p: int, n: int) -> list[Hypergraph]:
    """Brute-force oracle: all spanning p-multisets of k-subsets of n nodes."""
    from itertools import combinations, combinations_with_replacement

    subsets = [frozenset(c) for c in combinations(range(n), k)]
    out = []
    for combo in combinations_with_replacement(subsets, p):
        covered = set()
        for edge in combo:
            covered.update(edge)
        if covered == set(range(n)):
            out.append(hypergraph(n, combo))
    return out
