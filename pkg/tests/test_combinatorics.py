from fractions import Fraction as F

import pytest

from coopcore.combinatorics import (
    collection_to_hypergraph,
    count_uniform_hypergraphs,
    dual,
    enumerate_uniform_hypergraphs,
    hypergraph,
    regular_to_weighted,
    uniform_to_mbc_check,
)
from coopcore.mbc import generate, is_balanced_collection, make_collection


def test_hypergraph_validation():
    with pytest.raises(ValueError):
        hypergraph(3, [[0, 1]])  # node 2 uncovered
    with pytest.raises(ValueError):
        hypergraph(2, [[0, 1], []])


def test_dual_swaps_order_size_and_flags():
    h = hypergraph(3, [[1], [0, 2]])
    hd = dual(h)
    assert (hd.order, hd.size) == (h.size, h.order)
    # one node gives a doubled singleton edge, the other a single one
    assert sorted(sorted(e) for e in hd.edges) == [[0], [1], [1]]
    assert h.regular_degree() == 1 and hd.uniform_size() == 1
    assert dual(hd) == h

    tri = hypergraph(3, [[0, 1], [1, 2], [0, 2]])
    assert tri.regular_degree() == 2 and tri.uniform_size() == 2
    assert dual(tri).regular_degree() == 2  # self-dual shape


def test_regular_to_weighted():
    tri = hypergraph(3, [[0, 1], [1, 2], [0, 2]])
    wc = regular_to_weighted(tri)
    assert wc.coalitions == (3, 5, 6) and set(wc.weights) == {F(1, 2)}
    assert wc.is_balanced_on(3)
    assert wc.depth() == 2  # depth divides the regularity degree

    part = hypergraph(4, [[0, 1], [2, 3]])
    assert set(regular_to_weighted(part).weights) == {F(1)}

    doubled = hypergraph(2, [[0, 1], [0, 1]])
    wc = regular_to_weighted(doubled)
    assert wc.coalitions == (3,) and wc.weights == (F(1),)

    with pytest.raises(ValueError):
        regular_to_weighted(hypergraph(3, [[0, 1], [1, 2]]))


def test_uniform_conversion_to_minimal_collection():
    # four 3-edges on five nodes dualize to a minimal balanced collection
    h = hypergraph(5, [[0, 1, 2], [0, 3, 4], [1, 3, 4], [2, 3, 4]])
    wc = uniform_to_mbc_check(h)
    assert wc is not None
    assert wc.coalitions == (3, 5, 9, 14)
    assert wc.weights == (F(1, 3), F(1, 3), F(1, 3), F(2, 3))
    assert wc in generate(4).collections


def test_uniform_conversion_non_minimal_splits():
    h = hypergraph(
        8,
        [[0, 1, 2, 6, 7], [0, 3, 4, 5, 7], [1, 3, 4, 5, 6], [2, 3, 4, 6, 7]],
    )
    assert h.uniform_size() == 5
    assert uniform_to_mbc_check(h) is None  # balanced but not minimal
    union = regular_to_weighted(dual(h))
    assert union.is_balanced_on(4)
    assert union.depth() == 5
    # it splits into two known minimal collections
    store = generate(4)
    known = {wc.coalitions for wc in store}
    parts = [(3, 5, 9, 14), (6, 11, 13)]
    assert all(p in known for p in parts)
    assert set(parts[0]) | set(parts[1]) == set(union.coalitions)


def test_uniform_conversion_single_edge():
    h = hypergraph(2, [[0, 1], [0, 1], [0, 1]])
    wc = uniform_to_mbc_check(h)
    assert wc is not None and wc.coalitions == (7,)

    with pytest.raises(ValueError):
        uniform_to_mbc_check(hypergraph(3, [[0, 1], [2]]))


def test_collection_round_trip():
    for masks, weights in [
        ((3, 5, 6), (F(1, 2), F(1, 2), F(1, 2))),
        ((1, 6), (F(1), F(1))),
        ((3, 5, 9, 14), (F(1, 3), F(1, 3), F(1, 3), F(2, 3))),
    ]:
        wc = make_collection(zip(masks, weights))
        assert regular_to_weighted(collection_to_hypergraph(wc)) == wc


def test_count_example():
    counts = count_uniform_hypergraphs(2, 3, 3)
    assert counts == [1, 7]
    assert sum(counts) == 8


def test_count_single_full_edge():
    for n in (2, 3, 4):
        counts = count_uniform_hypergraphs(n, 1, n)
        assert counts[-1] == 1


def test_count_matches_enumeration():
    for k in (1, 2, 3):
        for p in (1, 2, 3):
            counts = count_uniform_hypergraphs(k, p, 5)
            brute = [len(enumerate_uniform_hypergraphs(k, p, n)) for n in range(2, 6)]
            assert counts == brute


def test_enumerated_hypergraphs_dualize_to_balanced():
    for h in enumerate_uniform_hypergraphs(2, 3, 3):
        wc = regular_to_weighted(dual(h))
        assert wc.is_balanced_on(h.size)
        assert is_balanced_collection(h.size, wc.coalitions) is not None
