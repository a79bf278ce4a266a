from fractions import Fraction as F

import numpy as np
import pytest

from gaugelat.errors import InvalidInput, PreconditionViolation
from gaugelat.partitions import (Gauge, TaggedPartition, alternative_tags, cousin, fine_mask,
                                 free_to_perron, is_fine, sample_fine_partitions)
from gaugelat.sets_measure import IntervalSet

HALF, QUARTER = F(1, 2), F(1, 4)


def two_halves(t0, t1, kind="perron"):
    return TaggedPartition([(IntervalSet([(0, HALF)]), t0),
                            (IntervalSet([(HALF, 1)], add=[1]), t1)], kind)


def test_is_fine_examples():
    P = two_halves(QUARTER, F(3, 4))
    assert is_fine(P, Gauge.constant(F(3, 10)))
    assert not is_fine(P, Gauge.constant(F(1, 5)))
    whole = TaggedPartition([(IntervalSet.unit(), HALF)])
    assert is_fine(whole, Gauge.constant(F(3, 5)))


def test_cousin_constant_gauge():
    P = cousin(Gauge.constant(F(3, 10)))
    assert is_fine(P, Gauge.constant(F(3, 10))) and P.is_perron() and P.covers()


def test_cousin_two_piece_gauge():
    g = Gauge([0, HALF, 1], [F(1, 20), HALF])
    P = cousin(g)
    assert is_fine(P, g) and P.is_perron() and P.covers()
    left = [E.measure() for E, t in P.pairs if t < HALF]
    # bisection stops at the first dyadic level whose half-width is below 1/20
    assert max(left) <= F(1, 16)


def test_cousin_large_gauge_single_pair():
    P = cousin(Gauge.constant(2))
    assert len(P) == 1 and P.tags[0] == HALF


def test_free_to_perron_example():
    g = Gauge.constant(F(9, 10))
    P = two_halves(F(3, 4), QUARTER, "free")
    Q = free_to_perron(P, g)
    expected = {
        F(3, 4): IntervalSet([(0, HALF)], add=[F(3, 4)], remove=[QUARTER]),
        QUARTER: IntervalSet([(HALF, 1)], add=[QUARTER, 1], remove=[F(3, 4)]),
    }
    got = {t: E for E, t in Q.pairs}
    assert got == expected
    assert [E.measure() for E, _ in Q.pairs] == [HALF, HALF]
    assert Q.is_perron() and is_fine(Q, g)


def test_free_to_perron_identity_on_perron():
    g = Gauge.constant(1)
    P = two_halves(QUARTER, F(3, 4), "free")
    assert free_to_perron(P, g).canonical() == P.canonical()


def test_free_to_perron_merges_shared_tags():
    g = Gauge.constant(1)
    P = TaggedPartition([(IntervalSet([(0, QUARTER)]), HALF), (IntervalSet([(QUARTER, HALF)]), HALF),
                         (IntervalSet([(HALF, 1)], add=[1]), F(3, 4))], "free")
    Q = free_to_perron(P, g)
    assert len(Q) == 2 and sorted(Q.tags) == [HALF, F(3, 4)]
    assert sorted(E.measure() for E in Q.sets) == [HALF, HALF]


def test_sampler_examples():
    g = Gauge.constant(F(3, 10))
    parts = sample_fine_partitions(g, 5, 7)
    assert len(parts) == 5 and all(is_fine(P, g) and P.covers() for P in parts)
    assert all(P.is_perron() for P in sample_fine_partitions(g, 5, 7, "perron"))
    dyadic = [F(i, 8) for i in range(9)]
    adv = sample_fine_partitions(g, 5, 7, "free", adversarial_tags=dyadic, adversarial_prob=1.0)
    assert all(set(P.tags) <= set(dyadic) for P in adv)
    again = zip(sample_fine_partitions(g, 3, 11), sample_fine_partitions(g, 3, 11))
    assert all(a.canonical() == b.canonical() for a, b in again)


def test_restricted_tags():
    dyadic = [F(i, 4) for i in range(5)]
    for c in (HALF, QUARTER):
        g = Gauge.constant(c)
        P = sample_fine_partitions(g, 1, 0, "free", adversarial_tags=dyadic, adversarial_prob=1.0)[0]
        assert set(P.tags) <= set(dyadic) and is_fine(P, g)
    with pytest.raises(PreconditionViolation):
        sample_fine_partitions(Gauge.constant(F(1, 8)), 1, 0, "free", adversarial_tags=dyadic,
                               adversarial_prob=1.0)


def test_alternative_tags_are_fine():
    g = Gauge([0, HALF, 1], [F(1, 64), F(1, 8)])
    for i, P in enumerate(sample_fine_partitions(g, 4, 3)):
        alt = alternative_tags(P, g, i)
        assert fine_mask(P.with_tags(alt, "free"), g).all()


def test_gauge_serialization_and_minimum():
    g = Gauge([0, HALF, 1], [F(1, 4), F(1, 8)], {F(1, 3): F(1, 1024)})
    assert Gauge.from_dict(g.to_dict()) == g
    h = g.minimum(Gauge.constant(F(1, 6)))
    assert h(F(1, 10)) == F(1, 6) and h(F(3, 4)) == F(1, 8) and h(F(1, 3)) == F(1, 1024)
    with pytest.raises(InvalidInput):
        Gauge([0, 1], [0])


def test_partition_rejects_bad_kind():
    with pytest.raises(InvalidInput):
        TaggedPartition([], "lebesgue")
