import numpy as np
import pytest

from gaugelat.errors import InvalidInput
from gaugelat.lattice import (DecayRule, OSequence, SpaceSpec, join_meet, modulus, norm,
                              validate_osequence)


@pytest.mark.parametrize("x, expected", [((-1, 2), (1, 2)), ((0, 0), (0, 0)), ((-3, -4), (3, 4))])
def test_modulus(x, expected):
    assert modulus(x).tolist() == list(expected)


@pytest.mark.parametrize("x, y, join, meet", [
    ((1, 0), (0, 1), (1, 1), (0, 0)),
    ((2, 2), (2, 2), (2, 2), (2, 2)),
    ((-1, 3), (1, -3), (1, 3), (-1, -3)),
])
def test_join_meet(x, y, join, meet):
    j, m = join_meet(x, y)
    assert j.tolist() == list(join) and m.tolist() == list(meet)


def test_norms():
    L = SpaceSpec.L([1, 1])
    assert norm(np.array([1, 0]) + np.array([0, 2]), L) == 3
    assert norm([-3, 2], SpaceSpec.M(2)) == 3
    assert norm([1, 1, 1], SpaceSpec.L([1, 0.5, 0.25])) == 1.75


def test_space_spec_round_trip():
    spec = SpaceSpec.L([1, 0.5])
    assert SpaceSpec.from_dict(spec.to_dict()) == spec
    assert spec.to_dict()["norm"] == "L"
    with pytest.raises(InvalidInput):
        SpaceSpec.L([1, -1])


def test_osequence_valid():
    b = OSequence.from_rule(DecayRule.power([1, 1]), 10)
    assert validate_osequence(b)
    assert np.allclose(b[10], [0.1, 0.1])


def test_osequence_constant_is_invalid():
    b = OSequence.from_rule(DecayRule.constant([1, 1]), 10)
    v = validate_osequence(b)
    assert not v


def test_osequence_not_decreasing():
    b = OSequence(np.array([[1.0, 1.0], [2.0, 1.0]]), DecayRule.power([1, 1]))
    v = validate_osequence(b)
    assert not v and v.index == 2


def test_osequence_one_based_and_serializable():
    b = OSequence.from_rule(DecayRule.geometric([1.0], 0.5) + DecayRule.power([2.0]), 5)
    with pytest.raises(IndexError):
        b[0]
    again = OSequence.from_dict(b.to_dict())
    assert np.array_equal(again.terms, b.terms) and validate_osequence(again)
