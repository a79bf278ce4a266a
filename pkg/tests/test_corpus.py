from fractions import Fraction as F

import numpy as np
import pytest

from gaugelat.corpus import (contrast_table, default_corpus, dyadic_enumeration, dyadic_index,
                             dyadic_weights, load_entry, make_coset_model, make_weighted_L_space,
                             oracle_integral, oracle_integral_exact, random_gordon_instance,
                             variational_contrast)
from gaugelat.errors import InvalidInput
from gaugelat.functions import StepFunction, linear
from gaugelat.lattice import norm
from gaugelat.order import variation_on
from gaugelat.sets_measure import IntervalSet


def test_coset_model_integrals():
    assert oracle_integral_exact(make_coset_model(2, 0), IntervalSet.unit()) == [F(1, 4)] * 4
    assert oracle_integral_exact(make_coset_model(2, 1), IntervalSet.unit()) == [F(1, 2)] * 4


@pytest.mark.parametrize("k, m", [(1, 0), (3, 1), (5, 2), (6, 6 - 1)])
def test_coset_model_total_mass(k, m):
    f = make_coset_model(k, m)
    assert sum(oracle_integral_exact(f, IntervalSet.unit())) == 2 ** m
    # every value is a 0/1 indicator, so its max-norm is 1
    ts = (np.arange(1 << k) + 0.5) / (1 << k)
    assert np.all(np.abs(f.evaluate(ts)).max(axis=1) == 1)
    assert np.max(np.abs(f.integral())) == 2.0 ** (m - k)


def test_oracle_examples():
    step = StepFunction([0, F(1, 2), 1], [[1.0, 4.0], [3.0, -2.0]])
    assert oracle_integral(step).tolist() == [2.0, 1.0]
    assert oracle_integral_exact(linear(1), IntervalSet([(0, F(1, 2))])) == [F(1, 8)]


def test_weighted_L_space():
    w = dyadic_weights(1).weights
    assert w.tolist() == [1.0, 0.5]
    for k in (1, 2, 3, 4):
        spec = make_weighted_L_space(k)
        assert norm(np.ones(1 << k), spec) == 2 - 2.0 ** (1 - (1 << k))
        e0 = np.zeros(1 << k)
        e0[0] = 1
        assert norm(e0, spec) == 1


def test_enumeration_golden():
    assert dyadic_enumeration(3) == [F(0), F(1, 2), F(1, 4), F(3, 4), F(1, 8), F(3, 8), F(5, 8), F(7, 8)]
    assert [dyadic_index(j, 3) for j in range(8)] == [0, 4, 2, 5, 1, 6, 3, 7]
    assert dyadic_index(8, 3) == 0  # 1 is identified with 0


@pytest.mark.parametrize("k, m", [(8, 2), (10, 2), (12, 3)])
def test_variational_contrast_every_mesh(k, m):
    for j in range(k + 1):
        vm, vl, _ = variational_contrast(k, m, j)
        assert vm >= 1 - 2.0 ** (m - k) - 1e-9
        assert vl <= 2.0 ** (m - k + 1) + 1e-9


def test_contrast_table_columns():
    (row,) = contrast_table([(8, 2)])
    assert set(row) >= {"k", "m", "V_M", "V_L", "integral_M", "M_bound", "L_bound"}
    assert row["integral_M"] == 2.0 ** -6


def test_small_models_exceed_the_L_bound():
    # the weighted L bound needs enough coordinates; at k=5, m=1 it is missed
    (row,) = contrast_table([(5, 1)])
    assert row["V_L"] > row["L_bound"]


def test_default_corpus_loads():
    ids = [load_entry(e)[0] for e in default_corpus()]
    assert len(ids) == len(set(ids)) and "linear" in ids
    with pytest.raises(InvalidInput):
        load_entry({"fn": {"family": "step"}})


def test_gordon_instances_satisfy_hypothesis_exactly():
    rng = np.random.default_rng(0)
    for _ in range(50):
        f, F_, a, delta = random_gordon_instance(rng)
        assert 10 * float(delta) * variation_on(f, F_)[0] <= a[0] / 5
