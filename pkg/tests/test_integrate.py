from fractions import Fraction as F

import numpy as np
import pytest

from gaugelat.corpus import make_coset_model
from gaugelat.errors import NonConvergence, PreconditionViolation
from gaugelat.functions import CallableFunction, PiecewiseLinear, StepFunction, constant, linear, sign_step
from gaugelat.integrate import (IntegralReport, henstock_lemma_sum, indefinite, integrate_norm,
                                modulus_measure, partition_oscillation_sum, riemann_sum, riemann_sum_exact,
                                variational_sum)
from gaugelat.lattice import SpaceSpec
from gaugelat.partitions import Gauge, TaggedPartition, sample_fine_partitions
from gaugelat.sets_measure import IntervalSet

M1 = SpaceSpec.M(1)


def uniform(n, where="mid", kind="perron"):
    """Uniform n-piece array partition with left, mid or right tags."""
    den = 2 * n
    edges = np.arange(n + 1) * 2
    tags = {"left": edges[:-1], "mid": edges[:-1] + 1, "right": edges[1:]}[where]
    closed = np.zeros(n, bool)
    closed[-1] = True
    return TaggedPartition.from_arrays(edges, den, tags, closed, kind if where != "right" else "free")


def test_riemann_sum_examples():
    assert riemann_sum(linear(1), uniform(4, "mid"))[0] == 0.5
    assert riemann_sum(linear(1), uniform(4, "left"))[0] == 0.375
    c = constant([2.0, -1.0])
    for P in sample_fine_partitions(Gauge.constant(F(1, 7)), 4, 1):
        assert np.array_equal(riemann_sum(c, P), [2.0, -1.0])


def test_riemann_sum_exact_matches_float():
    f = StepFunction([0, F(1, 3), 1], [[1.0], [4.0]])
    P = sample_fine_partitions(Gauge.constant(F(1, 10)), 1, 3)[0]
    assert float(riemann_sum_exact(f, P)[0]) == pytest.approx(riemann_sum(f, P)[0], abs=1e-12)


def test_integrate_constant_is_exact_at_level_one():
    r = integrate_norm(constant([3.0]), M1, "H", 1e-6, K=8)
    assert r.converged and r.levels == 1 and r.value[0] == 3.0 and r.spread == 0


@pytest.mark.parametrize("kind", ["H", "MS"])
def test_integrate_linear_loose_tolerance(kind):
    r = integrate_norm(linear(1), M1, kind, 1e-3, K=16)
    assert r.converged and abs(r.value[0] - 0.5) <= 1e-3 and r.spread <= 1e-3


def test_integrate_linear_tol_1e6_beyond_default_levels():
    r = integrate_norm(linear(1), M1, "MS", 1e-6, K=4)
    # level-n spread is about 2^-n, so sixteen levels cannot reach 1e-6
    assert not r.converged and r.levels == 16 and abs(r.value[0] - 0.5) <= r.spread


@pytest.mark.slow
def test_integrate_linear_tol_1e6_with_more_levels():
    r = integrate_norm(linear(1), M1, "H", 1e-6, K=2, max_levels=24)
    assert r.converged and abs(r.value[0] - 0.5) <= 1e-6


def test_coset_model_adversarial_tags_do_not_converge():
    f = make_coset_model(8, 2)
    D = [F(i, 4) for i in range(5)]
    r = integrate_norm(f, SpaceSpec.M(f.dim), "H", 1e-6, K=16, adversarial_tags=D, adversarial_prob=1.0)
    assert not r.converged
    assert r.peak_spread >= 1 - 2.0 ** -6
    assert r.reason


def test_report_serialization():
    r = integrate_norm(linear(1), M1, "H", 1e-2, K=4)
    d = r.to_dict()
    assert d["method"] == "H" and d["converged"] is True
    row = r.csv_row("linear", "M")
    assert row[0] == "linear" and row[-1] == "pass" and len(row) == 7
    assert isinstance(r, IntegralReport)


def test_indefinite_examples():
    assert indefinite(linear(1), IntervalSet([(0, F(1, 2))]))[0] == pytest.approx(0.125)
    A = IntervalSet([(F(1, 8), F(1, 2)), (F(3, 4), 1)])
    assert indefinite(constant([2.0]), A)[0] == pytest.approx(2.0 * 0.625)
    assert indefinite(linear(1), IntervalSet.empty())[0] == 0


def test_indefinite_without_closed_form():
    f = CallableFunction(lambda t: np.asarray(t)[:, None] ** 2, 1)
    assert indefinite(f, IntervalSet.unit(), tol=1e-2)[0] == pytest.approx(1 / 3, abs=1e-2)
    with pytest.raises(NonConvergence) as err:
        indefinite(f, IntervalSet.unit(), tol=1e-9, max_levels=3)
    assert err.value.report is not None and not err.value.report.converged


def test_modulus_measure_examples():
    f = PiecewiseLinear([0, 1], [[-0.5], [0.5]])
    assert modulus_measure(f, IntervalSet.unit(), 12)[0] == pytest.approx(0.25, abs=1e-12)
    s = sign_step([1.0, 1.0], [-1.0, -1.0], F(1, 2))
    assert np.allclose(modulus_measure(s, IntervalSet.unit(), 12), [1.0, 1.0])
    g = linear(1)
    A = IntervalSet([(F(1, 4), 1)])
    assert modulus_measure(g, A, 1)[0] == pytest.approx(indefinite(g, A)[0])


def test_variational_sum_examples():
    P = sample_fine_partitions(Gauge.constant(F(1, 5)), 1, 0)[0]
    assert variational_sum(constant([1.0]), P, M1) == 0
    for n in (2, 4, 10):
        assert variational_sum(linear(1), uniform(n, "left"), M1) == pytest.approx(1 / (2 * n))


def test_variational_sum_coset_model_adversarial_tags():
    from gaugelat import kernels

    k, m, j = 8, 2, 4
    f = make_coset_model(k, m)
    cells = 1 << j
    pieces = np.array([kernels.coset_tag(i, 1 << (k - j), 1 << (k - m), 1 << k) for i in range(cells)])
    # tag at the midpoint of the chosen piece, on the 2^-(k+1) grid
    P = TaggedPartition.from_arrays(np.arange(cells + 1) * (1 << (k - j + 1)), 1 << (k + 1),
                                    2 * pieces + 1, np.arange(cells) == cells - 1, "free")
    assert variational_sum(f, P, SpaceSpec.M(f.dim)) >= 1 - 2.0 ** (m - k) - 1e-9


def test_henstock_lemma_examples():
    c = constant([1.0])
    P = uniform(4)
    assert henstock_lemma_sum(c, P, P.tags)[0] == 0
    n = 8
    L, R = uniform(n, "left"), uniform(n, "right")
    assert henstock_lemma_sum(linear(1), L, R._arr[2])[0] == pytest.approx(1 / n)
    jump = sign_step([0.0], [3.0], F(1, 2))
    straddle = uniform(3, "left")  # the middle piece [1/3, 2/3) holds the jump
    alt = straddle._arr[2].copy()
    alt[1] = 3  # 1/2 on the denominator-6 grid
    assert henstock_lemma_sum(jump, straddle, alt)[0] == pytest.approx(3.0 / 3)


def test_henstock_alt_tags_must_be_fine():
    P = uniform(2, "mid")
    with pytest.raises(PreconditionViolation):
        henstock_lemma_sum(linear(1), P, np.array([4, 0]), gauge=Gauge.constant(F(1, 4)))


def test_partition_oscillation_sum_examples():
    whole = TaggedPartition([(IntervalSet.unit(), F(1, 2))])
    g = Gauge.constant(1)
    assert partition_oscillation_sum(constant([2.0]), whole, g, 16, 0)[0] == 0
    val = partition_oscillation_sum(linear(1), whole, g, 32, 0)[0]
    assert 0.9 <= val <= 1.0
    inside = TaggedPartition([(IntervalSet([(0, F(1, 2))]), F(1, 4)),
                              (IntervalSet([(F(1, 2), 1)], add=[1]), F(3, 4))])
    step = sign_step([1.0], [2.0], F(1, 2))
    assert partition_oscillation_sum(step, inside, Gauge.constant(F(1, 4)), 16, 0)[0] == 0
