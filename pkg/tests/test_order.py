from fractions import Fraction as F

import numpy as np
import pytest

from gaugelat.corpus import make_coset_model, make_weighted_L_space
from gaugelat.errors import InvalidInput, Unsupported
from gaugelat.functions import PiecewiseLinear, Polynomial, StepFunction, constant, linear, sign_step
from gaugelat.integrate import integrate_norm
from gaugelat.lattice import DecayRule, OSequence, SpaceSpec
from gaugelat.order import (OrderCertificate, RiemannWitness, ae_transfer, build_monotone_certificate,
                            build_oB_certificate, build_step_certificate, cauchy_check, certify,
                            check_certificate, check_level, extract_riemann_witness, gordon_check,
                            henstock_lemma_check, modulus_certificate, monotone_sandwich_inputs,
                            o_riemann_check, order_to_variational, oscillation, parallelo_check,
                            sandwich_certify, step_sandwich)
from gaugelat.partitions import Gauge
from gaugelat.sets_measure import IntervalSet

HALF = F(1, 2)


def power(coef, N=16):
    return OSequence.from_rule(DecayRule.power(coef), N)


def gauges(N=16, scale=1):
    return [Gauge.constant(F(1, scale * n)) for n in range(1, N + 1)]


# -- certificates -------------------------------------------------------------


def test_constant_certificate_has_zero_margin_use():
    c = constant([2.0])
    cert = OrderCertificate([2.0], power([1.0], 4), gauges(4), "oM")
    v = check_certificate(c, cert, K=8)
    assert v.passed and all(lv.worst[0] == 0 for lv in v.levels)


def test_linear_certificate_passes_and_false_value_fails():
    f = linear(1)
    good = OrderCertificate([0.5], power([1.0]), gauges(16, 2), "oH")
    assert check_certificate(f, good, K=32)
    bad = OrderCertificate([0.4], power([1.0]), gauges(16, 2), "oH")
    v = check_certificate(f, bad, K=32, levels=[16])
    assert not v.passed and v.first_failure == 16
    assert v.levels[0].worst[0] == pytest.approx(0.1, abs=1 / 32)


def test_certificate_validation():
    with pytest.raises(InvalidInput):
        OrderCertificate([0.5], power([1.0], 3), gauges(4)).validate()
    with pytest.raises(InvalidInput):
        OrderCertificate([0.5], OSequence.from_rule(DecayRule.constant([1.0]), 4), gauges(4)).validate()


def test_certificate_json_round_trip():
    cert = certify(linear(1), 4)
    again = OrderCertificate.from_dict(cert.to_dict())
    assert np.array_equal(again.J, cert.J) and again.gauges == cert.gauges
    assert np.array_equal(again.b.terms, cert.b.terms) and again.kind == cert.kind


def test_cauchy_examples():
    f = linear(1)
    assert cauchy_check(constant([1.0]), power([1.0], 8), gauges(8), K=8)
    assert cauchy_check(f, power([1.0]), gauges(16, 2), K=16)
    v = cauchy_check(f, power([0.1]), gauges(), K=16, kind="free")
    assert not v.passed


def test_monotone_builder_examples():
    cert = build_monotone_certificate(linear(1))
    assert cert.J[0] == 0.5 and cert.b[4][0] == pytest.approx(0.25)
    two = build_monotone_certificate(Polynomial([[0, 1], [0, 0, 1]]))
    assert np.allclose(two.J, [0.5, 1 / 3]) and np.allclose(two.b[2], [0.5, 0.5])
    flat = build_monotone_certificate(constant([3.0]))
    assert flat.J[0] == 3.0 and flat.b[2][0] == 0.5
    with pytest.raises(InvalidInput):
        build_monotone_certificate(Polynomial([[0, 1, -1]]))


def test_step_certificate_for_non_monotone_step():
    f = StepFunction([0, F(1, 3), F(2, 3), 1], [[1.0], [-2.0], [0.5]], {F(1, 2): [4.0]})
    cert = build_step_certificate(f, 8)
    assert check_certificate(f, cert, K=32, adversarial_tags=[F(1, 2), F(1, 3), F(2, 3)])


def test_certify_rejects_unsupported():
    from gaugelat.functions import CallableFunction

    with pytest.raises(Unsupported):
        certify(CallableFunction(lambda t: np.sin(10 * t)[:, None], 1))


# -- sandwiches and moduli ------------------------------------------------------


def test_sandwich_with_identical_bounds_keeps_value():
    f = StepFunction([0, HALF, 1], [[0.0], [1.0]])
    cert = build_monotone_certificate(f, 8)
    out = sandwich_certify(f, (f, cert), (f, cert), power([1.0], 8))
    assert out.J[0] == cert.J[0]
    assert check_certificate(f, out, K=16)


def test_sandwich_of_linear_map():
    f = linear(1)
    lows, ups, b = monotone_sandwich_inputs(f, 8)
    g1, g2 = step_sandwich(f, 8)
    assert g1.integral()[0] == pytest.approx(7 / 16) and g2.integral()[0] == pytest.approx(9 / 16)
    out = sandwich_certify(f, lows, ups, b)
    assert abs(out.J[0] - 0.5) <= 1 / 16
    assert check_certificate(f, out, K=16)


def test_sandwich_gap_too_large_is_rejected():
    f = linear(1)
    lo = constant([0.0])
    hi = constant([1.0])
    with pytest.raises(InvalidInput):
        sandwich_certify(f, (lo, certify(lo, 4)), (hi, certify(hi, 4)), power([0.5], 4))


def test_modulus_certificates():
    f = linear(1)
    assert modulus_certificate(f, certify(f)).J[0] == 0.5
    centered = PiecewiseLinear([0, 1], [[-0.5], [0.5]])
    mc = modulus_certificate(centered, certify(centered))
    assert mc.J[0] == pytest.approx(0.25)
    assert check_certificate(centered.modulus(), mc, K=16)
    s = sign_step([-1.0], [1.0], HALF)
    assert modulus_certificate(s, certify(s)).J[0] == pytest.approx(1.0)


def test_parallelo_examples():
    f = linear(1)
    assert parallelo_check(f, certify(f)).passed
    centered = PiecewiseLinear([0, 1], [[-0.5], [0.5]])
    r = parallelo_check(centered, certify(centered))
    assert r.lhs[0] == pytest.approx(0.25) and r.rhs[0] == pytest.approx(0.25) and r.passed
    s = sign_step([1.0, -1.0], [-1.0, 1.0], HALF)
    r = parallelo_check(s, certify(s))
    assert np.allclose(r.lhs, [1, 1]) and np.allclose(r.rhs, [1, 1])


# -- Henstock bounds ---------------------------------------------------------------


@pytest.mark.parametrize("f", [linear(1), sign_step([0.0], [1.0], HALF), Polynomial([[0, 0, 1]])],
                         ids=["linear", "jump", "square"])
def test_builder_certificates_bound_henstock_sums(f):
    assert henstock_lemma_check(f, certify(f, 16), K=8)


def test_generic_certificate_can_need_twice_the_sequence():
    # gamma = 1/4 and b = 1/4 is a valid certificate level for f(t) = t, yet tiny
    # pieces tagged at opposite ends of their windows give a two-tag sum near 2b
    from gaugelat.integrate import henstock_lemma_sum, riemann_sum
    from gaugelat.partitions import TaggedPartition, fine_mask

    f = linear(1)
    g = Gauge.constant(F(1, 4))
    den = 4096
    edges = np.arange(0, den + 1, 4)
    a, b = edges[:-1], edges[1:]
    left = np.maximum(0, b - den // 4 + 1)
    right = np.minimum(den, a + den // 4 - 1)
    closed = np.arange(a.size) == a.size - 1
    P = TaggedPartition.from_arrays(edges, den, left, closed, "free")
    Q = P.with_tags(right)
    assert fine_mask(P, g).all() and fine_mask(Q, g).all()
    assert abs(riemann_sum(f, P)[0] - 0.5) <= 0.25 and abs(riemann_sum(f, Q)[0] - 0.5) <= 0.25
    two_tag = henstock_lemma_sum(f, P, right, gauge=g)[0]
    assert 0.25 < two_tag <= 0.5
    assert henstock_lemma_sum(f, P)[0] <= 0.25


# -- measurability witnesses --------------------------------------------------------


def test_witness_from_constant_gauges():
    cert = OrderCertificate([0.5], power([1.0], 4), [Gauge.constant(F(1, 3))] * 4, "oBH")
    w = extract_riemann_witness(linear(1), cert)
    assert all(F_ == IntervalSet.unit() for F_ in w.F) and all(d == F(1, 3) for d in w.deltas)


def test_witness_removes_small_sublevel_set():
    gs = [Gauge([0, F(1, 2 * n), 1], [F(1, 1 << 20), 1]) for n in range(1, 5)]
    cert = OrderCertificate([0.5], power([1.0], 4), gs, "oBH")
    w = extract_riemann_witness(linear(1), cert)
    for n in range(1, 5):
        assert w.F[n - 1] == IntervalSet([(F(1, 2 * n), 1)], add=[1])
        assert IntervalSet.unit().diff(w.F[n - 1]).measure() == F(1, 2 * n)


def test_witness_when_every_threshold_is_heavy():
    rng = np.random.default_rng(5)
    from gaugelat.corpus import random_step_gauge

    gs = [random_step_gauge(rng, 10) for _ in range(6)]
    f = StepFunction([0, F(1, 3), 1], [[0.0], [1.0]])
    cert = OrderCertificate(f.integral(), power([2.0], 6), gs, "oBH")
    w = extract_riemann_witness(f, cert)
    w.validate()
    for n in range(1, 7):
        assert o_riemann_check(f, IntervalSet.unit(), w, n, K=8).passed


def test_o_riemann_examples():
    one = [IntervalSet.unit()] * 4
    w = RiemannWitness(power([1.0], 4), tuple(one), tuple(F(1, n) for n in range(1, 5)))
    assert o_riemann_check(constant([1.0]), IntervalSet.unit(), w, 3).worst[0] == 0
    assert all(o_riemann_check(linear(1), IntervalSet.unit(), w, n).passed for n in range(1, 5))
    f = sign_step([0.0], [1.0], HALF)
    Fs = tuple(IntervalSet.unit().diff(IntervalSet([(HALF - F(1, 2 * n), HALF + F(1, 2 * n))]))
               for n in range(1, 5))
    tiny = OSequence.from_rule(DecayRule.power([1e-12]), 4)
    w = RiemannWitness(tiny, Fs, tuple(F(1, n) for n in range(1, 5)))
    assert all(o_riemann_check(f, IntervalSet.unit(), w, n).passed for n in range(1, 5))


def test_oscillation_examples():
    assert oscillation(constant([1.0]), (0, 1))[0] == 0
    assert oscillation(linear(1), (F(1, 4), HALF))[0] == pytest.approx(0.25)
    f = sign_step([0.0], [1.0], HALF)
    window = IntervalSet.unit().diff(IntervalSet([(F(2, 5), F(3, 5))], add=[F(3, 5)]))
    assert oscillation(f, (F(1, 4), F(3, 4)), window)[0] == 1


def test_gordon_examples():
    r = gordon_check(constant([1.0]), IntervalSet.unit(), [1.0], F(1, 100), trials=8)
    assert r.hypothesis_holds and r.conclusion_holds and r.conclusion_lhs[0] == 0
    r = gordon_check(linear(1), IntervalSet.unit(), [1.0], F(1, 100), trials=16)
    assert r.hypothesis_lhs[0] <= 0.1 + 1e-12 and r.conclusion_lhs[0] <= 0.04 + 1e-12
    assert r.hypothesis_holds and r.conclusion_holds
    f = sign_step([0.0], [1.0], HALF)
    away = IntervalSet.unit().diff(IntervalSet([(F(1, 4), F(3, 4))], add=[F(3, 4)]))
    r = gordon_check(f, away, [1.0], F(1, 64), trials=16)
    assert r.conclusion_lhs[0] == 0 and r.hypothesis_lhs[0] == 0


# -- Birkhoff-type certificates ----------------------------------------------------------


def test_oB_from_monotone_witness():
    f = linear(1)
    w = extract_riemann_witness(f, certify(f, 8).relabel("oBH"))
    cert = build_oB_certificate(f, w)
    assert cert.kind == "oB" and check_certificate(f, cert, K=16)
    assert cert.b[8][0] == pytest.approx(2 * (5 * w.p[8][0] + 2 * 1.0 / 8))


def test_oB_with_jump_outside_F():
    f = sign_step([0.0], [1.0], HALF)
    gs = [Gauge([0, HALF - F(1, 4 * n), HALF + F(1, 4 * n), 1], [F(1, 8 * n), F(1, 1 << 16), F(1, 8 * n)])
          for n in range(1, 9)]
    w = extract_riemann_witness(f, OrderCertificate([0.5], power([1.0], 8), gs, "oBH"))
    assert all(not F_.contains(HALF) for F_ in w.F)
    cert = build_oB_certificate(f, w)
    assert check_certificate(f, cert, K=16, adversarial_tags=[HALF])


def test_oB_constant():
    c = constant([2.0])
    w = extract_riemann_witness(c, certify(c, 4))
    cert = build_oB_certificate(c, w)
    v = check_certificate(c, cert, K=8)
    assert v.passed and all(lv.worst[0] == 0 for lv in v.levels)


# -- L-space bridge --------------------------------------------------------------------------


def test_variational_bridge_constant():
    c = constant([1.0, 2.0])
    r = order_to_variational(c, certify(c, 40), SpaceSpec.L([1, 1]), 0.1)
    assert r.passed and r.norm_sum == 0 and r.variational == 0


def test_variational_bridge_linear():
    f = Polynomial([[0, 1], [0, 1]])
    r = order_to_variational(f, certify(f, 40), SpaceSpec.L([1, 1]), 0.1, K=16)
    assert r.passed and r.N == 20 and r.variational <= 0.2


def test_variational_bridge_coset_model_weighted():
    k, m = 10, 2
    f = make_coset_model(k, m)
    spec = make_weighted_L_space(k)
    N = int(np.ceil(spec.norm(certify(f, 1).b[1]) / 0.1)) + 1
    r = order_to_variational(f, certify(f, N), spec, 0.1, K=4)
    assert r.passed and r.variational <= 2.0 ** (m - k + 1) + 0.1


def test_variational_bridge_needs_L_and_enough_levels():
    f = linear(1)
    with pytest.raises(InvalidInput):
        order_to_variational(f, certify(f, 4), SpaceSpec.M(1), 0.1)
    r = order_to_variational(f, certify(f, 4), SpaceSpec.L([1]), 0.01)
    assert not r.passed and r.N is None


# -- almost-everywhere transfer -----------------------------------------------------------------


def test_ae_transfer_examples():
    f = linear(1)
    cert = certify(f, 8)
    assert ae_transfer(f, f, cert, []) is cert
    from gaugelat.functions import CallableFunction

    g = CallableFunction(lambda t: np.where(np.asarray(t) == 0.5, 7.0, t)[:, None], 1)
    out = ae_transfer(f, g, cert, [HALF])
    assert out.J[0] == 0.5 and check_certificate(g, out, K=32, adversarial_tags=[HALF])


def test_ae_transfer_three_dyadic_points():
    f = StepFunction([0, F(1, 3), 1], [[0.0, 1.0], [1.0, -1.0]])
    D = [F(1, 4), HALF, F(3, 4)]
    g = f.with_points({p: [5.0, -5.0] for p in D})
    cert = ae_transfer(f, g, certify(f, 8), D)
    assert np.array_equal(cert.J, certify(f, 8).J)
    assert check_certificate(g, cert, K=32, adversarial_tags=D)


def test_ae_transfer_rejects_infinite_sets():
    f = linear(1)
    with pytest.raises(Unsupported):
        ae_transfer(f, f, certify(f, 4), IntervalSet([(0, HALF)]))


# -- cross-module invariants ----------------------------------------------------------------------


def test_certificate_value_matches_norm_integral():
    f = Polynomial([[0, 0, 1]])
    cert = certify(f, 16)
    r = integrate_norm(f, SpaceSpec.M(1), "H", 1e-3, K=16)
    assert r.converged and abs(r.value[0] - cert.J[0]) <= SpaceSpec.M(1).norm(cert.b[16])


def test_converged_level_gives_single_level_certificate():
    f = sign_step([0.0, 1.0], [1.0, 0.0], HALF)
    spec = SpaceSpec.M(2)
    r = integrate_norm(f, spec, "H", 1e-3, K=16)
    assert r.converged
    lv = check_level(f, r.value, np.full(2, r.spread), Gauge.constant(F(1, 1 << r.levels)), "perron",
                     K=16, seed=99)
    assert lv.passed
