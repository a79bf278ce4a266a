from fractions import Fraction as F

import numpy as np
import pytest

from gaugelat.corpus import make_coset_model, oracle_integral
from gaugelat.errors import InvalidInput
from gaugelat.functions import (PiecewiseLinear, Polynomial, StepFunction, affine, constant, from_spec,
                                linear, sign_step)
from gaugelat.sets_measure import IntervalSet


def test_step_evaluation_respects_half_open_pieces_and_points():
    f = StepFunction([0, F(1, 2), 1], [[1.0], [3.0]], {F(1, 4): [7.0]})
    assert f(F(1, 2))[0] == 3.0 and f(F(1, 4))[0] == 7.0 and f(1)[0] == 3.0
    assert f.integral()[0] == pytest.approx(2.0)
    assert f.total_variation()[0] == pytest.approx(2.0 + 12.0)


def test_piecewise_linear_modulus_inserts_zero_crossing():
    f = PiecewiseLinear([0, 1], [[-0.5], [0.5]])
    g = f.modulus()
    assert F(1, 2) in g.knots
    assert g.integral()[0] == pytest.approx(0.25)


def test_polynomial_kind_and_lipschitz():
    p = Polynomial([[0, 0, 1]])
    assert p.kind == "monotone" and p.lipschitz()[0] == 2
    assert Polynomial([[0, 1, -1]]).kind == "custom"


def test_coset_model_values():
    f = make_coset_model(3, 1)
    vals = f.evaluate(np.arange(8) / 8 + 1 / 16)
    assert np.all(vals.sum(axis=1) == 2)
    assert np.all(vals.max(axis=1) == 1)
    step = f.as_step()
    assert np.array_equal(step.total_variation(), f.total_variation())


def test_affine_stays_closed_form():
    f = affine(linear(1), 2.0, [1.0])
    assert f.closed_form and f.integral()[0] == pytest.approx(2.0)


@pytest.mark.parametrize("spec", [
    {"family": "step", "breakpoints": ["0", "1/3", "1"], "values": [[1.0], [2.0]], "points": [["1/2", [5.0]]]},
    {"family": "piecewise_linear", "knots": ["0", "1/2", "1"], "values": [[0.0], [1.0], [0.0]]},
    {"family": "polynomial", "coeffs": [[1, 2, 3]]},
    {"family": "coset_model", "k": 4, "m": 1},
    {"family": "monotone_grid", "values": [[0.0], [0.5], [1.0]]},
])
def test_spec_round_trip(spec):
    f = from_spec(spec)
    g = from_spec(f.to_spec())
    ts = np.linspace(0, 1, 33)
    assert np.array_equal(f.evaluate(ts), g.evaluate(ts))
    assert np.allclose(f.integral(), oracle_integral(f))


def test_from_spec_rejects_unknown_family():
    with pytest.raises(InvalidInput):
        from_spec({"family": "weierstrass"})


def test_integral_over_matches_oracle():
    f = sign_step(-1.0, 1.0, F(1, 2))
    E = IntervalSet([(F(1, 4), F(3, 4))])
    assert np.allclose(f.integral_over(E), oracle_integral(f, E))
    assert constant([2.0, 3.0]).integral().tolist() == [2.0, 3.0]
