"""Function families, the dyadic-weight L-space and exact oracles.

:func:`oracle_integral` works in rational arithmetic straight from each
family's definition and shares no code with the antiderivatives in
:mod:`gaugelat.functions`; tests use it as the independent reference.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import kernels
from .errors import InvalidInput, Unsupported
from .functions import (Affine, CosetModel, IntegrandFn, PiecewiseLinear, Polynomial, Restricted,
                        StepFunction, from_spec)
from .lattice import SpaceSpec
from .partitions import Gauge
from .sets_measure import ONE, ZERO, IntervalSet

TINY = np.nextafter(0.0, 1.0)


def make_coset_model(k: int, m: int) -> CosetModel:
    """Step map with ``2^k`` pieces into ``R^(2^k)``; each value indicates a coset of size ``2^m``."""
    return CosetModel(k, m)


# --------------------------------------------------------------------------
# exact oracle


def _overlap(a: Fraction, b: Fraction, A: IntervalSet) -> Fraction:
    total = ZERO
    for u, v in A.intervals:
        lo, hi = max(a, u), min(b, v)
        if hi > lo:
            total += hi - lo
    return total


def oracle_integral_exact(f: IntegrandFn, A: IntervalSet) -> list[Fraction]:
    """Exact rational integral of ``f * 1_A`` (float values read as exact rationals)."""
    if isinstance(f, StepFunction):
        out = [ZERO] * f.dim
        for i in range(len(f.values)):
            w = _overlap(f.breaks[i], f.breaks[i + 1], A)
            if w:
                out = [o + w * Fraction(float(v)) for o, v in zip(out, f.values[i])]
        return out
    if isinstance(f, PiecewiseLinear):
        out = [ZERO] * f.dim
        ys = [[Fraction(float(v)) for v in row] for row in f.values]
        for i in range(len(f.knots) - 1):
            x0, x1 = f.knots[i], f.knots[i + 1]
            for u, v in A.intervals:
                lo, hi = max(x0, u), min(x1, v)
                if hi <= lo:
                    continue
                for c in range(f.dim):
                    slope = (ys[i + 1][c] - ys[i][c]) / (x1 - x0)
                    fl = ys[i][c] + slope * (lo - x0)
                    fh = ys[i][c] + slope * (hi - x0)
                    out[c] += (hi - lo) * (fl + fh) / 2
        return out
    if isinstance(f, Polynomial):
        out = [ZERO] * f.dim
        for c in range(f.dim):
            coeffs = [Fraction(float(x)) for x in f.coeffs[c]]
            for u, v in A.intervals:
                out[c] += sum(q * (v ** (i + 1) - u ** (i + 1)) / (i + 1) for i, q in enumerate(coeffs))
        return out
    if isinstance(f, CosetModel):
        res = [ZERO] * f.R
        n = f.n
        for p in range(n):
            w = _overlap(Fraction(p, n), Fraction(p + 1, n), A)
            if w:
                res[p % f.R] += w
        return [res[s % f.R] for s in range(f.dim)]
    if isinstance(f, Affine):
        inner = oracle_integral_exact(f.inner, A)
        mu = A.measure()
        sc = Fraction(f.scale)
        return [sc * x + Fraction(float(c)) * mu for x, c in zip(inner, f.shift)]
    if isinstance(f, Restricted):
        return oracle_integral_exact(f.inner, A & f.A)
    raise Unsupported(f"no exact oracle for {type(f).__name__}")


def oracle_integral(f: IntegrandFn, A: IntervalSet | None = None) -> np.ndarray:
    """Float rounding of :func:`oracle_integral_exact` (``A`` defaults to [0, 1])."""
    A = IntervalSet.unit() if A is None else A
    return np.array([float(x) for x in oracle_integral_exact(f, A)])


# --------------------------------------------------------------------------
# dyadic-weight L-space


def dyadic_index(j: int, k: int) -> int:
    """Position of ``j/2^k`` in the enumeration 0, 1/2, 1/4, 3/4, 1/8, ...

    The endpoint 1 is identified with 0.
    """
    j %= 1 << k
    if j == 0:
        return 0
    tz = (j & -j).bit_length() - 1
    d = k - tz
    odd = j >> tz
    return (1 << (d - 1)) + (odd - 1) // 2


def dyadic_enumeration(k: int) -> list[Fraction]:
    """Grid points of depth ``k`` in enumeration order."""
    pts = [Fraction(j, 1 << k) for j in range(1 << k)]
    return sorted(pts, key=lambda x: dyadic_index(int(x * (1 << k)), k))


@dataclass(frozen=True)
class DyadicWeights:
    k: int
    weights: np.ndarray  # weights[j] belongs to the grid point j/2^k

    @property
    def total(self) -> float:
        return float(self.weights.sum())


def dyadic_weights(k: int) -> DyadicWeights:
    """``2^-index`` per grid point, clipped to the smallest positive double."""
    if not 0 <= k <= 14:
        raise InvalidInput("k must lie in 0..14")
    idx = np.array([dyadic_index(j, k) for j in range(1 << k)], dtype=float)
    w = np.maximum(np.exp2(-idx), TINY)
    return DyadicWeights(k, w)


def make_weighted_L_space(k: int) -> SpaceSpec:
    """Weighted-l1 space on the depth-k grid with halving weights along the enumeration."""
    return SpaceSpec.L(dyadic_weights(k).weights)


def residue_weights(k: int, m: int) -> np.ndarray:
    """Total weight of the grid coordinates in each residue class mod ``2^(k-m)``."""
    w = dyadic_weights(k).weights
    R = 1 << (k - m)
    return np.bincount(np.arange(1 << k) % R, weights=w, minlength=R)


def variational_contrast(k: int, m: int, j: int) -> tuple[float, float, np.ndarray]:
    """``(V_M, V_L, tag_pieces)`` on the uniform mesh-``2^-j`` partition.

    The tag of every cell is the same for both norms: preferably a piece of
    odd index whose residue does not occur in the cell.
    """
    if not 0 <= j <= k:
        raise InvalidInput("need 0 <= j <= k")
    CosetModel(k, m)
    return kernels.coset_contrast(k, m, j, residue_weights(k, m))


def contrast_table(pairs: Sequence[tuple[int, int]]) -> list[dict]:
    """Per ``(k, m)``: the smallest ``V_M`` and largest ``V_L`` over all meshes ``2^-j``."""
    rows = []
    for k, m in pairs:
        vm, vl = [], []
        for j in range(k + 1):
            a, b, _ = variational_contrast(k, m, j)
            vm.append(a)
            vl.append(b)
        rows.append({"k": k, "m": m, "V_M": min(vm), "V_L": max(vl), "integral_M": 2.0 ** (m - k),
                     "M_bound": 1 - 2.0 ** (m - k), "L_bound": 2.0 ** (m - k + 1)})
    return rows


# --------------------------------------------------------------------------
# random families


def random_step(rng: np.random.Generator, dim: int = 1, pieces: int | None = None, bits: int = 8,
                low: float = -1.0, high: float = 1.0, points: int = 0) -> StepFunction:
    """Step map with breakpoints on the ``2^-bits`` grid and uniform values."""
    n = 1 << bits
    pieces = pieces or int(rng.integers(1, 9))
    cuts = np.sort(rng.choice(np.arange(1, n), size=min(pieces - 1, n - 1), replace=False))
    br = [Fraction(0)] + [Fraction(int(c), n) for c in cuts] + [ONE]
    vals = rng.uniform(low, high, size=(len(br) - 1, dim))
    pts = {}
    for _ in range(points):
        pts[Fraction(int(rng.integers(0, n + 1)), n)] = rng.uniform(low, high, size=dim)
    return StepFunction(br, vals, pts)


def random_increasing_step(rng: np.random.Generator, dim: int = 3, pieces: int | None = None,
                           bits: int = 8) -> StepFunction:
    """Increasing step map into ``R^dim`` with dyadic breakpoints."""
    f = random_step(rng, dim, pieces, bits, 0.0, 1.0)
    vals = np.cumsum(np.abs(f.values), axis=0)
    return StepFunction(f.breaks, vals)


def random_piecewise_linear(rng: np.random.Generator, dim: int = 1, knots: int | None = None,
                            bits: int = 8) -> PiecewiseLinear:
    n = 1 << bits
    knots = knots or int(rng.integers(2, 8))
    cuts = np.sort(rng.choice(np.arange(1, n), size=knots - 2, replace=False)) if knots > 2 else []
    kn = [Fraction(0)] + [Fraction(int(c), n) for c in cuts] + [ONE]
    return PiecewiseLinear(kn, rng.uniform(-1, 1, size=(len(kn), dim)))


def random_step_gauge(rng: np.random.Generator, min_exp: int = 12, pieces: int | None = None,
                      bits: int = 10) -> Gauge:
    """Step gauge with values in ``[2^-min_exp, 1/2]`` on a dyadic grid."""
    n = 1 << bits
    pieces = pieces or int(rng.integers(1, 9))
    cuts = np.sort(rng.choice(np.arange(1, n), size=pieces - 1, replace=False))
    br = [Fraction(0)] + [Fraction(int(c), n) for c in cuts] + [ONE]
    vals = [Fraction(1, 1 << int(e)) for e in rng.integers(1, min_exp + 1, size=len(br) - 1)]
    vals[int(rng.integers(len(vals)))] = Fraction(1, 1 << min_exp)
    return Gauge(br, vals)


# --------------------------------------------------------------------------
# default corpus


def default_corpus() -> list[dict]:
    """Function entries (``id`` plus a JSON function description) for the comparison matrix."""
    return [
        {"id": "linear", "fn": {"family": "piecewise_linear", "knots": ["0", "1"], "values": [[0.0], [1.0]]}},
        {"id": "constant", "fn": {"family": "step", "breakpoints": ["0", "1"], "values": [[2.0, -1.0]]}},
        {"id": "jump", "fn": {"family": "step", "breakpoints": ["0", "1/2", "1"],
                              "values": [[1.0, -1.0], [-1.0, 1.0]]}},
        {"id": "centered", "fn": {"family": "piecewise_linear", "knots": ["0", "1"],
                                  "values": [[-0.5], [0.5]]}},
        {"id": "square", "fn": {"family": "polynomial", "coeffs": [[0, 1], [0, 0, 1]]}},
        {"id": "staircase", "fn": {"family": "monotone_grid",
                                   "values": [[0, 0, 0], [0.25, 0.5, 0.1], [0.5, 0.5, 0.7], [1, 1, 1]]}},
        {"id": "coset_6_2", "fn": {"family": "coset_model", "k": 6, "m": 2}},
    ]


def load_entry(entry: dict) -> tuple[str, IntegrandFn]:
    try:
        return str(entry["id"]), from_spec(entry["fn"])
    except (KeyError, TypeError) as exc:
        raise InvalidInput(f"bad corpus entry: {exc}") from None


def random_closed_set(rng: np.random.Generator, bits: int = 8, pieces: int | None = None) -> IntervalSet:
    """Finite union of closed dyadic intervals (some possibly single points)."""
    n = 1 << bits
    pieces = pieces or int(rng.integers(1, 5))
    ends = np.sort(rng.choice(np.arange(n + 1), size=2 * pieces, replace=False))
    out = IntervalSet.empty()
    for a, b in zip(ends[::2], ends[1::2]):
        if rng.random() < 0.1:
            b = a
        out = out | IntervalSet.interval(Fraction(int(a), n), Fraction(int(b), n), closed=True)
    return out


def random_gordon_instance(rng: np.random.Generator) -> tuple[StepFunction, IntervalSet, np.ndarray, Fraction]:
    """``(f, F, a, delta)`` whose hypothesis bound ``10 delta TV_F(f) <= a/5`` holds exactly."""
    from .order import variation_on

    f = random_step(rng, 1, points=int(rng.integers(0, 3)))
    F = random_closed_set(rng)
    a = rng.uniform(0.05, 1.0, size=1)
    tv = float(variation_on(f, F)[0])
    e = int(rng.integers(4, 12))
    delta = Fraction(1, 1 << e)
    if tv > 0:
        # largest dyadic delta with 10 delta tv <= a/5, then shrink at random
        cap = float(a[0]) / (50 * tv)
        e = max(e, math.ceil(-math.log2(cap)))
        delta = Fraction(1, 1 << e)
        while 10 * float(delta) * tv > float(a[0]) / 5:
            delta /= 2
    return f, F, a, delta
