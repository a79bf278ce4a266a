"""Integrands ``[0, 1] -> R^d``.

Every class evaluates vectorized over float tags.  Step, piecewise-linear,
polynomial and coset-model integrands carry a closed-form antiderivative, so
their integrals over any finite interval union are available exactly up to
float rounding.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from . import kernels
from .errors import InvalidInput, Unsupported
from .sets_measure import ONE, ZERO, IntervalSet, fraction_str, to_fraction

CLASS_TAGS = ("step", "piecewise-linear", "monotone", "coset-model", "custom")


class IntegrandFn:
    """Base class.  Subclasses set ``dim`` and ``kind`` and implement ``evaluate``."""

    dim: int
    kind: str = "custom"
    closed_form: bool = False
    name: str = ""

    def evaluate(self, ts) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, t) -> np.ndarray:
        return self.evaluate(np.array([float(t)]))[0]

    def riemann(self, tags: np.ndarray, masses: np.ndarray) -> np.ndarray:
        """``sum_i f(tags_i) * masses_i``."""
        if len(tags) == 0:
            return np.zeros(self.dim)
        return np.asarray(masses, dtype=float) @ self.evaluate(tags)

    def riemann_int(self, tags: np.ndarray, mass_num: Sequence[int], den: int) -> np.ndarray:
        """Riemann sum with masses ``mass_num / den`` given as integers."""
        return self.riemann(tags, np.asarray([m / den for m in mass_num], dtype=float))

    def antiderivative(self, xs) -> np.ndarray:
        raise Unsupported(f"{type(self).__name__} has no closed-form integral")

    def integral(self, a=0.0, b=1.0) -> np.ndarray:
        F = self.antiderivative(np.array([float(a), float(b)]))
        return F[1] - F[0]

    def integral_over(self, E: IntervalSet) -> np.ndarray:
        if not E.intervals:
            return np.zeros(self.dim)
        lo = np.array([float(a) for a, _ in E.intervals])
        hi = np.array([float(b) for _, b in E.intervals])
        return (self.antiderivative(hi) - self.antiderivative(lo)).sum(axis=0)

    def modulus(self) -> "IntegrandFn":
        return CallableFunction(lambda ts, f=self: np.abs(f.evaluate(ts)), self.dim, "custom",
                                name=f"|{self.name}|")

    def bound(self, grid: int = 4097) -> np.ndarray:
        """Componentwise bound ``M >= |f|`` (exact for closed-form classes)."""
        return np.abs(self.evaluate(np.linspace(0, 1, grid))).max(axis=0)

    def is_increasing(self, grid: int = 1025, atol: float = 1e-12) -> bool:
        v = self.evaluate(np.linspace(0, 1, grid))
        return bool(np.all(np.diff(v, axis=0) >= -atol))

    def breakpoints(self) -> list[Fraction]:
        return []

    def to_spec(self) -> dict:
        raise Unsupported(f"{type(self).__name__} is not serializable")

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.name or self.kind}, dim={self.dim})"


def _values(values, rows: int | None = None) -> np.ndarray:
    v = np.asarray(values, dtype=float)
    if v.ndim == 1:
        v = v[:, None]
    if v.ndim != 2 or not np.all(np.isfinite(v)):
        raise InvalidInput("values must be a finite 2-d array")
    if rows is not None and v.shape[0] != rows:
        raise InvalidInput(f"expected {rows} value rows, got {v.shape[0]}")
    return v


class StepFunction(IntegrandFn):
    """``values[i]`` on ``[breaks[i], breaks[i+1])`` (last piece closed), with point overrides."""

    kind = "step"
    closed_form = True

    def __init__(self, breaks: Sequence, values, points: dict | None = None, name: str = ""):
        br = [to_fraction(x) for x in breaks]
        if len(br) < 2 or br[0] != ZERO or br[-1] != ONE or any(a >= b for a, b in zip(br, br[1:])):
            raise InvalidInput("step breakpoints must increase strictly from 0 to 1")
        self.breaks = tuple(br)
        self.values = _values(values, len(br) - 1)
        self.values.setflags(write=False)
        self.dim = self.values.shape[1]
        self.points = {to_fraction(p): np.asarray(v, dtype=float).reshape(self.dim)
                       for p, v in (points or {}).items()}
        self._bf = np.array([float(x) for x in br])
        lengths = np.diff(self._bf)
        self._cum = np.concatenate([np.zeros((1, self.dim)), np.cumsum(lengths[:, None] * self.values, axis=0)])
        self.name = name

    def piece_of(self, t: Fraction) -> int:
        t = to_fraction(t)
        i = int(kernels.piece_index(self._bf, np.array([float(t)]))[0])
        while i > 0 and t < self.breaks[i]:
            i -= 1
        while i < len(self.values) - 1 and t >= self.breaks[i + 1]:
            i += 1
        return i

    def __call__(self, t) -> np.ndarray:
        t = to_fraction(t)
        if t in self.points:
            return self.points[t].copy()
        return self.values[self.piece_of(t)].copy()

    def evaluate(self, ts) -> np.ndarray:
        ts = np.asarray(ts, dtype=float)
        out = self.values[kernels.piece_index(self._bf, ts)]
        if self.points:
            out = out.copy()
            for p, v in self.points.items():
                out[ts == float(p)] = v
        return out

    def _override_split(self, tags, masses):
        if not self.points:
            return tags, masses, np.zeros(self.dim)
        extra = np.zeros(self.dim)
        keep = np.ones(len(tags), bool)
        for p, v in self.points.items():
            hit = tags == float(p)
            if np.any(hit):
                extra = extra + v * np.sum(np.asarray(masses, dtype=float)[hit])
                keep &= ~hit
        return tags[keep], np.asarray(masses)[keep], extra

    def riemann(self, tags, masses) -> np.ndarray:
        tags = np.asarray(tags, dtype=float)
        tags, masses, extra = self._override_split(tags, masses)
        pm = kernels.piece_masses(self._bf, tags, np.asarray(masses, dtype=float))
        return pm @ self.values + extra

    def riemann_int(self, tags, mass_num, den) -> np.ndarray:
        mass_num = np.asarray(mass_num, dtype=object)
        if den >= 1 << 62 or (len(mass_num) and max(mass_num) >= 1 << 62):
            return super().riemann_int(tags, mass_num, den)
        tags = np.asarray(tags, dtype=float)
        mass_num = mass_num.astype(np.int64)
        tags, mass_num, extra_num = self._override_split(tags, mass_num)
        pm = kernels.piece_masses_int(self._bf, tags, np.asarray(mass_num, dtype=np.int64))
        # exact per-piece masses; one rounding per piece
        return np.array([float(Fraction(int(m), den)) for m in pm]) @ self.values + extra_num / den

    def antiderivative(self, xs) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        i = kernels.piece_index(self._bf, xs)
        return self._cum[i] + (xs - self._bf[i])[:, None] * self.values[i]

    def modulus(self) -> "StepFunction":
        return StepFunction(self.breaks, np.abs(self.values),
                            {p: np.abs(v) for p, v in self.points.items()}, name=f"|{self.name}|")

    def bound(self, grid: int = 0) -> np.ndarray:
        rows = [np.abs(self.values).max(axis=0)] + [np.abs(v) for v in self.points.values()]
        return np.max(rows, axis=0)

    def is_increasing(self, grid: int = 0, atol: float = 0.0) -> bool:
        if self.points:
            return super().is_increasing()
        return bool(np.all(np.diff(self.values, axis=0) >= -atol))

    def total_variation(self) -> np.ndarray:
        tv = np.abs(np.diff(self.values, axis=0)).sum(axis=0)
        for p, v in self.points.items():
            tv = tv + 2 * np.abs(v - self.values[self.piece_of(p)])
        return tv

    def breakpoints(self) -> list[Fraction]:
        return sorted(set(self.breaks) | set(self.points))

    def with_points(self, points: dict) -> "StepFunction":
        pts = dict(self.points)
        pts.update({to_fraction(p): v for p, v in points.items()})
        return StepFunction(self.breaks, self.values, pts, name=self.name)

    def to_spec(self) -> dict:
        d = {"family": "step", "breakpoints": [fraction_str(x) for x in self.breaks],
             "values": self.values.tolist()}
        if self.points:
            d["points"] = [[fraction_str(p), v.tolist()] for p, v in sorted(self.points.items())]
        return d


class PiecewiseLinear(IntegrandFn):
    """Continuous, linear between consecutive ``knots``."""

    kind = "piecewise-linear"
    closed_form = True

    def __init__(self, knots: Sequence, values, name: str = ""):
        kn = [to_fraction(x) for x in knots]
        if len(kn) < 2 or kn[0] != ZERO or kn[-1] != ONE or any(a >= b for a, b in zip(kn, kn[1:])):
            raise InvalidInput("knots must increase strictly from 0 to 1")
        self.knots = tuple(kn)
        self.values = _values(values, len(kn))
        self.values.setflags(write=False)
        self.dim = self.values.shape[1]
        self._kf = np.array([float(x) for x in kn])
        h = np.diff(self._kf)[:, None]
        self._slopes = np.diff(self.values, axis=0) / h
        seg = h * (self.values[:-1] + self.values[1:]) / 2
        self._cum = np.concatenate([np.zeros((1, self.dim)), np.cumsum(seg, axis=0)])
        self.name = name

    def evaluate(self, ts) -> np.ndarray:
        ts = np.asarray(ts, dtype=float)
        i = kernels.piece_index(self._kf, ts)
        return self.values[i] + (ts - self._kf[i])[:, None] * self._slopes[i]

    def antiderivative(self, xs) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        i = kernels.piece_index(self._kf, xs)
        d = (xs - self._kf[i])[:, None]
        return self._cum[i] + d * self.values[i] + 0.5 * d * d * self._slopes[i]

    def lipschitz(self) -> np.ndarray:
        return np.abs(self._slopes).max(axis=0)

    def total_variation(self) -> np.ndarray:
        return np.abs(np.diff(self.values, axis=0)).sum(axis=0)

    def modulus(self) -> "PiecewiseLinear":
        knots = set(self.knots)
        for i in range(len(self.knots) - 1):
            a, b = self.values[i], self.values[i + 1]
            for c in range(self.dim):
                if a[c] * b[c] < 0:
                    frac = a[c] / (a[c] - b[c])
                    x = self._kf[i] + frac * (self._kf[i + 1] - self._kf[i])
                    fx = Fraction(x)
                    if self.knots[i] < fx < self.knots[i + 1]:
                        knots.add(fx)
        kn = sorted(knots)
        vals = self.evaluate(np.array([float(x) for x in kn]))
        # crossing knots are zeros of one component; snap the rounding residue
        for j, x in enumerate(kn):
            if x not in self.knots:
                vals[j][np.abs(vals[j]) < 1e-12] = 0.0
        return PiecewiseLinear(kn, np.abs(vals), name=f"|{self.name}|")

    def bound(self, grid: int = 0) -> np.ndarray:
        return np.abs(self.values).max(axis=0)

    def is_increasing(self, grid: int = 0, atol: float = 0.0) -> bool:
        return bool(np.all(np.diff(self.values, axis=0) >= -atol))

    def breakpoints(self) -> list[Fraction]:
        return list(self.knots)

    def to_spec(self) -> dict:
        return {"family": "piecewise_linear", "knots": [fraction_str(x) for x in self.knots],
                "values": self.values.tolist()}


class Polynomial(IntegrandFn):
    """Componentwise polynomial; ``coeffs[c][i]`` multiplies ``t**i``."""

    closed_form = True

    def __init__(self, coeffs: Sequence[Sequence[float]], name: str = ""):
        rows = [list(map(float, c)) for c in coeffs]
        if not rows:
            raise InvalidInput("need at least one component")
        deg = max(len(r) for r in rows)
        self.coeffs = np.array([r + [0.0] * (deg - len(r)) for r in rows])
        self.dim = len(rows)
        self.name = name
        self.kind = "monotone" if self.is_increasing() else "custom"

    def evaluate(self, ts) -> np.ndarray:
        ts = np.asarray(ts, dtype=float)
        powers = ts[:, None] ** np.arange(self.coeffs.shape[1])[None, :]
        return powers @ self.coeffs.T

    def antiderivative(self, xs) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        deg = self.coeffs.shape[1]
        powers = xs[:, None] ** np.arange(1, deg + 1)[None, :]
        return powers @ (self.coeffs / np.arange(1, deg + 1)).T

    def lipschitz(self) -> np.ndarray:
        """Bound on ``|f'|`` over [0, 1]: ``sum_i i |c_i|``."""
        return (np.abs(self.coeffs) * np.arange(self.coeffs.shape[1])).sum(axis=1)

    def to_spec(self) -> dict:
        return {"family": "polynomial", "coeffs": self.coeffs.tolist()}


class CosetModel(IntegrandFn):
    """Finite analog of Phillips' function on the depth-k dyadic grid.

    Coordinates are the grid points ``s = j/2^k``; ``f(t)(s) = 1`` iff
    ``floor(t 2^k)/2^k - s`` lies (mod 1) in the subgroup generated by ``2^-m``,
    i.e. iff the piece index of ``t`` and ``j`` agree modulo ``2^(k-m)``.
    """

    kind = "coset-model"
    closed_form = True

    def __init__(self, k: int, m: int):
        if not (isinstance(k, (int, np.integer)) and isinstance(m, (int, np.integer)) and 0 <= m < k <= 14):
            raise InvalidInput("coset model needs 0 <= m < k <= 14")
        self.k, self.m = int(k), int(m)
        self.n = 1 << self.k
        self.R = 1 << (self.k - self.m)
        self.dim = self.n
        self.name = f"coset({k},{m})"
        self._res = np.arange(self.n) % self.R

    def piece(self, ts) -> np.ndarray:
        return np.clip(np.floor(np.asarray(ts, dtype=float) * self.n).astype(np.int64), 0, self.n - 1)

    def evaluate(self, ts) -> np.ndarray:
        p = self.piece(ts)
        return ((p[:, None] % self.R) == self._res[None, :]).astype(float)

    def residue_masses(self, tags, masses) -> np.ndarray:
        p = self.piece(tags)
        return np.bincount(p % self.R, weights=np.asarray(masses, dtype=float), minlength=self.R)

    def riemann(self, tags, masses) -> np.ndarray:
        return self.residue_masses(tags, masses)[self._res]

    def antiderivative(self, xs) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        P = np.clip(np.floor(xs * self.n).astype(np.int64), 0, self.n)
        r = np.arange(self.R)
        counts = np.maximum(0, (P[:, None] - r[None, :] + self.R - 1) // self.R)
        out = counts[:, self._res] / self.n
        partial = xs - P / self.n
        inside = P < self.n
        rows = np.flatnonzero(inside)
        out[rows] += partial[rows, None] * ((P[rows, None] % self.R) == self._res[None, :])
        return out

    def modulus(self) -> "CosetModel":
        return self

    def bound(self, grid: int = 0) -> np.ndarray:
        return np.ones(self.dim)

    def is_increasing(self, grid: int = 0, atol: float = 0.0) -> bool:
        return False

    def breakpoints(self) -> list[Fraction]:
        return [Fraction(i, self.n) for i in range(self.n + 1)]

    def total_variation(self) -> np.ndarray:
        # residue r marks 2^m isolated pieces; the first and last piece lose one jump each
        r = self._res
        return 2.0 * (1 << self.m) - (r == 0) - (r == self.R - 1)

    def as_step(self) -> StepFunction:
        br = self.breakpoints()
        return StepFunction(br, self.evaluate((np.arange(self.n) + 0.5) / self.n), name=self.name)

    def to_spec(self) -> dict:
        return {"family": "coset_model", "k": self.k, "m": self.m}


class CallableFunction(IntegrandFn):
    """Wraps a vectorized callable ``ts -> (len(ts), dim)``."""

    def __init__(self, fn: Callable[[np.ndarray], np.ndarray], dim: int, kind: str = "custom", name: str = ""):
        if kind not in CLASS_TAGS:
            raise InvalidInput(f"unknown class tag {kind!r}")
        self.fn = fn
        self.dim = int(dim)
        self.kind = kind
        self.name = name

    def evaluate(self, ts) -> np.ndarray:
        ts = np.asarray(ts, dtype=float)
        out = np.asarray(self.fn(ts), dtype=float)
        if out.ndim == 1:
            out = out[:, None]
        return out.reshape(len(ts), self.dim)


class Affine(IntegrandFn):
    """``scale * f + shift``; closed form whenever ``f`` has one."""

    def __init__(self, inner: IntegrandFn, scale: float = 1.0, shift=None):
        self.inner = inner
        self.scale = float(scale)
        self.dim = inner.dim
        self.shift = np.zeros(self.dim) if shift is None else np.asarray(shift, dtype=float).reshape(self.dim)
        self.closed_form = inner.closed_form
        self.kind = inner.kind if inner.kind != "monotone" or self.scale >= 0 else "custom"
        self.name = f"{self.scale:g}*{inner.name}+c"

    def evaluate(self, ts) -> np.ndarray:
        return self.scale * self.inner.evaluate(ts) + self.shift

    def riemann(self, tags, masses) -> np.ndarray:
        return self.scale * self.inner.riemann(tags, masses) + self.shift * float(np.sum(masses))

    def antiderivative(self, xs) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        return self.scale * self.inner.antiderivative(xs) + xs[:, None] * self.shift[None, :]

    def breakpoints(self) -> list[Fraction]:
        return self.inner.breakpoints()

    def to_spec(self) -> dict:
        return {"family": "scaled", "scale": self.scale, "shift": self.shift.tolist(), "inner": self.inner.to_spec()}


def affine(f: IntegrandFn, scale: float = 1.0, shift=None) -> IntegrandFn:
    """``scale*f + shift``, staying inside the step / piecewise-linear classes when possible."""
    shift = np.zeros(f.dim) if shift is None else np.asarray(shift, dtype=float).reshape(f.dim)
    if isinstance(f, StepFunction):
        return StepFunction(f.breaks, scale * f.values + shift,
                            {p: scale * v + shift for p, v in f.points.items()}, name=f.name)
    if isinstance(f, PiecewiseLinear):
        return PiecewiseLinear(f.knots, scale * f.values + shift, name=f.name)
    return Affine(f, scale, shift)


class Restricted(IntegrandFn):
    """``f * 1_A`` for an interval set ``A``."""

    def __init__(self, inner: IntegrandFn, A: IntervalSet):
        self.inner = inner
        self.A = A
        self.dim = inner.dim
        self.name = f"{inner.name}·1_A"
        self._lo = np.array([float(a) for a, _ in A.intervals])
        self._hi = np.array([float(b) for _, b in A.intervals])
        self._add = np.array([float(p) for p in A.added])
        self._rm = np.array([float(p) for p in A.removed])
        self.closed_form = inner.closed_form

    def indicator(self, ts) -> np.ndarray:
        ts = np.asarray(ts, dtype=float)
        inside = np.zeros(ts.shape, bool)
        if self._lo.size:
            i = np.searchsorted(self._lo, ts, side="right") - 1
            ok = i >= 0
            inside[ok] = ts[ok] < self._hi[i[ok]]
        if self._rm.size:
            inside &= ~np.isin(ts, self._rm)
        if self._add.size:
            inside |= np.isin(ts, self._add)
        return inside

    def evaluate(self, ts) -> np.ndarray:
        return self.inner.evaluate(ts) * self.indicator(ts)[:, None]

    def antiderivative(self, xs) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        out = np.zeros((len(xs), self.dim))
        for a, b in zip(self._lo, self._hi):
            lo = np.minimum(np.maximum(xs, a), b)
            out += self.inner.antiderivative(lo) - self.inner.antiderivative(np.full_like(xs, a))
        return out


# --------------------------------------------------------------------------
# FunctionSpec (JSON) round trip


def from_spec(d: dict) -> IntegrandFn:
    """Build an integrand from its JSON description."""
    try:
        fam = d["family"]
        if fam == "step":
            pts = {p: v for p, v in d.get("points", [])}
            return StepFunction(d["breakpoints"], d["values"], pts, name=d.get("name", ""))
        if fam == "piecewise_linear":
            return PiecewiseLinear(d["knots"], d["values"], name=d.get("name", ""))
        if fam == "monotone_grid":
            vals = _values(d["values"])
            n = vals.shape[0]
            f = StepFunction([Fraction(i, n) for i in range(n + 1)], vals, name=d.get("name", ""))
            if not f.is_increasing():
                raise InvalidInput("monotone_grid values must be increasing")
            return f
        if fam == "polynomial":
            return Polynomial(d["coeffs"], name=d.get("name", ""))
        if fam == "coset_model":
            return CosetModel(int(d["k"]), int(d["m"]))
        if fam == "scaled":
            return affine(from_spec(d["inner"]), float(d.get("scale", 1.0)), d.get("shift"))
    except KeyError as exc:
        raise InvalidInput(f"function spec missing field {exc}") from None
    raise InvalidInput(f"unknown function family {d.get('family')!r}")


def to_spec(f: IntegrandFn) -> dict:
    return f.to_spec()


# common corpus members


def linear(dim: int = 1) -> PiecewiseLinear:
    """``f(t) = t`` in every coordinate."""
    return PiecewiseLinear([0, 1], [[0.0] * dim, [1.0] * dim], name="t")


def constant(c) -> StepFunction:
    c = np.atleast_1d(np.asarray(c, dtype=float))
    return StepFunction([0, 1], [c], name="const")


def sign_step(vec_left, vec_right, at="1/2") -> StepFunction:
    return StepFunction([0, at, 1], [vec_left, vec_right], name="jump")
