"""Gauges, tagged partitions, fineness, Cousin bisection and partition sampling.

Two storage forms coexist for :class:`TaggedPartition`:

* a general form, a list of ``(IntervalSet, tag)`` pairs, able to hold the
  point-adjusted sets produced by :func:`free_to_perron`;
* an array form for interval partitions of a segment, with integer endpoint
  and tag numerators over one common denominator.  Samplers produce this form
  because partitions with 10^5 pieces are routine at fine gauge levels.

Both expose :meth:`TaggedPartition.flat` (float arrays for Riemann sums) and
exact rational measures.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidInput, PreconditionViolation, Unsupported
from .sets_measure import ONE, ZERO, IntervalSet, fraction_str, to_fraction

KINDS = ("perron", "free")
_BORDER = 1e-12
_MAX_DEN = 1 << 52
_BATCH_PIECES = 1 << 18


class Gauge:
    """Strictly positive step function on [0, 1].

    Piece ``i`` is ``[breaks[i], breaks[i+1])``; the last piece also holds 1.
    ``points`` overrides the value at finitely many points.
    """

    def __init__(self, breaks: Sequence, values: Sequence, points: dict | None = None):
        br = tuple(to_fraction(x) for x in breaks)
        vals = tuple(to_fraction(v) for v in values)
        if len(br) < 2 or br[0] != ZERO or br[-1] != ONE:
            raise InvalidInput("gauge breakpoints must run from 0 to 1")
        if any(br[i] >= br[i + 1] for i in range(len(br) - 1)):
            raise InvalidInput("gauge breakpoints must be strictly increasing")
        if len(vals) != len(br) - 1:
            raise InvalidInput("one gauge value per piece required")
        pts = {to_fraction(p): to_fraction(v) for p, v in (points or {}).items()}
        if any(v <= 0 for v in vals) or any(v <= 0 for v in pts.values()):
            raise InvalidInput("gauge values must be strictly positive")
        if any(not ZERO <= p <= ONE for p in pts):
            raise InvalidInput("gauge override points must lie in [0, 1]")
        self.breaks = br
        self.values = vals
        self.points = pts
        self._bf = np.array([float(x) for x in br])
        self._vf = np.array([float(v) for v in vals])

    @classmethod
    def constant(cls, c) -> "Gauge":
        return cls((0, 1), (c,))

    @classmethod
    def from_pieces(cls, pieces: Iterable[tuple], points: dict | None = None) -> "Gauge":
        pieces = sorted((to_fraction(a), to_fraction(b), to_fraction(v)) for a, b, v in pieces)
        breaks = [pieces[0][0]] + [b for _, b, _ in pieces]
        for (a0, b0, _), (a1, _, _) in zip(pieces, pieces[1:]):
            if b0 != a1:
                raise InvalidInput("gauge pieces must tile [0, 1]")
        return cls(breaks, [v for _, _, v in pieces], points)

    @property
    def measurable(self) -> bool:
        # step functions are Borel measurable
        return True

    def piece_index(self, t: Fraction) -> int:
        i = int(np.searchsorted(self._bf, float(t), side="right")) - 1
        # float search may be off by one next to non-dyadic breakpoints
        while i > 0 and t < self.breaks[i]:
            i -= 1
        while i < len(self.values) - 1 and t >= self.breaks[i + 1]:
            i += 1
        return min(max(i, 0), len(self.values) - 1)

    def __call__(self, t) -> Fraction:
        t = to_fraction(t)
        if t in self.points:
            return self.points[t]
        return self.values[self.piece_index(t)]

    @property
    def delta_min(self) -> Fraction:
        return min(list(self.values) + list(self.points.values()))

    @property
    def delta_max(self) -> Fraction:
        return max(list(self.values) + list(self.points.values()))

    def evaluate_num(self, num: np.ndarray, den: int) -> tuple[np.ndarray, np.ndarray]:
        """Gauge at ``num/den``: float values and a mask of exactly-resolved entries.

        Entries whose float piece lookup might be wrong (within rounding of a
        breakpoint) are flagged ``False`` so callers can fall back to exact
        arithmetic.
        """
        t = num / den
        idx = np.clip(np.searchsorted(self._bf, t, side="right") - 1, 0, len(self._vf) - 1)
        vals = self._vf[idx]
        near = (np.abs(t - self._bf[idx]) <= _BORDER) | (np.abs(self._bf[idx + 1] - t) <= _BORDER)
        exact = ~near
        for p, v in self.points.items():
            if den * p.denominator < (1 << 62):
                hit = num * p.denominator == p.numerator * den
            else:
                hit = np.array([Fraction(int(x), den) == p for x in num], dtype=bool)
            vals = np.where(hit, float(v), vals)
        return vals, exact

    def minimum(self, other: "Gauge") -> "Gauge":
        br = sorted(set(self.breaks) | set(other.breaks))
        vals = [min(self(a), other(a)) if a not in self.points and a not in other.points
                else min(self.values[self.piece_index(a)], other.values[other.piece_index(a)])
                for a in br[:-1]]
        pts = {}
        for p in set(self.points) | set(other.points):
            pts[p] = min(self(p), other(p))
        return Gauge(br, vals, pts)

    def with_points(self, points: dict) -> "Gauge":
        pts = dict(self.points)
        pts.update({to_fraction(p): to_fraction(v) for p, v in points.items()})
        return Gauge(self.breaks, self.values, pts)

    def boundaries_in(self, a: Fraction, b: Fraction) -> list[Fraction]:
        inner = [x for x in self.breaks if a <= x <= b]
        inner += [p for p in self.points if a <= p <= b]
        return sorted(set(inner))

    def to_dict(self) -> dict:
        return {
            "pieces": [
                [fraction_str(self.breaks[i]), fraction_str(self.breaks[i + 1]), fraction_str(v)]
                for i, v in enumerate(self.values)
            ],
            "points": [[fraction_str(p), fraction_str(v)] for p, v in sorted(self.points.items())],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Gauge":
        if "constant" in d:
            return cls.constant(d["constant"])
        return cls.from_pieces(d["pieces"], {p: v for p, v in d.get("points", [])})

    def __eq__(self, other) -> bool:
        return (isinstance(other, Gauge) and self.breaks == other.breaks
                and self.values == other.values and self.points == other.points)

    def __repr__(self) -> str:
        if len(self.values) == 1 and not self.points:
            return f"Gauge(≡{fraction_str(self.values[0])})"
        return f"Gauge({len(self.values)} pieces, {len(self.points)} points)"


@dataclass(frozen=True)
class Flat:
    """Float view of a partition: one row per elementary interval."""

    lo: np.ndarray
    hi: np.ndarray
    owner: np.ndarray
    tags: np.ndarray
    weights: np.ndarray
    point_owner: np.ndarray
    point_pos: np.ndarray


class TaggedPartition:
    """Finite family of tagged sets covering [0, 1] (or a segment) up to null sets."""

    def __init__(self, pairs: Iterable[tuple[IntervalSet, object]], kind: str = "perron"):
        if kind not in KINDS:
            raise InvalidInput(f"unknown partition kind {kind!r}")
        pairs = [(E, to_fraction(t)) for E, t in pairs]
        self.kind = kind
        self._pairs = tuple(pairs)
        self._arr = None

    @classmethod
    def from_arrays(cls, edges: np.ndarray, den: int, tags: np.ndarray,
                    closed: np.ndarray | None = None, kind: str = "perron") -> "TaggedPartition":
        """Interval partition with endpoints ``edges/den`` and tags ``tags/den``.

        ``closed[i]`` marks piece ``i`` as ``[a, b]`` rather than ``[a, b)``.
        """
        if kind not in KINDS:
            raise InvalidInput(f"unknown partition kind {kind!r}")
        edges = np.asarray(edges, dtype=np.int64)
        tags = np.asarray(tags, dtype=np.int64)
        if edges.ndim != 1 or tags.shape != (edges.shape[0] - 1,):
            raise InvalidInput("need len(tags) == len(edges) - 1")
        if np.any(np.diff(edges) <= 0):
            raise InvalidInput("edges must be strictly increasing")
        closed = np.zeros(tags.shape, bool) if closed is None else np.asarray(closed, bool)
        obj = cls.__new__(cls)
        obj.kind = kind
        obj._pairs = None
        obj._arr = (edges, int(den), tags, closed)
        return obj

    # -- views ----------------------------------------------------------

    @property
    def is_array_form(self) -> bool:
        return self._arr is not None

    @cached_property
    def pairs(self) -> tuple[tuple[IntervalSet, Fraction], ...]:
        if self._pairs is not None:
            return self._pairs
        edges, den, tags, closed = self._arr
        out = []
        for i in range(len(tags)):
            a, b = Fraction(int(edges[i]), den), Fraction(int(edges[i + 1]), den)
            out.append((IntervalSet._trusted(((a, b),), {b} if closed[i] else ()), Fraction(int(tags[i]), den)))
        return tuple(out)

    def __len__(self) -> int:
        return len(self._arr[2]) if self._arr is not None else len(self._pairs)

    @property
    def sets(self) -> list[IntervalSet]:
        return [E for E, _ in self.pairs]

    @cached_property
    def tags(self) -> tuple[Fraction, ...]:
        if self._arr is not None:
            _, den, tags, _ = self._arr
            return tuple(Fraction(int(t), den) for t in tags)
        return tuple(t for _, t in self._pairs)

    def measures(self) -> list[Fraction]:
        if self._arr is not None:
            edges, den, _, _ = self._arr
            return [Fraction(int(d), den) for d in np.diff(edges)]
        return [E.measure() for E, _ in self._pairs]

    @cached_property
    def flat(self) -> Flat:
        if self._arr is not None:
            edges, den, tags, _ = self._arr
            lo = edges[:-1] / den
            hi = edges[1:] / den
            n = len(tags)
            return Flat(lo, hi, np.arange(n), tags / den, np.diff(edges) / den,
                        np.zeros(0, int), np.zeros(0))
        lo, hi, owner, ppos, pown = [], [], [], [], []
        for i, (E, _) in enumerate(self._pairs):
            for a, b in E.intervals:
                lo.append(float(a))
                hi.append(float(b))
                owner.append(i)
            for p in E.added:
                ppos.append(float(p))
                pown.append(i)
        return Flat(np.array(lo), np.array(hi), np.array(owner, dtype=int),
                    np.array([float(t) for t in self.tags]),
                    np.array([float(m) for m in self.measures()]),
                    np.array(pown, dtype=int), np.array(ppos))

    def mass_numerators(self) -> tuple[list[int], int]:
        """Exact measures as integer numerators over a common denominator."""
        ms = self.measures()
        den = 1
        for m in ms:
            den = den * m.denominator // math.gcd(den, m.denominator)
        return [m.numerator * (den // m.denominator) for m in ms], den

    def segment(self) -> tuple[Fraction, Fraction]:
        if self._arr is not None:
            edges, den, _, _ = self._arr
            return Fraction(int(edges[0]), den), Fraction(int(edges[-1]), den)
        hulls = [E.hull() for E, _ in self._pairs if not E.is_empty()]
        return min(h[0] for h in hulls), max(h[1] for h in hulls)

    # -- checks -----------------------------------------------------------

    def overlap_null(self) -> bool:
        """All pairwise intersections have measure zero (exact)."""
        if self._arr is not None:
            return True  # strictly increasing edges
        segs = sorted((a, b) for E, _ in self._pairs for a, b in E.intervals)
        return all(segs[i][0] >= segs[i - 1][1] for i in range(1, len(segs)))

    def covers(self, lo=ZERO, hi=ONE) -> bool:
        """Union equals ``[lo, hi]`` up to a null set (exact)."""
        lo, hi = to_fraction(lo), to_fraction(hi)
        if not self.overlap_null():
            return False
        total = sum(self.measures(), ZERO)
        inside = all(lo <= a and b <= hi for E, _ in self.pairs for a, b in E.intervals)
        return inside and total == hi - lo

    def is_perron(self) -> bool:
        if self._arr is not None:
            edges, _, tags, closed = self._arr
            return bool(np.all((tags >= edges[:-1]) & ((tags < edges[1:]) | (closed & (tags == edges[1:])))))
        return all(E.contains(t) for E, t in self._pairs)

    def validate(self, lo=ZERO, hi=ONE) -> None:
        if not self.covers(lo, hi):
            raise InvalidInput("pairs do not form a partition")
        if self.kind == "perron" and not self.is_perron():
            raise InvalidInput("perron partition with a tag outside its set")

    def with_tags(self, tags: Sequence, kind: str | None = None) -> "TaggedPartition":
        """Same sets, new tags (array form keeps the denominator of ``tags``)."""
        kind = kind or self.kind
        if self._arr is not None and isinstance(tags, np.ndarray):
            edges, den, _, closed = self._arr
            return TaggedPartition.from_arrays(edges, den, tags, closed, kind)
        return TaggedPartition(zip(self.sets, tags), kind)

    def canonical(self) -> tuple:
        return tuple(sorted(((E._key(), t) for E, t in self.pairs)))

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "pairs": [{"set": E.to_dict(), "tag": fraction_str(t)} for E, t in self.pairs],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TaggedPartition":
        return cls(((IntervalSet.from_dict(p["set"]), p["tag"]) for p in d["pairs"]), d.get("kind", "perron"))

    def __repr__(self) -> str:
        return f"TaggedPartition({self.kind}, {len(self)} pieces)"


# --------------------------------------------------------------------------
# fineness


def _fine_exact(a: Fraction, b: Fraction, t: Fraction, g: Fraction, closed: bool) -> bool:
    right = b - t < g if closed else b - t <= g
    return t - a < g and right


def is_fine(P: TaggedPartition, g: Gauge) -> bool:
    """Every set lies within distance ``g(tag)`` of its tag (exact)."""
    return bool(np.all(fine_mask(P, g)))


def fine_mask(P: TaggedPartition, g: Gauge) -> np.ndarray:
    """Per-pair fineness verdicts."""
    if P._arr is not None:
        edges, den, tags, closed = P._arr
        return _fine_mask_arrays(edges[:-1], edges[1:], tags, closed, den, g)
    out = np.ones(len(P), bool)
    for i, (E, t) in enumerate(P.pairs):
        gt = g(t)
        ok = all(_fine_exact(a, b, t, gt, False) for a, b in E.intervals)
        ok = ok and all(abs(p - t) < gt for p in E.added)
        out[i] = ok
    return out


def _fine_mask_arrays(a, b, t, closed, den, g: Gauge) -> np.ndarray:
    gv, exact = g.evaluate_num(t, den)
    left = (t - a) / den
    right = (b - t) / den
    ok = (left < gv) & np.where(closed, right < gv, right <= gv)
    scale = np.maximum(gv, 1e-300)
    border = (np.abs(left - gv) <= _BORDER * scale) | (np.abs(right - gv) <= _BORDER * scale) | ~exact
    for i in np.flatnonzero(border):
        ti = Fraction(int(t[i]), den)
        ok[i] = _fine_exact(Fraction(int(a[i]), den), Fraction(int(b[i]), den), ti, g(ti), bool(closed[i]))
    return ok


# --------------------------------------------------------------------------
# Cousin's lemma by bisection


def cousin(g: Gauge, lo=ZERO, hi=ONE, closed_right: bool = True) -> TaggedPartition:
    """A g-fine Perron interval partition of ``[lo, hi]``.

    Intervals are bisected until some candidate tag (midpoint, endpoints, gauge
    boundaries, in that order) works; any interval shorter than the minimal gauge
    value is accepted with its midpoint.
    """
    lo, hi = to_fraction(lo), to_fraction(hi)
    if lo >= hi:
        raise InvalidInput("empty segment")
    if g.delta_min <= 0:
        raise InvalidInput("gauge must be strictly positive")
    if len(g.values) == 1 and not g.points:
        # constant gauge: the midpoint test succeeds at one uniform depth
        c, j = g.values[0], 0
        while (hi - lo) / (2 << j) >= c:
            j += 1
        n = 1 << j
        den = lo.denominator * hi.denominator * 2 * n
        if den < _MAX_DEN:
            step = (hi - lo) / n
            base = lo * den
            edges = np.array([int(base + step * i * den) for i in range(n + 1)], dtype=np.int64)
            tags = (edges[:-1] + edges[1:]) // 2
            closed = np.zeros(n, bool)
            closed[-1] = closed_right
            return TaggedPartition.from_arrays(edges, den, tags, closed, "perron")
    fast = _cousin_scaled(g, lo, hi, closed_right)
    if fast is not None:
        return fast
    accepted: list[tuple[Fraction, Fraction, Fraction, bool]] = []
    stack = [(lo, hi)]
    while stack:
        a, b = stack.pop()
        last = closed_right and b == hi
        tag = None
        for t in _cousin_candidates(g, a, b):
            gt = g(t)
            # strict on both sides: valid whether or not b ends up in the set
            if t - a < gt and b - t < gt:
                tag = t
                break
        if tag is None:
            m = (a + b) / 2
            stack.append((m, b))
            stack.append((a, m))
            continue
        accepted.append((a, b, tag, last or tag == b))
    accepted.sort()
    return _from_exact_pieces(accepted, "perron")


def _cousin_scaled(g: Gauge, lo: Fraction, hi: Fraction, closed_right: bool) -> TaggedPartition | None:
    """The bisection above on integers scaled by a common denominator.

    Bisection never goes below ``delta_min``, so every endpoint, midpoint and
    gauge datum is an integer multiple of ``1/L`` for the ``L`` built here.
    Returns ``None`` when ``L`` would not fit in 62 bits.
    """
    depth = 1
    while (hi - lo) / (1 << depth) >= g.delta_min:
        depth += 1
    L = 1
    for x in (lo, hi, *g.breaks, *g.values, *g.points, *g.points.values()):
        L = L * x.denominator // math.gcd(L, x.denominator)
        if L >= _MAX_DEN:
            return None
    # room for every dyadic midpoint down to the deepest possible level
    L <<= depth + 2
    if L >= _MAX_DEN:
        return None
    br = [int(x * L) for x in g.breaks]
    vals = [int(v * L) for v in g.values]
    pts = {int(p * L): int(v * L) for p, v in g.points.items()}
    bounds = sorted(set(br) | set(pts))
    nv = len(vals) - 1

    def gauge(t: int) -> int:
        if t in pts:
            return pts[t]
        return vals[min(max(bisect.bisect_right(br, t) - 1, 0), nv)]

    H = int(hi * L)
    accepted = []
    stack = [(int(lo * L), H)]
    while stack:
        a, b = stack.pop()
        tag = None
        for t in ((a + b) // 2, a, b, *bounds[bisect.bisect_left(bounds, a):bisect.bisect_right(bounds, b)]):
            gt = gauge(t)
            if t - a < gt and b - t < gt:
                tag = t
                break
        if tag is None:
            m = (a + b) // 2
            stack.append((m, b))
            stack.append((a, m))
            continue
        accepted.append((a, b, tag, (closed_right and b == H) or tag == b))
    accepted.sort()
    return TaggedPartition.from_arrays(np.array([accepted[0][0]] + [b for _, b, _, _ in accepted]), L,
                                       np.array([t for _, _, t, _ in accepted]),
                                       np.array([c for *_, c in accepted]), "perron")


def _cousin_candidates(g: Gauge, a: Fraction, b: Fraction):
    yield (a + b) / 2
    yield a
    yield b
    for x in g.boundaries_in(a, b):
        yield x


def _from_exact_pieces(pieces, kind: str) -> TaggedPartition:
    den = 1
    for a, b, t, _ in pieces:
        for x in (a, b, t):
            den = den * x.denominator // math.gcd(den, x.denominator)
    if den < _MAX_DEN:
        edges = [pieces[0][0].numerator * (den // pieces[0][0].denominator)]
        edges += [b.numerator * (den // b.denominator) for _, b, _, _ in pieces]
        tags = [t.numerator * (den // t.denominator) for _, _, t, _ in pieces]
        return TaggedPartition.from_arrays(np.array(edges), den, np.array(tags),
                                           np.array([c for *_, c in pieces]), kind)
    return TaggedPartition(
        ((IntervalSet.interval(a, b, closed=c), t) for a, b, t, c in pieces), kind)


# --------------------------------------------------------------------------
# free -> Perron


def free_to_perron(P: TaggedPartition, g: Gauge) -> TaggedPartition:
    """Convert a g-fine free partition into a g-fine Perron one with the same sums.

    Sets sharing a tag are merged, then every tag is moved into its own set and
    removed from all others.  Measures are untouched since points are null.
    """
    if not is_fine(P, g):
        raise PreconditionViolation("partition is not fine for the gauge")
    merged: dict[Fraction, IntervalSet] = {}
    order: list[Fraction] = []
    for E, t in P.pairs:
        if t in merged:
            merged[t] = merged[t].union(E)
        else:
            merged[t] = E
            order.append(t)
    tags = sorted(order)
    out = []
    for t in order:
        E = merged[t]
        lo, hi = E.hull()
        # only tags inside the hull can belong to E
        near = tags[bisect.bisect_left(tags, lo):bisect.bisect_right(tags, hi)]
        foreign = [s for s in near if s != t and E.contains(s)]
        if foreign:
            E = E.diff(IntervalSet.points(foreign))
        out.append((E.union(IntervalSet.points([t])), t))
    return TaggedPartition(out, "perron")


# --------------------------------------------------------------------------
# sampling

TAG_MODES = ("uniform", "left", "right", "extreme")


def sample_fine_partitions(g: Gauge, count: int, seed: int, kind: str = "free",
                           adversarial_tags: Sequence | None = None, adversarial_prob: float = 1.0,
                           tag_mode: str = "mixed", segment=(ZERO, ONE),
                           max_initial_cuts: int = 8) -> list[TaggedPartition]:
    """Random g-fine partitions of ``segment`` (deterministic in ``seed``).

    Endpoints are random dyadic rationals.  Tags follow ``tag_mode``: uniform,
    pushed to the left or right end of the admissible window, or ``extreme``
    (each piece independently left or right).  ``mixed`` draws one of these per
    partition.  With ``adversarial_tags`` each piece takes, with probability
    ``adversarial_prob``, an admissible tag from that set when one exists.
    Pieces without an admissible tag are split at a random point; pieces shorter
    than the minimal gauge value always admit their own points.
    """
    if count < 1:
        raise InvalidInput("count must be >= 1")
    if kind not in KINDS:
        raise InvalidInput(f"unknown partition kind {kind!r}")
    if tag_mode != "mixed" and tag_mode not in TAG_MODES:
        raise InvalidInput(f"unknown tag mode {tag_mode!r}")
    lo, hi = to_fraction(segment[0]), to_fraction(segment[1])
    dmin = g.delta_min
    bits = max(24, math.ceil(math.log2(float(1 / dmin))) + 12 if dmin < 1 else 24)
    den = 1 << bits
    for x in (lo, hi):
        den = den * x.denominator // math.gcd(den, x.denominator)
    adv = None
    if adversarial_tags is not None:
        fr = sorted({to_fraction(x) for x in adversarial_tags})
        for x in fr:
            den = den * x.denominator // math.gcd(den, x.denominator)
        adv = fr
    if den >= _MAX_DEN:
        raise Unsupported("gauge too fine for 52-bit dyadic sampling")
    adv_num = None if adv is None else np.array([x.numerator * (den // x.denominator) for x in adv], dtype=np.int64)
    gmax = float(g.delta_max)
    rng = np.random.default_rng(seed)
    L, H = lo.numerator * (den // lo.denominator), hi.numerator * (den // hi.denominator)
    out = []
    if adv_num is not None and adversarial_prob >= 1:
        adv_num = adv_num[(adv_num >= L) & (adv_num <= H)]
        for _ in range(count):
            out.append(_sample_restricted(g, rng, L, H, den, kind, adv_num))
        return out
    if tag_mode == "mixed":
        modes = rng.integers(0, len(TAG_MODES), size=count)
    else:
        modes = np.full(count, TAG_MODES.index(tag_mode))
    # batches share the refinement loop; bound their combined piece count for memory
    pieces = max(1.0, float((hi - lo) / g.delta_max)) * 2
    chunk = max(1, min(count, int(_BATCH_PIECES // pieces)))
    out = []
    for s in range(0, count, chunk):
        out += _sample_batch(g, rng, L, H, den, kind, modes[s:s + chunk], adv_num, adversarial_prob, gmax,
                             max_initial_cuts)
    return out


def _restricted_windows(g, L, H, den, s):
    gv, _ = g.evaluate_num(s, den)
    # conservative integer reach: r/den < g(s) with a unit of float slack
    r = np.maximum(np.ceil(gv * den).astype(np.int64) - 2, 0)
    lo = np.maximum(s[:-1] + 1, s[1:] - r[1:])
    hi = np.minimum(s[1:], s[:-1] + r[:-1])
    feasible = s.size > 0 and s[0] - L <= r[0] and H - s[-1] <= r[-1] and bool(np.all(lo <= hi))
    return feasible, lo, hi


def _sample_restricted(g, rng, L, H, den, kind, adv) -> TaggedPartition:
    """Fine partition whose every tag lies in ``adv`` (one tag per piece)."""
    for keep in (0.25, 0.5, 1.0):
        s = adv if keep >= 1 else adv[rng.random(adv.size) < keep]
        feasible, lo, hi = _restricted_windows(g, L, H, den, s)
        if feasible:
            break
    else:
        raise PreconditionViolation("no fine partition uses only the given tags")
    cuts = lo + (rng.random(lo.size) * (hi - lo + 1)).astype(np.int64)
    cuts = np.minimum(cuts, hi)
    # cuts lie in (s_i, s_{i+1}], so every piece is nonempty and holds its tag
    edges = np.concatenate([[L], cuts, [H]]).astype(np.int64)
    tags = s
    closed = np.zeros(tags.size, bool)
    closed[-1] = tags[-1] == H
    P = TaggedPartition.from_arrays(edges, den, tags, closed, kind)
    if not bool(np.all(fine_mask(P, g))) or not P.is_perron():
        raise PreconditionViolation("restricted partition failed its fineness check")
    return P


def _sample_batch(g, rng, L, H, den, kind, modes, adv, adv_prob, gmax, max_cuts) -> list[TaggedPartition]:
    """Refine ``len(modes)`` random partitions together; ``pid`` tracks ownership of each piece."""
    count = modes.size
    ncut = rng.integers(0, max_cuts + 1, size=count) if H - L > 1 else np.zeros(count, np.int64)
    pa, pb, pid = [], [], []
    for i in range(count):
        cuts = np.unique(rng.integers(L + 1, H, size=int(ncut[i]))) if ncut[i] else np.zeros(0, np.int64)
        pa.append(np.concatenate([[L], cuts]))
        pb.append(np.concatenate([cuts, [H]]))
        pid.append(np.full(cuts.size + 1, i))
    a = np.concatenate(pa).astype(np.int64)
    b = np.concatenate(pb).astype(np.int64)
    pid = np.concatenate(pid)
    done = []
    gwin = int(math.floor(gmax * den))
    for _ in range(4096):
        if a.size == 0:
            break
        t, closed = _propose_tags(rng, a, b, den, kind, modes[pid], gwin, L, H)
        strict = None
        if adv is not None:
            t, closed, have = _adversarial_tags(rng, a, b, t, closed, adv, adv_prob, kind, gwin)
            if adv_prob >= 1:
                strict = have
        ok = _fine_mask_arrays(a, b, t, closed, den, g)
        if strict is not None:
            ok &= strict
        elif not np.all(ok):
            # fall back to a uniform tag inside the piece
            bad = ~ok
            tb = a[bad] + (rng.random(bad.sum()) * (b[bad] - a[bad])).astype(np.int64)
            t = t.copy()
            closed = closed.copy()
            t[bad] = tb
            closed[bad] = False
            ok[bad] = _fine_mask_arrays(a[bad], b[bad], tb, closed[bad], den, g)
        done.append((pid[ok], a[ok], b[ok], t[ok], closed[ok]))
        a, b, pid = a[~ok], b[~ok], pid[~ok]
        if a.size:
            if np.any(b - a < 2):
                raise Unsupported("cannot refine below the sampling resolution")
            width = b - a
            m = a + width // 4 + (rng.random(a.size) * (width // 2)).astype(np.int64)
            m = np.clip(m, a + 1, b - 1)
            a, b, pid = np.concatenate([a, m]), np.concatenate([m, b]), np.concatenate([pid, pid])
    else:
        raise Unsupported("partition sampling did not terminate")
    pid, a, b, t, c = (np.concatenate(x) for x in zip(*done))
    order = np.lexsort((a, pid))
    pid, a, b, t, c = pid[order], a[order], b[order], t[order], c[order]
    bounds = np.searchsorted(pid, np.arange(count + 1))
    out = []
    for i in range(count):
        s, e = bounds[i], bounds[i + 1]
        edges = np.concatenate([a[s:e], b[e - 1:e]])
        out.append(TaggedPartition.from_arrays(edges, den, t[s:e], c[s:e], kind))
    return out


def _propose_tags(rng, a, b, den, kind, mode, gwin, L, H):
    """Tags for pieces ``[a, b)``; ``mode`` is a ``TAG_MODES`` index, scalar or per piece."""
    n = a.size
    mode = np.broadcast_to(np.asarray(mode), (n,))
    uniform = mode == 0
    right = np.where(mode == 3, rng.random(n) < 0.5, mode == 2)
    if kind == "perron":
        u = a + (rng.random(n) * (b - a)).astype(np.int64)
        t = np.where(uniform, u, np.where(right, b, a))
        return t, right & ~uniform
    # free: admissible window is roughly [b - gmax, a + gmax]
    wlo = np.maximum(b - gwin + 1, L)
    whi = np.minimum(a + gwin - 1, H)
    empty = whi < wlo
    wlo = np.where(empty, a, wlo)
    whi = np.where(empty, b - 1, whi)
    u = wlo + (rng.random(n) * (whi - wlo + 1)).astype(np.int64)
    t = np.where(uniform, u, np.where(right, whi, wlo))
    return np.clip(t, L, H), np.zeros(n, bool)


def _adversarial_tags(rng, a, b, t, closed, adv, prob, kind, gwin):
    use = rng.random(a.size) < prob
    if kind == "perron":
        lo_i = np.searchsorted(adv, a, side="left")
        hi_i = np.searchsorted(adv, b, side="right")
    else:
        lo_i = np.searchsorted(adv, b - gwin + 1, side="left")
        hi_i = np.searchsorted(adv, a + gwin - 1, side="right")
    have = use & (hi_i > lo_i)
    if not np.any(have):
        return t, closed, have
    pick = lo_i + (rng.random(a.size) * np.maximum(hi_i - lo_i, 1)).astype(np.int64)
    pick = np.minimum(pick, len(adv) - 1)
    t = np.where(have, adv[pick], t)
    closed = np.where(have, (t == b) if kind == "perron" else False, closed)
    return t, closed, have


def alternative_tags(P: TaggedPartition, g: Gauge, seed: int, mode: str = "extreme") -> np.ndarray:
    """A second fine tag per piece of an array-form partition (numerators)."""
    if P._arr is None:
        raise Unsupported("alternative tags need an array-form partition")
    edges, den, tags, closed = P._arr
    rng = np.random.default_rng(seed)
    a, b = edges[:-1], edges[1:]
    gwin = int(math.floor(float(g.delta_max) * den))
    t2, c2 = _propose_tags(rng, a, b, den, P.kind, TAG_MODES.index(mode), gwin, int(edges[0]), int(edges[-1]))
    ok = _fine_mask_arrays(a, b, t2, closed | c2, den, g)
    return np.where(ok, t2, tags)
