"""Exact finite unions of half-open rational intervals in [0, 1].

An :class:`IntervalSet` is stored canonically as sorted, disjoint, non-adjacent
half-open intervals ``[a, b)`` plus finitely many added points (outside the
intervals) and removed points (inside them).  A closed right end ``b`` is just
the added point ``b``.  Lebesgue measure ignores the point adjustments.
"""

from __future__ import annotations

import bisect
import json
from fractions import Fraction
from functools import cached_property
from typing import Callable, Iterable

from .errors import InvalidInput

ZERO = Fraction(0)
ONE = Fraction(1)


def to_fraction(x) -> Fraction:
    """Parse ints, Fractions, ``"p/q"`` strings and floats (floats via their repr)."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x.strip())
    if isinstance(x, float):
        return Fraction(repr(x))
    try:
        return Fraction(x)
    except (TypeError, ValueError):
        raise InvalidInput(f"cannot read {x!r} as a rational") from None


def fraction_str(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}" if x.denominator != 1 else str(x.numerator)


class IntervalSet:
    """Immutable finite union of ``[a, b)`` pieces with point adjustments."""

    __slots__ = ("intervals", "added", "removed", "__dict__")

    def __init__(self, intervals: Iterable = (), add: Iterable = (), remove: Iterable = ()):
        ivs = [(to_fraction(a), to_fraction(b)) for a, b in intervals]
        pts_add = {to_fraction(p) for p in add}
        pts_rm = {to_fraction(p) for p in remove}
        for a, b in ivs:
            if not ZERO <= a <= b <= ONE:
                raise InvalidInput(f"interval [{a}, {b}) not inside [0, 1]")
        for p in pts_add | pts_rm:
            if not ZERO <= p <= ONE:
                raise InvalidInput(f"point {p} not inside [0, 1]")
        ivs = [(a, b) for a, b in ivs if a < b]
        if _is_canonical(ivs, pts_add, pts_rm):
            self._set(tuple(ivs), frozenset(pts_add), frozenset(pts_rm))
        else:
            raw = _RawSet(ivs, pts_add, pts_rm)
            canon = _canonicalize(raw.breakpoints(), raw.contains)
            self._set(canon.intervals, canon.added, canon.removed)

    def _set(self, intervals, added, removed):
        object.__setattr__(self, "intervals", intervals)
        object.__setattr__(self, "added", added)
        object.__setattr__(self, "removed", removed)

    def __setattr__(self, name, value):
        if name in ("intervals", "added", "removed"):
            raise AttributeError("IntervalSet is immutable")
        object.__setattr__(self, name, value)

    # -- constructors -----------------------------------------------------

    @classmethod
    def _trusted(cls, intervals, added=frozenset(), removed=frozenset()) -> "IntervalSet":
        obj = cls.__new__(cls)
        obj._set(tuple(intervals), frozenset(added), frozenset(removed))
        return obj

    @classmethod
    def empty(cls) -> "IntervalSet":
        return cls._trusted(())

    @classmethod
    def unit(cls) -> "IntervalSet":
        """The closed unit interval ``[0, 1]``."""
        return cls._trusted(((ZERO, ONE),), {ONE})

    @classmethod
    def interval(cls, a, b, closed: bool = False) -> "IntervalSet":
        """``[a, b)``, or ``[a, b]`` when ``closed``."""
        a, b = to_fraction(a), to_fraction(b)
        if not ZERO <= a <= b <= ONE:
            raise InvalidInput(f"interval [{a}, {b}] not inside [0, 1]")
        if a == b:
            return cls._trusted((), {a} if closed else ())
        return cls._trusted(((a, b),), {b} if closed else ())

    @classmethod
    def points(cls, pts: Iterable) -> "IntervalSet":
        return cls._trusted((), {to_fraction(p) for p in pts})

    # -- queries ----------------------------------------------------------

    def measure(self) -> Fraction:
        return sum((b - a for a, b in self.intervals), ZERO)

    def is_empty(self) -> bool:
        return not self.intervals and not self.added

    def contains(self, t) -> bool:
        t = to_fraction(t)
        if t in self.added:
            return True
        if t in self.removed:
            return False
        return self._in_intervals(t)

    __contains__ = contains

    def _in_intervals(self, t: Fraction) -> bool:
        i = bisect.bisect_right(self._starts, t) - 1
        return i >= 0 and t < self.intervals[i][1]

    @cached_property
    def _starts(self) -> list[Fraction]:
        return [a for a, _ in self.intervals]

    def hull(self) -> tuple[Fraction, Fraction] | None:
        """``(inf, sup)`` of the set, or ``None`` when empty."""
        lo = [a for a, _ in self.intervals] + list(self.added)
        hi = [b for _, b in self.intervals] + list(self.added)
        if not lo:
            return None
        return min(lo), max(hi)

    def closure(self) -> "IntervalSet":
        pts = set(self.added)
        for a, b in self.intervals:
            pts.add(a)
            pts.add(b)
        return IntervalSet(self.intervals, pts, ())

    def closed_components(self) -> list[tuple[Fraction, Fraction]]:
        """Connected components of the closure as closed intervals ``[c, d]``."""
        segs = sorted([(a, b) for a, b in self.intervals] + [(p, p) for p in self.added])
        out: list[list[Fraction]] = []
        for a, b in segs:
            if out and a <= out[-1][1]:
                out[-1][1] = max(out[-1][1], b)
            else:
                out.append([a, b])
        return [(a, b) for a, b in out]

    # -- algebra ----------------------------------------------------------

    def union(self, other: "IntervalSet") -> "IntervalSet":
        if not other.intervals:
            # points only: canonical form changes in the point sets alone
            new = [p for p in other.added if not self.contains(p)]
            back = self.removed & other.added
            if not new and not back:
                return self
            return IntervalSet._trusted(self.intervals, self.added | {p for p in new if p not in back},
                                        self.removed - back)
        return set_algebra(self, other, "union")

    def intersect(self, other: "IntervalSet") -> "IntervalSet":
        return set_algebra(self, other, "intersect")

    def diff(self, other: "IntervalSet") -> "IntervalSet":
        if not other.intervals:
            gone = self.added & other.added
            cut = {p for p in other.added if p not in self.removed and self._in_intervals(p)}
            if not gone and not cut:
                return self
            return IntervalSet._trusted(self.intervals, self.added - gone, self.removed | cut)
        return set_algebra(self, other, "diff")

    __or__ = union
    __and__ = intersect
    __sub__ = diff

    def with_points(self, add: Iterable = (), remove: Iterable = ()) -> "IntervalSet":
        out = self
        rm = IntervalSet.points(remove)
        if not rm.is_empty():
            out = out.diff(rm)
        ad = IntervalSet.points(add)
        if not ad.is_empty():
            out = out.union(ad)
        return out

    # -- identity / serialization ----------------------------------------

    def _key(self):
        return (self.intervals, tuple(sorted(self.added)), tuple(sorted(self.removed)))

    def __eq__(self, other) -> bool:
        return isinstance(other, IntervalSet) and self._key() == other._key()

    def __hash__(self) -> int:
        return hash(self._key())

    def __repr__(self) -> str:
        body = " ∪ ".join(f"[{fraction_str(a)}, {fraction_str(b)})" for a, b in self.intervals) or "∅"
        if self.removed:
            body += " ∖ {" + ", ".join(fraction_str(p) for p in sorted(self.removed)) + "}"
        if self.added:
            body += " ∪ {" + ", ".join(fraction_str(p) for p in sorted(self.added)) + "}"
        return f"IntervalSet({body})"

    def to_dict(self) -> dict:
        return {
            "intervals": [[fraction_str(a), fraction_str(b)] for a, b in self.intervals],
            "add": [fraction_str(p) for p in sorted(self.added)],
            "remove": [fraction_str(p) for p in sorted(self.removed)],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "IntervalSet":
        return cls(d.get("intervals", ()), d.get("add", ()), d.get("remove", ()))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def measure(E: IntervalSet) -> Fraction:
    return E.measure()


def contains(E: IntervalSet, t) -> bool:
    return E.contains(t)


_OPS: dict[str, Callable[[bool, bool], bool]] = {
    "union": lambda x, y: x or y,
    "intersect": lambda x, y: x and y,
    "diff": lambda x, y: x and not y,
}


def set_algebra(A: IntervalSet, B: IntervalSet, op: str) -> IntervalSet:
    """Exact union / intersection / difference in canonical form."""
    try:
        fn = _OPS[op]
    except KeyError:
        raise InvalidInput(f"unknown set operation {op!r}") from None
    pts = _breakpoints(A) | _breakpoints(B)
    return _canonicalize(pts, lambda t: fn(A.contains(t), B.contains(t)))


# -- canonicalization ------------------------------------------------------


def _breakpoints(E) -> set[Fraction]:
    pts = set(E.added) | set(E.removed)
    for a, b in E.intervals:
        pts.add(a)
        pts.add(b)
    return pts


class _RawSet:
    """Possibly overlapping description used only during canonicalization."""

    def __init__(self, intervals, added, removed):
        self.intervals = intervals
        self.added = added
        self.removed = removed

    def breakpoints(self):
        return _breakpoints(self)

    def contains(self, t):
        if t in self.added:
            return True
        if t in self.removed:
            return False
        return any(a <= t < b for a, b in self.intervals)


def _is_canonical(ivs, added, removed) -> bool:
    for i in range(1, len(ivs)):
        if ivs[i][0] <= ivs[i - 1][1]:
            return False
    if not added and not removed:
        return True
    tmp = IntervalSet._trusted(ivs)
    return all(not tmp._in_intervals(p) for p in added) and all(tmp._in_intervals(p) for p in removed)


def _canonicalize(points: set[Fraction], member: Callable[[Fraction], bool]) -> IntervalSet:
    """Rebuild a set from its membership predicate.

    Membership is constant on each open gap between consecutive breakpoints,
    so testing gap midpoints and the breakpoints themselves is exact.
    """
    pts = sorted(points | {ZERO, ONE})
    gap_in = [member((pts[i] + pts[i + 1]) / 2) for i in range(len(pts) - 1)]
    pt_in = [member(p) for p in pts]
    intervals, added, removed = [], set(), set()
    i, n = 0, len(gap_in)
    while i < n:
        if not gap_in[i]:
            i += 1
            continue
        j = i
        while j < n and gap_in[j]:
            j += 1
        # run of gaps i..j-1 -> [pts[i], pts[j])
        intervals.append((pts[i], pts[j]))
        for q in range(i, j):
            if not pt_in[q]:
                removed.add(pts[q])
        i = j
    covered = IntervalSet._trusted(intervals)
    for q, p in enumerate(pts):
        if pt_in[q] and not covered._in_intervals(p):
            added.add(p)
    return IntervalSet._trusted(intervals, added, removed)
