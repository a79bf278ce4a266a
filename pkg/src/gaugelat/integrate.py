"""Riemann sums, norm-type gauge integration and the quantities built on them."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import InvalidInput, NonConvergence, PreconditionViolation
from .functions import IntegrandFn, Restricted
from .lattice import SpaceSpec
from .partitions import (Gauge, TaggedPartition, cousin, fine_mask, is_fine,
                         sample_fine_partitions)
from .sets_measure import ONE, ZERO, IntervalSet, to_fraction

METHODS = {"H": "perron", "MS": "free"}


# --------------------------------------------------------------------------
# Riemann sums


def riemann_sum(f: IntegrandFn, P: TaggedPartition) -> np.ndarray:
    """``sum_i f(t_i) * measure(E_i)`` with exact measures."""
    if P.is_array_form:
        edges, den, tags, _ = P._arr
        return f.riemann_int(tags / den, np.diff(edges), den)
    num, den = P.mass_numerators()
    tags = np.array([float(t) for t in P.tags])
    if max(num, default=0) < 1 << 62 and den < 1 << 62:
        return f.riemann_int(tags, num, den)
    return f.riemann(tags, np.array([float(m) for m in P.measures()]))


def riemann_sum_exact(f: IntegrandFn, P: TaggedPartition) -> list[Fraction]:
    """Rational Riemann sum: each value ``f(t_i)`` is taken as the exact rational of its float."""
    total = [ZERO] * f.dim
    for t, m in zip(P.tags, P.measures()):
        v = f(t)
        total = [acc + Fraction(float(x)) * m for acc, x in zip(total, v)]
    return total


def set_integrals(f: IntegrandFn, P: TaggedPartition, **kw) -> np.ndarray:
    """``indefinite(f, E)`` for every set of ``P`` (rows aligned with the pairs)."""
    if P.is_array_form and f.closed_form:
        edges, den, _, _ = P._arr
        F = f.antiderivative(edges / den)
        return np.diff(F, axis=0)
    return np.array([indefinite(f, E, **kw) for E in P.sets]).reshape(len(P), f.dim)


def _tag_values(f: IntegrandFn, P: TaggedPartition) -> tuple[np.ndarray, np.ndarray]:
    flat = P.flat
    return f.evaluate(flat.tags), flat.weights


# --------------------------------------------------------------------------
# norm integration


@dataclass
class IntegralReport:
    value: np.ndarray
    method: str
    gauge_witness: Gauge
    spread: float
    levels: int
    converged: bool
    tol: float
    history: list = field(default_factory=list)
    reason: str = ""

    @property
    def peak_spread(self) -> float:
        return max((s for _, s in self.history), default=self.spread)

    def to_dict(self) -> dict:
        return {
            "value": [float(x) for x in self.value],
            "method": self.method,
            "gauge_witness": self.gauge_witness.to_dict(),
            "spread": self.spread,
            "levels": self.levels,
            "converged": self.converged,
            "tol": self.tol,
            "history": [[n, s] for n, s in self.history],
            "reason": self.reason,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def csv_row(self, function_id: str, space: str) -> list[str]:
        return [function_id, space, self.method, format_vector(self.value), f"{self.spread:.12g}",
                str(self.levels), "pass" if self.converged else "fail"]


def format_vector(v) -> str:
    return ";".join(f"{float(x):.12g}" for x in np.atleast_1d(v))


def pairwise_spread(sums: np.ndarray, spec: SpaceSpec) -> float:
    """``max_{i,j} ||sums_i - sums_j||``."""
    if len(sums) < 2:
        return 0.0
    if spec.norm_kind == "M":
        return float((sums.max(axis=0) - sums.min(axis=0)).max())
    best = 0.0
    for i in range(len(sums) - 1):
        best = max(best, float(spec.norms(sums[i + 1:] - sums[i]).max()))
    return best


def level_partitions(g: Gauge, kind: str, K: int, seed: int, adversarial_tags=None,
                     adversarial_prob: float = 1.0) -> list[TaggedPartition]:
    """The sampled family at one gauge: K random fine partitions plus the Cousin partition.

    With strict adversarial tags (probability 1) half of the samples use only
    those tags when such partitions exist; the other half stay generic.
    """
    out = [cousin(g)]
    if adversarial_tags is not None and adversarial_prob >= 1:
        k_adv = max(1, K // 2)
        try:
            out += sample_fine_partitions(g, k_adv, seed, kind, adversarial_tags=adversarial_tags)
        except PreconditionViolation:
            k_adv = 0
        if K - k_adv > 0:
            out += sample_fine_partitions(g, K - k_adv, seed + 7919, kind)
        return out
    out += sample_fine_partitions(g, K, seed, kind, adversarial_tags=adversarial_tags,
                                  adversarial_prob=adversarial_prob)
    return out


def integrate_norm(f: IntegrandFn, spec: SpaceSpec, kind: str = "H", tol: float = 1e-6, K: int = 64,
                   seed: int = 0, max_levels: int = 16, adversarial_tags=None,
                   adversarial_prob: float = 1.0) -> IntegralReport:
    """Henstock (``H``) or McShane (``MS``) integral by the two-partition criterion.

    Level ``n`` uses the constant gauge ``2^-n``.  Success needs a sampled
    spread ``<= tol`` at two consecutive levels; otherwise the report carries
    the last spread and ``converged=False``.
    """
    if kind not in METHODS:
        raise InvalidInput(f"method must be one of {sorted(METHODS)}")
    if not tol > 0:
        raise InvalidInput("tol must be positive")
    if spec.dim != f.dim:
        raise InvalidInput("space dimension does not match the integrand")
    history = []
    streak = 0
    value = np.zeros(f.dim)
    g = Gauge.constant(ONE)
    for n in range(1, max_levels + 1):
        g = Gauge.constant(Fraction(1, 1 << n))
        parts = level_partitions(g, METHODS[kind], K, seed * 1000 + n, adversarial_tags, adversarial_prob)
        sums = np.array([riemann_sum(f, P) for P in parts])
        s = pairwise_spread(sums, spec)
        history.append((n, s))
        value = sums[0] if s == 0 else sums.mean(axis=0)
        streak = streak + 1 if s <= tol else 0
        # a zero spread is exact: every sum agrees, no second level needed
        if streak >= 2 or (s == 0 and n == 1):
            return IntegralReport(value, kind, g, s, n, True, tol, history)
    return IntegralReport(value, kind, g, history[-1][1], max_levels, False, tol, history,
                          reason=f"spread above {tol:g} after {max_levels} levels")


def indefinite(f: IntegrandFn, A: IntervalSet, tol: float = 1e-6, K: int = 16, seed: int = 0,
               max_levels: int = 16, kind: str = "H") -> np.ndarray:
    """``integral of f * 1_A``; exact (up to rounding) for closed-form classes."""
    if A.is_empty() or A.measure() == 0:
        return np.zeros(f.dim)
    if f.closed_form:
        return f.integral_over(A)
    rep = integrate_norm(Restricted(f, A), SpaceSpec.M(f.dim), kind, tol, K, seed, max_levels)
    if not rep.converged:
        raise NonConvergence("restricted integral did not converge", rep)
    return rep.value


def modulus_measure(f: IntegrandFn, A: IntervalSet, depth: int = 12) -> np.ndarray:
    """``sum_C |indefinite(f, A ∩ C)|`` over the ``2^depth`` dyadic cells ``C``.

    Dyadic partitions refine as ``depth`` grows, so the value is the supremum
    over all dyadic partitions of ``A`` up to that depth.
    """
    if depth < 1:
        raise InvalidInput("depth must be >= 1")
    n = 1 << depth
    if not f.closed_form:
        total = np.zeros(f.dim)
        for i in range(n):
            C = IntervalSet.interval(Fraction(i, n), Fraction(i + 1, n), closed=(i == n - 1))
            total += np.abs(indefinite(f, A & C))
        return total
    grid = {Fraction(i, n) for i in range(n + 1)}
    for a, b in A.intervals:
        grid.update((a, b))
    pts = sorted(grid)
    lo = np.array([float(x) for x in pts[:-1]])
    hi = np.array([float(x) for x in pts[1:]])
    mids = [(a + b) / 2 for a, b in zip(pts, pts[1:])]
    inside = np.array([A._in_intervals(m) for m in mids], bool)
    cell = np.array([int(m * n) for m in mids])
    F = f.antiderivative(np.concatenate([lo, hi[-1:]]))
    pieces = np.diff(F, axis=0) * inside[:, None]
    per_cell = np.zeros((n, f.dim))
    np.add.at(per_cell, cell, pieces)
    return np.abs(per_cell).sum(axis=0)


def variational_sum(f: IntegrandFn, P: TaggedPartition, spec: SpaceSpec) -> float:
    """``sum_E ||f(t_E) measure(E) - indefinite(f, E)||``."""
    vals, w = _tag_values(f, P)
    if P.is_array_form:
        contrib = vals * w[:, None]
    else:
        contrib = f.evaluate(np.array([float(t) for t in P.tags])) * np.array(
            [float(m) for m in P.measures()])[:, None]
    return float(spec.norms(contrib - set_integrals(f, P)).sum())


def _alt_partition(P: TaggedPartition, alt_tags) -> TaggedPartition:
    if P.is_array_form and isinstance(alt_tags, np.ndarray) and alt_tags.dtype.kind == "i":
        return P.with_tags(alt_tags, kind="free")
    return TaggedPartition(zip(P.sets, [to_fraction(t) for t in alt_tags]), "free")


def henstock_lemma_sum(f: IntegrandFn, P: TaggedPartition, alt_tags=None,
                       gauge: Gauge | None = None) -> np.ndarray:
    """Lattice-valued sums with the modulus inside.

    Without ``alt_tags``: ``sum_E |f(t_E) mu(E) - indefinite(f, E)|``.
    With ``alt_tags``: ``sum_E |f(t_E) - f(t'_E)| mu(E)``.  When ``gauge`` is
    given the second tags must be fine for it.  Integer arrays are read as
    numerators over the partition's denominator.
    """
    if P.is_array_form:
        w = np.diff(P._arr[0]) / P._arr[1]
    else:
        w = np.array([float(m) for m in P.measures()])
    t1 = np.array([float(t) for t in P.tags]) if not P.is_array_form else P._arr[2] / P._arr[1]
    v1 = f.evaluate(t1)
    if alt_tags is None:
        return np.abs(v1 * w[:, None] - set_integrals(f, P)).sum(axis=0)
    if len(alt_tags) != len(P):
        raise InvalidInput("need one alternative tag per set")
    Q = _alt_partition(P, alt_tags)
    if gauge is not None and not np.all(fine_mask(Q, gauge)):
        raise PreconditionViolation("alternative tags are not fine for the gauge")
    t2 = np.array([float(t) for t in Q.tags]) if not Q.is_array_form else Q._arr[2] / Q._arr[1]
    v2 = f.evaluate(t2)
    return (np.abs(v1 - v2) * w[:, None]).sum(axis=0)


def _edge_tags(g: Gauge, a: Fraction, b: Fraction, closed: bool) -> list[Fraction]:
    """Fine single-piece tags for ``[a, b]`` pushed towards either end."""
    def fine(t):
        return t - a < g(t) and ((b - t < g(t)) if closed else (b - t <= g(t)))

    out = []
    for side in (a, b):
        best = None
        # walk from the midpoint towards the end, keeping the last admissible tag
        for j in range(1, 48):
            t = side + ((a + b) / 2 - side) / (1 << (j - 1))
            if fine(t):
                best = t
        if fine(side):
            best = side
        if best is not None:
            out.append(best)
    return out


def partition_oscillation_sum(f: IntegrandFn, P: TaggedPartition, g: Gauge, samples: int = 8,
                              seed: int = 0) -> np.ndarray:
    """Sampled lower bound of ``sum_E sup |sigma(f, Q') - sigma(f, Q'')|``.

    For each set ``E`` the supremum runs over pairs of g-fine Perron
    partitions ``Q', Q''`` of ``E``; it is approximated by ``samples`` random
    ones plus single-piece partitions with tags pushed to the ends.
    """
    if samples < 1:
        raise InvalidInput("samples must be >= 1")
    total = np.zeros(f.dim)
    for idx, E in enumerate(P.sets):
        sums = None
        for ci, (a, b) in enumerate(E.intervals):
            closed = b in E.added
            cands = sample_fine_partitions(g, samples, seed + 104729 * idx + ci, "perron", segment=(a, b))
            if not closed:
                # the sampler closes the segment; b itself is not in E here
                cands = [Q for Q in cands if b not in Q.tags]
            vals = [riemann_sum(f, Q) for Q in cands]
            for t in _edge_tags(g, a, b, closed):
                single = TaggedPartition([(IntervalSet.interval(a, b, closed=closed), t)], "perron")
                vals.append(riemann_sum(f, single))
            vals = np.array(vals)
            # the same sample index across the components of E forms one partition
            if sums is None:
                sums = vals
            else:
                k = min(len(sums), len(vals))
                sums = sums[:k] + vals[:k]
        if sums is None:
            continue
        total += sums.max(axis=0) - sums.min(axis=0)
    return total
