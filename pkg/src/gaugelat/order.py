"""Order-integral certificates: checking, building and transforming them.

A certificate is a finite object ``(J, b_1..b_N, gamma_1..gamma_N)``: it
claims ``|sigma(f, P) - J| <= b_n`` componentwise for every gamma_n-fine
partition ``P``.  Checkers replace the quantifier over partitions with K
seeded samples plus the Cousin partition.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import kernels
from .errors import InvalidInput, PreconditionViolation, Unsupported
from .functions import (Affine, CosetModel, IntegrandFn, PiecewiseLinear, Polynomial,
                        StepFunction)
from .integrate import (henstock_lemma_sum, indefinite, integrate_norm, modulus_measure,
                        riemann_sum, variational_sum)
from .lattice import ATOL, DecayRule, OSequence, SpaceSpec, envelope_power, validate_osequence
from .partitions import (Gauge, TaggedPartition, alternative_tags, cousin, fine_mask,
                         sample_fine_partitions)
from .sets_measure import ONE, ZERO, IntervalSet, fraction_str, to_fraction

CERT_KINDS = ("oH", "oM", "oB", "oBH")
PERRON_KINDS = ("oH", "oBH")


def partition_kind(cert_kind: str) -> str:
    return "perron" if cert_kind in PERRON_KINDS else "free"


# --------------------------------------------------------------------------
# certificates


@dataclass(frozen=True)
class OrderCertificate:
    J: np.ndarray
    b: OSequence
    gauges: tuple[Gauge, ...]
    kind: str = "oH"
    measurable: bool = True
    note: str = ""

    def __post_init__(self):
        object.__setattr__(self, "J", np.asarray(self.J, dtype=float).reshape(-1))
        object.__setattr__(self, "gauges", tuple(self.gauges))

    def __len__(self) -> int:
        return len(self.b)

    @property
    def dim(self) -> int:
        return self.J.shape[0]

    def validate(self) -> None:
        if self.kind not in CERT_KINDS:
            raise InvalidInput(f"unknown certificate kind {self.kind!r}")
        if len(self.gauges) != len(self.b):
            raise InvalidInput("gauges and (o)-sequence must have the same length")
        if self.b.dim != self.dim:
            raise InvalidInput("(o)-sequence and value differ in dimension")
        if self.kind in ("oB", "oBH") and not (self.measurable and all(g.measurable for g in self.gauges)):
            raise InvalidInput("Birkhoff-type certificates need measurable gauges")
        verdict = validate_osequence(self.b)
        if not verdict:
            raise InvalidInput(f"invalid (o)-sequence at {verdict.index}: {verdict.reason}")

    def relabel(self, kind: str) -> "OrderCertificate":
        """Same data under another kind.

        Free partitions include Perron ones and step gauges are measurable, so
        an ``oM`` or ``oB`` certificate is also a valid ``oBH`` or ``oH`` one.
        """
        return replace(self, kind=kind)

    def to_dict(self) -> dict:
        return {
            "J": self.J.tolist(),
            "b": self.b.to_dict(),
            "gauges": [g.to_dict() for g in self.gauges],
            "kind": self.kind,
            "measurable": self.measurable,
            "note": self.note,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "OrderCertificate":
        try:
            return cls(np.asarray(d["J"], dtype=float), OSequence.from_dict(d["b"]),
                       tuple(Gauge.from_dict(g) for g in d["gauges"]), d.get("kind", "oH"),
                       bool(d.get("measurable", True)), d.get("note", ""))
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInput(f"malformed certificate: {exc}") from None

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


@dataclass
class LevelCheck:
    n: int
    worst: np.ndarray
    bound: np.ndarray
    samples: int

    @property
    def margin(self) -> float:
        return float(np.min(self.bound - self.worst))

    @property
    def passed(self) -> bool:
        return bool(np.all(self.worst <= self.bound + ATOL))

    def to_dict(self) -> dict:
        return {"n": self.n, "worst": self.worst.tolist(), "bound": self.bound.tolist(),
                "margin": self.margin, "passed": self.passed, "samples": self.samples}


@dataclass
class Verdict:
    passed: bool
    levels: list[LevelCheck] = field(default_factory=list)
    reason: str = ""

    def __bool__(self) -> bool:
        return self.passed

    @property
    def worst_margin(self) -> float:
        return min((lv.margin for lv in self.levels), default=math.inf)

    @property
    def first_failure(self) -> int | None:
        return next((lv.n for lv in self.levels if not lv.passed), None)

    def to_dict(self) -> dict:
        return {"passed": self.passed, "worst_margin": self.worst_margin, "reason": self.reason,
                "levels": [lv.to_dict() for lv in self.levels]}


def fine_family(g: Gauge, kind: str, K: int, seed: int, adversarial_tags=None,
                adversarial_prob: float = 0.5) -> list[TaggedPartition]:
    """Cousin partition plus ``K`` sampled fine partitions of the given kind."""
    out = [cousin(g)]
    out += sample_fine_partitions(g, K, seed, kind, adversarial_tags=adversarial_tags,
                                  adversarial_prob=adversarial_prob)
    return out


def check_level(f: IntegrandFn, J, bound, g: Gauge, kind: str, K: int = 64, seed: int = 0, n: int = 1,
                adversarial_tags=None, adversarial_prob: float = 0.5) -> LevelCheck:
    """``max |sigma(f, P) - J|`` over one sampled fine family against ``bound``."""
    parts = fine_family(g, kind, K, seed, adversarial_tags, adversarial_prob)
    sums = np.array([riemann_sum(f, P) for P in parts])
    worst = np.abs(sums - np.asarray(J, dtype=float)).max(axis=0)
    return LevelCheck(n, worst, np.asarray(bound, dtype=float), len(parts))


def check_certificate(f: IntegrandFn, cert: OrderCertificate, K: int = 64, seed: int = 0,
                      adversarial_tags=None, adversarial_prob: float = 0.5,
                      levels: Sequence[int] | None = None) -> Verdict:
    """Sample every level of ``cert``; pass iff ``|sigma - J| <= b_n`` everywhere."""
    if K < 1:
        raise InvalidInput("K must be >= 1")
    cert.validate()
    if cert.dim != f.dim:
        raise InvalidInput("certificate and integrand differ in dimension")
    kind = partition_kind(cert.kind)
    out = []
    for n in levels or range(1, len(cert) + 1):
        out.append(check_level(f, cert.J, cert.b[n], cert.gauges[n - 1], kind, K, seed * 7919 + n, n,
                               adversarial_tags, adversarial_prob))
    ok = all(lv.passed for lv in out)
    return Verdict(ok, out, "" if ok else f"level {next(lv.n for lv in out if not lv.passed)} exceeded b_n")


def cauchy_check(f: IntegrandFn, b: OSequence, gauges: Sequence[Gauge], K: int = 64, seed: int = 0,
                 kind: str = "perron", adversarial_tags=None, adversarial_prob: float = 0.5) -> Verdict:
    """Pairwise criterion: ``|sigma(P) - sigma(P')| <= b_n`` over sampled gamma_n-fine pairs."""
    if len(gauges) != len(b):
        raise InvalidInput("gauges and (o)-sequence must be aligned")
    out = []
    for n in range(1, len(b) + 1):
        parts = fine_family(gauges[n - 1], kind, K, seed * 7919 + n, adversarial_tags, adversarial_prob)
        sums = np.array([riemann_sum(f, P) for P in parts])
        out.append(LevelCheck(n, sums.max(axis=0) - sums.min(axis=0), b[n], len(parts)))
    ok = all(lv.passed for lv in out)
    return Verdict(ok, out, "" if ok else "pairwise difference exceeded b_n")


# --------------------------------------------------------------------------
# builders


def _power_sequence(coef, levels: int) -> OSequence:
    return OSequence.from_rule(DecayRule.power(coef), levels)


def _uniform_gauges(levels: int, scale: int = 1) -> tuple[Gauge, ...]:
    return tuple(Gauge.constant(Fraction(1, scale * n)) for n in range(1, levels + 1))


def _value(f: IntegrandFn, grid_bits: int = 16) -> np.ndarray:
    """Closed-form integral, else the midpoint of left and right sums on a fine grid."""
    if f.closed_form:
        return f.integral()
    n = 1 << grid_bits
    x = np.arange(n + 1) / n
    v = f.evaluate(x)
    return (v[:-1].sum(axis=0) + v[1:].sum(axis=0)) / (2 * n)


def step_sandwich(f: IntegrandFn, n: int) -> tuple[StepFunction, StepFunction]:
    """Left- and right-value step maps on the uniform n-grid (``g1 <= f <= g2`` for increasing f)."""
    x = [Fraction(i, n) for i in range(n + 1)]
    v = f.evaluate(np.array([float(t) for t in x]))
    return StepFunction(x, v[:-1]), StepFunction(x, v[1:])


def build_monotone_certificate(f: IntegrandFn, levels: int = 16, grid: int = 1025) -> OrderCertificate:
    """``oM`` certificate for an increasing map: ``b_n = (f(1) - f(0))/n``, ``gamma_n = 1/(2n)``.

    A free gamma-fine sum is within ``gamma (f(1) - f(0))`` of the integral
    and both Henstock sums within twice that, so the halved gauge keeps the
    Henstock sums under ``b_n`` too.  Components with ``f(1) = f(0)`` get
    ``1/n`` instead of a zero sequence.
    """
    if not f.is_increasing(grid):
        raise InvalidInput("integrand is not increasing on the validation grid")
    ends = f.evaluate(np.array([0.0, 1.0]))
    d = ends[1] - ends[0]
    d = np.where(d > 0, d, 1.0)
    return OrderCertificate(_value(f), _power_sequence(d, levels), _uniform_gauges(levels, 2), "oM",
                            note="monotone sandwich")


def total_variation(f: IntegrandFn) -> np.ndarray:
    if isinstance(f, (StepFunction, PiecewiseLinear, CosetModel)):
        return f.total_variation()
    if isinstance(f, Affine):
        return abs(f.scale) * total_variation(f.inner)
    raise Unsupported(f"no exact total variation for {type(f).__name__}")


def build_step_certificate(f: IntegrandFn, levels: int = 16) -> OrderCertificate:
    """``oM`` certificate for a step map: ``b_n = 2 TV(f)/n`` with ``gamma_n = 1/n``."""
    tv = total_variation(f)
    return OrderCertificate(_value(f), _power_sequence(np.where(tv > 0, 2 * tv, 1.0), levels),
                            _uniform_gauges(levels), "oM", note="bounded variation")


def build_lipschitz_certificate(f: IntegrandFn, levels: int = 16) -> OrderCertificate:
    """``oM`` certificate for a Lipschitz map: ``b_n = Lip(f)/n`` with ``gamma_n = 1/(2n)``."""
    if isinstance(f, (PiecewiseLinear, Polynomial)):
        lip = f.lipschitz()
    else:
        raise Unsupported(f"no Lipschitz constant for {type(f).__name__}")
    return OrderCertificate(_value(f), _power_sequence(np.where(lip > 0, lip, 1.0), levels),
                            _uniform_gauges(levels, 2), "oM", note="lipschitz")


def certify(f: IntegrandFn, levels: int = 16) -> OrderCertificate:
    """Pick a builder by integrand class."""
    if f.kind != "coset-model" and f.is_increasing():
        return build_monotone_certificate(f, levels)
    if isinstance(f, (StepFunction, CosetModel)) or (isinstance(f, Affine) and isinstance(f.inner, CosetModel)):
        return build_step_certificate(f, levels)
    if isinstance(f, (PiecewiseLinear, Polynomial)):
        return build_lipschitz_certificate(f, levels)
    raise Unsupported(f"no certificate builder for {type(f).__name__}")


def _as_levels(x, N: int) -> list:
    if isinstance(x, list):
        if len(x) < N:
            raise InvalidInput("per-level sandwich list is shorter than the (o)-sequence")
        return x
    return [x] * N


def sandwich_certify(f: IntegrandFn, lower, upper, b: OSequence, grid: int = 1025) -> OrderCertificate:
    """Certificate for ``f`` squeezed between certified maps.

    ``lower`` and ``upper`` are ``(g, cert)`` pairs, or lists of such pairs
    indexed by level.  At level n: ``g1 <= f <= g2`` on a grid and
    ``J2 - J1 <= b_n``.  The result has value ``(J1 + J2)/2`` at the last
    level, sequence ``2 beta_n + 2 b_n`` (beta_n the larger of the two input
    sequences) and gauge ``min(gamma1_n, gamma2_n)``.
    """
    N = len(b)
    lows, ups = _as_levels(lower, N), _as_levels(upper, N)
    x = np.linspace(0, 1, grid)
    fx = f.evaluate(x)
    terms, gauges = [], []
    for n in range(1, N + 1):
        (g1, c1), (g2, c2) = lows[n - 1], ups[n - 1]
        if len(c1) < n or len(c2) < n:
            raise InvalidInput("sandwich certificates are shorter than the (o)-sequence")
        if np.any(g1.evaluate(x) > fx + ATOL) or np.any(g2.evaluate(x) < fx - ATOL):
            raise InvalidInput(f"sandwich violated on the grid at level {n}")
        if np.any(c2.J - c1.J > b[n] + ATOL):
            raise InvalidInput(f"integral gap exceeds b_n at level {n}")
        beta = np.maximum(c1.b[n], c2.b[n])
        terms.append(2 * beta + 2 * b[n])
        gauges.append(c1.gauges[n - 1].minimum(c2.gauges[n - 1]))
    (_, c1), (_, c2) = lows[N - 1], ups[N - 1]
    J = (c1.J + c2.J) / 2
    single = not isinstance(lower, list) and not isinstance(upper, list)
    if single and c1.b.rule == c2.b.rule and c1.b.rule is not None and b.rule is not None:
        seq = OSequence.from_rule(c1.b.rule.scaled(2) + b.rule.scaled(2), N)
    else:
        seq = OSequence.from_rule(envelope_power(terms), N)
    kind = c1.kind if c1.kind == c2.kind else "oH"
    return OrderCertificate(J, seq, tuple(gauges), kind, note="sandwich")


def monotone_sandwich_inputs(f: IntegrandFn, levels: int = 16) -> tuple[list, list, OSequence]:
    """Per-level step sandwiches of an increasing map with their step certificates."""
    lows, ups = [], []
    for n in range(1, levels + 1):
        g1, g2 = step_sandwich(f, n)
        lows.append((g1, build_monotone_certificate(g1, levels)))
        ups.append((g2, build_monotone_certificate(g2, levels)))
    ends = f.evaluate(np.array([0.0, 1.0]))
    d = ends[1] - ends[0]
    return lows, ups, _power_sequence(np.where(d > 0, d, 1.0), levels)


def modulus_certificate(f: IntegrandFn, cert: OrderCertificate, K: int = 16, seed: int = 0) -> OrderCertificate:
    """Certificate for ``|f|``: doubled sequence, same gauges, value the integral of ``|f|``."""
    if not check_certificate(f, cert, K, seed):
        raise InvalidInput("input certificate fails its own check")
    g = f.modulus()
    if np.all(f.bound() >= 0) and np.all(f.evaluate(np.linspace(0, 1, 1025)) >= 0):
        J = cert.J
    elif g.closed_form:
        J = g.integral()
    else:
        J = integrate_norm(g, SpaceSpec.M(g.dim), "H", 1e-6, K, seed).value
    return OrderCertificate(J, cert.b.scaled(2), cert.gauges, cert.kind, cert.measurable, note="modulus")


@dataclass
class ParalleloReport:
    lhs: np.ndarray
    rhs: np.ndarray
    depth: int
    diagnostic_2bN: np.ndarray
    tol: float = 1e-6

    @property
    def gap(self) -> np.ndarray:
        return self.rhs - self.lhs

    @property
    def passed(self) -> bool:
        return bool(np.all(np.abs(self.gap) <= self.tol))

    def to_dict(self) -> dict:
        return {"lhs": self.lhs.tolist(), "rhs": self.rhs.tolist(), "gap": self.gap.tolist(),
                "depth": self.depth, "diagnostic_2bN": self.diagnostic_2bN.tolist(), "passed": self.passed}


def parallelo_check(f: IntegrandFn, cert: OrderCertificate, depth: int = 12, tol: float = 1e-6) -> ParalleloReport:
    """Total variation of the indefinite integral against the integral of ``|f|``."""
    A = IntervalSet.unit()
    lhs = modulus_measure(f, A, depth)
    g = f.modulus()
    rhs = indefinite(g, A) if g.closed_form else modulus_certificate(f, cert).J
    return ParalleloReport(lhs, rhs, depth, 2 * cert.b[len(cert)], tol)


def henstock_sequence(cert: OrderCertificate) -> OSequence:
    """``2 b_n``: what an arbitrary certificate guarantees for both Henstock-lemma sums.

    The builders in this module choose gauges fine enough that ``b_n`` itself
    suffices; :func:`henstock_lemma_check` defaults to that sharper bound.
    """
    return cert.b.scaled(2)


def henstock_lemma_check(f: IntegrandFn, cert: OrderCertificate, K: int = 16, seed: int = 0,
                         bound: OSequence | None = None) -> Verdict:
    """Both Henstock-lemma sums against ``bound`` (default ``cert.b``)."""
    bound = bound or cert.b
    kind = partition_kind(cert.kind)
    out = []
    for n in range(1, len(cert) + 1):
        g = cert.gauges[n - 1]
        worst = np.zeros(f.dim)
        for i, P in enumerate(fine_family(g, kind, K, seed * 7919 + n)):
            worst = np.maximum(worst, henstock_lemma_sum(f, P))
            if P.is_array_form:
                alt = alternative_tags(P, g, seed * 31 + i)
                worst = np.maximum(worst, henstock_lemma_sum(f, P, alt, gauge=g))
        out.append(LevelCheck(n, worst, bound[n], K + 1))
    ok = all(lv.passed for lv in out)
    return Verdict(ok, out, "" if ok else "Henstock sum exceeded its bound")


# --------------------------------------------------------------------------
# (o)-Riemann measurability


@dataclass(frozen=True)
class RiemannWitness:
    """``p_n``, closed sets ``F_n`` and the mesh bound used at each level."""

    p: OSequence
    F: tuple[IntervalSet, ...]
    mesh: tuple[Fraction, ...]
    deltas: tuple[Fraction, ...] = ()

    def __len__(self) -> int:
        return len(self.p)

    def validate(self) -> None:
        if not (len(self.F) == len(self.mesh) == len(self.p)):
            raise InvalidInput("witness components have different lengths")
        for n, F in enumerate(self.F, start=1):
            if IntervalSet.unit().diff(F).measure() > Fraction(1, n):
                raise InvalidInput(f"F_{n} misses more than 1/{n} of [0, 1]")
            if self.mesh[n - 1] > Fraction(1, n) or self.mesh[n - 1] <= 0:
                raise InvalidInput(f"mesh at level {n} must lie in (0, 1/{n}]")

    def to_dict(self) -> dict:
        return {"p": self.p.to_dict(), "F": [F.to_dict() for F in self.F],
                "mesh": [fraction_str(m) for m in self.mesh], "deltas": [fraction_str(d) for d in self.deltas]}

    @classmethod
    def from_dict(cls, d: dict) -> "RiemannWitness":
        return cls(OSequence.from_dict(d["p"]), tuple(IntervalSet.from_dict(F) for F in d["F"]),
                   tuple(to_fraction(m) for m in d["mesh"]), tuple(to_fraction(x) for x in d.get("deltas", [])))


def _sublevel_threshold(g: Gauge, n: int) -> tuple[Fraction, Fraction]:
    """Largest gauge value ``v`` with ``measure{g < v} < 1/n``, and that measure."""
    lengths: dict[Fraction, Fraction] = {}
    for i, v in enumerate(g.values):
        lengths[v] = lengths.get(v, ZERO) + g.breaks[i + 1] - g.breaks[i]
    best, best_mass, below = None, ZERO, ZERO
    for v in sorted(lengths):
        if below < Fraction(1, n):
            best, best_mass = v, below
        below += lengths[v]
    return best, best_mass


def extract_riemann_witness(f: IntegrandFn, cert: OrderCertificate) -> RiemannWitness:
    """Witness from a certificate with step gauges.

    ``delta_n`` is the largest gauge level whose strict sub-level set has
    measure below ``1/n``; ``F_n`` is the closure of the complement, with
    small open windows cut around override points that fall below ``delta_n``.
    Tags in ``F_n`` then see gauge values ``>= delta_n``, so intervals shorter
    than ``delta_n / 2`` around them are fine.
    """
    cert.validate()
    Fs, meshes, deltas = [], [], []
    for n in range(1, len(cert) + 1):
        g = cert.gauges[n - 1]
        delta, removed = _sublevel_threshold(g, n)
        keep = [(g.breaks[i], g.breaks[i + 1]) for i, v in enumerate(g.values) if v >= delta]
        F = IntervalSet(keep).closure()
        low_pts = sorted(p for p, v in g.points.items() if v < delta)
        if low_pts:
            slack = Fraction(1, n) - removed
            eps = Fraction(1, 1 << max(1, math.ceil(math.log2(float((2 * len(low_pts) + 2) / slack)))))
            eps = min(eps, delta)
            for p in low_pts:
                lo, hi = max(ZERO, p - eps), min(ONE, p + eps)
                window = IntervalSet([(lo, hi)], add=[p], remove=[lo] if lo < p else [])
                F = F.diff(window)
        Fs.append(F)
        deltas.append(delta)
        meshes.append(min(Fraction(1, n), delta / 2))
    w = RiemannWitness(cert.b, tuple(Fs), tuple(meshes), tuple(deltas))
    w.validate()
    return w


def _segments_in(F_lo: np.ndarray, F_hi: np.ndarray, u: float, v: float) -> list[tuple[float, float]]:
    i0 = np.searchsorted(F_hi, u, side="left")
    out = []
    for q in range(i0, len(F_lo)):
        if F_lo[q] > v:
            break
        out.append((max(u, F_lo[q]), min(v, F_hi[q])))
    return out


def _random_family(rng, a: float, b: float, mesh: float) -> list[tuple[float, float]]:
    """Non-overlapping subintervals of ``[a, b]`` with length ``<= mesh``."""
    out = []
    x = a
    while x < b:
        length = min(mesh * (0.25 + 0.75 * rng.random()), b - x)
        if rng.random() < 0.85:
            out.append((x, x + length))
        x += length
    return out


def o_riemann_check(f: IntegrandFn, E: IntervalSet, w: RiemannWitness, n: int, K: int = 64,
                    seed: int = 0) -> LevelCheck:
    """Sampled ``sum |f(t_i) - f(t'_i)| lambda(E_i) <= p_n`` with tags in ``E_i ∩ F_n``."""
    if not 1 <= n <= len(w):
        raise InvalidInput("level outside the witness")
    comps = w.F[n - 1].closed_components()
    F_lo = np.array([float(a) for a, _ in comps])
    F_hi = np.array([float(b) for _, b in comps])
    mesh = float(w.mesh[n - 1])
    rng = np.random.default_rng(seed * 7919 + n)
    worst = np.zeros(f.dim)
    for _ in range(K):
        total = np.zeros(f.dim)
        for a, b in E.intervals:
            for u, v in _random_family(rng, float(a), float(b), mesh):
                segs = _segments_in(F_lo, F_hi, u, v)
                if not segs:
                    continue
                mode = rng.integers(3)
                if mode == 0:
                    t1, t2 = segs[0][0], segs[-1][1]
                else:
                    s1, s2 = segs[rng.integers(len(segs))], segs[rng.integers(len(segs))]
                    t1 = s1[0] + rng.random() * (s1[1] - s1[0])
                    t2 = s2[0] + rng.random() * (s2[1] - s2[0]) if mode == 1 else s2[1]
                vals = f.evaluate(np.array([t1, t2]))
                total += np.abs(vals[0] - vals[1]) * (v - u)
        worst = np.maximum(worst, total)
    return LevelCheck(n, worst, w.p[n], K)


def o_riemann_check_all(f: IntegrandFn, E: IntervalSet, w: RiemannWitness, K: int = 64, seed: int = 0) -> Verdict:
    out = [o_riemann_check(f, E, w, n, K, seed) for n in range(1, len(w) + 1)]
    ok = all(lv.passed for lv in out)
    return Verdict(ok, out, "" if ok else "oscillation sum exceeded p_n")


# --------------------------------------------------------------------------
# oscillation


def _segments(I: tuple, F: IntervalSet) -> list[tuple[Fraction, Fraction]]:
    a, b = to_fraction(I[0]), to_fraction(I[1])
    out = []
    for u, v in F.closed_components():
        lo, hi = max(a, u), min(b, v)
        if lo <= hi:
            out.append((lo, hi))
    return out


def oscillation_is_exact(f: IntegrandFn) -> bool:
    return isinstance(f, (StepFunction, PiecewiseLinear, CosetModel)) or (
        isinstance(f, Affine) and oscillation_is_exact(f.inner))


def oscillation(f: IntegrandFn, I: tuple, F: IntervalSet | None = None, grid: int = 1024) -> np.ndarray:
    """Componentwise ``sup - inf`` of ``f`` over ``[alpha, beta] ∩ F``.

    Exact for step, piecewise-linear and coset-model maps; otherwise a lower
    bound from a grid of ``grid`` points.
    """
    F = IntervalSet.unit() if F is None else F
    segs = _segments(I, F)
    if not segs:
        return np.zeros(f.dim)
    if isinstance(f, Affine):
        return abs(f.scale) * oscillation(f.inner, I, F, grid)
    if isinstance(f, CosetModel):
        f = f.as_step()
    if isinstance(f, StepFunction):
        cands = []
        for u, v in segs:
            i0, i1 = f.piece_of(u), f.piece_of(v)
            for p in range(i0, i1 + 1):
                lo, hi = f.breaks[p], f.breaks[p + 1]
                # the piece meets [u, v] away from override points?
                if u == v and u in f.points:
                    continue
                if lo <= v and (hi > u or p == len(f.values) - 1):
                    cands.append(f.values[p])
            cands += [val for q, val in f.points.items() if u <= q <= v]
        cands = np.array(cands)
        return cands.max(axis=0) - cands.min(axis=0)
    if isinstance(f, PiecewiseLinear):
        pts = []
        for u, v in segs:
            pts += [u, v] + [k for k in f.knots if u < k < v]
        vals = f.evaluate(np.array([float(x) for x in pts]))
        return vals.max(axis=0) - vals.min(axis=0)
    lengths = np.array([float(v - u) for u, v in segs])
    share = np.maximum(2, (grid * lengths / max(lengths.sum(), 1e-300)).astype(int))
    pts = np.concatenate([np.linspace(float(u), float(v), k) for (u, v), k in zip(segs, share)])
    vals = f.evaluate(pts)
    return vals.max(axis=0) - vals.min(axis=0)


def variation_on(f: StepFunction, F: IntervalSet) -> np.ndarray:
    """Sum of jumps between consecutive pieces of ``f`` that meet ``F``.

    Bounds ``sum_i omega(f; I_i ∩ F)`` over any disjoint intervals ``I_i``.
    """
    comps = F.closed_components()
    lo = np.array([float(a) for a, _ in comps])
    hi = np.array([float(b) for _, b in comps])
    bf = np.array([float(x) for x in f.breaks])
    right = bf[1:].copy()
    right[-1] = np.inf
    meets = np.zeros(len(f.values), bool)
    for u, v in zip(lo, hi):
        meets |= (bf[:-1] <= v) & (right > u)
    vals = f.values[meets]
    tv = np.abs(np.diff(vals, axis=0)).sum(axis=0) if len(vals) > 1 else np.zeros(f.dim)
    for p, v in f.points.items():
        if F.contains(p):
            tv = tv + 2 * np.abs(v - f.values[f.piece_of(p)])
    return tv


@dataclass
class OscillationReport:
    hypothesis_lhs: np.ndarray
    hypothesis_bound: np.ndarray
    conclusion_lhs: np.ndarray
    conclusion_bound: np.ndarray
    hypothesis_exact: np.ndarray | None = None
    hypothesis_verified_exactly: bool = False

    @property
    def hypothesis_holds(self) -> bool:
        if self.hypothesis_exact is not None:
            return bool(np.all(self.hypothesis_exact <= self.hypothesis_bound + ATOL))
        return bool(np.all(self.hypothesis_lhs <= self.hypothesis_bound + ATOL))

    @property
    def conclusion_holds(self) -> bool:
        return bool(np.all(self.conclusion_lhs <= self.conclusion_bound + ATOL))

    @property
    def consistent(self) -> bool:
        """The implication hypothesis => conclusion was not contradicted."""
        return (not self.hypothesis_holds) or self.conclusion_holds

    def to_dict(self) -> dict:
        return {
            "hypothesis_lhs": self.hypothesis_lhs.tolist(),
            "hypothesis_bound": self.hypothesis_bound.tolist(),
            "hypothesis_exact": None if self.hypothesis_exact is None else self.hypothesis_exact.tolist(),
            "hypothesis_holds": self.hypothesis_holds,
            "conclusion_lhs": self.conclusion_lhs.tolist(),
            "conclusion_bound": self.conclusion_bound.tolist(),
            "conclusion_holds": self.conclusion_holds,
        }


def _family_arrays(rng, maxlen: float, jumps: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Random disjoint intervals of length ``<= maxlen``; half the draws sit on jumps."""
    if jumps.size and rng.random() < 0.5:
        c = np.unique(rng.choice(jumps, size=min(jumps.size, 64)))
        left = rng.random(c.size) * maxlen
        a = np.clip(c - left, 0, 1)
        b = np.clip(a + maxlen * (0.5 + 0.5 * rng.random(c.size)), 0, 1)
        keep = np.concatenate([[True], a[1:] >= b[:-1]])
        return a[keep], b[keep]
    pairs = _random_family(rng, 0.0, 1.0, maxlen)
    return np.array([p[0] for p in pairs]), np.array([p[1] for p in pairs])


def _weighted_osc(f: IntegrandFn, a: np.ndarray, b: np.ndarray, wa: np.ndarray, wb: np.ndarray,
                  F: IntervalSet, comps) -> np.ndarray:
    """``sum (b - a) * omega(f; [wa, wb] ∩ F)``."""
    if a.size == 0:
        return np.zeros(f.dim)
    if isinstance(f, StepFunction):
        om = kernels.step_oscillation(f._bf, f.values, wa, wb, comps[0], comps[1])
        # windows holding an override point go through the exact path
        pts = np.array([float(p) for p in f.points])
        if pts.size:
            touched = np.flatnonzero(((wa[:, None] <= pts) & (pts <= wb[:, None])).any(axis=1))
            for i in touched:
                om[i] = oscillation(f, (Fraction(wa[i]), Fraction(wb[i])), F)
    else:
        om = np.array([oscillation(f, (Fraction(x), Fraction(y)), F) for x, y in zip(wa, wb)])
    return ((b - a)[:, None] * om).sum(axis=0)


def gordon_check(f: IntegrandFn, F: IntervalSet, a, delta, trials: int = 64, seed: int = 0) -> OscillationReport:
    """Sampled check of the oscillation lemma on one ``(f, F, a, delta)``.

    Hypothesis families have mesh ``<= 10 delta`` and bound ``a/5``; for step
    and piecewise-linear maps it is also decided by the sound bound
    ``10 delta * TV_F(f)``.  Conclusion families have mesh ``<= 2 delta``,
    windows enlarged by ``delta`` and bound ``a``.
    """
    a = np.asarray(a, dtype=float).reshape(f.dim)
    delta = float(delta)
    if np.any(a <= 0) or delta <= 0:
        raise InvalidInput("a and delta must be positive")
    rng = np.random.default_rng(seed)
    cc = F.closed_components()
    comps = (np.array([float(u) for u, _ in cc]), np.array([float(v) for _, v in cc]))
    jumps = np.array([float(x) for x in f.breakpoints()[1:-1]])
    exact = None
    if isinstance(f, StepFunction):
        exact = 10 * delta * variation_on(f, F)
    elif isinstance(f, PiecewiseLinear):
        exact = 10 * delta * f.total_variation()
    hyp = np.zeros(f.dim)
    con = np.zeros(f.dim)
    for _ in range(trials):
        ha, hb = _family_arrays(rng, 10 * delta, jumps)
        hyp = np.maximum(hyp, _weighted_osc(f, ha, hb, ha, hb, F, comps))
        ca, cb = _family_arrays(rng, 2 * delta, jumps)
        con = np.maximum(con, _weighted_osc(f, ca, cb, np.maximum(ca - delta, 0), np.minimum(cb + delta, 1), F, comps))
    return OscillationReport(hyp, a / 5, con, a, exact, exact is not None)


# --------------------------------------------------------------------------
# order-Birkhoff certificate from a witness


def _distance_gauge(F: IntervalSet, on_F: Fraction, floor: Fraction) -> Gauge:
    """``on_F`` on ``F``; off ``F`` a step under-approximation of ``dist(t, F)``, floored."""
    comps = F.closed_components()
    pieces = []
    points = {}
    gaps = []
    prev = None
    for c, d in comps:
        if prev is None:
            if c > 0:
                gaps.append((ZERO, c, False, True))
        else:
            gaps.append((prev, c, True, True))
        pieces.append((c, d, on_F))
        prev = d
    if prev is None:
        return Gauge.constant(floor)
    if prev < 1:
        gaps.append((prev, ONE, True, False))
    for u, v, left_side, right_side in gaps:
        cuts = {u, v}
        h = floor
        while h < v - u:
            if left_side and u + h < v:
                cuts.add(u + h)
            if right_side and v - h > u:
                cuts.add(v - h)
            h *= 2
        if left_side and right_side:
            cuts.add((u + v) / 2)
        cuts = sorted(cuts)
        for x, y in zip(cuts, cuts[1:]):
            dl = x - u if left_side else None
            dr = v - y if right_side else None
            dist = min(d for d in (dl, dr) if d is not None)
            pieces.append((x, y, max(dist, floor)))
        if left_side:
            # u is a point of F
            points[u] = on_F
    pieces.sort()
    # merge the F pieces with the gap pieces into one step description
    merged = []
    for x, y, val in pieces:
        if x < y:
            merged.append((x, y, val))
    if merged[-1][1] == ONE and comps[-1][1] == ONE:
        points[ONE] = on_F
    for c, d in comps:
        if c == d:
            points[c] = on_F
    merged = [(x, y, v) for x, y, v in merged]
    return Gauge.from_pieces(merged, points)


def build_oB_certificate(f: IntegrandFn, w: RiemannWitness, M=None, grid: int = 4097,
                         K: int = 16, seed: int = 0) -> OrderCertificate:
    """``oB`` certificate from a witness: gauge ``mesh_n/20`` on ``F_n``, a floored
    distance ladder off it, and ``b_n = 2 (5 p_n + 2 M / n)``."""
    w.validate()
    bound = f.bound(grid)
    M = bound if M is None else np.asarray(M, dtype=float).reshape(f.dim)
    if np.any(bound > M + ATOL):
        raise InvalidInput("integrand exceeds the declared bound M")
    gauges = []
    for n in range(1, len(w) + 1):
        floor = Fraction(1, 1 << (n + 6))
        gauges.append(_distance_gauge(w.F[n - 1], min(w.mesh[n - 1] / 20, Fraction(1, 20 * n)), floor))
    if w.p.rule is None:
        raise InvalidInput("witness sequence has no generating rule")
    rule = w.p.rule.scaled(10) + DecayRule.power(4 * M)
    J = f.integral() if f.closed_form else integrate_norm(f, SpaceSpec.M(f.dim), "MS", 1e-6, K, seed).value
    return OrderCertificate(J, OSequence.from_rule(rule, len(w)), tuple(gauges), "oB", note="witness")


# --------------------------------------------------------------------------
# L-space bridge


@dataclass
class VariationalReport:
    N: int | None
    eps: float
    norm_sum: float
    variational: float
    passed: bool
    reason: str = ""

    def to_dict(self) -> dict:
        return {"N": self.N, "eps": self.eps, "norm_sum": self.norm_sum, "variational": self.variational,
                "passed": self.passed, "reason": self.reason}


def order_to_variational(f: IntegrandFn, cert: OrderCertificate, spec: SpaceSpec, eps: float,
                         K: int = 16, seed: int = 0) -> VariationalReport:
    """At the first level with ``||b_N|| <= eps``: sampled maxima of
    ``sum |‖f(t)‖ - ‖f(t')‖| mu(E)`` and of the variational sum, each against ``2 eps``."""
    if spec.norm_kind != "L":
        raise InvalidInput("the variational bridge needs an L-space backend")
    if spec.dim != f.dim:
        raise InvalidInput("space dimension does not match the integrand")
    N = next((n for n in range(1, len(cert) + 1) if spec.norm(cert.b[n]) <= eps), None)
    if N is None:
        return VariationalReport(None, eps, math.nan, math.nan, False,
                                 f"no stored level has ||b_n|| <= {eps:g}")
    g = cert.gauges[N - 1]
    s1 = s2 = 0.0
    for i, P in enumerate(fine_family(g, partition_kind(cert.kind), K, seed * 7919 + N)):
        if not P.is_array_form:
            continue
        edges, den, tags, _ = P._arr
        alt = alternative_tags(P, g, seed * 31 + i)
        w = np.diff(edges) / den
        n1 = spec.norms(f.evaluate(tags / den))
        n2 = spec.norms(f.evaluate(alt / den))
        s1 = max(s1, float((np.abs(n1 - n2) * w).sum()))
        s2 = max(s2, variational_sum(f, P, spec), variational_sum(f, P.with_tags(alt, "free"), spec))
    ok = s1 <= 2 * eps + ATOL and s2 <= 2 * eps + ATOL
    return VariationalReport(N, eps, s1, s2, ok)


# --------------------------------------------------------------------------
# almost-everywhere transfer


def ae_transfer(f: IntegrandFn, g: IntegrandFn, cert_f: OrderCertificate, diff_points,
                M=None, grid: int = 4097) -> OrderCertificate:
    """Certificate for ``g`` equal to ``f`` off a finite set ``D``.

    Gauges drop to ``eta_n = 2^-(n+10)`` at the points of ``D``; those tags
    then carry sets of total measure below ``2 eta_n`` each, so the sequence
    grows by ``4 M |D| eta_n``.  ``J`` is unchanged.
    """
    if isinstance(diff_points, IntervalSet):
        if diff_points.measure() > 0:
            raise Unsupported("only finite difference sets are supported")
        diff_points = list(diff_points.added)
    try:
        D = sorted({to_fraction(p) for p in diff_points})
    except TypeError:
        raise Unsupported("difference set must be a finite collection of points") from None
    if not D:
        return cert_f
    x = np.linspace(0, 1, grid)
    x = x[~np.isin(x, [float(p) for p in D])]
    if np.any(np.abs(f.evaluate(x) - g.evaluate(x)) > ATOL):
        raise InvalidInput("maps differ away from the declared points")
    bound = np.maximum(f.bound(grid), g.bound(grid))
    for p in D:
        bound = np.maximum(bound, np.maximum(np.abs(f(p)), np.abs(g(p))))
    M = bound if M is None else np.asarray(M, dtype=float).reshape(f.dim)
    gauges = []
    for n, gam in enumerate(cert_f.gauges, start=1):
        eta = Fraction(1, 1 << (n + 10))
        gauges.append(gam.with_points({p: min(gam(p), eta) for p in D}))
    extra = DecayRule.geometric(4 * M * len(D) * 2.0 ** -10, 0.5)
    rule = cert_f.b.rule + extra if cert_f.b.rule is not None else None
    if rule is None:
        raise InvalidInput("certificate sequence has no generating rule")
    return OrderCertificate(cert_f.J, OSequence.from_rule(rule, len(cert_f)), tuple(gauges), cert_f.kind,
                            cert_f.measurable, note="a.e. transfer")


@dataclass
class SweepResult:
    instances: int
    hypothesis_exact: int
    conclusion_held: int
    violations: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations and self.hypothesis_exact == self.instances

    def to_dict(self) -> dict:
        return {"instances": self.instances, "hypothesis_exact": self.hypothesis_exact,
                "conclusion_held": self.conclusion_held, "violations": self.violations, "passed": self.passed}


def gordon_sweep(count: int, seed: int = 0, trials: int = 4) -> SweepResult:
    """Oscillation lemma on ``count`` random step instances with exactly verified hypotheses."""
    from .corpus import random_gordon_instance

    rng = np.random.default_rng(seed)
    exact = held = 0
    bad = []
    for i in range(count):
        f, F, a, delta = random_gordon_instance(rng)
        rep = gordon_check(f, F, a, delta, trials, seed * 100003 + i)
        exact += rep.hypothesis_verified_exactly and rep.hypothesis_holds
        held += rep.conclusion_holds
        if rep.hypothesis_holds and not rep.conclusion_holds:
            bad.append({"instance": i, "f": f.to_spec(), "F": F.to_dict(), "a": a.tolist(),
                        "delta": fraction_str(delta), "conclusion_lhs": rep.conclusion_lhs.tolist()})
    return SweepResult(count, exact, held, bad)
