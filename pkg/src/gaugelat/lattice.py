"""Finite-dimensional Banach lattice backends.

Lattice elements are plain 1-d ``numpy`` float arrays ordered componentwise.
Two norms are supported: a weighted L-norm (additive on the positive cone) and
the max-norm, which is the order-unit norm for ``e = (1, ..., 1)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidInput

#: Absolute tolerance for order comparisons of floating point coordinates.
ATOL = 1e-9


def element(x, dim: int | None = None) -> np.ndarray:
    """Coerce ``x`` to a lattice element, checking finiteness and dimension."""
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    if arr.ndim != 1:
        raise InvalidInput(f"lattice element must be 1-d, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInput("lattice element has non-finite coordinates")
    if dim is not None and arr.shape[0] != dim:
        raise InvalidInput(f"dimension mismatch: expected {dim}, got {arr.shape[0]}")
    return arr


def _pair(x, y) -> tuple[np.ndarray, np.ndarray]:
    x = element(x)
    y = element(y, x.shape[0])
    return x, y


def modulus(x) -> np.ndarray:
    return np.abs(element(x))


def join_meet(x, y) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(x ∨ y, x ∧ y)``."""
    x, y = _pair(x, y)
    return np.maximum(x, y), np.minimum(x, y)


def leq(x, y, atol: float = ATOL) -> bool:
    """Componentwise ``x <= y`` up to ``atol``."""
    x, y = _pair(x, y)
    return bool(np.all(x <= y + atol))


def ones(dim: int) -> np.ndarray:
    return np.ones(dim)


@dataclass(frozen=True)
class SpaceSpec:
    """A finite-dimensional lattice with componentwise order.

    ``norm_kind`` is ``"L"`` (weighted sum of moduli) or ``"M"`` (max of moduli).
    """

    dim: int
    norm_kind: str = "M"
    weights: tuple[float, ...] | None = None

    def __post_init__(self):
        if not isinstance(self.dim, (int, np.integer)) or self.dim < 1:
            raise InvalidInput("dim must be a positive integer")
        if self.norm_kind not in ("L", "M"):
            raise InvalidInput(f"unknown norm kind {self.norm_kind!r}")
        if self.norm_kind == "L":
            w = self.weights if self.weights is not None else (1.0,) * self.dim
            w = tuple(float(v) for v in w)
            if len(w) != self.dim or not all(v > 0 and np.isfinite(v) for v in w):
                raise InvalidInput("L weights must be strictly positive, one per coordinate")
            object.__setattr__(self, "weights", w)
        elif self.weights is not None:
            raise InvalidInput("the M backend takes no weights")

    @classmethod
    def L(cls, weights: Sequence[float]) -> "SpaceSpec":
        return cls(len(weights), "L", tuple(weights))

    @classmethod
    def M(cls, dim: int) -> "SpaceSpec":
        return cls(dim, "M")

    @property
    def weight_array(self) -> np.ndarray:
        return np.asarray(self.weights if self.weights is not None else (1.0,) * self.dim)

    def norm(self, x) -> float:
        return norm(x, self)

    def norms(self, xs: np.ndarray) -> np.ndarray:
        """Row-wise norms of a ``(n, dim)`` array."""
        xs = np.abs(np.asarray(xs, dtype=float))
        if xs.shape[-1] != self.dim:
            raise InvalidInput("dimension mismatch")
        if self.norm_kind == "L":
            return xs @ self.weight_array
        return xs.max(axis=-1)

    def to_dict(self) -> dict:
        d = {"dim": int(self.dim), "norm": self.norm_kind}
        if self.norm_kind == "L":
            d["weights"] = list(self.weights)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SpaceSpec":
        try:
            return cls(int(d["dim"]), d["norm"], tuple(d["weights"]) if d.get("weights") else None)
        except KeyError as exc:
            raise InvalidInput(f"space spec missing field {exc}") from None

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def norm(x, spec: SpaceSpec) -> float:
    x = element(x, spec.dim)
    return float(spec.norms(x[None, :])[0])


# --------------------------------------------------------------------------
# (o)-sequences


@dataclass(frozen=True)
class DecayTerm:
    """One summand ``coef * n**(-rate)`` (power) or ``coef * rate**n`` (geometric)."""

    coef: tuple[float, ...]
    kind: str = "power"
    rate: float = 1.0

    def __post_init__(self):
        if self.kind not in ("power", "geometric", "constant"):
            raise InvalidInput(f"unknown decay kind {self.kind!r}")

    def evaluate(self, n: int) -> np.ndarray:
        c = np.asarray(self.coef, dtype=float)
        if self.kind == "power":
            return c * float(n) ** (-self.rate)
        if self.kind == "geometric":
            return c * self.rate ** n
        return c.copy()

    def limit(self) -> np.ndarray:
        c = np.asarray(self.coef, dtype=float)
        vanishes = (self.kind == "power" and self.rate > 0) or (
            self.kind == "geometric" and 0 <= self.rate < 1
        )
        if vanishes:
            return np.zeros_like(c)
        if self.kind == "power" and self.rate == 0 or self.kind == "constant":
            return c
        return np.where(c == 0, 0.0, np.inf)

    def to_dict(self) -> dict:
        return {"coef": list(self.coef), "kind": self.kind, "rate": self.rate}


@dataclass(frozen=True)
class DecayRule:
    """Symbolic generating rule ``b_n = sum of terms``; its limit is decidable."""

    terms: tuple[DecayTerm, ...]

    @classmethod
    def power(cls, coef, rate: float = 1.0) -> "DecayRule":
        return cls((DecayTerm(tuple(element(coef).tolist()), "power", rate),))

    @classmethod
    def geometric(cls, coef, ratio: float) -> "DecayRule":
        return cls((DecayTerm(tuple(element(coef).tolist()), "geometric", ratio),))

    @classmethod
    def constant(cls, coef) -> "DecayRule":
        return cls((DecayTerm(tuple(element(coef).tolist()), "constant", 0.0),))

    def scaled(self, factor: float) -> "DecayRule":
        return DecayRule(
            tuple(DecayTerm(tuple(factor * c for c in t.coef), t.kind, t.rate) for t in self.terms)
        )

    def __add__(self, other: "DecayRule") -> "DecayRule":
        return DecayRule(self.terms + other.terms)

    def evaluate(self, n: int) -> np.ndarray:
        return sum(t.evaluate(n) for t in self.terms)

    def limit(self) -> np.ndarray:
        return sum(t.limit() for t in self.terms)

    def describe(self) -> str:
        parts = []
        for t in self.terms:
            c = ",".join(f"{v:g}" for v in t.coef)
            if t.kind == "power":
                parts.append(f"({c})/n^{t.rate:g}")
            elif t.kind == "geometric":
                parts.append(f"({c})*{t.rate:g}^n")
            else:
                parts.append(f"({c})")
        return " + ".join(parts)

    def to_dict(self) -> dict:
        return {"terms": [t.to_dict() for t in self.terms]}

    @classmethod
    def from_dict(cls, d: dict) -> "DecayRule":
        return cls(tuple(DecayTerm(tuple(t["coef"]), t["kind"], float(t["rate"])) for t in d["terms"]))


@dataclass(frozen=True)
class OSequence:
    """Finite prefix ``b_1..b_N`` of an (o)-sequence plus its generating rule."""

    terms: np.ndarray
    rule: DecayRule | None = None

    def __post_init__(self):
        arr = np.asarray(self.terms, dtype=float)
        if arr.ndim == 1:
            arr = arr[:, None]
        if arr.ndim != 2 or arr.shape[0] == 0:
            raise InvalidInput("an (o)-sequence needs at least one term")
        arr.setflags(write=False)
        object.__setattr__(self, "terms", arr)

    @classmethod
    def from_rule(cls, rule: DecayRule, length: int) -> "OSequence":
        if length < 1:
            raise InvalidInput("length must be >= 1")
        return cls(np.array([rule.evaluate(n) for n in range(1, length + 1)]), rule)

    def __len__(self) -> int:
        return self.terms.shape[0]

    @property
    def dim(self) -> int:
        return self.terms.shape[1]

    def __getitem__(self, n: int) -> np.ndarray:
        """1-based access: ``b[n]`` is ``b_n``."""
        if not 1 <= n <= len(self):
            raise IndexError(f"level {n} outside stored prefix 1..{len(self)}")
        return self.terms[n - 1]

    def scaled(self, factor: float) -> "OSequence":
        return OSequence(self.terms * factor, self.rule.scaled(factor) if self.rule else None)

    def to_dict(self) -> dict:
        return {
            "terms": self.terms.tolist(),
            "rule": self.rule.to_dict() if self.rule else None,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "OSequence":
        return cls(np.asarray(d["terms"], dtype=float), DecayRule.from_dict(d["rule"]) if d.get("rule") else None)


@dataclass(frozen=True)
class OSeqVerdict:
    valid: bool
    index: int | None = None
    reason: str = ""

    def __bool__(self) -> bool:
        return self.valid


def validate_osequence(b: OSequence, spec: SpaceSpec | None = None) -> OSeqVerdict:
    """Check positivity, monotone decrease and a vanishing generating rule.

    The returned index is 1-based and points at the first offending term.
    """
    if len(b) == 0:
        raise InvalidInput("empty (o)-sequence")
    if spec is not None and b.dim != spec.dim:
        raise InvalidInput("dimension mismatch between sequence and space")
    t = b.terms
    for i in range(len(b)):
        if np.any(t[i] < -ATOL):
            return OSeqVerdict(False, i + 1, "negative term")
        if i and np.any(t[i] > t[i - 1] + ATOL):
            return OSeqVerdict(False, i + 1, "not decreasing")
    if len(b) >= 2:
        sp = spec or SpaceSpec.M(b.dim)
        if not norm(t[-1], sp) < norm(t[0], sp):
            return OSeqVerdict(False, len(b), "norm of last term does not drop below the first")
    if b.rule is None:
        return OSeqVerdict(False, None, "no generating rule")
    lim = np.asarray(b.rule.limit(), dtype=float)
    if np.any(lim != 0):
        return OSeqVerdict(False, None, "generating rule does not tend to 0")
    for i in range(len(b)):
        if not np.allclose(b.rule.evaluate(i + 1), t[i], rtol=1e-12, atol=ATOL):
            return OSeqVerdict(False, i + 1, "stored term disagrees with the rule")
    return OSeqVerdict(True)


def envelope_power(values: Iterable[np.ndarray], rate: float = 1.0) -> DecayRule:
    """Smallest ``c / n**rate`` rule dominating ``values[n-1]`` for every stored n."""
    vals = np.asarray(list(values), dtype=float)
    n = np.arange(1, vals.shape[0] + 1, dtype=float)[:, None]
    c = np.max(vals * n**rate, axis=0)
    return DecayRule.power(c, rate)
