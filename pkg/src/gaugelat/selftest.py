"""Fast invariant suite behind ``gaugelat selftest``.

Each check prints one line; the suite passes iff all of them do.
"""

from __future__ import annotations

import time
from fractions import Fraction

import numpy as np

from .corpus import (make_coset_model, oracle_integral, random_increasing_step, random_step,
                     random_step_gauge, variational_contrast)
from .functions import PiecewiseLinear, linear
from .integrate import riemann_sum_exact
from .order import certify, check_certificate, gordon_sweep, henstock_lemma_check, parallelo_check
from .partitions import cousin, free_to_perron, is_fine, sample_fine_partitions


def _cousin_fine(rng, K):
    return all(is_fine(cousin(g), g) for g in (random_step_gauge(rng) for _ in range(K)))


def _perron_conversion(rng, K):
    for _ in range(K):
        g = random_step_gauge(rng, min_exp=8)
        f = random_step(rng, 2)
        P = sample_fine_partitions(g, 1, int(rng.integers(1 << 30)), "free")[0]
        Q = free_to_perron(P, g)
        if not (is_fine(Q, g) and Q.is_perron() and riemann_sum_exact(f, P) == riemann_sum_exact(f, Q)):
            return False
    return True


def _monotone(rng, K):
    for f in [linear(1)] + [random_increasing_step(rng) for _ in range(3)]:
        c = certify(f)
        if not check_certificate(f, c, K, 1) or not henstock_lemma_check(f, c, max(2, K // 4), 1):
            return False
        if np.max(np.abs(c.J - oracle_integral(f))) > float(np.max(c.b[len(c)])):
            return False
    return True


def _parallelo(rng, K):
    f = PiecewiseLinear([0, 1], [[-0.5], [0.5]])
    return parallelo_check(f, certify(f)).passed


def _phillips(rng, K):
    vm, vl, _ = variational_contrast(8, 2, 4)
    return vm >= 1 - 2.0 ** -6 - 1e-9 and vl <= 2.0 ** -5 + 1e-9


def _gordon(rng, K):
    return gordon_sweep(50, int(rng.integers(1 << 30)), 2).passed


def _coset_certificate(rng, K):
    f = make_coset_model(4, 1)
    return check_certificate(f, certify(f, 8), max(2, K // 4), 2).passed


CHECKS = (
    ("cousin partitions are fine", _cousin_fine),
    ("free-to-Perron keeps sums exactly", _perron_conversion),
    ("monotone certificates and Henstock sums", _monotone),
    ("variation measure of t - 1/2", _parallelo),
    ("coset-model step certificate", _coset_certificate),
    ("coset contrast k=8 m=2", _phillips),
    ("oscillation lemma sweep", _gordon),
)


def run_selftest(seed: int = 0, K: int = 16, out=print) -> bool:
    rng = np.random.default_rng(seed)
    ok = True
    for name, check in CHECKS:
        t0 = time.perf_counter()
        passed = bool(check(rng, K))
        ok &= passed
        out(f"{'PASS' if passed else 'FAIL'}  {name}  ({time.perf_counter() - t0:.2f} s)")
    return ok
