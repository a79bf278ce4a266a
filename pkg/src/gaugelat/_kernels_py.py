"""Pure numpy implementations of the hot loops (fallback for ``_kernels``)."""

from __future__ import annotations

import numpy as np


def piece_index(breaks, t):
    """Index of the half-open piece ``[breaks[i], breaks[i+1])`` holding each ``t``.

    Points at or beyond the last breakpoint go to the last piece.
    """
    breaks = np.asarray(breaks, dtype=np.float64)
    idx = np.searchsorted(breaks, np.asarray(t, dtype=np.float64), side="right") - 1
    return np.clip(idx, 0, breaks.shape[0] - 2)


def piece_masses(breaks, tags, masses):
    """Total mass of the tags falling in each piece of a step function."""
    idx = piece_index(breaks, tags)
    return np.bincount(idx, weights=np.asarray(masses, dtype=np.float64), minlength=breaks.shape[0] - 1)


def piece_masses_int(breaks, tags, masses):
    """Integer version of :func:`piece_masses` (exact when masses are numerators)."""
    idx = piece_index(breaks, tags)
    out = np.zeros(breaks.shape[0] - 1, dtype=np.int64)
    np.add.at(out, idx, np.asarray(masses, dtype=np.int64))
    return out


def step_oscillation(breaks, values, lo, hi, comp_lo, comp_hi):
    """Componentwise sup - inf of a step function over ``[lo_i, hi_i] ∩ F``.

    ``F`` is a union of closed components ``[comp_lo_q, comp_hi_q]``; an empty
    intersection gives zero.  The last piece is closed at its right end.
    """
    breaks = np.asarray(breaks, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    lo = np.asarray(lo, dtype=np.float64)
    hi = np.asarray(hi, dtype=np.float64)
    npieces, dim = values.shape
    out = np.zeros((lo.shape[0], dim))
    right = breaks[1:].copy()
    right[-1] = np.inf
    for i in range(lo.shape[0]):
        u = np.maximum(lo[i], comp_lo)
        v = np.minimum(hi[i], comp_hi)
        keep = u <= v
        if not np.any(keep):
            continue
        u, v = u[keep], v[keep]
        # piece p meets closed [u, v] iff breaks[p] <= v and right[p] > u
        hit = np.zeros(npieces, bool)
        for uu, vv in zip(u, v):
            hit |= (breaks[:-1] <= vv) & (right > uu)
        vals = values[hit]
        out[i] = vals.max(axis=0) - vals.min(axis=0)
    return out


def coset_tag(i, s, R, n):
    """Tag piece for the i-th mesh cell of ``s`` pieces.

    Preference: odd piece whose residue is absent from the cell (scanning
    forward cyclically from the cell's right end), then any absent residue,
    then an odd piece inside the cell, then the cell's first piece.
    """
    start = i * s
    full = s >= R
    b0 = start % R
    fallback = -1
    if not full:
        p = (start + s) % n
        for _ in range(n):
            if (p - b0) % R >= s:
                if p % 2 == 1:
                    return p
                if fallback < 0:
                    fallback = p
            p = (p + 1) % n
    if fallback >= 0:
        return fallback
    for p in range(start, start + s):
        if p % 2 == 1:
            return p
    return start


def coset_contrast(k, m, j, res_weights):
    """Variational sums of the coset model on the uniform mesh-2^-j partition.

    Returns ``(V_M, V_L, tags)`` where ``tags`` are the chosen tag pieces and
    ``res_weights[r]`` is the total L-weight of the coordinates of residue ``r``.
    """
    n = 1 << k
    R = 1 << (k - m)
    s = 1 << (k - j)
    res_weights = np.asarray(res_weights, dtype=np.float64)
    scale_piece = 2.0 ** (-k)
    scale_set = 2.0 ** (-j)
    vm = 0.0
    vl = 0.0
    tags = np.empty(1 << j, dtype=np.int64)
    for i in range(1 << j):
        counts = np.bincount(np.arange(i * s, (i + 1) * s) % R, minlength=R).astype(np.float64)
        diff = -counts * scale_piece
        p = coset_tag(i, s, R, n)
        tags[i] = p
        diff[p % R] += scale_set
        a = np.abs(diff)
        vm += a.max()
        # sequential sum so both backends round identically
        vl += float(np.cumsum(a * res_weights)[-1])
    return vm, vl, tags
