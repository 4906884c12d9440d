"""Pure-Python twin of the compiled kernel.

Consumes the BitGenerator in exactly the same order as ``_kernel.pyx`` so both
backends produce bit-identical trajectories.  Used when the extension is not
built and as the reference in backend-equivalence tests.
"""
from __future__ import annotations

import math

import numpy as np

_LOW = np.uint64(0xFFFFFFFF)
_SHIFT = np.uint64(32)


def _accepted(words: np.ndarray, bound: int, thresh: int) -> np.ndarray:
    halves = np.empty(2 * words.size, dtype=np.uint64)
    halves[0::2] = words >> _SHIFT
    halves[1::2] = words & _LOW
    prod = halves * np.uint64(bound)
    ok = (prod & _LOW) >= np.uint64(thresh)
    return (prod >> _SHIFT)[ok]


def _uniform_batch(bg, K: int, bound: int, thresh: int) -> np.ndarray:
    """K uniform draws in [0, bound): two per 64-bit word, exact rejection."""
    out = []
    need = K
    while need > 0:
        words = bg.random_raw((need + 1) // 2)
        got = _accepted(np.atleast_1d(np.asarray(words, dtype=np.uint64)), bound, thresh)[:need]
        out.append(got)
        need -= got.size
    return np.concatenate(out).astype(np.int64) if out else np.empty(0, dtype=np.int64)


def _uniform_one(bg, bound: int, thresh: int) -> int:
    while True:
        got = _accepted(np.asarray([bg.random_raw()], dtype=np.uint64), bound, thresh)
        if got.size:
            return int(got[0])


def simulate(bitgen, occ, n2, out_times, special_edges, cur_slot, blk_lo, blk_hi, pair_x,
             snap_sites, cur_out, blk_out, pair_out, snap_out, counters):
    gen = np.random.Generator(bitgen)
    state = occ.tolist()
    E = len(state) - 1
    m = len(special_edges)
    bulk = np.setdiff1d(np.arange(E, dtype=np.int64), np.asarray(special_edges, dtype=np.int64))
    B = bulk.size
    special_edges = [int(e) for e in special_edges]
    cur_slot = [int(c) for c in cur_slot]
    blk_lo = [int(v) for v in blk_lo]
    blk_hi = [int(v) for v in blk_hi]
    pair_x = [int(v) for v in pair_x]
    snap_sites = np.asarray(snap_sites, dtype=np.int64)
    thresh_bulk = (2**32 - B) % B if B else 0
    thresh_spec = (2**32 - m) % m if m else 0
    rate_bulk = float(B * n2)
    rate_spec = float(m * n2)

    cur = [0] * cur_out.shape[1]
    bval = [sum(state[a : b + 1]) for a, b in zip(blk_lo, blk_hi)]
    bint = [0.0] * len(bval)
    pval = [state[x] * state[x + 1] for x in pair_x]
    pint = [0.0] * len(pval)
    t = 0.0
    events = crossings = specials = 0

    for k, target in enumerate(out_times):
        target = float(target)
        while True:
            tn = t + gen.standard_exponential() / rate_spec if m else math.inf
            final = tn >= target
            if final:
                tn = target
            dt = tn - t
            if B:
                K = int(gen.poisson(rate_bulk * dt))
                events += K
                if K:
                    for e in bulk[_uniform_batch(bitgen, K, B, thresh_bulk)].tolist():
                        state[e], state[e + 1] = state[e + 1], state[e]
            for b in range(len(bint)):
                bint[b] += bval[b] * dt
            for b in range(len(pint)):
                pint[b] += pval[b] * dt
            t = tn
            if final:
                break
            j = _uniform_one(bitgen, m, thresh_spec)
            e = special_edges[j]
            events += 1
            specials += 1
            a0, a1 = state[e], state[e + 1]
            if a0 != a1:
                if cur_slot[j] >= 0:
                    cur[cur_slot[j]] += a0 - a1
                if e == 0 or e == E - 1:
                    crossings += 1
                state[e], state[e + 1] = a1, a0
                for b in range(len(bval)):
                    if blk_lo[b] == e + 1:
                        bval[b] += a0 - a1
                    if blk_hi[b] == e:
                        bval[b] += a1 - a0
                pval = [state[x] * state[x + 1] for x in pair_x]
        cur_out[k, :] = cur
        blk_out[k, :] = bint
        pair_out[k, :] = pint
        if snap_sites.size:
            snap_out[k, :] = np.asarray(state, dtype=np.uint8)[snap_sites]
    occ[:] = state
    counters[0] += events
    counters[1] += crossings
    counters[2] += specials
    return t


def pair_adjacency(bitgen, x1, x2, n2, horizon, grid_times, weights, origin, lo, hi):
    gen = np.random.Generator(bitgen)
    rate = 4.0 * n2
    t = acc = 0.0
    a, b = int(x1), int(x2)
    gi = 0
    ng = len(grid_times)
    grid = [float(g) for g in grid_times]
    while True:
        tn = t + gen.standard_exponential() / rate
        if tn > horizon:
            tn = horizon
        if abs(a - b) == 1:
            z = min(a, b) - origin
            h = t
            while h < tn:
                while gi + 1 < ng and grid[gi + 1] <= h:
                    gi += 1
                if gi + 1 < ng and grid[gi + 1] < tn:
                    acc += weights[gi, z] * (grid[gi + 1] - h)
                    h = grid[gi + 1]
                else:
                    acc += weights[gi, z] * (tn - h)
                    h = tn
        t = tn
        if t >= horizon:
            break
        r = int(bitgen.random_raw())
        which = r >> 63
        left = (r >> 62) & 1
        if which == 0:
            tgt = a - 1 if left else a + 1
            if tgt < lo or tgt > hi:
                continue
            if tgt == b:
                if a < b:
                    a, b = b, a
            else:
                a = tgt
        else:
            tgt = b - 1 if left else b + 1
            if tgt < lo or tgt > hi:
                continue
            if tgt == a:
                if b < a:
                    a, b = b, a
            else:
                b = tgt
    return acc
