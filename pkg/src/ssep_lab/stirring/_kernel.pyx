# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled stirring kernel.

Edge ``e`` joins window sites ``e`` and ``e + 1``.  Edges whose swaps change a
recorded quantity ("special" edges) get an explicit event stream of rate
``m n^2``; the remaining ``B = E - m`` edges are driven in bulk by
``Poisson(B n^2 dt)`` uniform picks among them between consecutive special
events.  Random numbers come from a numpy BitGenerator through
its C capsule, consumed in the same order as the pure-Python kernel.
"""
from libc.stdint cimport uint64_t, uint32_t, uint16_t, uint8_t, int64_t
from libc.string cimport memcpy
from libc.math cimport INFINITY
from cpython.pycapsule cimport PyCapsule_GetPointer
from numpy.random cimport bitgen_t
from numpy.random.c_distributions cimport random_poisson, random_standard_exponential


cdef inline uint32_t _uniform(bitgen_t *rng, uint32_t bound, uint32_t thresh) noexcept nogil:
    # one fresh word per call; high half first, low half on rejection
    cdef uint64_t r, m
    while True:
        r = rng.next_uint64(rng.state)
        m = (r >> 32) * bound
        if <uint32_t>m >= thresh:
            return <uint32_t>(m >> 32)
        m = (<uint64_t><uint32_t>r) * bound
        if <uint32_t>m >= thresh:
            return <uint32_t>(m >> 32)


cdef inline void _swap(uint8_t *p) noexcept nogil:
    cdef uint16_t v
    memcpy(&v, p, 2)
    v = <uint16_t>((v >> 8) | (v << 8))
    memcpy(p, &v, 2)


cdef inline void _bulk(bitgen_t *rng, int64_t K, uint32_t B, uint32_t thresh,
                       uint8_t *occ, const int64_t *edges) noexcept nogil:
    # K uniform picks among the B bulk edges, two 32-bit halves per word
    cdef int64_t left = K
    cdef uint64_t r, m
    while left >= 2:
        r = rng.next_uint64(rng.state)
        m = (r >> 32) * B
        if <uint32_t>m >= thresh:
            _swap(occ + edges[m >> 32])
            left -= 1
        m = (<uint64_t><uint32_t>r) * B
        if <uint32_t>m >= thresh:
            _swap(occ + edges[m >> 32])
            left -= 1
    while left > 0:
        r = rng.next_uint64(rng.state)
        m = (r >> 32) * B
        if <uint32_t>m >= thresh:
            _swap(occ + edges[m >> 32])
            left -= 1
            break
        m = (<uint64_t><uint32_t>r) * B
        if <uint32_t>m >= thresh:
            _swap(occ + edges[m >> 32])
            left -= 1


def simulate(bitgen, uint8_t[::1] occ, double n2, const double[::1] out_times,
             const int64_t[::1] special_edges, const int64_t[::1] cur_slot,
             const int64_t[::1] blk_lo, const int64_t[::1] blk_hi, const int64_t[::1] pair_x,
             const int64_t[::1] snap_sites,
             int64_t[:, ::1] cur_out, double[:, ::1] blk_out, double[:, ::1] pair_out,
             uint8_t[:, ::1] snap_out, int64_t[::1] counters):
    """Run the dynamics from time 0 through every output time.

    ``cur_slot[j]`` is the current accumulator of special edge ``j`` or -1.
    ``counters`` receives [events, boundary crossings, special events].
    """
    cdef bitgen_t *rng = <bitgen_t *> PyCapsule_GetPointer(bitgen.capsule, "BitGenerator")
    cdef Py_ssize_t nsite = occ.shape[0]
    cdef uint32_t E = <uint32_t>(nsite - 1)
    cdef Py_ssize_t m = special_edges.shape[0]
    cdef Py_ssize_t nb = blk_lo.shape[0], npair = pair_x.shape[0], ncur = cur_out.shape[1]
    cdef Py_ssize_t nsnap = snap_sites.shape[0], nout = out_times.shape[0]
    cdef uint32_t B = <uint32_t>(E - m)
    cdef uint32_t thresh_bulk = 0
    cdef uint32_t thresh_spec = 0
    cdef double rate_bulk = B * n2
    cdef double rate_spec = m * n2
    cdef double t = 0.0, tn, dt, target
    cdef int64_t K
    cdef Py_ssize_t k, j, b, e
    cdef int final
    cdef uint8_t a0, a1

    import numpy as np
    bulk_np = np.setdiff1d(np.arange(E, dtype=np.int64), np.asarray(special_edges))
    cdef const int64_t[::1] bulk = bulk_np
    if B > 0:
        thresh_bulk = (<uint32_t>(-B)) % B
    if m > 0:
        thresh_spec = (<uint32_t>(-(<uint32_t>m))) % (<uint32_t>m)

    cur_np = np.zeros(max(ncur, 1), dtype=np.int64)
    bv_np = np.zeros(max(nb, 1), dtype=np.int64)
    bi_np = np.zeros(max(nb, 1), dtype=np.float64)
    pv_np = np.zeros(max(npair, 1), dtype=np.int64)
    pi_np = np.zeros(max(npair, 1), dtype=np.float64)
    cdef int64_t[::1] cur = cur_np
    cdef int64_t[::1] bval = bv_np
    cdef double[::1] bint = bi_np
    cdef int64_t[::1] pval = pv_np
    cdef double[::1] pint = pi_np

    for b in range(nb):
        for j in range(blk_lo[b], blk_hi[b] + 1):
            bval[b] += occ[j]
    for b in range(npair):
        pval[b] = occ[pair_x[b]] * occ[pair_x[b] + 1]

    with nogil:
        for k in range(nout):
            target = out_times[k]
            while True:
                if m > 0:
                    tn = t + random_standard_exponential(rng) / rate_spec
                else:
                    tn = INFINITY
                final = tn >= target
                if final:
                    tn = target
                dt = tn - t
                if B > 0:
                    K = random_poisson(rng, rate_bulk * dt)
                    _bulk(rng, K, B, thresh_bulk, &occ[0], &bulk[0])
                    counters[0] += K
                for b in range(nb):
                    bint[b] += bval[b] * dt
                for b in range(npair):
                    pint[b] += pval[b] * dt
                t = tn
                if final:
                    break
                # special event
                j = _uniform(rng, <uint32_t>m, thresh_spec)
                e = special_edges[j]
                counters[0] += 1
                counters[2] += 1
                a0 = occ[e]
                a1 = occ[e + 1]
                if a0 != a1:
                    if cur_slot[j] >= 0:
                        cur[cur_slot[j]] += <int64_t>a0 - <int64_t>a1
                    if e == 0 or e == E - 1:
                        counters[1] += 1
                    occ[e] = a1
                    occ[e + 1] = a0
                    for b in range(nb):
                        if blk_lo[b] == e + 1:
                            bval[b] += <int64_t>a0 - <int64_t>a1
                        if blk_hi[b] == e:
                            bval[b] += <int64_t>a1 - <int64_t>a0
                    for b in range(npair):
                        pval[b] = occ[pair_x[b]] * occ[pair_x[b] + 1]
            for b in range(ncur):
                cur_out[k, b] = cur[b]
            for b in range(nb):
                blk_out[k, b] = bint[b]
            for b in range(npair):
                pair_out[k, b] = pint[b]
            for b in range(nsnap):
                snap_out[k, b] = occ[snap_sites[b]]
    return t


def pair_adjacency(bitgen, int64_t x1, int64_t x2, double n2, double horizon,
                   const double[::1] grid_times, const double[:, ::1] weights, int64_t origin,
                   int64_t lo, int64_t hi):
    """Two labelled stirring particles started at x1 != x2 on sites [lo, hi].

    Returns ``int_0^horizon w(r, z_r) dr`` where ``z_r`` is the left site of the
    pair while the particles are adjacent and ``w`` is tabulated on
    ``grid_times`` (piecewise constant, left value) by ``weights[i, z - origin]``.
    Uniformised: each particle proposes a left or right move at rate n^2; a
    proposal onto the other particle swaps them when made by the left particle
    and is void when made by the right one, so the shared edge rings at rate n^2.
    """
    cdef bitgen_t *rng = <bitgen_t *> PyCapsule_GetPointer(bitgen.capsule, "BitGenerator")
    cdef double rate = 4.0 * n2
    cdef double t = 0.0, tn, acc = 0.0, h
    cdef int64_t a = x1, b = x2, z, tgt
    cdef uint64_t r
    cdef Py_ssize_t gi = 0, ng = grid_times.shape[0]
    cdef int which, left
    with nogil:
        while True:
            tn = t + random_standard_exponential(rng) / rate
            if tn > horizon:
                tn = horizon
            if a - b == 1 or b - a == 1:
                z = a if a < b else b
                # integrate the tabulated weight over [t, tn]
                h = t
                while h < tn:
                    while gi + 1 < ng and grid_times[gi + 1] <= h:
                        gi += 1
                    if gi + 1 < ng and grid_times[gi + 1] < tn:
                        acc += weights[gi, z - origin] * (grid_times[gi + 1] - h)
                        h = grid_times[gi + 1]
                    else:
                        acc += weights[gi, z - origin] * (tn - h)
                        h = tn
            t = tn
            if t >= horizon:
                break
            r = rng.next_uint64(rng.state)
            which = <int>(r >> 63)           # 0 moves a, 1 moves b
            left = <int>((r >> 62) & 1)      # 1 means a step to the left
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
