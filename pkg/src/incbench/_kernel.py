"""Compiled sliding-window Z-liar counter.

The window at stream offset ``p`` has value ``V = sum(bits[p+t] << t)``.
Testing every window by long division is dominated by the divide, so the
kernel keeps two cheap rolling quantities instead:

* ``low = V mod 2**a`` (the low ``a`` stream bits), and
* ``res = V mod r`` where ``q = 2**a * r`` with ``r`` odd; halving is
  invertible modulo an odd ``r``, so sliding one bit is
  ``res' = (res - b_p) / 2 + b_{p+m} * 2**(m-1)  (mod r)``.

Together they fix the first base-``q`` digit through a CRT lookup.  Only
windows whose first digit is an allowed liar digit get the exact multi-limb
division, read straight from a bit-reversed packed copy of the stream.
"""

import numba as nb
import numpy as np

_MASK32 = np.uint64(0xFFFFFFFF)


@nb.njit(nogil=True, cache=True)
def _load_limbs(rbytes, p, m, limbs):
    nl = limbs.shape[0]
    for i in range(nl):
        bitpos = p + 32 * i
        base = bitpos >> 3
        w = np.uint64(0)
        for j in range(7, -1, -1):
            w = (w << np.uint64(8)) | np.uint64(rbytes[base + j])
        w = (w >> np.uint64(bitpos & 7)) & _MASK32
        rem = m - 32 * i
        if rem < 32:
            w &= (np.uint64(1) << np.uint64(rem)) - np.uint64(1)
        limbs[i] = w


@nb.njit(nogil=True, cache=True)
def _mod_small(limbs, d):
    dd = np.uint64(d)
    r = np.uint64(0)
    for i in range(limbs.shape[0] - 1, -1, -1):
        r = ((r << np.uint64(32)) | limbs[i]) % dd
    return np.int64(r)


@nb.njit(nogil=True, cache=True)
def _digits_ok(limbs, q, k, allowed):
    qq = np.uint64(q)
    for _ in range(k):
        r = np.uint64(0)
        for i in range(limbs.shape[0] - 1, -1, -1):
            cur = (r << np.uint64(32)) | limbs[i]
            quo = cur // qq
            r = cur - quo * qq
            limbs[i] = quo
        if allowed[r] == 0:
            return False
    return True


@nb.njit(nogil=True, cache=True)
def count_zliars(bits, rbytes, w_start, w_stop, step, m, q, k, allowed, crt, a, r, topc, positions):
    """Count windows ``w_start <= w < w_stop`` (offset ``w * step``) that are Z-liars.

    Returns ``(count, stored)``; the first ``positions.shape[0]`` hit offsets are
    written to ``positions`` in increasing order.
    """
    limbs = np.zeros((m + 31) // 32, np.uint64)
    lowmask = (1 << a) - 1
    cap = positions.shape[0]
    count = 0
    stored = 0
    res = np.int64(0)
    low = np.int64(0)
    for w in range(w_start, w_stop):
        p = w * step
        if w == w_start or step >= m:
            _load_limbs(rbytes, p, m, limbs)
            res = _mod_small(limbs, r)
            low = np.int64(limbs[0]) & lowmask
        else:
            for s in range(p - step, p):
                x = res - np.int64(bits[s])
                x += r * (x < 0)
                x += r * (x & 1)
                x >>= 1
                x += topc * np.int64(bits[s + m])
                x -= r * (x >= r)
                res = x
                low = (low >> 1) | (np.int64(bits[s + a]) << (a - 1))
        if crt[low * r + res] == 0:
            continue
        _load_limbs(rbytes, p, m, limbs)
        if _digits_ok(limbs, q, k, allowed):
            if stored < cap:
                positions[stored] = p
                stored += 1
            count += 1
    return count, stored
