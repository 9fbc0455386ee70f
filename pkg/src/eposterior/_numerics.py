"""Deterministic one-dimensional search primitives.

Bisection and golden-section search, each in a scalar and an array
flavour. The array versions run the same fixed iteration schedule on
every element so batched results are bit-identical to looping.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import NumericError

INVPHI = (math.sqrt(5.0) - 1.0) / 2.0  # 1/phi ~ 0.618


def bisect(f, lo: float, hi: float, tol: float = 1e-12, max_iter: int = 400) -> float:
    """Root of ``f`` on ``[lo, hi]`` where ``f(lo) <= 0 <= f(hi)`` (or reversed)."""
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if (flo > 0) == (fhi > 0):
        raise NumericError(f"root not bracketed on [{lo}, {hi}]")
    increasing = fhi > 0
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi) or hi - lo <= tol:
            break
        fm = f(mid)
        if fm == 0.0:
            return mid
        if (fm > 0) == increasing:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def bisect_increasing(f, lo, hi, iters: int = 200):
    """Vectorised bisection for an elementwise increasing ``f`` with ``f(lo) <= 0 < f(hi)``.

    ``lo`` and ``hi`` are arrays of equal shape. Every element runs the
    same number of halvings (``iters``); 200 exhausts double precision
    for any finite bracket.
    """
    lo = np.array(lo, dtype=float, copy=True)
    hi = np.array(hi, dtype=float, copy=True)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        up = f(mid) > 0
        hi = np.where(up, mid, hi)
        lo = np.where(up, lo, mid)
    return 0.5 * (lo + hi)


def golden_max(f, lo: float, hi: float, tol: float = 1e-10, max_iter: int = 500):
    """Maximise a unimodal ``f`` on ``[lo, hi]``.

    Returns ``(x, f(x))`` for the best point seen, endpoints included, so
    the result is never worse than either end of the bracket.
    """
    a, b = float(lo), float(hi)
    c = b - INVPHI * (b - a)
    d = a + INVPHI * (b - a)
    fc, fd = f(c), f(d)
    best_x, best_f = (c, fc) if fc >= fd else (d, fd)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - INVPHI * (b - a)
            fc = f(c)
            if fc > best_f:
                best_x, best_f = c, fc
        else:
            a, c, fc = c, d, fd
            d = a + INVPHI * (b - a)
            fd = f(d)
            if fd > best_f:
                best_x, best_f = d, fd
    for x in (lo, hi):
        fx = f(x)
        if fx > best_f:
            best_x, best_f = x, fx
    return best_x, best_f


def golden_min(f, lo: float, hi: float, tol: float = 1e-10, max_iter: int = 500):
    """Minimise a unimodal ``f`` on ``[lo, hi]``; see :func:`golden_max`."""
    x, fx = golden_max(lambda t: -f(t), lo, hi, tol, max_iter)
    return x, -fx


def golden_max_batch(f, lo, hi, tol: float = 1e-10):
    """Elementwise golden-section maximisation over arrays of brackets.

    ``f`` maps an array of points (same shape as ``lo``) to values. The
    best point seen per element is returned together with its value.
    """
    a = np.array(lo, dtype=float, copy=True)
    b = np.array(hi, dtype=float, copy=True)
    width = float(np.max(b - a)) if a.size else 0.0
    iters = 0 if width <= tol else int(math.ceil(math.log(tol / width) / math.log(INVPHI)))
    c = b - INVPHI * (b - a)
    d = a + INVPHI * (b - a)
    fc, fd = f(c), f(d)
    take_c = fc >= fd
    best_x = np.where(take_c, c, d)
    best_f = np.where(take_c, fc, fd)
    for _ in range(iters):
        left = fc >= fd
        # left: keep [a, d], new interior point c'; right: keep [c, b], new d'
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        new_c = b - INVPHI * (b - a)
        new_d = a + INVPHI * (b - a)
        c_next = np.where(left, new_c, d)
        d_next = np.where(left, c, new_d)
        probe = np.where(left, new_c, new_d)
        fp = f(probe)
        fc_next = np.where(left, fp, fd)
        fd_next = np.where(left, fc, fp)
        c, d, fc, fd = c_next, d_next, fc_next, fd_next
        better = fp > best_f
        best_x = np.where(better, probe, best_x)
        best_f = np.where(better, fp, best_f)
    return best_x, best_f
