"""Compiled inner loops: products of exponentials and their logarithm,
carried together with first-order tangents (forward-mode derivatives).

The layout matches :mod:`trotterkit.lie_series`.  Tangent arrays have shape
``(n_slots, P)`` where ``P`` is the number of seed directions.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from numba import njit

from .lie_series import n_slots, offset


@lru_cache(maxsize=None)
def factor_table(max_degree: int, letter: int):
    """Index triples for right multiplication by exp(t * letter).

    For every word w = u + letter**k the triple (w, u, k) contributes
    S[u] * t**k / k! to the product at w.
    """
    dst, src, power = [], [], []
    for d in range(max_degree + 1):
        for code in range(1 << d):
            w = offset(d) + code
            k = 0
            while True:
                u_deg = d - k
                dst.append(w)
                src.append(offset(u_deg) + (code >> k))
                power.append(k)
                if k == d or ((code >> k) & 1) != letter:
                    break
                k += 1
    out = tuple(np.array(v, dtype=np.int64) for v in (dst, src, power))
    for a in out:
        a.setflags(write=False)
    return out


@lru_cache(maxsize=None)
def split_table(max_degree: int):
    """Index triples (w, u, v) with w = u + v and both u, v nonempty."""
    dst, left, right = [], [], []
    for d in range(2, max_degree + 1):
        for code in range(1 << d):
            w = offset(d) + code
            for j in range(1, d):
                dst.append(w)
                left.append(offset(d - j) + (code >> j))
                right.append(offset(j) + (code & ((1 << j) - 1)))
    order = np.argsort(np.array(left), kind="stable")
    out = tuple(np.array(v, dtype=np.int64)[order] for v in (dst, left, right))
    for a in out:
        a.setflags(write=False)
    return out


@njit(cache=True)
def _product(x, xt, letters, tabA, tabB, size, max_degree):
    P = xt.shape[1]
    S = np.zeros(size, dtype=x.dtype)
    St = np.zeros((size, P), dtype=x.dtype)
    S[0] = 1.0
    out = np.empty_like(S)
    out_t = np.empty_like(St)
    pw = np.empty(max_degree + 1, dtype=x.dtype)
    for f in range(x.shape[0]):
        if letters[f] == 0:
            dst, src, kk = tabA
        else:
            dst, src, kk = tabB
        t = x[f]
        pw[0] = 1.0
        for k in range(1, max_degree + 1):
            pw[k] = pw[k - 1] * t / k
        out[:] = 0.0
        out_t[:, :] = 0.0
        for e in range(dst.shape[0]):
            w = dst[e]
            u = src[e]
            k = kk[e]
            c = pw[k]
            out[w] += S[u] * c
            if k > 0:
                sd = S[u] * pw[k - 1]
                for p in range(P):
                    out_t[w, p] += St[u, p] * c + sd * xt[f, p]
            else:
                for p in range(P):
                    out_t[w, p] += St[u, p]
        S, out = out, S
        St, out_t = out_t, St
    return S, St


@njit(cache=True)
def _log(S, St, split, max_degree):
    dst, left, right = split
    size, P = St.shape
    X = S.copy()
    X[0] = 0.0
    Xt = St.copy()
    Xt[0, :] = 0.0
    L = X.copy()
    Lt = Xt.copy()
    Pk = X.copy()
    Pkt = Xt.copy()
    nxt = np.empty_like(X)
    nxt_t = np.empty_like(Xt)
    for k in range(2, max_degree + 1):
        nxt[:] = 0.0
        nxt_t[:, :] = 0.0
        lo = (1 << (k - 1)) - 1  # power k-1 has no words shorter than k-1
        for e in range(dst.shape[0]):
            u = left[e]
            if u < lo:
                continue
            w = dst[e]
            v = right[e]
            a = Pk[u]
            b = X[v]
            nxt[w] += a * b
            for p in range(P):
                nxt_t[w, p] += Pkt[u, p] * b + a * Xt[v, p]
        Pk, nxt = nxt, Pk
        Pkt, nxt_t = nxt_t, Pkt
        coef = (1.0 if k % 2 == 1 else -1.0) / k
        for i in range(size):
            L[i] += coef * Pk[i]
            for p in range(P):
                Lt[i, p] += coef * Pkt[i, p]
    return L, Lt


def log_of_product(x, letters, max_degree: int = 7, xt=None):
    """Logarithm of prod_f exp(x[f] * letter[f]) and its tangents.

    ``letters`` holds 0 for A and 1 for B.  ``xt`` (shape (F, P)) gives the
    tangent of each exponent along P seed directions; omit it for values only.
    Returns ``(L, Lt)`` with ``Lt`` of shape (n_slots, P).
    """
    x = np.ascontiguousarray(x)
    if x.dtype.kind != "c":
        x = x.astype(np.float64)
    if xt is None:
        xt = np.zeros((x.shape[0], 0), dtype=x.dtype)
    else:
        xt = np.ascontiguousarray(xt, dtype=x.dtype)
    letters = np.ascontiguousarray(letters, dtype=np.int64)
    S, St = _product(x, xt, letters, factor_table(max_degree, 0),
                     factor_table(max_degree, 1), n_slots(max_degree), max_degree)
    return _log(S, St, split_table(max_degree), max_degree)
