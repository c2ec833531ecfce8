"""Jitted best-move scans over packed route arrays.

Each kernel mirrors the plain-Python aggregate algebra in ``routeval``
but walks a whole neighborhood (one route pair, or one route) in
compiled code and returns the best move it saw.  Aggregates travel as
9-tuples of float64: (T, TW, E, L, Q, D, TT, QD, SSD).

Conventions shared by all kernels:

- ``seq`` arrays are int64, depot 0 at both ends;
- ``pre[k]``/``suf[k]`` rows hold the aggregate of visits 0..k / k..end;
- ``pv`` packs the weights: [fuel_price, w1, w2, w3, w4, wage,
  warp_penalty, capacity, max_duration];
- candidates violating capacity or max duration are skipped;
- returned positions follow the move descriptors in ``routeval``.
"""

from __future__ import annotations

import numpy as np
from numba import njit

F = np.float64

PV_FC, PV_W1, PV_W2, PV_W3, PV_W4, PV_WAGE, PV_WTW, PV_CAP, PV_DUR = range(9)


@njit(cache=True, inline="always")
def _cc(x, y, delta, d, v):
    t1, w1, e1, l1, q1, d1, tt1, qd1, ss1 = x
    t2, w2, e2, l2, q2, d2, tt2, qd2, ss2 = y
    gap = t1 - w1 + delta
    dwt = e2 - gap - l1
    if dwt < 0.0:
        dwt = 0.0
    dtw = e1 + gap - l2
    if dtw < 0.0:
        dtw = 0.0
    es = e2 - gap
    if es < e1:
        es = e1
    ls = l2 - gap
    if ls > l1:
        ls = l1
    return (t1 + t2 + delta + dwt, w1 + w2 + dtw, es - dwt, ls + dtw,
            q1 + q2, d1 + d2 + d, tt1 + tt2 + delta,
            qd1 + qd2 + q2 * (d1 + d), ss1 + ss2 + v * v * d)


@njit(cache=True, inline="always")
def _join(x, xlast, y, yfirst, dist, spd):
    d = dist[xlast, yfirst]
    v = spd[xlast, yfirst]
    delta = d / v if d > 0.0 else 0.0
    return _cc(x, y, delta, d, v)


@njit(cache=True, inline="always")
def _sng(node, a, b, tau, q):
    return (tau[node], 0.0, a[node], b[node], q[node], 0.0, 0.0, 0.0, 0.0)


@njit(cache=True, inline="always")
def _row(arr, k):
    return (arr[k, 0], arr[k, 1], arr[k, 2], arr[k, 3], arr[k, 4],
            arr[k, 5], arr[k, 6], arr[k, 7], arr[k, 8])


@njit(cache=True, inline="always")
def _z(ads, pv):
    return (pv[PV_FC] * (pv[PV_W1] * ads[6] + pv[PV_W2] * ads[5]
                         + pv[PV_W3] * ads[7] + pv[PV_W4] * ads[8])
            + pv[PV_WAGE] * ads[0] + pv[PV_WTW] * ads[1])


@njit(cache=True, inline="always")
def _ok(ads, pv):
    return ads[4] <= pv[PV_CAP] + 1e-9 and ads[0] <= pv[PV_DUR] + 1e-9


@njit(cache=True)
def build_tables(seq, dist, spd, a, b, tau, q):
    """Prefix and suffix aggregate tables of one route."""
    n = seq.shape[0]
    pre = np.empty((n, 9), dtype=F)
    suf = np.empty((n, 9), dtype=F)
    acc = (tau[seq[0]], 0.0, 0.0, 0.0, q[seq[0]], 0.0, 0.0, 0.0, 0.0)
    for k in range(9):
        pre[0, k] = acc[k]
    for i in range(1, n):
        acc = _join(acc, seq[i - 1], _sng(seq[i], a, b, tau, q), seq[i], dist, spd)
        for k in range(9):
            pre[i, k] = acc[k]
    acc = _sng(seq[n - 1], a, b, tau, q)
    for k in range(9):
        suf[n - 1, k] = acc[k]
    for i in range(n - 2, 0, -1):
        acc = _join(_sng(seq[i], a, b, tau, q), seq[i], acc, seq[i + 1], dist, spd)
        for k in range(9):
            suf[i, k] = acc[k]
    first = (tau[seq[0]], 0.0, 0.0, 0.0, q[seq[0]], 0.0, 0.0, 0.0, 0.0)
    acc = _join(first, seq[0], _row(suf, 1), seq[1], dist, spd)
    for k in range(9):
        suf[0, k] = acc[k]
    return pre, suf


@njit(cache=True)
def scan_shift10(seq1, pre1, suf1, seq2, pre2, suf2, dist, spd, a, b, tau, q, pv):
    L1, L2 = seq1.shape[0], seq2.shape[0]
    z_old = _z(_row(pre1, L1 - 1), pv) + _z(_row(pre2, L2 - 1), pv)
    q2tot = pre2[L2 - 1, 4]
    best = np.inf
    bi = -1
    bj = -1
    for i in range(1, L1 - 1):
        u = seq1[i]
        if q2tot + q[u] > pv[PV_CAP] + 1e-9:
            continue
        new1 = _join(_row(pre1, i - 1), seq1[i - 1], _row(suf1, i + 1),
                     seq1[i + 1], dist, spd)
        if not _ok(new1, pv):
            continue
        z1 = _z(new1, pv)
        su = _sng(u, a, b, tau, q)
        for j in range(L2 - 1):
            mid = _join(_row(pre2, j), seq2[j], su, u, dist, spd)
            new2 = _join(mid, u, _row(suf2, j + 1), seq2[j + 1], dist, spd)
            if new2[0] > pv[PV_DUR] + 1e-9:
                continue
            delta = z1 + _z(new2, pv) - z_old
            if delta < best:
                best = delta
                bi = i
                bj = j
    return best, bi, bj


@njit(cache=True)
def scan_shift20(seq1, pre1, suf1, seq2, pre2, suf2, dist, spd, a, b, tau, q, pv):
    L1, L2 = seq1.shape[0], seq2.shape[0]
    z_old = _z(_row(pre1, L1 - 1), pv) + _z(_row(pre2, L2 - 1), pv)
    q2tot = pre2[L2 - 1, 4]
    best = np.inf
    bi = -1
    bj = -1
    for i in range(1, L1 - 2):
        u0, u1 = seq1[i], seq1[i + 1]
        if q2tot + q[u0] + q[u1] > pv[PV_CAP] + 1e-9:
            continue
        new1 = _join(_row(pre1, i - 1), seq1[i - 1], _row(suf1, i + 2),
                     seq1[i + 2], dist, spd)
        if not _ok(new1, pv):
            continue
        z1 = _z(new1, pv)
        seg = _join(_sng(u0, a, b, tau, q), u0, _sng(u1, a, b, tau, q), u1, dist, spd)
        for j in range(L2 - 1):
            mid = _join(_row(pre2, j), seq2[j], seg, u0, dist, spd)
            new2 = _join(mid, u1, _row(suf2, j + 1), seq2[j + 1], dist, spd)
            if new2[0] > pv[PV_DUR] + 1e-9:
                continue
            delta = z1 + _z(new2, pv) - z_old
            if delta < best:
                best = delta
                bi = i
                bj = j
    return best, bi, bj


@njit(cache=True)
def scan_swap11(seq1, pre1, suf1, seq2, pre2, suf2, dist, spd, a, b, tau, q, pv):
    L1, L2 = seq1.shape[0], seq2.shape[0]
    z_old = _z(_row(pre1, L1 - 1), pv) + _z(_row(pre2, L2 - 1), pv)
    q1tot = pre1[L1 - 1, 4]
    q2tot = pre2[L2 - 1, 4]
    best = np.inf
    bi = -1
    bj = -1
    for i in range(1, L1 - 1):
        u = seq1[i]
        for j in range(1, L2 - 1):
            w = seq2[j]
            if (q1tot - q[u] + q[w] > pv[PV_CAP] + 1e-9
                    or q2tot - q[w] + q[u] > pv[PV_CAP] + 1e-9):
                continue
            m1 = _join(_row(pre1, i - 1), seq1[i - 1], _sng(w, a, b, tau, q),
                       w, dist, spd)
            new1 = _join(m1, w, _row(suf1, i + 1), seq1[i + 1], dist, spd)
            if new1[0] > pv[PV_DUR] + 1e-9:
                continue
            m2 = _join(_row(pre2, j - 1), seq2[j - 1], _sng(u, a, b, tau, q),
                       u, dist, spd)
            new2 = _join(m2, u, _row(suf2, j + 1), seq2[j + 1], dist, spd)
            if new2[0] > pv[PV_DUR] + 1e-9:
                continue
            delta = _z(new1, pv) + _z(new2, pv) - z_old
            if delta < best:
                best = delta
                bi = i
                bj = j
    return best, bi, bj


@njit(cache=True)
def scan_swap22(seq1, pre1, suf1, seq2, pre2, suf2, dist, spd, a, b, tau, q, pv):
    L1, L2 = seq1.shape[0], seq2.shape[0]
    z_old = _z(_row(pre1, L1 - 1), pv) + _z(_row(pre2, L2 - 1), pv)
    q1tot = pre1[L1 - 1, 4]
    q2tot = pre2[L2 - 1, 4]
    best = np.inf
    bi = -1
    bj = -1
    for i in range(1, L1 - 2):
        u0, u1 = seq1[i], seq1[i + 1]
        qseg1 = q[u0] + q[u1]
        seg1 = _join(_sng(u0, a, b, tau, q), u0, _sng(u1, a, b, tau, q), u1,
                     dist, spd)
        for j in range(1, L2 - 2):
            w0, w1 = seq2[j], seq2[j + 1]
            qseg2 = q[w0] + q[w1]
            if (q1tot - qseg1 + qseg2 > pv[PV_CAP] + 1e-9
                    or q2tot - qseg2 + qseg1 > pv[PV_CAP] + 1e-9):
                continue
            seg2 = _join(_sng(w0, a, b, tau, q), w0, _sng(w1, a, b, tau, q),
                         w1, dist, spd)
            m1 = _join(_row(pre1, i - 1), seq1[i - 1], seg2, w0, dist, spd)
            new1 = _join(m1, w1, _row(suf1, i + 2), seq1[i + 2], dist, spd)
            if new1[0] > pv[PV_DUR] + 1e-9:
                continue
            m2 = _join(_row(pre2, j - 1), seq2[j - 1], seg1, u0, dist, spd)
            new2 = _join(m2, u1, _row(suf2, j + 2), seq2[j + 2], dist, spd)
            if new2[0] > pv[PV_DUR] + 1e-9:
                continue
            delta = _z(new1, pv) + _z(new2, pv) - z_old
            if delta < best:
                best = delta
                bi = i
                bj = j
    return best, bi, bj


@njit(cache=True)
def scan_twooptstar(seq1, pre1, suf1, seq2, pre2, suf2, dist, spd, a, b, tau, q, pv):
    L1, L2 = seq1.shape[0], seq2.shape[0]
    z_old = _z(_row(pre1, L1 - 1), pv) + _z(_row(pre2, L2 - 1), pv)
    best = np.inf
    bi = -1
    bj = -1
    for i in range(L1 - 1):
        p1 = _row(pre1, i)
        for j in range(L2 - 1):
            if p1[4] + suf2[j + 1, 4] > pv[PV_CAP] + 1e-9:
                continue
            if pre2[j, 4] + suf1[i + 1, 4] > pv[PV_CAP] + 1e-9:
                continue
            new1 = _join(p1, seq1[i], _row(suf2, j + 1), seq2[j + 1], dist, spd)
            if new1[0] > pv[PV_DUR] + 1e-9:
                continue
            new2 = _join(_row(pre2, j), seq2[j], _row(suf1, i + 1),
                         seq1[i + 1], dist, spd)
            if new2[0] > pv[PV_DUR] + 1e-9:
                continue
            delta = _z(new1, pv) + _z(new2, pv) - z_old
            if delta < best:
                best = delta
                bi = i
                bj = j
    return best, bi, bj


@njit(cache=True)
def scan_relocate_segment(seq, pre, suf, ln, dist, spd, a, b, tau, q, pv):
    """Intra-route relocation of ``ln`` consecutive customers
    (reinsertion for ln=1, the or-opt variants for ln=2 and 3)."""
    L = seq.shape[0]
    z_old = _z(_row(pre, L - 1), pv)
    best = np.inf
    bi = -1
    bj = -1
    for i in range(1, L - ln):
        seg = _sng(seq[i], a, b, tau, q)
        for k in range(1, ln):
            seg = _join(seg, seq[i + k - 1], _sng(seq[i + k], a, b, tau, q),
                        seq[i + k], dist, spd)
        segfirst = seq[i]
        seglast = seq[i + ln - 1]
        # insert after a later position j (between seq[j] and seq[j+1])
        if i + ln <= L - 2:
            P = _join(_row(pre, i - 1), seq[i - 1],
                      _sng(seq[i + ln], a, b, tau, q), seq[i + ln], dist, spd)
            for j in range(i + ln, L - 1):
                head = _join(P, seq[j], seg, segfirst, dist, spd)
                cand = _join(head, seglast, _row(suf, j + 1), seq[j + 1], dist, spd)
                if _ok(cand, pv):
                    delta = _z(cand, pv) - z_old
                    if delta < best:
                        best = delta
                        bi = i
                        bj = j
                if j + 1 <= L - 2:
                    P = _join(P, seq[j], _sng(seq[j + 1], a, b, tau, q),
                              seq[j + 1], dist, spd)
        # insert after an earlier position j (between seq[j] and seq[j+1])
        if i >= 2:
            S = _join(_sng(seq[i - 1], a, b, tau, q), seq[i - 1],
                      _row(suf, i + ln), seq[i + ln], dist, spd)
            sfirst = seq[i - 1]
            for j in range(i - 2, -1, -1):
                head = _join(_row(pre, j), seq[j], seg, segfirst, dist, spd)
                cand = _join(head, seglast, S, sfirst, dist, spd)
                if _ok(cand, pv):
                    delta = _z(cand, pv) - z_old
                    if delta < best:
                        best = delta
                        bi = i
                        bj = j
                if j >= 1:
                    S = _join(_sng(seq[j], a, b, tau, q), seq[j], S, sfirst,
                              dist, spd)
                    sfirst = seq[j]
    return best, bi, bj


@njit(cache=True)
def scan_exchange(seq, pre, suf, dist, spd, a, b, tau, q, pv):
    L = seq.shape[0]
    z_old = _z(_row(pre, L - 1), pv)
    best = np.inf
    bi = -1
    bj = -1
    for i in range(1, L - 2):
        u = seq[i]
        su = _sng(u, a, b, tau, q)
        M = su  # placeholder; M spans seq[i+1 .. j-1] once j > i+1
        have_mid = False
        for j in range(i + 1, L - 1):
            w = seq[j]
            sw = _sng(w, a, b, tau, q)
            head = _join(_row(pre, i - 1), seq[i - 1], sw, w, dist, spd)
            if j == i + 1:
                head = _join(head, w, su, u, dist, spd)
            else:
                if not have_mid:
                    M = _sng(seq[i + 1], a, b, tau, q)
                    have_mid = True
                else:
                    M = _join(M, seq[j - 2], _sng(seq[j - 1], a, b, tau, q),
                              seq[j - 1], dist, spd)
                head = _join(head, w, M, seq[i + 1], dist, spd)
                head = _join(head, seq[j - 1], su, u, dist, spd)
            cand = _join(head, u, _row(suf, j + 1), seq[j + 1], dist, spd)
            if _ok(cand, pv):
                delta = _z(cand, pv) - z_old
                if delta < best:
                    best = delta
                    bi = i
                    bj = j
    return best, bi, bj


@njit(cache=True)
def scan_twoopt(seq, pre, suf, dist, spd, a, b, tau, q, pv):
    L = seq.shape[0]
    z_old = _z(_row(pre, L - 1), pv)
    best = np.inf
    bi = -1
    bj = -1
    for i in range(1, L - 2):
        R = _sng(seq[i], a, b, tau, q)
        for j in range(i + 1, L - 1):
            R = _join(_sng(seq[j], a, b, tau, q), seq[j], R, seq[j - 1],
                      dist, spd)
            head = _join(_row(pre, i - 1), seq[i - 1], R, seq[j], dist, spd)
            cand = _join(head, seq[i], _row(suf, j + 1), seq[j + 1], dist, spd)
            if _ok(cand, pv):
                delta = _z(cand, pv) - z_old
                if delta < best:
                    best = delta
                    bi = i
                    bj = j
    return best, bi, bj


@njit(cache=True)
def best_insertion(seq, pre, suf, u, dist, spd, a, b, tau, q, pv):
    """Cheapest position to insert customer ``u`` (capacity-checked)."""
    L = seq.shape[0]
    if pre[L - 1, 4] + q[u] > pv[PV_CAP] + 1e-9:
        return np.inf, -1
    z_old = _z(_row(pre, L - 1), pv)
    su = _sng(u, a, b, tau, q)
    best = np.inf
    bj = -1
    for j in range(L - 1):
        mid = _join(_row(pre, j), seq[j], su, u, dist, spd)
        cand = _join(mid, u, _row(suf, j + 1), seq[j + 1], dist, spd)
        if cand[0] > pv[PV_DUR] + 1e-9:
            continue
        delta = _z(cand, pv) - z_old
        if delta < best:
            best = delta
            bj = j
    return best, bj


@njit(cache=True)
def route_cost_from_pre(pre, pv):
    n = pre.shape[0]
    return _z(_row(pre, n - 1), pv)


def params_vector(ctx) -> np.ndarray:
    """Pack an ``EvalContext``'s weights for the kernels."""
    return np.array([ctx.fuel_price, ctx.w1, ctx.w2, ctx.w3, ctx.w4,
                     ctx.driver_wage, ctx.warp_penalty, ctx.capacity,
                     ctx.max_duration], dtype=F)
