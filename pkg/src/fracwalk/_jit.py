"""Numba builds of the hot numeric kernels.

Same contracts as ``_plain``; see ``backend`` for dispatch.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit


@njit(cache=True)
def tridiagonalize(a_in, want_q=True):
    n = a_in.shape[0]
    a = a_in.astype(np.float64).copy()
    d = np.zeros(n)
    e = np.zeros(n)
    vstore = np.zeros((max(n - 2, 1), n))
    betas = np.zeros(max(n - 2, 1))
    w = np.zeros(n)
    pv = np.zeros(n)
    for k in range(n - 2):
        m = n - k - 1
        sigma = 0.0
        for i in range(1, m):
            sigma += a[k + 1 + i, k] * a[k + 1 + i, k]
        if sigma == 0.0:
            betas[k] = 0.0
            continue
        x0 = a[k + 1, k]
        mu = math.sqrt(x0 * x0 + sigma)
        if x0 <= 0.0:
            v0 = x0 - mu
        else:
            v0 = -sigma / (x0 + mu)
        beta = 2.0 * v0 * v0 / (sigma + v0 * v0)
        vstore[k, 0] = 1.0
        for i in range(1, m):
            vstore[k, i] = a[k + 1 + i, k] / v0
        for i in range(m):
            s = 0.0
            for j in range(m):
                s += a[k + 1 + i, k + 1 + j] * vstore[k, j]
            pv[i] = beta * s
        dot = 0.0
        for i in range(m):
            dot += pv[i] * vstore[k, i]
        halfdot = 0.5 * beta * dot
        for i in range(m):
            w[i] = pv[i] - halfdot * vstore[k, i]
        for i in range(m):
            vi = vstore[k, i]
            wi = w[i]
            for j in range(m):
                a[k + 1 + i, k + 1 + j] -= vi * w[j] + wi * vstore[k, j]
        a[k + 1, k] = mu
        a[k, k + 1] = mu
        for i in range(k + 2, n):
            a[i, k] = 0.0
            a[k, i] = 0.0
        betas[k] = beta
    for i in range(n):
        d[i] = a[i, i]
    for i in range(n - 1):
        e[i] = a[i + 1, i]
    if not want_q:
        return d, e, np.zeros((0, 0))
    q = np.eye(n)
    dotv = np.zeros(n)
    for k in range(n - 3, -1, -1):
        beta = betas[k]
        if beta == 0.0:
            continue
        m = n - k - 1
        for col in range(k + 1, n):
            dotv[col] = 0.0
        for i in range(m):
            vi = vstore[k, i]
            row = k + 1 + i
            for col in range(k + 1, n):
                dotv[col] += vi * q[row, col]
        for i in range(m):
            bvi = beta * vstore[k, i]
            row = k + 1 + i
            for col in range(k + 1, n):
                q[row, col] -= bvi * dotv[col]
    return d, e, q


@njit(cache=True)
def tqli(d, e, z):
    n = d.shape[0]
    nrows = z.shape[0]
    eps = 2.220446049250313e-16
    for l in range(n):
        done = False
        for _ in range(64):
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= eps * dd:
                    break
                m += 1
            if m == l:
                done = True
                break
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = math.hypot(g, 1.0)
            if g >= 0.0:
                g = d[m] - d[l] + e[l] / (g + r)
            else:
                g = d[m] - d[l] + e[l] / (g - r)
            s = 1.0
            c = 1.0
            p = 0.0
            i = m - 1
            underflow = False
            while i >= l:
                f = s * e[i]
                b = c * e[i]
                r = math.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    underflow = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                if nrows:
                    for kk in range(z.shape[1]):
                        f2 = z[i + 1, kk]
                        z[i + 1, kk] = s * z[i, kk] + c * f2
                        z[i, kk] = c * z[i, kk] - s * f2
                i -= 1
            if not underflow:
                d[l] -= p
                e[l] = g
                e[m] = 0.0
        if not done:
            return l
    return -1


@njit(cache=True)
def vec_csr(v, indptr, indices, probs):
    n = v.shape[0]
    out = np.zeros(n)
    for x in range(n):
        vx = v[x]
        if vx != 0.0:
            for t in range(indptr[x], indptr[x + 1]):
                out[indices[t]] += vx * probs[t]
    return out


@njit(cache=True)
def mat_csr(m, indptr, indices, probs):
    nrows = m.shape[0]
    n = indptr.shape[0] - 1
    out = np.zeros_like(m)
    for r in range(nrows):
        for x in range(n):
            vx = m[r, x]
            if vx != 0.0:
                for t in range(indptr[x], indptr[x + 1]):
                    out[r, indices[t]] += vx * probs[t]
    return out


@njit(cache=True)
def inverse_table(p):
    inv = np.zeros(p, dtype=np.int64)
    if p > 1:
        inv[1] = 1
    for i in range(2, p):
        inv[i] = (-(p // i) * inv[p % i]) % p
    return inv


@njit(cache=True)
def min_cut_exhaustive(w, half):
    n = w.shape[0]
    rowtot = np.zeros(n)
    for i in range(n):
        s = 0.0
        for j in range(n):
            if j != i:
                s += w[i, j]
        rowtot[i] = s
    in_set = np.zeros(n, dtype=np.uint8)
    win = np.zeros(n)
    wout = np.zeros(n)
    cut = 0.0
    size = 0
    best = np.inf
    best_mask = np.int64(0)
    prev_gray = np.int64(0)
    total = np.int64(1) << n
    for g in range(np.int64(1), total):
        gray = g ^ (g >> np.int64(1))
        flip = gray ^ prev_gray
        prev_gray = gray
        b = 0
        while flip > 1:
            flip >>= np.int64(1)
            b += 1
        delta = rowtot[b] - wout[b] - win[b]
        if in_set[b] == 1:
            cut -= delta
            in_set[b] = 0
            size -= 1
            for v in range(n):
                if v != b:
                    win[v] -= w[b, v]
                    wout[v] -= w[v, b]
        else:
            cut += delta
            in_set[b] = 1
            size += 1
            for v in range(n):
                if v != b:
                    win[v] += w[b, v]
                    wout[v] += w[v, b]
        if 1 <= size <= half:
            ratio = cut / size
            if ratio < best:
                best = ratio
                best_mask = gray
    return best, best_mask
