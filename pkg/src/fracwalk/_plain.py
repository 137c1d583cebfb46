"""Vectorized numpy fallbacks for the hot numeric kernels.

Same contracts as ``_jit``; see ``backend`` for dispatch.
"""

from __future__ import annotations

import numpy as np


def tridiagonalize(a, want_q=True):
    """Householder reduction of a symmetric matrix to tridiagonal form.

    Returns ``(d, e, q)`` with ``q`` orthogonal and ``q.T @ a @ q``
    tridiagonal: diagonal ``d``, subdiagonal ``e`` (``e[i]`` couples states
    ``i`` and ``i+1``; ``e[n-1]`` is slack and stays 0).  With
    ``want_q=False`` the basis is not accumulated and ``q`` comes back
    empty.
    """
    a = np.array(a, dtype=np.float64, copy=True)
    n = a.shape[0]
    d = np.zeros(n)
    e = np.zeros(n)
    house = []
    for k in range(n - 2):
        x = a[k + 1 :, k].copy()
        sigma = float(x[1:] @ x[1:])
        if sigma == 0.0:
            continue
        x0 = float(x[0])
        mu = np.sqrt(x0 * x0 + sigma)
        v0 = x0 - mu if x0 <= 0 else -sigma / (x0 + mu)
        beta = 2.0 * v0 * v0 / (sigma + v0 * v0)
        v = x / v0
        v[0] = 1.0
        sub = a[k + 1 :, k + 1 :]
        pvec = beta * (sub @ v)
        w = pvec - (0.5 * beta * float(pvec @ v)) * v
        sub -= np.outer(v, w) + np.outer(w, v)
        a[k + 1, k] = mu
        a[k, k + 1] = mu
        a[k + 2 :, k] = 0.0
        a[k, k + 2 :] = 0.0
        house.append((k, v, beta))
    d[:] = np.diag(a)
    if n > 1:
        e[: n - 1] = np.diag(a, -1)
    if not want_q:
        return d, e, np.zeros((0, 0))
    q = np.eye(n)
    for k, v, beta in reversed(house):
        qs = q[k + 1 :, k + 1 :]
        qs -= np.outer(beta * v, v @ qs)
    return d, e, q


def tqli(d, e, z):
    """Implicit-shift QL sweeps on the tridiagonal ``(d, e)``, rotating ``z``.

    Mutates ``d`` into eigenvalues, destroys ``e``, and accumulates the
    rotations into the ROWS of ``z`` (pass the transposed basis; rows are
    contiguous, so the rotations stream through memory).  ``z`` may have
    zero rows for an eigenvalues-only solve.  Returns -1 on success,
    otherwise the index that failed to converge within the sweep cap.
    """
    n = d.shape[0]
    eps = np.finfo(np.float64).eps
    for l in range(n):
        for _ in range(64):
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= eps * dd:
                    break
                m += 1
            if m == l:
                break
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = np.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + (r if g >= 0 else -r))
            s = 1.0
            c = 1.0
            p = 0.0
            i = m - 1
            underflow = False
            while i >= l:
                f = s * e[i]
                b = c * e[i]
                r = np.hypot(f, g)
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
                if z.shape[0]:
                    row = z[i + 1].copy()
                    z[i + 1] = s * z[i] + c * row
                    z[i] = c * z[i] - s * row
                i -= 1
            if not underflow:
                d[l] -= p
                e[l] = g
                e[m] = 0.0
        else:
            return l
    return -1


def vec_csr(v, indptr, indices, probs):
    """Row vector times CSR kernel: ``out[y] = sum_x v[x] K(x, y)``."""
    counts = np.diff(indptr)
    weights = np.repeat(v, counts) * probs
    return np.bincount(indices, weights=weights, minlength=v.shape[0])


def mat_csr(m, indptr, indices, probs):
    """Dense block times CSR kernel: ``out[r, y] = sum_x m[r, x] K(x, y)``."""
    n = indptr.shape[0] - 1
    out = np.zeros_like(m)
    for x in range(n):
        lo, hi = indptr[x], indptr[x + 1]
        if lo == hi:
            continue
        out[:, indices[lo:hi]] += m[:, x : x + 1] * probs[lo:hi]
    return out


def inverse_table(p):
    """Table of modular inverses with the inverse-or-zero convention.

    ``t[x] * x == 1 (mod p)`` for ``x != 0`` and ``t[0] == 0``.  Uses the
    linear recurrence ``inv[i] = -(p // i) * inv[p % i] mod p`` (valid for
    prime ``p``).
    """
    inv = np.zeros(p, dtype=np.int64)
    if p > 1:
        inv[1] = 1
    for i in range(2, p):
        inv[i] = (-(p // i) * inv[p % i]) % p
    return inv


def min_cut_exhaustive(w, half):
    """Exact bottleneck scan over all subsets of size 1..half.

    ``w`` is the dense kernel; the returned ratio minimizes
    ``sum_{x in S, y not in S} w[x, y] / |S|``.  Returns ``(ratio, mask)``.
    """
    n = w.shape[0]
    wc = np.array(w, dtype=np.float64, copy=True)
    np.fill_diagonal(wc, 0.0)
    total = 1 << n
    chunk = 1 << 14
    bitcols = np.arange(n, dtype=np.int64)
    best = np.inf
    best_mask = 0
    for start in range(1, total, chunk):
        masks = np.arange(start, min(start + chunk, total), dtype=np.int64)
        bits = ((masks[:, None] >> bitcols[None, :]) & 1).astype(np.float64)
        sizes = bits.sum(axis=1)
        ok = (sizes >= 1) & (sizes <= half)
        if not ok.any():
            continue
        bsel = bits[ok]
        cuts = np.einsum("ij,ij->i", bsel @ wc, 1.0 - bsel)
        ratios = cuts / sizes[ok]
        i = int(np.argmin(ratios))
        if ratios[i] < best:
            best = float(ratios[i])
            best_mask = int(masks[ok][i])
    return best, best_mask
