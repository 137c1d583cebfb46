"""Counting solutions of x y = 1 (mod p) inside interval boxes, and
exhaustive scans of the count-to-length ratio over all interval positions.

A solution pair is (x, y) with x in I, y in J and x y = 1; x = 0 never
contributes since 0 has no multiplicative partner.  The related set
A = {x in I : iota(x) in J} differs only in that it can pick up x = 0 when
0 lies in both intervals (iota(0) = 0); both views are exposed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ffield import Modulus, iota_table


@dataclass(frozen=True)
class Interval:
    """A cyclic interval of ``length`` consecutive residues starting at
    ``start``; membership is (x - start) mod p < length."""

    start: int
    length: int
    modulus: Modulus

    def __post_init__(self):
        p = self.modulus.p
        if not 1 <= self.length <= p:
            raise ValueError(f"interval length must be in 1..{p}")
        object.__setattr__(self, "start", self.start % p)

    def contains(self, x: int) -> bool:
        return (x - self.start) % self.modulus.p < self.length

    def members(self) -> np.ndarray:
        p = self.modulus.p
        return (self.start + np.arange(self.length)) % p


def count_solutions(i: Interval, j: Interval, p: Modulus) -> int:
    """|{(x, y) in I x J : x y = 1 mod p}|, by walking x over I and testing
    whether its inverse lands in J."""
    if i.modulus != p or j.modulus != p:
        raise ValueError("modulus mismatch")
    tab = iota_table(p)
    xs = i.members()
    xs = xs[xs != 0]
    return int(np.count_nonzero((tab[xs] - j.start) % p.p < j.length))


def iota_preimage_set(i: Interval, j: Interval, p: Modulus) -> np.ndarray:
    """The set A = {x in I : iota(x) in J}, sorted.  Includes x = 0 when 0
    is in both intervals, unlike the solution count."""
    if i.modulus != p or j.modulus != p:
        raise ValueError("modulus mismatch")
    tab = iota_table(p)
    xs = i.members()
    mask = (tab[xs] - j.start) % p.p < j.length
    return np.sort(xs[mask])


def count_surface(p: Modulus, m: int) -> np.ndarray:
    """The full (p x p) grid of counts: entry (i, j) is the solution count
    for the length-m intervals starting at i and j.

    Each x != 0 contributes 1 exactly on the cyclic box of starts
    {x-m+1..x} x {1/x-m+1..1/x}; the grid is accumulated from box corners
    and a double prefix sum.
    """
    n = p.p
    if not 1 <= m <= n:
        raise ValueError(f"interval length must be in 1..{n}")
    tab = iota_table(p)
    xs = np.arange(1, n, dtype=np.int64)
    ys = tab[xs]
    diff = np.zeros((n + 1, n + 1), dtype=np.int64)

    def segments(hi):
        lo = (hi - (m - 1)) % n
        wrap = lo > hi
        return lo, hi, wrap

    r_lo, r_hi, r_wrap = segments(xs)
    c_lo, c_hi, c_wrap = segments(ys)

    def add_boxes(rl, rh, cl, ch):
        np.add.at(diff, (rl, cl), 1)
        np.add.at(diff, (rh + 1, cl), -1)
        np.add.at(diff, (rl, ch + 1), -1)
        np.add.at(diff, (rh + 1, ch + 1), 1)

    zeros = np.zeros_like(xs)
    ends = np.full_like(xs, n - 1)
    for rmask, rpieces in (
        (~r_wrap, ((r_lo, r_hi),)),
        (r_wrap, ((zeros, r_hi), (r_lo, ends))),
    ):
        if not rmask.any():
            continue
        for cmask, cpieces in (
            (~c_wrap, ((c_lo, c_hi),)),
            (c_wrap, ((zeros, c_hi), (c_lo, ends))),
        ):
            sel = rmask & cmask
            if not sel.any():
                continue
            for rl, rh in rpieces:
                for cl, ch in cpieces:
                    add_boxes(rl[sel], rh[sel], cl[sel], ch[sel])

    return diff.cumsum(axis=0).cumsum(axis=1)[:n, :n]


@dataclass(frozen=True)
class ScanReport:
    """Maximum count-to-length ratio over all scanned interval positions."""

    p: int
    m: int
    stride: int
    max_ratio: float
    max_count: int
    argmax_i: int
    argmax_j: int
    exhaustive: bool

    def to_json_dict(self) -> dict:
        return {
            "p": self.p,
            "m": self.m,
            "stride": self.stride,
            "max_ratio": self.max_ratio,
            "max_count": self.max_count,
            "argmax_i": self.argmax_i,
            "argmax_j": self.argmax_j,
            "exhaustive": self.exhaustive,
        }


def scan_max_ratio(p: Modulus, m: int, stride: int = 1) -> ScanReport:
    """Max of count / m over interval starts stepped by ``stride`` in both
    coordinates (stride 1 is exhaustive).  Requires m <= p/2, the regime
    where the ratio is the meaningful density of the inverse hyperbola in a
    box."""
    n = p.p
    if m > n // 2:
        raise ValueError(f"need m <= p/2, got m = {m}, p = {n}")
    if stride < 1:
        raise ValueError("stride must be positive")
    surface = count_surface(p, m)
    sub = surface[::stride, ::stride]
    flat = int(np.argmax(sub))
    bi, bj = divmod(flat, sub.shape[1])
    count = int(sub[bi, bj])
    return ScanReport(
        p=n, m=m, stride=stride,
        max_ratio=count / m, max_count=count,
        argmax_i=int(bi * stride), argmax_j=int(bj * stride),
        exhaustive=(stride == 1),
    )


def admissible_delta(gamma_prime: float) -> float:
    """The deficiency implied by a measured bottleneck lower bound: the
    largest delta with 20 delta / (1 - delta) below gamma', i.e.
    gamma' / (20 + gamma')."""
    if gamma_prime <= 0:
        return 0.0
    return gamma_prime / (20.0 + gamma_prime)
