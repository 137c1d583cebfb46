"""Exact arithmetic mod an odd prime, the projective line over it, and the
2x2 matrix action by linear fractional transformations.

All values are immutable after construction and all operations are pure, so
everything here is safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import backend


def is_prime(n: int) -> bool:
    """Deterministic trial division, adequate for machine-width inputs."""
    if n < 2:
        return False
    if n < 4:
        return True
    if n % 2 == 0 or n % 3 == 0:
        return False
    f = 5
    while f * f <= n:
        if n % f == 0 or n % (f + 2) == 0:
            return False
        f += 6
    return True


@dataclass(frozen=True)
class Modulus:
    """An odd prime p >= 5, the size of the base field."""

    p: int

    def __post_init__(self):
        if not isinstance(self.p, int):
            raise TypeError("modulus must be an int")
        if self.p < 5:
            raise ValueError(f"modulus must be at least 5, got {self.p}")
        if not is_prime(self.p):
            raise ValueError(f"{self.p} is not prime")

    def __int__(self) -> int:
        return self.p

    def __index__(self) -> int:
        return self.p


def ext_euclid_inv(a: int, p: int) -> int:
    """Multiplicative inverse of a mod p by the extended Euclidean algorithm."""
    a %= p
    if a == 0:
        raise ZeroDivisionError(f"0 has no inverse mod {p}")
    r0, r1 = p, a
    s0, s1 = 0, 1
    while r1:
        q = r0 // r1
        r0, r1 = r1, r0 - q * r1
        s0, s1 = s1, s0 - q * s1
    return s0 % p


@lru_cache(maxsize=64)
def _iota_table_cached(p: int) -> np.ndarray:
    table = backend.inverse_table(p)
    table.setflags(write=False)
    return table


def iota_table(p: Modulus | int) -> np.ndarray:
    """Read-only table of iota over all residues: t[0] = 0, t[x] = 1/x mod p."""
    return _iota_table_cached(int(p))


@dataclass(frozen=True)
class FpElem:
    """A residue in [0, p); negative inputs are reduced canonically."""

    value: int
    modulus: Modulus

    def __post_init__(self):
        object.__setattr__(self, "value", self.value % self.modulus.p)

    def __add__(self, other: "FpElem") -> "FpElem":
        self._check(other)
        return FpElem(self.value + other.value, self.modulus)

    def __sub__(self, other: "FpElem") -> "FpElem":
        self._check(other)
        return FpElem(self.value - other.value, self.modulus)

    def __mul__(self, other: "FpElem") -> "FpElem":
        self._check(other)
        return FpElem(self.value * other.value, self.modulus)

    def __neg__(self) -> "FpElem":
        return FpElem(-self.value, self.modulus)

    def inv(self) -> "FpElem":
        return FpElem(ext_euclid_inv(self.value, self.modulus.p), self.modulus)

    def _check(self, other: "FpElem") -> None:
        if self.modulus != other.modulus:
            raise ValueError("modulus mismatch")

    def __repr__(self) -> str:
        return f"{self.value} (mod {self.modulus.p})"


def iota(x: FpElem) -> FpElem:
    """The inverse-or-zero step: 1/x for x != 0, and 0 at 0.

    An involution on the whole field since (1/x)^{-1} = x.
    """
    if x.value == 0:
        return x
    return x.inv()


@dataclass(frozen=True)
class ProjPoint:
    """A point of the projective line: residues 0..p-1 plus one point at
    infinity, encoded as index p so the whole line maps to 0..p."""

    modulus: Modulus
    index: int

    def __post_init__(self):
        if not 0 <= self.index <= self.modulus.p:
            raise ValueError(f"projective index {self.index} out of range")

    @classmethod
    def finite(cls, x: FpElem) -> "ProjPoint":
        return cls(x.modulus, x.value)

    @classmethod
    def from_residue(cls, value: int, mod: Modulus) -> "ProjPoint":
        return cls(mod, value % mod.p)

    @classmethod
    def infinity(cls, mod: Modulus) -> "ProjPoint":
        return cls(mod, mod.p)

    @property
    def is_infinity(self) -> bool:
        return self.index == self.modulus.p

    @property
    def residue(self) -> FpElem:
        if self.is_infinity:
            raise ValueError("the point at infinity has no residue")
        return FpElem(self.index, self.modulus)

    def __repr__(self) -> str:
        if self.is_infinity:
            return f"inf (mod {self.modulus.p})"
        return f"{self.index} (mod {self.modulus.p})"


def iota_bar(x: ProjPoint) -> ProjPoint:
    """Inversion extended to the projective line: swaps 0 and infinity and
    is a genuine involution on all p+1 points."""
    p = x.modulus.p
    if x.is_infinity:
        return ProjPoint(x.modulus, 0)
    if x.index == 0:
        return ProjPoint.infinity(x.modulus)
    return ProjPoint(x.modulus, ext_euclid_inv(x.index, p))


@dataclass(frozen=True)
class Mat2:
    """An invertible 2x2 matrix over F_p, row-major entries (a, b; c, d)."""

    a: int
    b: int
    c: int
    d: int
    modulus: Modulus

    def __post_init__(self):
        p = self.modulus.p
        for name in ("a", "b", "c", "d"):
            object.__setattr__(self, name, getattr(self, name) % p)
        if self.det == 0:
            raise ValueError("singular matrix")

    @property
    def det(self) -> int:
        return (self.a * self.d - self.b * self.c) % self.modulus.p

    @property
    def is_special(self) -> bool:
        """True when det = 1, i.e. the matrix lies in SL2."""
        return self.det == 1

    @classmethod
    def identity(cls, mod: Modulus) -> "Mat2":
        return cls(1, 0, 0, 1, mod)

    def inv(self) -> "Mat2":
        dinv = ext_euclid_inv(self.det, self.modulus.p)
        return Mat2(
            self.d * dinv, -self.b * dinv, -self.c * dinv, self.a * dinv, self.modulus
        )

    def entries(self) -> tuple[int, int, int, int]:
        return (self.a, self.b, self.c, self.d)

    def __matmul__(self, other: "Mat2") -> "Mat2":
        return mat_mul(self, other)

    def __repr__(self) -> str:
        return f"[[{self.a},{self.b}],[{self.c},{self.d}]] (mod {self.modulus.p})"


def mat_mul(m1: Mat2, m2: Mat2) -> Mat2:
    """Matrix product mod p; the determinant is multiplicative."""
    if m1.modulus != m2.modulus:
        raise ValueError("modulus mismatch")
    return Mat2(
        m1.a * m2.a + m1.b * m2.c,
        m1.a * m2.b + m1.b * m2.d,
        m1.c * m2.a + m1.d * m2.c,
        m1.c * m2.b + m1.d * m2.d,
        m1.modulus,
    )


def moebius_act(m: Mat2, x: ProjPoint) -> ProjPoint:
    """Linear fractional action of an invertible matrix on the projective line.

    x |-> (a x + b) / (c x + d), with the usual conventions at poles and at
    infinity.  This is a left group action:
    ``moebius_act(m1 @ m2, x) == moebius_act(m1, moebius_act(m2, x))``.
    """
    if m.modulus != x.modulus:
        raise ValueError("modulus mismatch")
    p = m.modulus.p
    if x.is_infinity:
        if m.c == 0:
            return ProjPoint.infinity(m.modulus)
        return ProjPoint(m.modulus, (m.a * ext_euclid_inv(m.c, p)) % p)
    denom = (m.c * x.index + m.d) % p
    if denom == 0:
        return ProjPoint.infinity(m.modulus)
    numer = (m.a * x.index + m.b) % p
    return ProjPoint(m.modulus, (numer * ext_euclid_inv(denom, p)) % p)


def generator_set(a1: int, b: int, p: Modulus) -> tuple[Mat2, Mat2, Mat2, Mat2]:
    """The four SL2 matrices whose linear fractional actions are the moves
    x+b, iota_bar(iota_bar(x+a1)+b)-a1, x-b, iota_bar(iota_bar(x+a1)-b)-a1.

    The set is symmetric: entries 0 and 2 are mutually inverse translations,
    and entries 1 and 3 are mutually inverse.  Requires b != 0 mod p.
    """
    if b % p.p == 0:
        raise ValueError(f"b = {b} vanishes mod {p.p}")
    g1 = Mat2(1, b, 0, 1, p)
    g2 = Mat2(1 - a1 * b, -a1 * a1 * b, b, a1 * b + 1, p)
    g3 = Mat2(1, -b, 0, 1, p)
    g4 = Mat2(1 + a1 * b, a1 * a1 * b, -b, 1 - a1 * b, p)
    return (g1, g2, g3, g4)
