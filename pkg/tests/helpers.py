"""Shared fixtures and independent oracles for the test suite.

The oracles deliberately avoid the package's own code paths: inverses come
from python's pow, eigenvalues from numpy.linalg, products from dense
matmul, counts from brute-force enumeration.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from fracwalk import Kernel, Modulus, StepDist, uniform_step
from fracwalk.ffield import is_prime
from fracwalk.kernels import FpSpace

FIXTURE_MUS = {
    "u01": uniform_step((0, 1)),
    "u-101": uniform_step((-1, 0, 1)),
    "q13": StepDist((0, 1), (Fraction(1, 4), Fraction(3, 4))),
}

FIXTURE_PARAMS = {
    "u01": (0, 1),
    "u-101": (-1, 0),
    "q13": (1, 0),
}


def primes_in(lo: int, hi: int) -> list[int]:
    return [n for n in range(max(lo, 5), hi + 1) if is_prime(n)]


def oracle_inv(x: int, p: int) -> int:
    """Inverse-or-zero via python's builtin modular inverse."""
    return pow(x, -1, p) if x % p else 0


def eigh_desc(a: np.ndarray) -> np.ndarray:
    """Independent dense eigensolver oracle."""
    return np.sort(np.linalg.eigvalsh(a))[::-1]


def brute_count(p: int, i0: int, j0: int, m: int) -> int:
    """Literal double loop over the box, testing the congruence directly."""
    count = 0
    for a in range(m):
        x = (i0 + a) % p
        for b in range(m):
            y = (j0 + b) % p
            if (x * y) % p == 1:
                count += 1
    return count


def brute_count_outer(p: int, i0: int, j0: int, m: int) -> int:
    """Vectorized form of the same all-pairs definition."""
    xs = (i0 + np.arange(m)) % p
    ys = (j0 + np.arange(m)) % p
    return int(np.count_nonzero((xs[:, None] * ys[None, :]) % p == 1))


def identity_kernel(n: int, p: int = 5) -> Kernel:
    return Kernel(FpSpace(n) if is_prime(n) and n >= 5 else _fake_space(n),
                  [{x: 1.0} for x in range(n)], symmetric=True)


def _fake_space(n: int):
    # Interval tests sometimes need non-prime sizes; reuse FpSpace's shape
    # through a stand-in with the same interface.
    class _Space:
        kind = "Fp"

        def __init__(self, size):
            self.p = size

        @property
        def size(self):
            return self.p

        def __eq__(self, other):
            return isinstance(other, _Space) and other.p == self.p

        def __hash__(self):
            return hash(("fake", self.p))

    return _Space(n)


def complete_kernel(n: int) -> Kernel:
    row = {y: 1.0 / n for y in range(n)}
    return Kernel(_fake_space(n), [dict(row) for _ in range(n)], symmetric=True)


def two_state_kernel(q: float) -> Kernel:
    rows = [{0: 1.0 - q, 1: q}, {0: q, 1: 1.0 - q}]
    return Kernel(_fake_space(2), rows, symmetric=True)


def random_symmetric_doubly_stochastic(n: int, rng: np.random.Generator) -> Kernel:
    """A convex mix of the identity and symmetrized random permutations:
    symmetric, doubly stochastic, nonnegative by construction."""
    weights = rng.dirichlet(np.ones(4))
    dense = weights[0] * np.eye(n)
    for w in weights[1:]:
        perm = rng.permutation(n)
        m = np.zeros((n, n))
        m[np.arange(n), perm] = 1.0
        dense += w * 0.5 * (m + m.T)
    rows = [
        {j: float(dense[i, j]) for j in range(n) if dense[i, j] > 0.0}
        for i in range(n)
    ]
    return Kernel(_fake_space(n), rows, symmetric=True, sym_tol=1e-12)


def modulus(p: int) -> Modulus:
    return Modulus(p)
