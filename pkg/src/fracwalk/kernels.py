"""Transition kernels of the inverse-step walk as explicit sparse
row-stochastic matrices, with exact composition, transposition, and the
convex decomposition that splits off the four-move comparison walk.

Kernels are immutable once built; independent kernels may be constructed in
parallel.  Probabilities are binary floats with 1e-12 construction
tolerances; builders additionally accept ``exact=True`` to carry
``fractions.Fraction`` rows alongside the float data (small p only), which
backs the exact oracles.
"""

from __future__ import annotations

from collections import Counter, deque
from dataclasses import dataclass, replace
from fractions import Fraction
from numbers import Rational

import numpy as np

from . import backend
from .ffield import Mat2, Modulus, iota_table

ROW_SUM_TOL = 1e-12
ENTRY_TOL = 1e-12
U_CAP = 0.999999


# ---------------------------------------------------------------------------
# state spaces


@dataclass(frozen=True)
class FpSpace:
    """The field residues 0..p-1."""

    p: int
    kind = "Fp"

    @property
    def size(self) -> int:
        return self.p

    def label(self, i: int) -> str:
        return str(i)


@dataclass(frozen=True)
class P1Space:
    """The projective line: residues 0..p-1 plus index p for infinity."""

    p: int
    kind = "P1"

    @property
    def size(self) -> int:
        return self.p + 1

    @property
    def infinity(self) -> int:
        return self.p

    def label(self, i: int) -> str:
        return "inf" if i == self.p else str(i)


@dataclass(frozen=True)
class SL2Space:
    """An enumerated subgroup of SL2(F_p); elements are (a, b, c, d) tuples
    in breadth-first discovery order from the identity."""

    p: int
    elements: tuple[tuple[int, int, int, int], ...]
    kind = "SL2"

    @property
    def size(self) -> int:
        return len(self.elements)

    def label(self, i: int) -> str:
        return str(self.elements[i])


StateSpace = FpSpace | P1Space | SL2Space


def sl2_order(p: int) -> int:
    """|SL2(F_p)| = p (p^2 - 1)."""
    return p * (p * p - 1)


# ---------------------------------------------------------------------------
# step distributions and walk parameters


def _is_exact(q) -> bool:
    return isinstance(q, Rational)


@dataclass(frozen=True)
class StepDist:
    """A finitely supported step law on the integers.

    ``support`` is sorted and duplicate-free; ``probs`` are positive and sum
    to 1 (exactly when rational, within 1e-12 when float).
    """

    support: tuple[int, ...]
    probs: tuple

    def __post_init__(self):
        support = tuple(int(v) for v in self.support)
        probs = tuple(self.probs)
        if len(support) == 0:
            raise ValueError("empty support")
        if len(support) != len(probs):
            raise ValueError("support and probs differ in length")
        if len(set(support)) != len(support):
            raise ValueError("support values must be distinct")
        order = sorted(range(len(support)), key=lambda i: support[i])
        support = tuple(support[i] for i in order)
        probs = tuple(probs[i] for i in order)
        for q in probs:
            if not q > 0:
                raise ValueError("all probabilities must be positive")
        if all(_is_exact(q) for q in probs):
            if sum(Fraction(q) for q in probs) != 1:
                raise ValueError("rational probabilities must sum to exactly 1")
        elif abs(float(sum(float(q) for q in probs)) - 1.0) > ROW_SUM_TOL:
            raise ValueError("probabilities must sum to 1 within 1e-12")
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "probs", probs)

    @property
    def probs_float(self) -> tuple[float, ...]:
        return tuple(float(q) for q in self.probs)

    def __len__(self) -> int:
        return len(self.support)


def uniform_step(values) -> StepDist:
    values = tuple(values)
    return StepDist(values, tuple(Fraction(1, len(values)) for _ in values))


STEP_PRESETS = {
    "u01": uniform_step((0, 1)),
    "u-101": uniform_step((-1, 0, 1)),
}


def choose_step_pair(mu: StepDist) -> tuple[int, int]:
    """Pick the two support points used by the four-move comparison walk:
    the two largest masses, ties broken toward the smaller integer."""
    if len(mu) < 2:
        raise ValueError("need at least two support points")
    ranked = sorted(zip(mu.support, mu.probs), key=lambda t: (-float(t[1]), t[0]))
    return ranked[0][0], ranked[1][0]


@dataclass(frozen=True)
class WalkParams:
    """The pair (a1, a2) of step values driving the comparison walk, the
    difference b = a1 - a2, and (once computed) the decomposition weight u."""

    a1: int
    a2: int
    u: float | None = None

    def __post_init__(self):
        if self.a1 == self.a2:
            raise ValueError("a1 and a2 must be distinct")

    @property
    def b(self) -> int:
        return self.a1 - self.a2

    @classmethod
    def from_step_dist(cls, mu: StepDist) -> "WalkParams":
        a1, a2 = choose_step_pair(mu)
        return cls(a1, a2)


# ---------------------------------------------------------------------------
# distributions


def point_mass(space: StateSpace, i: int) -> np.ndarray:
    d = np.zeros(space.size)
    d[i] = 1.0
    return d


def uniform_dist(space: StateSpace) -> np.ndarray:
    return np.full(space.size, 1.0 / space.size)


def check_dist(d: np.ndarray, tol: float = ROW_SUM_TOL) -> np.ndarray:
    d = np.asarray(d, dtype=np.float64)
    if d.min() < -ENTRY_TOL:
        raise ValueError("negative probability mass")
    if abs(d.sum() - 1.0) > tol:
        raise ValueError("distribution does not sum to 1")
    return d


# ---------------------------------------------------------------------------
# the Kernel container


class Kernel:
    """A sparse row-stochastic matrix over an explicitly indexed state space.

    Rows are stored CSR-style (indptr / indices / probs) with columns sorted
    inside each row.  Construction validates row sums within 1e-12 and
    nonnegativity; when ``symmetric=True`` the entries are checked against
    the transpose within ``sym_tol`` and then averaged so the stored matrix
    is symmetric exactly.
    """

    __slots__ = ("space", "indptr", "indices", "probs", "symmetric", "exact_rows")

    def __init__(self, space, rows, symmetric=False, *, sym_tol=1e-12,
                 row_tol=ROW_SUM_TOL, exact_rows=None):
        n = space.size
        if len(rows) != n:
            raise ValueError("row count does not match state space")
        rows = [dict(r) for r in rows]
        for x, row in enumerate(rows):
            for y, q in row.items():
                if not 0 <= y < n:
                    raise ValueError(f"column {y} out of range in row {x}")
                if q < -ENTRY_TOL:
                    raise ValueError(f"negative entry {q} at ({x}, {y})")
            total = sum(row.values())
            if abs(total - 1.0) > row_tol:
                raise ValueError(f"row {x} sums to {total}, not 1")
        if symmetric:
            for x, row in enumerate(rows):
                for y, q in list(row.items()):
                    if y < x:
                        continue
                    q2 = rows[y].get(x, 0.0)
                    if abs(q - q2) > sym_tol:
                        raise ValueError(
                            f"asymmetry {q} vs {q2} at ({x}, {y}) exceeds {sym_tol}"
                        )
                    avg = 0.5 * (q + q2)
                    row[y] = avg
                    rows[y][x] = avg
        indptr = np.zeros(n + 1, dtype=np.int64)
        cols = []
        vals = []
        for x, row in enumerate(rows):
            items = sorted((y, q) for y, q in row.items() if q > 0.0)
            indptr[x + 1] = indptr[x] + len(items)
            cols.extend(y for y, _ in items)
            vals.extend(max(q, 0.0) for _, q in items)
        self.space = space
        self.indptr = indptr
        self.indices = np.array(cols, dtype=np.int64)
        self.probs = np.array(vals, dtype=np.float64)
        self.indptr.setflags(write=False)
        self.indices.setflags(write=False)
        self.probs.setflags(write=False)
        self.symmetric = bool(symmetric)
        self.exact_rows = tuple(exact_rows) if exact_rows is not None else None

    @property
    def n(self) -> int:
        return self.space.size

    @property
    def nnz(self) -> int:
        return int(self.indices.shape[0])

    def row(self, x: int) -> dict[int, float]:
        lo, hi = self.indptr[x], self.indptr[x + 1]
        return dict(zip(self.indices[lo:hi].tolist(), self.probs[lo:hi].tolist()))

    def rows(self) -> list[dict[int, float]]:
        return [self.row(x) for x in range(self.n)]

    def entry(self, x: int, y: int) -> float:
        lo, hi = self.indptr[x], self.indptr[x + 1]
        pos = np.searchsorted(self.indices[lo:hi], y)
        if pos < hi - lo and self.indices[lo + pos] == y:
            return float(self.probs[lo + pos])
        return 0.0

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.n, self.n))
        for x in range(self.n):
            lo, hi = self.indptr[x], self.indptr[x + 1]
            out[x, self.indices[lo:hi]] = self.probs[lo:hi]
        return out

    def apply(self, v: np.ndarray) -> np.ndarray:
        """Row vector times kernel: returns v . K."""
        v = np.ascontiguousarray(v, dtype=np.float64)
        return backend.vec_csr(v, self.indptr, self.indices, self.probs)

    def apply_block(self, m: np.ndarray) -> np.ndarray:
        """Dense block of row vectors times kernel: returns M . K."""
        m = np.ascontiguousarray(m, dtype=np.float64)
        return backend.mat_csr(m, self.indptr, self.indices, self.probs)

    def apply_to_columns(self, v: np.ndarray) -> np.ndarray:
        """K times a block of column vectors; requires a symmetric kernel."""
        if not self.symmetric:
            raise ValueError("column application requires a symmetric kernel")
        return self.apply_block(np.ascontiguousarray(v.T)).T

    def to_json_dict(self) -> dict:
        return {
            "space": self.space.kind,
            "p": self.space.p,
            "rows": [
                [[int(y), float(q)] for y, q in sorted(self.row(x).items())]
                for x in range(self.n)
            ],
        }

    def __repr__(self) -> str:
        return (
            f"Kernel({self.space.kind}, p={self.space.p}, n={self.n}, "
            f"nnz={self.nnz}, symmetric={self.symmetric})"
        )


def kernel_from_json_dict(doc: dict) -> Kernel:
    p = int(doc["p"])
    kind = doc["space"]
    rows = [{int(y): float(q) for y, q in row} for row in doc["rows"]]
    if kind == "Fp":
        space = FpSpace(p)
    elif kind == "P1":
        space = P1Space(p)
    else:
        raise ValueError("SL2 kernels cannot be rebuilt from JSON without labels")
    return Kernel(space, rows)


# ---------------------------------------------------------------------------
# composition plumbing


def compose(k1: Kernel, k2: Kernel) -> Kernel:
    """The two-stage kernel: apply k1, then k2 (sparse matrix product)."""
    if k1.space != k2.space:
        raise ValueError("state-space mismatch")
    rows2 = k2.rows()
    out = []
    for x in range(k1.n):
        acc: dict[int, float] = {}
        for z, pz in k1.row(x).items():
            for y, py in rows2[z].items():
                acc[y] = acc.get(y, 0.0) + pz * py
        out.append(acc)
    exact = None
    if k1.exact_rows is not None and k2.exact_rows is not None:
        exact = []
        for x in range(k1.n):
            acc_e: dict[int, Fraction] = {}
            for z, pz in k1.exact_rows[x].items():
                for y, py in k2.exact_rows[z].items():
                    acc_e[y] = acc_e.get(y, Fraction(0)) + pz * py
            exact.append(acc_e)
    return Kernel(k1.space, out, exact_rows=exact)


def transpose(k: Kernel) -> Kernel:
    """The reversed kernel; stochastic again because every kernel built here
    is doubly stochastic."""
    out: list[dict[int, float]] = [dict() for _ in range(k.n)]
    for x in range(k.n):
        for y, q in k.row(x).items():
            out[y][x] = q
    exact = None
    if k.exact_rows is not None:
        exact = [dict() for _ in range(k.n)]
        for x in range(k.n):
            for y, q in k.exact_rows[x].items():
                exact[y][x] = q
    return Kernel(k.space, out, symmetric=k.symmetric, exact_rows=exact)


# ---------------------------------------------------------------------------
# kernel builders


def _folded_masses(mu: StepDist, p: int, exact: bool):
    """Step masses folded mod p, as {residue: mass}."""
    acc: dict[int, object] = {}
    zero = Fraction(0) if exact else 0.0
    for v, q in zip(mu.support, mu.probs):
        q = Fraction(q) if exact else float(q)
        r = v % p
        acc[r] = acc.get(r, zero) + q
    return acc


def reduce_mod_p(mu: StepDist, p: Modulus) -> np.ndarray:
    """The step law folded onto the field: mass at r is the total mass of
    all integers congruent to r."""
    out = np.zeros(p.p)
    for r, q in _folded_masses(mu, p.p, exact=False).items():
        out[r] = q
    return out


def _finish(space, rows_f, rows_e, symmetric, sym_tol=1e-12, row_tol=ROW_SUM_TOL):
    return Kernel(
        space, rows_f, symmetric=symmetric, sym_tol=sym_tol, row_tol=row_tol,
        exact_rows=rows_e,
    )


def build_P(mu: StepDist, p: Modulus, exact: bool = False) -> Kernel:
    """The translation stage X -> X + step; a circulant with one entry per
    folded support point."""
    n = p.p
    masses = _folded_masses(mu, n, exact)
    rows_f = []
    rows_e = [] if exact else None
    for x in range(n):
        rows_f.append({(x + e) % n: float(q) for e, q in masses.items()})
        if exact:
            rows_e.append({(x + e) % n: Fraction(q) for e, q in masses.items()})
    return _finish(FpSpace(n), rows_f, rows_e, symmetric=False)


def build_Pi(p: Modulus, exact: bool = False) -> Kernel:
    """The deterministic inversion stage X -> iota(X): a symmetric
    permutation kernel squaring to the identity."""
    n = p.p
    tab = iota_table(p)
    rows_f = [{int(tab[x]): 1.0} for x in range(n)]
    rows_e = [{int(tab[x]): Fraction(1)} for x in range(n)] if exact else None
    return _finish(FpSpace(n), rows_f, rows_e, symmetric=True)


def build_K(mu: StepDist, p: Modulus, exact: bool = False) -> Kernel:
    """One full walk step X -> iota(X) + step, i.e. K(x, y) = mu_p(y - iota(x)).

    Entrywise identical to composing the inversion stage with the
    translation stage.
    """
    n = p.p
    tab = iota_table(p)
    masses = _folded_masses(mu, n, exact)
    rows_f = []
    rows_e = [] if exact else None
    for x in range(n):
        ix = int(tab[x])
        rows_f.append({(ix + e) % n: float(q) for e, q in masses.items()})
        if exact:
            rows_e.append({(ix + e) % n: Fraction(q) for e, q in masses.items()})
    return _finish(FpSpace(n), rows_f, rows_e, symmetric=False)


def build_Q(mu: StepDist, p: Modulus, exact: bool = False) -> Kernel:
    """The symmetrized six-stage kernel: three forward half-steps
    (translate, invert, translate) followed by the same three reversed.

    With A the three-stage map, Q is the Gram product of A with its
    transpose, so Q is symmetric, doubly stochastic, and positive
    semidefinite with all eigenvalues in [0, 1].
    """
    if len(_folded_masses(mu, p.p, exact=False)) < 2:
        raise ValueError("the symmetrized kernel needs at least two folded steps")
    P = build_P(mu, p, exact)
    Pi = build_Pi(p, exact)
    A = compose(compose(P, Pi), P)
    Q = compose(A, transpose(A))
    return Kernel(
        Q.space, Q.rows(), symmetric=True, exact_rows=Q.exact_rows,
    )


def _l0_moves(x: int, a1: int, bb: int, tab, n: int) -> tuple[int, int, int, int]:
    m3 = (int(tab[(int(tab[(x + a1) % n]) + bb) % n]) - a1) % n
    m4 = (int(tab[(int(tab[(x + a1) % n]) - bb) % n]) - a1) % n
    return ((x + bb) % n, (x - bb) % n, m3, m4)


def build_L0(params: WalkParams, p: Modulus, exact: bool = False) -> Kernel:
    """The four-move comparison walk on the field: from x move to one of
    x+b, x-b, iota(iota(x+a1)+b)-a1, iota(iota(x+a1)-b)-a1, each with
    probability 1/4 (coinciding moves accumulate).  Symmetric because the
    four moves form two mutually inverse pairs."""
    n = p.p
    bb = params.b % n
    if bb == 0:
        raise ValueError(f"b = {params.b} vanishes mod {n}")
    a1 = params.a1 % n
    tab = iota_table(p)
    quarter_f = 0.25
    quarter_e = Fraction(1, 4)
    rows_f = []
    rows_e = [] if exact else None
    for x in range(n):
        row_f: dict[int, float] = {}
        for y in _l0_moves(x, a1, bb, tab, n):
            row_f[y] = row_f.get(y, 0.0) + quarter_f
        rows_f.append(row_f)
        if exact:
            row_e: dict[int, Fraction] = {}
            for y in _l0_moves(x, a1, bb, tab, n):
                row_e[y] = row_e.get(y, Fraction(0)) + quarter_e
            rows_e.append(row_e)
    return _finish(FpSpace(n), rows_f, rows_e, symmetric=True)


def _p1_shift(i: int, t: int, n: int) -> int:
    return i if i == n else (i + t) % n


def _p1_ibar(i: int, tab, n: int) -> int:
    if i == n:
        return 0
    if i == 0:
        return n
    return int(tab[i])


def p1_moves(x: int, a1: int, bb: int, tab, n: int) -> tuple[int, int, int, int]:
    """The four moves of the projective-line walk on the 0..p index encoding."""
    inner = _p1_ibar(_p1_shift(x, a1, n), tab, n)
    m3 = _p1_shift(_p1_ibar(_p1_shift(inner, bb, n), tab, n), -a1, n)
    m4 = _p1_shift(_p1_ibar(_p1_shift(inner, -bb, n), tab, n), -a1, n)
    return (_p1_shift(x, bb, n), _p1_shift(x, -bb, n), m3, m4)


def build_L(params: WalkParams, p: Modulus, exact: bool = False) -> Kernel:
    """The same four moves on the projective line, with the extended
    inversion in place of the field one.  Each row has at most 4 entries and
    the kernel equals the uniform step over the four generator matrices
    acting by linear fractional transformations."""
    n = p.p
    bb = params.b % n
    if bb == 0:
        raise ValueError(f"b = {params.b} vanishes mod {n}")
    a1 = params.a1 % n
    tab = iota_table(p)
    rows_f = []
    rows_e = [] if exact else None
    for x in range(n + 1):
        row_f: dict[int, float] = {}
        for y in p1_moves(x, a1, bb, tab, n):
            row_f[y] = row_f.get(y, 0.0) + 0.25
        rows_f.append(row_f)
        if exact:
            row_e: dict[int, Fraction] = {}
            for y in p1_moves(x, a1, bb, tab, n):
                row_e[y] = row_e.get(y, Fraction(0)) + Fraction(1, 4)
            rows_e.append(row_e)
    return _finish(P1Space(n), rows_f, rows_e, symmetric=True)


def build_cayley(s: list[Mat2] | tuple[Mat2, ...], p: Modulus) -> Kernel:
    """Enumerate the subgroup generated by s by breadth-first closure and
    return the right-multiplication walk with uniform steps from s.

    Requires every matrix in s to lie in SL2 and the multiset s to be closed
    under inverses (that makes the kernel symmetric).  A closure smaller
    than the full group is returned as-is, not treated as an error.
    """
    s = list(s)
    if not s:
        raise ValueError("empty generating sequence")
    for m in s:
        if m.modulus != p or not m.is_special:
            raise ValueError("generators must be SL2 matrices over the given modulus")
    fwd = Counter(m.entries() for m in s)
    if Counter(m.inv().entries() for m in s) != fwd:
        raise ValueError("generating multiset must be closed under inverses")
    gens = [m.entries() for m in s]
    n = p.p
    ident = (1, 0, 0, 1)
    index = {ident: 0}
    order = [ident]
    queue = deque([ident])
    while queue:
        a, b, c, d = queue.popleft()
        for ga, gb, gc, gd in gens:
            prod = (
                (a * ga + b * gc) % n,
                (a * gb + b * gd) % n,
                (c * ga + d * gc) % n,
                (c * gb + d * gd) % n,
            )
            if prod not in index:
                index[prod] = len(order)
                order.append(prod)
                queue.append(prod)
    step = 1.0 / len(gens)
    rows = []
    for a, b, c, d in order:
        row: dict[int, float] = {}
        for ga, gb, gc, gd in gens:
            prod = (
                (a * ga + b * gc) % n,
                (a * gb + b * gd) % n,
                (c * ga + d * gc) % n,
                (c * gb + d * gd) % n,
            )
            j = index[prod]
            row[j] = row.get(j, 0.0) + step
        rows.append(row)
    space = SL2Space(n, tuple(order))
    return Kernel(space, rows, symmetric=True)


def decompose_uL0(q: Kernel, l0: Kernel) -> tuple[float, Kernel]:
    """Split the symmetrized kernel as u * L0 + (1 - u) * L' with the
    entrywise-maximal feasible u (capped below 1).

    L' is validated symmetric stochastic within 1e-10.  A vanishing u means
    some L0 edge is missing from Q, which the construction rules out, so it
    is reported as an error rather than returned.
    """
    if q.space != l0.space:
        raise ValueError("state-space mismatch")
    if not (q.symmetric and l0.symmetric):
        raise ValueError("decomposition requires symmetric kernels")
    u = np.inf
    q_rows = q.rows()
    for x in range(l0.n):
        for y, w in l0.row(x).items():
            ratio = q_rows[x].get(y, 0.0) / w
            if ratio < u:
                u = ratio
    if not u > 0.0:
        raise ValueError(
            "u = 0: an L0 edge is missing from the symmetrized kernel, "
            "which indicates a construction bug"
        )
    u = min(float(u), U_CAP)
    scale = 1.0 / (1.0 - u)
    rows = []
    for x in range(q.n):
        row = dict(q_rows[x])
        for y, w in l0.row(x).items():
            row[y] = row.get(y, 0.0) - u * w
        rows.append({y: v * scale for y, v in row.items()})
    lprime = Kernel(q.space, rows, symmetric=True, sym_tol=1e-10, row_tol=1e-10)
    return u, lprime


# ---------------------------------------------------------------------------
# one-shot decomposition bundle


@dataclass(frozen=True)
class WalkDecomposition:
    """Everything derived from (mu, p) in one pass: the stage kernels, the
    walk kernel, the symmetrization, the four-move walks, and the
    decomposition weight."""

    params: WalkParams
    P: Kernel
    Pi: Kernel
    K: Kernel
    Q: Kernel
    L0: Kernel
    Lprime: Kernel
    L: Kernel


def walk_decomposition(mu: StepDist, p: Modulus,
                       params: WalkParams | None = None) -> WalkDecomposition:
    if params is None:
        params = WalkParams.from_step_dist(mu)
    P = build_P(mu, p)
    Pi = build_Pi(p)
    K = build_K(mu, p)
    Q = build_Q(mu, p)
    L0 = build_L0(params, p)
    u, lprime = decompose_uL0(Q, L0)
    L = build_L(params, p)
    return WalkDecomposition(
        params=replace(params, u=u), P=P, Pi=Pi, K=K, Q=Q, L0=L0,
        Lprime=lprime, L=L,
    )
