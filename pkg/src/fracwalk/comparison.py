"""Dirichlet-form comparison machinery for reversible chains on nested state
spaces: extension measures, couplings, flows, and the two transfer
constants, instantiated for the field walk inside the projective-line walk.

The engine accepts arbitrary ``ComparisonData`` so the machinery is reusable
beyond the walk instance; ``build_comparison_data`` produces that instance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ffield import Modulus, ext_euclid_inv
from .kernels import Kernel, StepDist, WalkParams, build_L, build_L0, walk_decomposition
from .spectral import spectral_gap

MARGINAL_TOL = 1e-12

# measure on the small space, keyed by large-space state
ExtensionMeasures = dict[int, dict[int, float]]
# joint measure on small-space pairs, keyed by an ordered edge of the large chain
Coupling = dict[tuple[int, int], dict[tuple[int, int], float]]
# weighted paths (state tuples) for each small-space pair that needs routing
Flow = dict[tuple[int, int], tuple[tuple[tuple[int, ...], float], ...]]


def dirichlet_form(k: Kernel, pi: np.ndarray, f: np.ndarray) -> float:
    """The quadratic form (1/2) sum |f(x) - f(y)|^2 K(x, y) pi(x).

    Nonnegative, and zero exactly when f is constant on every communicating
    class.
    """
    pi = np.asarray(pi, dtype=np.float64)
    f = np.asarray(f, dtype=np.float64)
    counts = np.diff(k.indptr)
    rows = np.repeat(np.arange(k.n), counts)
    diffs = f[rows] - f[k.indices]
    return 0.5 * float((diffs * diffs * k.probs * pi[rows]).sum())


def variance_form(pi: np.ndarray, f: np.ndarray) -> float:
    """(1/2) sum |f(x) - f(y)|^2 pi(x) pi(y), which collapses algebraically
    to the plain variance E[f^2] - (E[f])^2."""
    pi = np.asarray(pi, dtype=np.float64)
    f = np.asarray(f, dtype=np.float64)
    mean = float(pi @ f)
    return float(pi @ (f * f)) - mean * mean


@dataclass(frozen=True)
class ComparisonData:
    """The full data a gap transfer needs.

    * ``p0`` on the small space, ``p_big`` on the large one, with their
      stationary vectors;
    * ``x0_in_x`` embeds small-space indices into the large space;
    * ``ext`` maps every large-space state to a measure on the small space
      (a point mass on embedded states);
    * ``coupling`` maps every ordered edge of the large chain to a joint
      measure whose marginals are the endpoint extension measures;
    * ``flow`` maps small-space state pairs to weighted paths along
      positive edges of the small chain.
    """

    p0: Kernel
    p_big: Kernel
    pi0: np.ndarray
    pi_big: np.ndarray
    x0_in_x: np.ndarray
    ext: ExtensionMeasures
    coupling: Coupling
    flow: Flow

    def __post_init__(self):
        n0 = self.p0.n
        embedded = set(int(i) for i in self.x0_in_x)
        if len(embedded) != n0:
            raise ValueError("embedding must be injective")
        for i in range(n0):
            xi = int(self.x0_in_x[i])
            m = self.ext.get(xi)
            if m != {i: 1.0}:
                raise ValueError(f"extension at embedded state {xi} must be a point mass")
        for x in range(self.p_big.n):
            m = self.ext.get(x)
            if m is None:
                raise ValueError(f"missing extension measure at {x}")
            if abs(sum(m.values()) - 1.0) > MARGINAL_TOL:
                raise ValueError(f"extension at {x} does not sum to 1")
        for (x, y), joint in self.coupling.items():
            mx: dict[int, float] = {}
            my: dict[int, float] = {}
            for (a, b), q in joint.items():
                mx[a] = mx.get(a, 0.0) + q
                my[b] = my.get(b, 0.0) + q
            for target, got in ((self.ext[x], mx), (self.ext[y], my)):
                keys = set(target) | set(got)
                for kk in keys:
                    if abs(target.get(kk, 0.0) - got.get(kk, 0.0)) > MARGINAL_TOL:
                        raise ValueError(f"coupling at edge ({x}, {y}) has bad marginals")
        p0_rows = self.p0.rows()
        for (a, b), paths in self.flow.items():
            total = 0.0
            for path, weight in paths:
                if path[0] != a or path[-1] != b:
                    raise ValueError(f"path endpoints disagree with pair ({a}, {b})")
                for u, v in zip(path, path[1:]):
                    if p0_rows[u].get(v, 0.0) <= 0.0:
                        raise ValueError(
                            f"flow path for ({a}, {b}) uses the absent edge ({u}, {v})"
                        )
                total += weight
            if abs(total - 1.0) > MARGINAL_TOL:
                raise ValueError(f"flow weights for ({a}, {b}) sum to {total}")

    @property
    def outside(self) -> list[int]:
        embedded = set(int(i) for i in self.x0_in_x)
        return [x for x in range((self.p_big.n)) if x not in embedded]


def exceptional_points(params: WalkParams, p: Modulus) -> tuple[int, int, int]:
    """The three special field points of the instance: where the two walks'
    moves disagree.  Returns (-a1, 1/b - a1, -1/b - a1) mod p.

    The three are pairwise distinct for every valid input: the last two
    collide only if 2/b = 0 (impossible, p odd) and either collides with
    -a1 only if 1/b = 0 (impossible).
    """
    n = p.p
    bb = params.b % n
    if bb == 0:
        raise ValueError(f"b = {params.b} vanishes mod {n}")
    a1 = params.a1 % n
    binv = ext_euclid_inv(bb, n)
    anchor = (-a1) % n
    plus = (binv - a1) % n
    minus = (-binv - a1) % n
    assert plus != minus and plus != anchor and minus != anchor
    return anchor, plus, minus


def build_comparison_data(params: WalkParams, p: Modulus) -> ComparisonData:
    """The walk instance of the comparison data.

    Small space: the field; large space: the projective line.  Extension
    measures are point masses at finite points and uniform over the two
    finite neighbors of infinity; couplings are independent; the flow puts a
    single path on every needed pair: the edge itself where the small walk
    has it, and a two-step path through the anchor point -a1 for the two
    exceptional families (the self-pair at -a1, and pairs of neighbors of
    infinity).  Every flow path has length at most 2.
    """
    n = p.p
    if n <= abs(params.b):
        raise ValueError(f"need p > |b|, got p = {n}, b = {params.b}")
    anchor, plus, minus = exceptional_points(params, p)
    l0 = build_L0(params, p)
    lbig = build_L(params, p)
    inf = n

    ext: dict[int, dict[int, float]] = {x: {x: 1.0} for x in range(n)}
    inf_support = sorted(y for y in lbig.row(inf) if y != inf)
    assert inf_support == sorted((plus, minus))
    ext[inf] = {y: 1.0 / len(inf_support) for y in inf_support}

    coupling: dict[tuple[int, int], dict[tuple[int, int], float]] = {}
    for x in range(n + 1):
        for y in lbig.row(x):
            joint: dict[tuple[int, int], float] = {}
            for a, qa in ext[x].items():
                for b, qb in ext[y].items():
                    joint[(a, b)] = qa * qb
            coupling[(x, y)] = joint

    special = {plus, minus}
    needed: set[tuple[int, int]] = set()
    for (x, y), joint in coupling.items():
        needed.update(joint.keys())

    flow: dict[tuple[int, int], tuple[tuple[tuple[int, ...], float], ...]] = {}
    l0_rows = l0.rows()
    for a, b in sorted(needed):
        if a in special and b in special:
            path = (a, anchor, b)
        elif a == b == anchor:
            path = (anchor, plus, anchor)
        else:
            if l0_rows[a].get(b, 0.0) <= 0.0:
                raise ValueError(
                    f"pair ({a}, {b}) is needed but is not an edge of the small walk"
                )
            path = (a, b)
        flow[(a, b)] = ((path, 1.0),)

    pi0 = np.full(n, 1.0 / n)
    pi_big = np.full(n + 1, 1.0 / (n + 1))
    return ComparisonData(
        p0=l0, p_big=lbig, pi0=pi0, pi_big=pi_big,
        x0_in_x=np.arange(n, dtype=np.int64),
        ext=ext, coupling=coupling, flow=flow,
    )


def compute_C(data: ComparisonData) -> float:
    """The variance transfer constant sup over small states of
    pi0(x) / pi(x); (p+1)/p for the uniform instance, hence at most 2."""
    ratios = data.pi0 / data.pi_big[data.x0_in_x]
    return float(ratios.max())


def compute_A(data: ComparisonData) -> float:
    """The Dirichlet transfer constant: the supremum over positive edges
    (x, y) of the small chain of

      [ sum over flow paths through (x, y) of |path| * weight * (
          P(i, o) pi(i)
          + 2 * sum over outside states B of ext_B(o) P(i, B) pi(i)
          + sum over outside-outside edges (A, B) of coupling_{A,B}(i, o)
            P(A, B) pi(A) ) ] / (P0(x, y) pi0(x)),

    where i, o are the path endpoints.  Errors out if a needed pair has no
    flow assigned.
    """
    needed: set[tuple[int, int]] = set()
    for joint in data.coupling.values():
        needed.update(joint.keys())
    missing = sorted(needed - set(data.flow))
    if missing:
        raise ValueError(f"flow is missing required pairs, first: {missing[0]}")

    embedded = {int(i) for i in data.x0_in_x}
    outside = [x for x in range(data.p_big.n) if x not in embedded]
    big_rows = data.p_big.rows()
    x_of = data.x0_in_x

    def pair_weight(a: int, b: int) -> float:
        ia, ib = int(x_of[a]), int(x_of[b])
        w = big_rows[ia].get(ib, 0.0) * data.pi_big[ia]
        for beta in outside:
            w += 2.0 * data.ext[beta].get(b, 0.0) * big_rows[ia].get(beta, 0.0) \
                * data.pi_big[ia]
        for alpha in outside:
            for beta, q in big_rows[alpha].items():
                if beta in embedded:
                    continue
                joint = data.coupling.get((alpha, beta))
                if joint:
                    w += joint.get((a, b), 0.0) * q * data.pi_big[alpha]
        return w

    edge_load: dict[tuple[int, int], float] = {}
    for (a, b), paths in sorted(data.flow.items()):
        w = pair_weight(a, b)
        for path, weight in paths:
            contrib = (len(path) - 1) * weight * w
            if contrib == 0.0:
                continue
            for u, v in zip(path, path[1:]):
                edge_load[(u, v)] = edge_load.get((u, v), 0.0) + contrib

    best = 0.0
    for x in range(data.p0.n):
        for y, q in data.p0.row(x).items():
            load = edge_load.get((x, y), 0.0)
            ratio = load / (q * data.pi0[x])
            if ratio > best:
                best = ratio
    return best


def extend_function(f0: np.ndarray, data: ComparisonData) -> np.ndarray:
    """Extend a small-space function to the large space by averaging under
    the extension measures; agrees with f0 on embedded states."""
    f0 = np.asarray(f0, dtype=np.float64)
    out = np.zeros(data.p_big.n)
    for x in range(data.p_big.n):
        out[x] = sum(q * f0[i] for i, q in data.ext[x].items())
    return out


@dataclass(frozen=True)
class ComparisonReport:
    p: int
    c_const: float
    a_const: float
    u: float | None
    gap_l: float
    gap_l0: float
    gap_q: float | None
    links_ok: bool
    forms_ok: bool
    trials: int
    worst_dirichlet_slack: float
    worst_variance_slack: float
    witness_trial: int | None = None

    def to_json_dict(self) -> dict:
        return {
            "p": self.p,
            "C": self.c_const,
            "A": self.a_const,
            "u": self.u,
            "gap_L": self.gap_l,
            "gap_L0": self.gap_l0,
            "gap_Q": self.gap_q,
            "links_ok": self.links_ok,
        }


def verify_comparison(params: WalkParams, p: Modulus, trials: int = 200,
                      mu: StepDist | None = None, seed: int = 0) -> ComparisonReport:
    """Check the comparison inequalities numerically.

    For ``trials`` seeded random functions f0 on the field (one generator
    per trial, seed + index): the extended Dirichlet form is at most A times
    the small one, and the small variance is at most C times the extended
    one, each within 1e-9.  Then the gap transfer
    gap(L0) >= gap(L) / (C A) - 1e-8, and, when ``mu`` is given, the first
    link gap(Q) >= u * gap(L0) - 1e-8 as well.
    """
    data = build_comparison_data(params, p)
    c_const = compute_C(data)
    a_const = compute_A(data)
    n = p.p

    worst_d = -np.inf
    worst_v = -np.inf
    forms_ok = True
    witness = None
    for t in range(trials):
        rng = np.random.default_rng(seed + t)
        f0 = rng.standard_normal(n)
        f = extend_function(f0, data)
        lhs_d = dirichlet_form(data.p_big, data.pi_big, f)
        rhs_d = a_const * dirichlet_form(data.p0, data.pi0, f0)
        lhs_v = variance_form(data.pi0, f0)
        rhs_v = c_const * variance_form(data.pi_big, f)
        worst_d = max(worst_d, lhs_d - rhs_d)
        worst_v = max(worst_v, lhs_v - rhs_v)
        if lhs_d > rhs_d + 1e-9 or lhs_v > rhs_v + 1e-9:
            forms_ok = False
            if witness is None:
                witness = t

    gap_l = spectral_gap(data.p_big)
    gap_l0 = spectral_gap(data.p0)
    links_ok = gap_l0 >= gap_l / (c_const * a_const) - 1e-8

    u = params.u
    gap_q = None
    if mu is not None:
        bundle = walk_decomposition(mu, p, params=WalkParams(params.a1, params.a2))
        u = bundle.params.u
        gap_q = spectral_gap(bundle.Q)
        links_ok = links_ok and gap_q >= u * gap_l0 - 1e-8

    return ComparisonReport(
        p=n, c_const=c_const, a_const=a_const, u=u,
        gap_l=gap_l, gap_l0=gap_l0, gap_q=gap_q,
        links_ok=bool(links_ok and forms_ok), forms_ok=bool(forms_ok),
        trials=trials, worst_dirichlet_slack=float(worst_d),
        worst_variance_slack=float(worst_v), witness_trial=witness,
    )
