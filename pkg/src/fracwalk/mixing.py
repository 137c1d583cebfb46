"""Exact distribution evolution, total-variation distance, entropy, the
entropy lower bound and spectral upper bound on convergence, and exact
mixing-time search.

All logarithms are natural, so the entropy in the lower bound and the log p
it is compared against share a base.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ffield import Modulus
from .kernels import Kernel, StepDist, check_dist, point_mass

WORST_CASE_EXACT_CAP = 2003
SAMPLED_START_COUNT = 32


def tv_distance(d1: np.ndarray, d2: np.ndarray) -> float:
    """Total variation distance: half the l1 distance, the sup over events
    of the probability discrepancy.  Always in [0, 1]."""
    d1 = np.asarray(d1, dtype=np.float64)
    d2 = np.asarray(d2, dtype=np.float64)
    if d1.shape != d2.shape:
        raise ValueError("state-space mismatch")
    return 0.5 * float(np.abs(d1 - d2).sum())


def entropy(mu: StepDist) -> float:
    """Natural-log entropy of a step law (0 log 0 = 0; supports are
    positive-mass only, so the convention never fires here)."""
    return -sum(float(q) * math.log(float(q)) for q in mu.probs)


def dist_entropy(d: np.ndarray) -> float:
    """Natural-log entropy of a probability vector, with 0 log 0 = 0."""
    d = np.asarray(d, dtype=np.float64)
    pos = d[d > 0.0]
    return -float((pos * np.log(pos)).sum())


def apply_steps(k: Kernel, v: np.ndarray, n: int) -> np.ndarray:
    """v . K^n for an arbitrary real row vector, by n sparse products."""
    if n < 0:
        raise ValueError("step count must be nonnegative")
    out = np.array(v, dtype=np.float64, copy=True)
    for _ in range(n):
        out = k.apply(out)
    return out


def evolve(k: Kernel, d: np.ndarray, n: int) -> np.ndarray:
    """The law after n steps started from d; mass is preserved within
    1e-12 per step."""
    d = check_dist(d)
    out = apply_steps(k, d, n)
    if abs(out.sum() - 1.0) > 1e-12 * max(n, 1) + 1e-14:
        raise ArithmeticError("probability mass drifted during evolution")
    return out


def lower_bound_tv(n: int, p: Modulus, mu: StepDist, clamp: bool = False) -> float:
    """The entropy lower bound on distance to uniform after n steps:
    1 - (n H(mu) + log 2) / log p.

    Raw by default (it can go negative, where it is vacuous rather than
    wrong); ``clamp=True`` restricts to [0, 1] for reporting.
    """
    value = 1.0 - (n * entropy(mu) + math.log(2.0)) / math.log(p.p)
    if clamp:
        value = min(max(value, 0.0), 1.0)
    return value


def upper_bound_tv(k: int, p: Modulus, lambda2: float) -> float:
    """The symmetrization upper bound on distance to uniform after k >= 2
    steps: (sqrt(p) / 2) * lambda2 ** ((k - 2) / 4).

    ``lambda2`` is the second-largest eigenvalue of the symmetrized kernel.
    The implied per-step decay rate is exp(-C) with C = -log(lambda2) / 4,
    which is the operative constant this artifact reports.
    """
    if k < 2:
        raise ValueError("the upper bound needs k >= 2")
    if not -1e-12 <= lambda2 <= 1.0 + 1e-9:
        raise ValueError(f"lambda2 = {lambda2} outside [0, 1]")
    lambda2 = min(max(lambda2, 0.0), 1.0)
    return 0.5 * math.sqrt(p.p) * lambda2 ** ((k - 2) / 4.0)


@dataclass(frozen=True)
class EntropyGrowthReport:
    n: int
    entropy_value: float
    budget: float
    ok: bool


def entropy_growth_check(k: Kernel, mu: StepDist, x: int, n: int) -> EntropyGrowthReport:
    """Entropy of the exact n-step law from a point start never exceeds
    n H(mu): each step adds at most the step entropy and the inversion is a
    bijection, which preserves entropy."""
    d = evolve(k, point_mass(k.space, x), n)
    h = dist_entropy(d)
    budget = n * entropy(mu)
    return EntropyGrowthReport(n=n, entropy_value=h, budget=budget,
                               ok=h <= budget + 1e-9)


def _sampled_starts(n: int) -> list[int]:
    stride = max(n // SAMPLED_START_COUNT, 1)
    starts = {0, 1}
    for j in range(2, SAMPLED_START_COUNT):
        starts.add((j * stride) % n)
    return sorted(starts)


@dataclass(frozen=True)
class MixingTimeResult:
    """First step count at which the (worst-case) TV drops to eps.  When the
    step cap is exceeded, ``converged`` is False and ``steps`` is the cap, a
    lower bound on the true mixing time."""

    steps: int
    converged: bool
    tv: float
    cap: int
    worst_case: bool


def mixing_time(k: Kernel, eps: float, worst_case: bool = True,
                start: int = 0) -> MixingTimeResult:
    """Exact mixing-time search by evolving every start state at once.

    Worst-case mode is exact for up to 2003 states; above that the sup is
    taken over 32 deterministic starts (0, 1, and a fixed stride), which
    makes the result a lower bound on the true sup.  The step cap is
    64 log2(N); hitting it reports a lower bound, not a failure.
    """
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must be in (0, 1)")
    n = k.n
    cap = int(64 * math.log2(n)) + 1
    if worst_case:
        if n <= WORST_CASE_EXACT_CAP:
            block = np.eye(n)
        else:
            rows = _sampled_starts(n)
            block = np.zeros((len(rows), n))
            for r, s in enumerate(rows):
                block[r, s] = 1.0
    else:
        block = np.zeros((1, n))
        block[0, start] = 1.0
    pi = 1.0 / n
    for step in range(cap + 1):
        tv = 0.5 * float(np.abs(block - pi).sum(axis=1).max())
        if tv <= eps:
            return MixingTimeResult(steps=step, converged=True, tv=tv, cap=cap,
                                    worst_case=worst_case)
        if step < cap:
            block = k.apply_block(block)
    return MixingTimeResult(steps=cap, converged=False, tv=tv, cap=cap,
                            worst_case=worst_case)


@dataclass(frozen=True)
class MixingCurve:
    """Per-step exact TV from a fixed start, with the entropy lower bound
    and (from step 2 on) the spectral upper bound.

    TV to stationarity is non-increasing for these doubly stochastic
    kernels; construction enforces that within 1e-12.
    """

    p: int
    start_state: int
    points: tuple[tuple[int, float], ...]
    lower_bound: tuple[tuple[int, float], ...]
    upper_bound: tuple[tuple[int, float], ...]

    def __post_init__(self):
        tvs = [tv for _, tv in self.points]
        for a, b in zip(tvs, tvs[1:]):
            if b > a + 1e-12:
                raise ValueError("TV to stationarity must be non-increasing")
        for _, tv in self.points:
            if not -1e-12 <= tv <= 1.0 + 1e-12:
                raise ValueError("TV outside [0, 1]")

    def csv_rows(self):
        upper = dict(self.upper_bound)
        for (n, tv), (_, lo) in zip(self.points, self.lower_bound):
            up = upper.get(n)
            yield n, tv, lo, up

    def to_json_dict(self) -> dict:
        return {
            "p": self.p,
            "start_state": self.start_state,
            "points": [[n, tv] for n, tv in self.points],
            "lower_bound": [[n, v] for n, v in self.lower_bound],
            "upper_bound": [[n, v] for n, v in self.upper_bound],
        }


def mixing_curve(k: Kernel, mu: StepDist, p: Modulus, start: int,
                 lambda2: float, n_max: int) -> MixingCurve:
    """Exact TV curve from one start, with both bounds attached."""
    d = point_mass(k.space, start)
    pi = 1.0 / k.n
    points = []
    lower = []
    upper = []
    for n in range(n_max + 1):
        tv = 0.5 * float(np.abs(d - pi).sum())
        points.append((n, tv))
        lower.append((n, lower_bound_tv(n, p, mu)))
        if n >= 2:
            upper.append((n, upper_bound_tv(n, p, lambda2)))
        if n < n_max:
            d = k.apply(d)
    return MixingCurve(
        p=p.p, start_state=start, points=tuple(points),
        lower_bound=tuple(lower), upper_bound=tuple(upper),
    )
