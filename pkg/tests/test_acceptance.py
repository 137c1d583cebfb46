"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line
and holding the stated runtime budget.

Heavy shared computations (walk bundles, TV envelopes over every start
state, second eigenvalues across the prime grid) are cached at module scope
so each criterion pays only for what it alone needs.
"""

import math
import time
from contextlib import contextmanager

import numpy as np
import pytest

from fracwalk import (
    Modulus,
    WalkParams,
    bottleneck_ratio,
    build_cayley,
    build_comparison_data,
    build_P,
    build_Pi,
    compute_A,
    compute_C,
    entropy,
    generator_set,
    lower_bound_tv,
    mixing_time,
    quotient_spectrum_check,
    sl2_order,
    upper_bound_tv,
    walk_decomposition,
)
from fracwalk.cli import main as cli_main
from fracwalk.spectral import dense_symmetric_eigen
from helpers import FIXTURE_MUS, FIXTURE_PARAMS, brute_count, primes_in

GRID_PRIMES = primes_in(5, 199)
GRID = [(p, name) for p in GRID_PRIMES for name in FIXTURE_MUS]
N_MAX = 64


@contextmanager
def criterion(num: int, name: str, budget: float | None = None):
    t0 = time.perf_counter()
    try:
        yield
    except Exception:
        print(f"ACCEPTANCE {num:02d} {name}: FAIL "
              f"({time.perf_counter() - t0:.1f}s)")
        raise
    elapsed = time.perf_counter() - t0
    print(f"ACCEPTANCE {num:02d} {name}: PASS ({elapsed:.1f}s)")
    if budget is not None:
        assert elapsed < budget, f"runtime {elapsed:.1f}s over budget {budget}s"


_CACHE: dict = {}


def bundles():
    """Walk decompositions for the whole grid, computed once; the cost lands
    inside whichever criterion asks first."""
    if "bundles" not in _CACHE:
        out = {}
        for p, name in GRID:
            a1, a2 = FIXTURE_PARAMS[name]
            out[(p, name)] = walk_decomposition(
                FIXTURE_MUS[name], Modulus(p), params=WalkParams(a1, a2)
            )
        _CACHE["bundles"] = out
    return _CACHE["bundles"]


def lambda2_q():
    if "lambda2_q" not in _CACHE:
        out = {}
        for key, bundle in bundles().items():
            vals, _ = dense_symmetric_eigen(bundle.Q.to_dense(),
                                            want_vectors=False)
            out[key] = float(vals[1])
        _CACHE["lambda2_q"] = out
    return _CACHE["lambda2_q"]


def tv_envelopes():
    """Exact min/max over all start states of TV to uniform, per step count
    0..64, for every grid point."""
    if "tv_envelopes" not in _CACHE:
        out = {}
        for (p, name), bundle in bundles().items():
            block = np.eye(p)
            pi = 1.0 / p
            min_tv = np.zeros(N_MAX + 1)
            max_tv = np.zeros(N_MAX + 1)
            for n in range(N_MAX + 1):
                tvs = 0.5 * np.abs(block - pi).sum(axis=1)
                min_tv[n] = tvs.min()
                max_tv[n] = tvs.max()
                if n < N_MAX:
                    block = bundle.K.apply_block(block)
            out[(p, name)] = (min_tv, max_tv)
        _CACHE["tv_envelopes"] = out
    return _CACHE["tv_envelopes"]


def test_c01_lower_bound_sandwich():
    with criterion(1, "entropy lower bound vs exact TV", budget=60):
        for (p, name), (min_tv, _) in tv_envelopes().items():
            mu = FIXTURE_MUS[name]
            mod = Modulus(p)
            for n in range(N_MAX + 1):
                bound = lower_bound_tv(n, mod, mu)
                assert min_tv[n] >= bound - 1e-9, (p, name, n)


def test_c02_upper_bound_sandwich():
    with criterion(2, "spectral upper bound vs exact TV", budget=120):
        lam2_by_key = lambda2_q()
        for (p, name), (_, max_tv) in tv_envelopes().items():
            mod = Modulus(p)
            lam2 = lam2_by_key[(p, name)]
            for n in range(2, N_MAX + 1):
                bound = upper_bound_tv(n, mod, lam2)
                assert max_tv[n] <= bound + 1e-9, (p, name, n)


def test_c03_operator_norm_contraction():
    with criterion(3, "k-step operator norm bound on mean-zero vectors"):
        for p in primes_in(5, 101):
            for name in FIXTURE_MUS:
                bundle = bundles()[(p, name)]
                lam2 = lambda2_q()[(p, name)]
                rng = np.random.default_rng(1000 + p)
                xs = rng.standard_normal((100, p))
                xs -= xs.mean(axis=1, keepdims=True)
                norms0 = np.sqrt((xs * xs).sum(axis=1))
                cur = xs
                for k in range(1, 41):
                    cur = bundle.K.apply_block(cur)
                    if k < 2:
                        continue
                    norms = np.sqrt((cur * cur).sum(axis=1))
                    bound = lam2 ** ((k - 2) / 4.0) * norms0
                    assert np.all(norms <= bound + 1e-9), (p, name, k)


def test_c04_structural_identities():
    with criterion(4, "symmetrization structure and exact symmetries"):
        for (p, name), bundle in bundles().items():
            mod = Modulus(p)
            mu = FIXTURE_MUS[name]
            pd = build_P(mu, mod).to_dense()
            pid = build_Pi(mod).to_dense()
            a = pd @ pid @ pd
            assert np.abs(bundle.Q.to_dense() - a @ a.T).max() <= 1e-12
            psd_floor = np.linalg.eigvalsh(bundle.Q.to_dense()).min()
            assert psd_floor >= -1e-9
            l0 = bundle.L0.to_dense()
            lw = bundle.L.to_dense()
            assert np.array_equal(l0, l0.T)
            assert np.array_equal(lw, lw.T)
            assert np.array_equal((pid @ pid), np.eye(p))


def test_c05_graph_inclusion_exhaustive():
    with criterion(5, "line-walk edges included in field-walk edges"):
        for p in GRID_PRIMES:
            mod = Modulus(p)
            for name in ("u01", "u-101"):
                a1, a2 = FIXTURE_PARAMS[name]
                params = WalkParams(a1, a2)
                from fracwalk import build_L, build_L0

                l0 = build_L0(params, mod)
                lw = build_L(params, mod)
                anchor = (-a1) % p
                exceptions = 0
                for x in range(p):
                    row0 = l0.row(x)
                    for y, q in lw.row(x).items():
                        if y >= p or q <= 0.0:
                            continue
                        if (x, y) == (anchor, anchor):
                            continue
                        if row0.get(y, 0.0) <= 0.0:
                            exceptions += 1
                assert exceptions == 0, (p, name)


def test_c06_decomposition_and_gap_chain():
    with criterion(6, "convex decomposition and the two gap links"):
        for (p, name), bundle in bundles().items():
            mod = Modulus(p)
            u = bundle.params.u
            assert u is not None and u > 0
            qd = bundle.Q.to_dense()
            l0d = bundle.L0.to_dense()
            lpd = bundle.Lprime.to_dense()
            assert np.abs(u * l0d + (1 - u) * lpd - qd).max() <= 1e-10
            assert np.abs(lpd - lpd.T).max() <= 1e-10
            assert np.allclose(lpd.sum(axis=1), 1.0, atol=1e-10)
            assert lpd.min() >= -1e-12

            lam2_q = lambda2_q()[(p, name)]
            lam2_l0, _ = dense_symmetric_eigen(l0d, want_vectors=False)
            lam2_l, _ = dense_symmetric_eigen(bundle.L.to_dense(),
                                              want_vectors=False)
            gap_q = 1.0 - lam2_q
            gap_l0 = 1.0 - float(lam2_l0[1])
            gap_l = 1.0 - float(lam2_l[1])
            assert gap_q >= u * gap_l0 - 1e-8, (p, name)

            data = build_comparison_data(bundle.params, mod)
            c = compute_C(data)
            a = compute_A(data)
            assert c <= 2.0
            assert gap_l0 >= gap_l / (c * a) - 1e-8, (p, name)


def test_c07_quotient_spectrum():
    with criterion(7, "line-walk spectrum inside the group-walk spectrum",
                   budget=60):
        from fracwalk import build_L

        for p in (5, 7, 11, 13):
            mod = Modulus(p)
            a1, a2 = FIXTURE_PARAMS["q13"]
            params = WalkParams(a1, a2)
            lw = build_L(params, mod)
            cay = build_cayley(generator_set(params.a1, params.b, mod), mod)
            rep = quotient_spectrum_check(lw, cay, tol=1e-7)
            assert rep.contained, (p, rep.max_defect)
            assert rep.lambda2_quotient <= rep.lambda2_full + 1e-7


def test_c08_generation():
    with criterion(8, "generator closure is the full group"):
        for p in (5, 7, 11, 13, 17):
            mod = Modulus(p)
            for a1 in (0, 1):
                for b in (1, 2):
                    assert p > abs(b)
                    kern = build_cayley(generator_set(a1, b, mod), mod)
                    assert kern.n == sl2_order(p), (p, a1, b, kern.n)


def test_c09_cheeger_sandwich():
    with criterion(9, "bottleneck ratio sandwiches the gap"):
        for p in (5, 7, 11, 13, 17, 19):
            mod = Modulus(p)
            for name, mu in FIXTURE_MUS.items():
                from fracwalk import build_Q

                q = build_Q(mu, mod)
                phi = bottleneck_ratio(q, "exhaustive").ratio
                vals, _ = dense_symmetric_eigen(q.to_dense(), want_vectors=False)
                gap = 1.0 - float(vals[1])
                assert phi * phi / 2.0 <= gap + 1e-9, (p, name)
                assert gap <= 2.0 * phi + 1e-9, (p, name)


def test_c10_mixing_time_scaling():
    with criterion(10, "mixing time inside the computable band", budget=300):
        mu = FIXTURE_MUS["u01"]
        h = entropy(mu)
        for p in (101, 211, 401, 809, 1601):
            mod = Modulus(p)
            bundle = walk_decomposition(mu, mod)
            result = mixing_time(bundle.K, 0.25, worst_case=True)
            assert result.converged, p
            t = result.steps
            low = (0.75 - math.log(2) / math.log(p)) * math.log(p) / h
            assert t >= low, (p, t, low)
            vals, _ = dense_symmetric_eigen(bundle.Q.to_dense(),
                                            want_vectors=False)
            lam2 = float(vals[1])
            high = 2.0 + 4.0 * math.log(2.0 * math.sqrt(p) * 4.0) / (-math.log(lam2))
            assert t <= high, (p, t, high)


def test_c11_hyperbola_counts_and_scans():
    with criterion(11, "solution counts vs brute force and density drop",
                   budget=180):
        from fracwalk import Interval, count_solutions, scan_max_ratio

        small_primes = [p for p in primes_in(5, 499)]
        rng = np.random.default_rng(11)
        for _ in range(1000):
            p = int(rng.choice(small_primes))
            mod = Modulus(p)
            m = int(rng.integers(1, p // 2 + 1))
            i0 = int(rng.integers(0, p))
            j0 = int(rng.integers(0, p))
            got = count_solutions(Interval(i0, m, mod), Interval(j0, m, mod), mod)
            assert got == brute_count(p, i0, j0, m), (p, m, i0, j0)
        for p in (101, 211, 499):
            mod = Modulus(p)
            for m in range(16, p // 2 + 1):
                assert scan_max_ratio(mod, m).max_ratio < 1.0, (p, m)


def test_c12_cli_determinism(tmp_path):
    with criterion(12, "byte-identical reruns, including threaded"):
        jobs = [
            ["mix", "--p", "101", "--mu", "u01", "--eps", "0.25", "--seed", "3"],
            ["spectrum", "--p", "5..31", "--mu", "u-101", "--kernels", "Q,L0,L",
             "--threads", "2", "--seed", "5"],
            ["compare", "--p", "7..23", "--mu", "u01", "--trials", "25",
             "--threads", "3", "--format", "json", "--seed", "1"],
            ["hyperbola", "--p", "61", "--m", "20", "--format", "json"],
            ["generate", "--p", "7", "--a1", "1", "--b", "1", "--format", "json"],
        ]
        for idx, argv in enumerate(jobs):
            out = tmp_path / f"job{idx}.out"
            full = argv + ["--out", str(out)]
            assert cli_main(list(full)) == 0, argv
            first = out.read_bytes()
            assert cli_main(list(full)) == 0, argv
            assert out.read_bytes() == first, argv
