"""Symmetric eigenvalue computation, spectral gaps, bottleneck ratios, and
the quotient-spectrum containment between the projective-line walk and the
group walk it projects from.

The dense path is an in-repo Householder tridiagonalization followed by
implicit-shift QL sweeps; the iterative path is deflated block power
iteration with modified Gram-Schmidt re-orthogonalization.  Both run on
either backend (see ``backend``); ``numpy.linalg`` is deliberately not used
here so the test suite can hold it out as an independent oracle.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import backend
from .kernels import Kernel

DENSE_STATE_CAP = 4000
EXHAUSTIVE_CUT_CAP = 22
EIGEN_RESIDUAL_TOL = 1e-8
PERRON_TOL = 1e-9
ITERATIVE_TOL = 1e-10
CONTAINMENT_TOL = 1e-7


@dataclass(frozen=True)
class SpectralReport:
    """Eigenvalues (descending; all of them in dense mode, top-k in
    iterative mode), the second-largest one, the gap, and solve metadata."""

    eigenvalues: tuple[float, ...]
    lambda2: float
    gap: float
    method: str
    residual: float
    perron_multiplicity: int
    converged: bool = True

    def to_json_dict(self, p: int | None = None, kernel: str | None = None) -> dict:
        return {
            "p": p,
            "kernel": kernel,
            "lambda2": self.lambda2,
            "gap": self.gap,
            "method": self.method,
            "residual": self.residual,
        }


def dense_symmetric_eigen(a: np.ndarray, want_vectors: bool = True):
    """All eigenvalues (descending) of a dense symmetric matrix via
    tridiagonalization + QL sweeps, plus the eigenvectors as columns when
    requested (None otherwise)."""
    a = np.asarray(a, dtype=np.float64)
    d, e, q = backend.tridiagonalize(a, want_vectors)
    if want_vectors:
        zt = np.ascontiguousarray(q.T)
    else:
        zt = np.zeros((0, 0))
    status = backend.tqli(d, e, zt)
    if status >= 0:
        raise ArithmeticError(f"QL sweeps failed to converge at index {status}")
    order = np.argsort(-d, kind="stable")
    if not want_vectors:
        return d[order], None
    return d[order], np.ascontiguousarray(zt[order].T)


def _mgs(x: np.ndarray, against: np.ndarray | None = None) -> np.ndarray:
    """Two-pass modified Gram-Schmidt; orthogonalizes the columns of x
    against ``against`` first, then among themselves, normalizing."""
    x = np.array(x, dtype=np.float64, copy=True)
    n, k = x.shape
    for _ in range(2):
        if against is not None and against.shape[1]:
            x -= against @ (against.T @ x)
        for j in range(k):
            for i in range(j):
                x[:, j] -= (x[:, i] @ x[:, j]) * x[:, i]
            nrm = float(np.sqrt(x[:, j] @ x[:, j]))
            if nrm < 1e-14:
                x[:, j] = 0.0
                x[j % n, j] = 1.0
                if against is not None and against.shape[1]:
                    x[:, j] -= against @ (against.T @ x[:, j])
                for i in range(j):
                    x[:, j] -= (x[:, i] @ x[:, j]) * x[:, i]
                nrm = float(np.sqrt(x[:, j] @ x[:, j]))
            x[:, j] /= nrm
    return x


def _residuals(k: Kernel, vecs: np.ndarray, vals: np.ndarray) -> np.ndarray:
    kv = k.apply_to_columns(vecs)
    diff = kv - vecs * vals[None, :]
    return np.sqrt(np.einsum("ij,ij->j", diff, diff))


def _orthogonal_iteration(k: Kernel, kcount: int, seed: int):
    """Deflated block power iteration on the half-lazy operator (K + I)/2,
    which orders Ritz pairs by signed eigenvalue of K.

    The block carries a few guard vectors beyond the requested count so the
    trailing wanted pair converges at the guarded rate; converged leading
    Ritz pairs are locked and the remaining block is deflated against them.
    Returns (values desc, vectors, max residual, converged, iterations).
    """
    n = k.n
    kcount = max(2, min(kcount, n))
    block = min(n, kcount + 4)
    cap = max(200, int(10 * n * math.log(max(n, 2))))
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, block))
    x[:, 0] = 1.0
    locked_vecs = np.zeros((n, 0))
    locked_vals: list[float] = []
    x = _mgs(x, locked_vecs)
    iters = 0
    last_vals = np.zeros(0)
    last_vecs = np.zeros((n, 0))
    last_res = np.zeros(0)
    while iters < cap:
        y = 0.5 * (k.apply_to_columns(x) + x)
        x = _mgs(y, locked_vecs)
        iters += 1
        if iters % 8 == 0 or iters == cap:
            kx = k.apply_to_columns(x)
            m = x.T @ kx
            m = 0.5 * (m + m.T)
            mv, mw = dense_symmetric_eigen(m)
            vecs = x @ mw
            res = _residuals(k, vecs, mv)
            nlock = 0
            while nlock < len(mv) and res[nlock] < ITERATIVE_TOL:
                nlock += 1
            if nlock:
                locked_vecs = np.hstack([locked_vecs, vecs[:, :nlock]])
                locked_vals.extend(float(v) for v in mv[:nlock])
                x = vecs[:, nlock:]
                if x.shape[1]:
                    x = _mgs(x, locked_vecs)
            else:
                x = vecs
            last_vals = mv[nlock:]
            last_vecs = vecs[:, nlock:] if nlock else vecs
            last_res = res[nlock:]
            if len(locked_vals) >= kcount or x.shape[1] == 0:
                break
    if len(locked_vals) >= kcount:
        vals = np.array(locked_vals[:kcount])
        vecs = locked_vecs[:, :kcount]
        res = _residuals(k, vecs, vals)
        converged = True
    else:
        vals = np.concatenate([np.array(locked_vals), last_vals])[:kcount]
        vecs = np.hstack([locked_vecs, last_vecs])[:, :kcount]
        res = _residuals(k, vecs, vals)
        converged = bool(np.all(res < ITERATIVE_TOL))
    order = np.argsort(-vals, kind="stable")
    return vals[order], vecs[:, order], float(res.max()), converged, iters


def _gap_from_values(values: np.ndarray) -> tuple[float, int]:
    """Gap with the multiplicity tie-break: when the top eigenvalue 1 is
    repeated (a disconnected kernel) the gap is measured to the largest
    eigenvalue below 1 - 1e-9, and a warning is issued."""
    mult = int(np.sum(values > 1.0 - PERRON_TOL))
    if mult <= 1:
        gap = 1.0 - float(values[1]) if len(values) > 1 else 0.0
    else:
        warnings.warn(
            f"eigenvalue 1 has multiplicity {mult}: the kernel is disconnected",
            stacklevel=3,
        )
        below = values[values < 1.0 - PERRON_TOL]
        gap = 1.0 - float(below.max()) if below.size else 0.0
    return gap, mult


def _validate_spectrum(values: np.ndarray) -> None:
    if values[0] > 1.0 + PERRON_TOL or values[0] < 1.0 - PERRON_TOL:
        raise ArithmeticError(
            f"leading eigenvalue {values[0]} is not 1 within {PERRON_TOL}"
        )
    if values.min() < -1.0 - PERRON_TOL:
        raise ArithmeticError(f"eigenvalue {values.min()} below -1")


def eigen_sym(k: Kernel, mode: str = "dense", kcount: int = 6,
              seed: int = 0) -> SpectralReport:
    """Eigenvalues of a symmetric stochastic kernel.

    ``mode="dense"`` computes the full spectrum (state count capped at
    4000); ``mode="iterative"`` computes the top ``kcount`` eigenvalues by
    deflated block power iteration, reporting the achieved residual if the
    iteration cap is hit before the 1e-10 convergence target.
    """
    if not k.symmetric:
        raise ValueError("eigen_sym requires a kernel with the symmetry flag")
    if mode == "dense":
        if k.n > DENSE_STATE_CAP:
            raise ValueError(f"dense mode capped at {DENSE_STATE_CAP} states")
        vals, vecs = dense_symmetric_eigen(k.to_dense())
        residual = float(_residuals(k, vecs, vals).max())
        converged = True
    elif mode == "iterative":
        vals, vecs, residual, converged, _ = _orthogonal_iteration(k, kcount, seed)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    _validate_spectrum(vals)
    if residual > EIGEN_RESIDUAL_TOL:
        warnings.warn(f"eigen residual {residual} above {EIGEN_RESIDUAL_TOL}")
    gap, mult = _gap_from_values(vals)
    return SpectralReport(
        eigenvalues=tuple(float(v) for v in vals),
        lambda2=float(vals[1]) if len(vals) > 1 else float("nan"),
        gap=gap,
        method=mode,
        residual=residual,
        perron_multiplicity=mult,
        converged=converged,
    )


def _second_vector(k: Kernel, seed: int = 0) -> np.ndarray:
    if k.n <= DENSE_STATE_CAP:
        _, vecs = dense_symmetric_eigen(k.to_dense())
        return vecs[:, 1]
    vals, vecs, _, _, _ = _orthogonal_iteration(k, 4, seed)
    return vecs[:, 1]


def spectral_gap(k: Kernel, seed: int = 0) -> float:
    """1 - lambda2, via the dense path when it fits and the iterative path
    otherwise (with the disconnectedness tie-break)."""
    mode = "dense" if k.n <= DENSE_STATE_CAP else "iterative"
    return eigen_sym(k, mode=mode, seed=seed).gap


@dataclass(frozen=True)
class CutReport:
    """A state subset of at most half the stationary mass and its
    boundary-to-mass ratio."""

    set: tuple[int, ...]
    ratio: float
    exhaustive: bool


def bottleneck_ratio(k: Kernel, mode: str = "exhaustive", seed: int = 0) -> CutReport:
    """The bottleneck ratio min over subsets S with pi(S) <= 1/2 of the
    boundary weight out of S over pi(S) (uniform stationary mass here).

    Exhaustive mode scans all subsets (state count capped at 22) and returns
    the true minimizer; sweep mode orders states by the second eigenvector
    and scans prefix cuts, an upper bound only.
    """
    if not k.symmetric:
        raise ValueError("bottleneck_ratio requires a symmetric kernel")
    n = k.n
    half = n // 2
    if mode == "exhaustive":
        if n > EXHAUSTIVE_CUT_CAP:
            raise ValueError(f"exhaustive mode capped at {EXHAUSTIVE_CUT_CAP} states")
        ratio, mask = backend.min_cut_exhaustive(k.to_dense(), half)
        members = tuple(i for i in range(n) if (mask >> i) & 1)
        return CutReport(set=members, ratio=float(ratio), exhaustive=True)
    if mode != "sweep":
        raise ValueError(f"unknown mode {mode!r}")
    v2 = _second_vector(k, seed)
    best = np.inf
    best_set: tuple[int, ...] = ()
    for direction in (1, -1):
        order = np.argsort(direction * v2, kind="stable")
        in_set = np.zeros(n, dtype=bool)
        cut = 0.0
        for j in range(half):
            v = int(order[j])
            row = k.row(v)
            inside = sum(q for y, q in row.items() if in_set[y])
            cut += 1.0 - row.get(v, 0.0) - 2.0 * inside
            in_set[v] = True
            ratio = cut / (j + 1)
            if ratio < best:
                best = ratio
                best_set = tuple(sorted(int(t) for t in order[: j + 1]))
    return CutReport(set=best_set, ratio=float(best), exhaustive=False)


@dataclass(frozen=True)
class QuotientSpectrumReport:
    contained: bool
    max_defect: float
    worst_eigenvalue: float
    lambda2_quotient: float
    lambda2_full: float
    tol: float


def quotient_spectrum_check(l: Kernel, lcayley: Kernel,
                            tol: float = CONTAINMENT_TOL) -> QuotientSpectrumReport:
    """Check that every eigenvalue of the projective-line walk appears in
    the spectrum of the group walk it is a quotient of, within tol; in
    particular lambda2 of the quotient is at most lambda2 of the full walk
    plus tol."""
    if l.n > DENSE_STATE_CAP or lcayley.n > DENSE_STATE_CAP:
        raise ValueError("quotient check needs dense-solvable kernels")
    if not (l.symmetric and lcayley.symmetric):
        raise ValueError("quotient check requires symmetric kernels")
    sub, _ = dense_symmetric_eigen(l.to_dense(), want_vectors=False)
    _validate_spectrum(sub)
    full, _ = dense_symmetric_eigen(lcayley.to_dense(), want_vectors=False)
    _validate_spectrum(full)
    full = np.sort(full)
    max_defect = 0.0
    worst = float("nan")
    for lam in sub:
        pos = np.searchsorted(full, lam)
        defect = min(
            abs(lam - full[j]) for j in (pos - 1, pos) if 0 <= j < full.size
        )
        if defect > max_defect:
            max_defect = defect
            worst = lam
    return QuotientSpectrumReport(
        contained=bool(max_defect <= tol),
        max_defect=float(max_defect),
        worst_eigenvalue=float(worst),
        lambda2_quotient=float(sub[1]),
        lambda2_full=float(full[-2]),
        tol=tol,
    )
