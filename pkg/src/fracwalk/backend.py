"""Backend selection for the numeric hot loops.

The heavy inner loops (dense symmetric eigensolves, sparse kernel products,
exhaustive cut scans, inverse tables) exist twice: a numba ``@njit`` build in
``_jit`` and a vectorized numpy build in ``_plain``.  The environment variable
``FRACWALK_BACKEND`` picks one:

* ``auto`` (default): numba when importable, numpy otherwise
* ``numba``: require the jit build, fail loudly if numba is missing
* ``numpy``: force the pure-numpy fallback

``benchmarks/bench_backends.py`` times the two builds against each other.
"""

from __future__ import annotations

import os

_REQUESTED = os.environ.get("FRACWALK_BACKEND", "auto").strip().lower() or "auto"


def _numba_importable() -> bool:
    try:
        import numba  # noqa: F401
    except Exception:
        return False
    return True


if _REQUESTED == "auto":
    NUMBA_ENABLED = _numba_importable()
elif _REQUESTED in ("numba", "jit"):
    if not _numba_importable():
        raise ImportError("FRACWALK_BACKEND=numba but numba is not importable")
    NUMBA_ENABLED = True
elif _REQUESTED in ("numpy", "plain", "python"):
    NUMBA_ENABLED = False
else:
    raise ValueError(
        f"unknown FRACWALK_BACKEND={_REQUESTED!r}; use auto, numba, or numpy"
    )

if NUMBA_ENABLED:
    from . import _jit as impl
else:
    from . import _plain as impl


def backend_name() -> str:
    return "numba" if NUMBA_ENABLED else "numpy"


tridiagonalize = impl.tridiagonalize
tqli = impl.tqli
vec_csr = impl.vec_csr
mat_csr = impl.mat_csr
inverse_table = impl.inverse_table
min_cut_exhaustive = impl.min_cut_exhaustive
