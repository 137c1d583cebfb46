"""fracwalk: exact kernels, spectra, and mixing bounds for the random walk
X -> 1/X + step on a prime field, its projective-line companion, and the
group walk both project from."""

__version__ = "0.1.0"

from .backend import NUMBA_ENABLED, backend_name
from .comparison import (
    ComparisonData,
    ComparisonReport,
    build_comparison_data,
    compute_A,
    compute_C,
    dirichlet_form,
    extend_function,
    variance_form,
    verify_comparison,
)
from .ffield import (
    FpElem,
    Mat2,
    Modulus,
    ProjPoint,
    generator_set,
    iota,
    iota_bar,
    iota_table,
    is_prime,
    mat_mul,
    moebius_act,
)
from .hyperbola import (
    Interval,
    ScanReport,
    admissible_delta,
    count_solutions,
    count_surface,
    iota_preimage_set,
    scan_max_ratio,
)
from .kernels import (
    STEP_PRESETS,
    FpSpace,
    Kernel,
    P1Space,
    SL2Space,
    StepDist,
    WalkDecomposition,
    WalkParams,
    build_K,
    build_L,
    build_L0,
    build_P,
    build_Pi,
    build_Q,
    build_cayley,
    choose_step_pair,
    compose,
    decompose_uL0,
    kernel_from_json_dict,
    point_mass,
    reduce_mod_p,
    sl2_order,
    transpose,
    uniform_dist,
    uniform_step,
    walk_decomposition,
)
from .mixing import (
    MixingCurve,
    MixingTimeResult,
    entropy,
    entropy_growth_check,
    evolve,
    lower_bound_tv,
    mixing_curve,
    mixing_time,
    tv_distance,
    upper_bound_tv,
)
from .spectral import (
    CutReport,
    QuotientSpectrumReport,
    SpectralReport,
    bottleneck_ratio,
    eigen_sym,
    quotient_spectrum_check,
    spectral_gap,
)
