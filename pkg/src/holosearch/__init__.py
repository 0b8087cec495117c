"""Search-based computer-generated holography.

Hologram optimisation for discrete phase- or amplitude-modulating SLMs in
the Fraunhofer and Fresnel regimes, against phase-sensitive or
phase-insensitive targets.  Provides blind direct search and simulated
annealing baselines plus closed-form per-pixel predictive search, with
brute-force oracles and a benchmark CLI (``holosearch``).
"""

from .field import (
    FRAUNHOFER,
    FRESNEL,
    DomainSpec,
    delta_replay,
    dft_unitary,
    forward_transform,
    fresnel_prephase,
    idft_unitary,
)
from .metrics import (
    ErrorReport,
    error_report,
    mse_phase_insensitive,
    mse_phase_sensitive,
    se_phase_insensitive,
    se_phase_sensitive,
    ssim,
)
from .search import (
    ALGORITHMS,
    VARIANTS,
    ConvergenceLog,
    RunState,
    ds_step,
    hps_step,
    new_run_state,
    optimal_dr_pi,
    optimal_dr_ps,
    optimal_phase_pi,
    optimal_phase_ps,
    resynchronize,
    run,
    sa_step,
)
from .slm import (
    AMPLITUDE,
    PHASE,
    SlmSpec,
    level_to_complex,
    level_values,
    make_rng,
    quantize_amplitude,
    quantize_phase,
    random_level,
)
from .targets import (
    TargetField,
    build_target,
    embed_central_quadrant,
    energy_budget,
    load_image,
    resize_bilinear,
    save_image,
    scale_energy,
    symmetrize_point,
    synthetic_amplitude,
    synthetic_phase,
)

__version__ = "0.1.0"
