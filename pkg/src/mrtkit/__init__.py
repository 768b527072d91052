"""Incoherent tunneling of a strongly coupled two-state system.

Noise-spectrum moments, dephasing envelopes, resonant-tunneling rate line
shapes, memory-kernel population dynamics, multi-channel double-well
tunneling, and the brute-force references that validate them.  Natural
units throughout (hbar = k_B = 1).
"""

from .coherence import DephasingResult, dephasing_exponent, dephasing_result, offdiag_element
from .dynamics import (
    KernelSpec,
    PeakSummary,
    ShortTimeResult,
    Trajectory,
    build_kernel,
    evolve_local,
    evolve_nonlocal,
    kernel_integral,
    lambda_pm,
    nonlocal_corrected_rates,
    peak_summary,
    short_time_rho11,
)
from .errors import (
    ConfigError,
    DecompositionError,
    DivergentMomentError,
    RegimeError,
    RegimeWarning,
)
from .oracle import (
    EvolutionRequest,
    McConfig,
    StaticNoiseEstimate,
    convolution_reference,
    refined_reference,
    static_noise_transition,
)
from .rates import (
    RateCurve,
    TwoStateParams,
    WellLevels,
    classical_rate,
    crossover_temperature,
    effective_delta,
    faddeeva,
    gaussian_rate,
    multichannel_rate,
    peak_rate,
    voigt_rate,
)
from .schedules import LinearSchedule
from .spectral import (
    NoiseMoments,
    OhmicCutoff,
    SpectralModel,
    Tabulated,
    White,
    eval_spectral_density,
    noise_moments,
    noise_rms,
    reorganization_shift,
    shift_function,
    shift_function_derivative,
    symmetric_antisymmetric,
)

__version__ = "0.1.0"
