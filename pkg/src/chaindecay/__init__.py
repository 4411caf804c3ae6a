"""Survival probability of a local excitation on a semi-infinite tight-binding chain."""

from .exact import (
    AmplitudeSeries,
    EchoResult,
    converged_reference,
    echo_round_trip,
    echo_time,
    evolve_finite,
    site_probabilities,
)
from .kernels import BACKEND
from .model import (
    ChainParams,
    ConvergenceFailure,
    InvalidParameters,
    NotResonant,
    build_hamiltonian,
    make_params,
    resonance_condition,
)
from .propagator import (
    decompose,
    longtime_model,
    p00_fourier,
    p00_from_j0,
    return_kernel,
    short_time_moments,
)
from .regimes import (
    RegimeReport,
    analyze,
    detect_collapse,
    fit_exponential,
    fit_powerlaw,
    piecewise_model,
    t_return,
    t_short,
)
from .spectrum import (
    ResonanceData,
    bound_states,
    fgr_rate,
    ldos_continued,
    ldos_site0,
    ldos_surface,
    pole_data,
    spectral_density_j0,
)

__version__ = "0.1.0"
