"""Bayesian state-space inference for circular time series.

Latent angles evolve through a Gaussian-process transition anchored on a
linear-circular look-up grid; observations pass through a second process
surface.  The package covers simulation, variance estimation by annealing,
Metropolis-within-Gibbs posterior sampling, forecasting, and leave-one-out
validation, behind both a library API and the ``circssm`` CLI.
"""

__version__ = "0.1.0"

from .anneal import AnnealConfig, VarianceEstimate, integrated_loglik_mc, sa_optimize
from .circular import (
    convert,
    split_turns,
    von_mises_logpdf,
    von_mises_sample,
    wrap,
    wrapped_normal_logpdf,
    wrapped_normal_sample,
)
from .errors import (
    CellParseError,
    ConfigError,
    EmptySeriesError,
    MissingColumnError,
    NumericalSingularityError,
    SeriesFormatError,
    UnitDomainError,
)
from .gp import build_kernel_matrices, gp_conditional, gp_logpdf, kernel
from .mcmc import (
    AcceptanceLog,
    ChainConfig,
    GibbsSampler,
    ProposalConfig,
    run_chain,
)
from .model import (
    ChainState,
    GridOps,
    LookupGrid,
    PriorConfig,
    Variances,
    generate_grid,
    sample_observations,
    sample_prior_state,
)
from .posterior import (
    CircularHPD,
    DensityGrid,
    LooResult,
    PosteriorSamples,
    circular_mean,
    density_grid,
    effective_sample_size,
    forecast_y_next,
    geweke_z,
    hpd_circular,
    loo_cv,
    summarize,
)
from .series_io import (
    CircularSeries,
    RunManifest,
    parse_config,
    read_series,
    write_series,
)
from .simulate import SimConfig, generate

__all__ = [
    "__version__",
    "AnnealConfig",
    "VarianceEstimate",
    "integrated_loglik_mc",
    "sa_optimize",
    "convert",
    "split_turns",
    "von_mises_logpdf",
    "von_mises_sample",
    "wrap",
    "wrapped_normal_logpdf",
    "wrapped_normal_sample",
    "CellParseError",
    "ConfigError",
    "EmptySeriesError",
    "MissingColumnError",
    "NumericalSingularityError",
    "SeriesFormatError",
    "UnitDomainError",
    "build_kernel_matrices",
    "gp_conditional",
    "gp_logpdf",
    "kernel",
    "AcceptanceLog",
    "ChainConfig",
    "GibbsSampler",
    "ProposalConfig",
    "run_chain",
    "ChainState",
    "GridOps",
    "LookupGrid",
    "PriorConfig",
    "Variances",
    "generate_grid",
    "sample_observations",
    "sample_prior_state",
    "CircularHPD",
    "DensityGrid",
    "LooResult",
    "PosteriorSamples",
    "circular_mean",
    "density_grid",
    "effective_sample_size",
    "forecast_y_next",
    "geweke_z",
    "hpd_circular",
    "loo_cv",
    "summarize",
    "CircularSeries",
    "RunManifest",
    "parse_config",
    "read_series",
    "write_series",
    "SimConfig",
    "generate",
]
