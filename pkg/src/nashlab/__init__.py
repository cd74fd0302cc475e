"""Numerical lab for one-dimensional diffusions: spectra, moments, Nash inequalities."""

__version__ = "0.1.0"

from .config import RunConfig, load_config, parse_config
from .discretize import (
    GeneratorMatrix,
    Grid,
    build_exterior_generator,
    build_generator,
    build_killed_generator,
    build_reflected_generator,
)
from .errors import (
    ConfigError,
    DiscretizationError,
    LabError,
    ModelDomainError,
    NotNormalizableError,
    NumericError,
    WindowError,
)
from .estimators import HittingTimeMoments, NashFunctionals, SpectralTransformer
from .model import (
    DiffusionModel,
    brownian,
    get_model,
    heavy_tail,
    invariant_probability,
    list_models,
    model_from_expressions,
    ornstein_uhlenbeck,
    speed_mass,
)
from .moments import MomentTable, mean_modulated_moment, moment_recursion, pairing
from .report import VerificationReport
from .spectral import (
    Constant,
    Exponential,
    Polynomial,
    SpectralDecomposition,
    eigendecompose,
    make_rate,
    spectral_functional,
    spectral_weights,
)

__all__ = [name for name in dir() if not name.startswith("_")]
