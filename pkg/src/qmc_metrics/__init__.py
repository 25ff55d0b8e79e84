"""Quasi-Monte Carlo Gaussian sampling and sample-size-corrected FID and IS."""

from .errors import (ConfigurationError, ConstructionError, DataError, DomainError, FormatError,
                     InsufficientSamplesError, InvalidPosteriorError, NotPSDError, NumericalError,
                     QMCMetricsError, ShapeError, SingularFitError, UnsupportedDimensionError)
from .extrapolate import (ExtrapolationFit, InfinityConfig, InfinityResult, ScoreSeries, batch_schedule,
                          fit_inverse_n, score_infinity)
from .frechet import GaussianStats, fid_at_n, frechet_distance, gaussian_stats, psd_sqrt
from .gaussianize import (CachedSamplerState, NormalPointSet, NormalSampler, box_muller, cached_draw,
                          icdf_normal, normal_points, sampler_spec)
from .inception import inception_score, is_at_n, is_with_splits
from .io import load_csv, load_features, load_matrix, load_posteriors, load_stats, save_features, save_stats
from .lds import SamplerSpec, UnitPointSet, centered_l2_discrepancy, sobol_points, uniform_points, unit_points
from .oracles import (AffineGaussianGenerator, TwoClassPosteriorOracle, bias_study, crossing_demo,
                      extrapolation_study, make_generator, true_fid, true_is)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
