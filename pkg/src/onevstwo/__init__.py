"""Error probabilities and exponents for deciding between one and two incoherent point sources."""
from .common import ConditionalOnL, Hypothesis, Scheme, UnconditionalOnM
from .errors import (AsymmetricPsf, ComplexAmplitude, DomainError, NotNormalized,
                     OptimizationFailure, QuadratureFailure)
from .measurements import (DirectImagingBounds, bhattacharyya, bspade_error, bspade_exponent,
                           classical_chernoff, direct_imaging_bounds, direct_imaging_exponent,
                           sliver_error, sliver_exponent)
from .montecarlo import (DecisionRule, MonteCarloSummary, TrialOutcome, estimate_error,
                         estimate_error_conditional, simulate_trial)
from .psf import (OverlapStats, PointSpreadFunction, direct_image_density, load_sampled_psf,
                  overlap, overlap_stats, validate)
from .quantum_limits import (ChernoffResult, ErrorReport, Scenario, gamma_trace_norm_oracle,
                             min_error_approx, min_error_conditional, min_error_unconditional,
                             quantum_chernoff)

__version__ = "0.1.0"
