"""Probabilistic reconciliation of hierarchical time-series forecasts.

Base forecasts for every series are combined into a coherent joint Gaussian
over the hierarchy by conditioning the bottom-series prior on the upper
forecasts (pMinT, or LG when the bottom/upper noise correlation is ignored).
Probabilistic bottom-up and the MinT projection are provided for comparison.
"""

__version__ = "0.1.0"

from .covariance import (
    CovarianceModel,
    KhMode,
    ResidualMatrix,
    estimate_covariance,
    partition_w1,
    sample_covariance,
    scale_kh,
    shrinkage_covariance,
)
from .errors import NumericalError, ValidationError
from .hierarchy import (
    HierarchySpec,
    SeriesPanel,
    SummingMatrix,
    aggregate_bottom,
    build_summing_matrix,
    check_coherence,
    parse_hierarchy,
)
from .basefc import ARModel, BaseForecasts, fit_ar, forecast_ar, forecast_panel, one_step_residuals
from .reconcile import (
    Method,
    ReconciledDistribution,
    gain_matrix,
    mint_p_matrix,
    pmint_p_matrix,
    reconcile,
    reconcile_bottom_up,
    reconcile_pmint,
    two_bottom_gains,
)
from .scoring import ScoreReport, energy_score, energy_score_gaussian, sample_gaussian
from .synth import SynthConfig, simulate_hierarchy, synthetic_hierarchy
