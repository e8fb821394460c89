"""Postselected multi-parameter quantum estimation toolkit.

Implements the phase + phase-fluctuation sensing pipeline: a two-level
sensor coupled to a qubit or Gaussian measurement apparatus, postselected
into success/failure modes; classical and quantum Fisher information
matrices of the postselected data; the Cramer-Rao bound chain and tradeoff
traces; analytic closed forms as the oracle layer; and a Monte Carlo
maximum-likelihood harness.
"""

__version__ = "0.1.0"

from .analysis import (
    ChainVerdict,
    CovarianceReport,
    EstimateSet,
    Experiment,
    MLEResult,
    TradeoffReport,
    covariance_vs_bound,
    mle,
    replicate,
    sample_experiment,
    tradeoffs,
    verify_chain,
)
from .fisher import (
    FisherReport,
    ParamFamily,
    commutator_trace,
    fisher_report,
    mode_commutator_traces,
    pcfim,
    pqfim,
    qfim,
    qfim_from_derivs,
    sensor_family,
    sld,
    weight_fisher,
)
from .linalg import (
    QuadratureGrid,
    eig_hermitian,
    grid_inner,
    invert_sym_2x2,
    psd_min_eig,
    trapezoid_grid,
)
from .models import (
    MOMENTUM_POVM,
    GaussianMA,
    LowRankState,
    Mode,
    ModeEnsemble,
    PostselectionSpec,
    QubitMA,
    SensorModel,
    build_ensemble,
    gaussian_ma,
    joint_state,
    momentum_grid,
    outcome_distribution,
    postselect,
    projective_povm,
    sensor_state,
)

__all__ = [name for name in dir() if not name.startswith("_")]
