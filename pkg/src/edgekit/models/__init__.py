"""Exact distribution engines and model families."""

from .lattice import LatticeDistribution
from .markov import (
    BlockingReport,
    EcdfSummary,
    EllipticityReport,
    MarkovChainSpec,
    PsiMixingResult,
    ellipticity_check,
    enumerate_distribution,
    exact_distribution,
    load_chain_spec,
    monte_carlo_ecdf,
    psi_mixing_coefficient,
    save_chain_spec,
    variance_decomposition,
    variance_profile,
)
from .piecewise import PiecewisePolyDistribution, iid_sum
from .families import (
    ChainModel,
    IIDContinuousModel,
    builtin_model,
    builtin_model_names,
    decaying_observable_chain,
)

__all__ = [
    "LatticeDistribution",
    "MarkovChainSpec",
    "EllipticityReport",
    "PsiMixingResult",
    "BlockingReport",
    "EcdfSummary",
    "exact_distribution",
    "enumerate_distribution",
    "ellipticity_check",
    "psi_mixing_coefficient",
    "variance_profile",
    "variance_decomposition",
    "monte_carlo_ecdf",
    "load_chain_spec",
    "save_chain_spec",
    "PiecewisePolyDistribution",
    "iid_sum",
    "ChainModel",
    "IIDContinuousModel",
    "builtin_model",
    "builtin_model_names",
    "decaying_observable_chain",
]
