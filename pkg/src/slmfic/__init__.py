"""Focused variable selection for Gaussian spatial lag models.

Fits Y = rho*W*Y + X*beta + eps by maximum likelihood and ranks all candidate
covariate subsets by the focused information criterion (FIC) or its spatially
averaged form (sAFIC).
"""

from .diagnostics import MoranResult, aic, morans_i
from .fic import (
    FicRow,
    delta_hat,
    enumerate_submodels,
    fic_components,
    fic_score,
    m_matrix,
    projection_matrix,
    rank_models,
    submodel_info,
)
from .focus import FocusEval, FocusSpec, eval_focus, jacobian_fd, wide_beta_jacobian
from .safic import (
    PsiWeights,
    RhoBetaBlocks,
    SaficRow,
    g_matrix,
    h_empirical,
    k_empirical,
    median_bandwidth,
    omega_i,
    pointwise_risk,
    psi_kernel,
    psi_uniform,
    rho_beta_blocks,
    safic_score,
)
from .simulate import (
    CriterionSpec,
    RunReport,
    SimConfig,
    build_weights,
    default_criteria,
    fic_table,
    generate_dataset,
    monte_carlo,
    safic_table,
)
from .slm import (
    Dataset,
    FisherInfo,
    FitResult,
    Theta,
    concentrated_loglik,
    fit_mle,
    full_loglik,
    observed_info,
    profile_beta,
    profile_sigma2,
    score_vector,
)
from .submodels import SubmodelId
from .weights import SpatialWeights, build_chain_lag1, row_normalize

__version__ = "0.1.0"
