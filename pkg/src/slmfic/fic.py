"""Focused information criterion for spatial lag submodels.

For each candidate subset S the criterion estimates the asymptotic mean
squared error of the scaled focus estimator: a squared-bias term driven by the
local misspecification direction (estimated by sqrt(n) times the wide-model
coefficients) plus a variance term from the submodel information.  Submodels
are ranked by ascending score.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import SingularInformationError
from .focus import FocusSpec, eval_focus, wide_beta_jacobian
from .slm import Dataset, FisherInfo, FitResult
from .submodels import SubmodelId, enumerate_submodels, projection_matrix

__all__ = [
    "SubmodelId",
    "enumerate_submodels",
    "projection_matrix",
    "submodel_info",
    "m_matrix",
    "delta_hat",
    "fic_components",
    "fic_score",
    "rank_models",
    "FicRow",
]


@dataclass(frozen=True)
class FicRow:
    """Per-submodel squared bias, variance and total score."""

    submodel: SubmodelId
    labels: tuple[str, ...]
    bias2: float
    variance: float
    score: float
    rank: int = 0


def _info_indices(S: SubmodelId) -> list[int]:
    return [0, 1] + [2 + j for j in S.indices()]


def submodel_info(info_full: FisherInfo, S: SubmodelId) -> FisherInfo:
    """Keep the (rho, sigma^2) rows/columns and the beta entries selected by S."""
    idx = _info_indices(S)
    return FisherInfo(matrix=info_full.matrix[np.ix_(idx, idx)], n_obs=info_full.n_obs)


def m_matrix(info_full: FisherInfo, S: SubmodelId) -> np.ndarray:
    """Mean-shift matrix of the submodel MLE under local misspecification.

    Solves I_S m_S = B_S where B_S stacks the rho-beta cross information, a
    zero row for sigma^2 and the selected rows of the beta block.
    """
    I = info_full.matrix
    p = I.shape[0] - 2
    sel = list(S.indices())
    B = np.vstack(
        [
            I[0, 2:],               # I_{rho,beta}
            np.zeros(p),            # sigma^2 row: beta and sigma^2 are orthogonal
            I[np.ix_([2 + j for j in sel], range(2, 2 + p))],
        ]
    )
    I_S = submodel_info(info_full, S).matrix
    cond = np.linalg.cond(I_S)
    if not np.isfinite(cond) or cond > 1e12:
        raise SingularInformationError(
            f"submodel information for {S.label()} has condition number {cond:.3e}"
        )
    return np.linalg.solve(I_S, B)


def delta_hat(fit_wide: FitResult) -> np.ndarray:
    """Plug-in estimate of the misspecification direction: sqrt(n) * beta_wide."""
    if not fit_wide.submodel.is_wide:
        raise ValueError("delta_hat requires the wide-model fit")
    if fit_wide.info is None:
        raise ValueError("wide fit must carry an information estimate (n_obs)")
    return np.sqrt(fit_wide.info.n_obs) * fit_wide.theta_hat.beta


def fic_components(
    J_S: np.ndarray,
    J_beta_wide: np.ndarray,
    info_full: FisherInfo,
    S: SubmodelId,
    D_n: np.ndarray,
) -> tuple[float, float]:
    """Squared-bias and variance pieces of the criterion from raw matrices.

    The bias matrix is centered by the wide-model beta Jacobian so that the
    wide model itself is asymptotically unbiased.
    """
    m_S = m_matrix(info_full, S)
    b_tilde = J_S @ m_S - J_beta_wide
    bD = b_tilde @ D_n
    bias2 = float(bD @ bD)
    I_S = submodel_info(info_full, S).matrix
    variance = float(np.trace(J_S @ np.linalg.solve(I_S, J_S.T)))
    return bias2, variance


def fic_score(
    spec: FocusSpec,
    S: SubmodelId,
    fit_S: FitResult,
    fit_wide: FitResult,
    info_full: FisherInfo,
    data: Dataset,
) -> FicRow:
    """Score one submodel: evaluate the focus Jacobians and assemble the AMSE."""
    J_S = eval_focus(spec, fit_S.theta_hat, data, S, info=fit_S.info).jacobian
    if S.is_wide:
        # identical evaluation point for both sides of the centering
        J_beta_wide = J_S[:, 2:]
    else:
        J_beta_wide = wide_beta_jacobian(spec, fit_wide.theta_hat, data, fit_wide.info)
    D_n = delta_hat(fit_wide)
    bias2, variance = fic_components(J_S, J_beta_wide, info_full, S, D_n)
    return FicRow(
        submodel=S,
        labels=S.variable_names(data.names),
        bias2=bias2,
        variance=variance,
        score=bias2 + variance,
    )


def rank_models(rows: list[FicRow]) -> list[FicRow]:
    """Assign ranks by ascending score; ties favor smaller models, then masks."""
    if not rows:
        raise ValueError("cannot rank an empty model list")
    order = sorted(
        range(len(rows)),
        key=lambda i: (rows[i].score, len(rows[i].submodel), rows[i].submodel.mask),
    )
    ranked = list(rows)
    for rank, i in enumerate(order, start=1):
        ranked[i] = replace(rows[i], rank=rank)
    return ranked
