"""Maximum likelihood estimation of the Gaussian spatial lag model.

The model is Y = rho*W*Y + X*beta + eps with iid Gaussian innovations.  For a
fixed rho the problem reduces to ordinary regression of (I - rho*W)Y on X, so
beta and sigma^2 are profiled out in closed form and rho is found by bounded
1-D search on the concentrated log-likelihood.  The Fisher information is
estimated by the scaled negative finite-difference Hessian of the full
log-likelihood, ordered (rho, sigma^2, beta).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import (
    ConvergenceError,
    DegenerateVarianceError,
    RankError,
    SingularInformationError,
    StencilError,
)
from .submodels import SubmodelId
from .weights import SpatialWeights

_LOG_2PI = math.log(2.0 * math.pi)
_EPS_THIRD = np.finfo(float).eps ** (1.0 / 3.0)
_SIGMA2_FLOOR = 1e-12
_MAX_ITER = 500


@dataclass(frozen=True)
class Dataset:
    """Response vector, design matrix, spatial weights and variable names."""

    Y: np.ndarray
    X: np.ndarray
    W: SpatialWeights
    names: tuple[str, ...] = ()

    def __post_init__(self):
        Y = np.asarray(self.Y, dtype=float).reshape(-1)
        X = np.asarray(self.X, dtype=float)
        if X.ndim != 2:
            raise ValueError("X must be 2-dimensional")
        if not (len(Y) == X.shape[0] == self.W.n):
            raise ValueError(
                f"dimension mismatch: len(Y)={len(Y)}, rows(X)={X.shape[0]}, n(W)={self.W.n}"
            )
        names = tuple(self.names) if self.names else tuple(f"x{j + 1}" for j in range(X.shape[1]))
        if len(names) != X.shape[1]:
            raise ValueError("number of names must match columns of X")
        if X.shape[1] > 0:
            sv = np.linalg.svd(X, compute_uv=False)
            if sv[-1] <= 1e-10 * sv[0]:
                raise RankError("design matrix X is rank deficient")
        Y.setflags(write=False)
        X.setflags(write=False)
        object.__setattr__(self, "Y", Y)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "names", names)

    @property
    def n(self) -> int:
        return len(self.Y)

    @property
    def p(self) -> int:
        return self.X.shape[1]


@dataclass(frozen=True)
class Theta:
    """Parameter point (rho, sigma^2, beta) of a (sub)model."""

    rho: float
    sigma2: float
    beta: np.ndarray

    def __post_init__(self):
        if self.sigma2 <= 0:
            raise ValueError(f"sigma2 must be positive, got {self.sigma2}")
        object.__setattr__(self, "beta", np.asarray(self.beta, dtype=float).reshape(-1))

    def to_vector(self) -> np.ndarray:
        return np.concatenate(([self.rho, self.sigma2], self.beta))

    @classmethod
    def from_vector(cls, v: np.ndarray) -> "Theta":
        return cls(float(v[0]), float(v[1]), np.asarray(v[2:], dtype=float))


@dataclass(frozen=True)
class FisherInfo:
    """Per-observation information estimate, ordered (rho, sigma^2, beta_S)."""

    matrix: np.ndarray
    n_obs: int

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class FitResult:
    theta_hat: Theta
    loglik: float
    info: FisherInfo | None
    submodel: SubmodelId
    converged: bool
    iterations: int
    warnings: tuple[str, ...] = field(default_factory=tuple)


def _design(data: Dataset, S: SubmodelId) -> np.ndarray:
    return data.X[:, S.indices()]


def profile_beta(rho: float, data: Dataset, S: SubmodelId) -> np.ndarray:
    """Profiled MLE of beta_S at a given rho: regress (I - rho*W)Y on X_S.

    Computed as beta_R - rho*beta_L, the two least-squares fits of Y and WY
    on the selected columns.
    """
    data.W.require_rho(rho)
    Xs = _design(data, S)
    if Xs.shape[1] == 0:
        return np.empty(0)
    sv = np.linalg.svd(Xs, compute_uv=False)
    if sv[-1] <= 1e-10 * sv[0]:
        raise RankError(f"X_S rank deficient for submodel {S}")
    WY = data.W.matrix @ data.Y
    beta_R, *_ = np.linalg.lstsq(Xs, data.Y, rcond=None)
    beta_L, *_ = np.linalg.lstsq(Xs, WY, rcond=None)
    return beta_R - rho * beta_L


def profile_sigma2(rho: float, data: Dataset, S: SubmodelId) -> float:
    """Profiled MLE of sigma^2 (divisor n) at a given rho."""
    data.W.require_rho(rho)
    resid = _profile_residuals(rho, data, S)
    s2 = float(resid @ resid) / data.n
    if s2 < _SIGMA2_FLOOR:
        raise DegenerateVarianceError(f"residual variance {s2:.3e} below floor")
    return s2


def _profile_residuals(rho: float, data: Dataset, S: SubmodelId) -> np.ndarray:
    z = data.Y - rho * (data.W.matrix @ data.Y)
    Xs = _design(data, S)
    if Xs.shape[1] == 0:
        return z
    return z - Xs @ profile_beta(rho, data, S)


def concentrated_loglik(rho: float, data: Dataset, S: SubmodelId) -> float:
    """Profile log-likelihood of rho with beta and sigma^2 concentrated out."""
    n = data.n
    s2 = profile_sigma2(rho, data, S)
    return -n / 2.0 - (n / 2.0) * _LOG_2PI - (n / 2.0) * math.log(s2) + data.W.log_det_factor(rho)


def full_loglik(theta: Theta, data: Dataset, S: SubmodelId) -> float:
    """Gaussian log-likelihood of the spatial lag model at an arbitrary theta."""
    if theta.sigma2 <= 0:
        raise ValueError("sigma2 must be positive")
    n = data.n
    z = data.Y - theta.rho * (data.W.matrix @ data.Y)
    Xs = _design(data, S)
    resid = z - Xs @ theta.beta if Xs.shape[1] else z
    return (
        -(n / 2.0) * math.log(2.0 * math.pi * theta.sigma2)
        + data.W.log_det_factor(theta.rho)
        - float(resid @ resid) / (2.0 * theta.sigma2)
    )


class _ProfileCache:
    """Closed-form concentrated likelihood as a function of rho.

    The residual sum of squares of (I - rho*W)Y on X_S is the quadratic
    a - 2*b*rho + c*rho^2 in rho, with coefficients from the two base
    regressions; this keeps the 1-D optimizer cheap.
    """

    def __init__(self, data: Dataset, S: SubmodelId):
        self.data = data
        Xs = _design(data, S)
        Y = data.Y
        WY = data.W.matrix @ Y
        if Xs.shape[1]:
            sv = np.linalg.svd(Xs, compute_uv=False)
            if sv[-1] <= 1e-10 * sv[0]:
                raise RankError(f"X_S rank deficient for submodel {S}")
            beta_R, *_ = np.linalg.lstsq(Xs, Y, rcond=None)
            beta_L, *_ = np.linalg.lstsq(Xs, WY, rcond=None)
            e_R = Y - Xs @ beta_R
            e_L = WY - Xs @ beta_L
        else:
            e_R, e_L = Y, WY
        self.a = float(e_R @ e_R)
        self.b = float(e_R @ e_L)
        self.c = float(e_L @ e_L)

    def sigma2(self, rho: float) -> float:
        s2 = (self.a - 2.0 * rho * self.b + rho * rho * self.c) / self.data.n
        if s2 < _SIGMA2_FLOOR:
            raise DegenerateVarianceError(f"residual variance {s2:.3e} below floor")
        return s2

    def loglik(self, rho: float) -> float:
        n = self.data.n
        return (
            -n / 2.0
            - (n / 2.0) * _LOG_2PI
            - (n / 2.0) * math.log(self.sigma2(rho))
            + self.data.W.log_det_factor(rho)
        )


def fit_mle(data: Dataset, S: SubmodelId, with_info: bool = True) -> FitResult:
    """Fit the spatial lag model restricted to submodel S by maximum likelihood.

    rho is found by bounded scalar search on the concentrated likelihood over
    the admissible interval shrunk by 1e-6 of its range at both ends (the
    likelihood is singular at the boundary); beta and sigma^2 follow in closed
    form.
    """
    lo, hi = data.W.rho_interval
    if not (np.isfinite(lo) and np.isfinite(hi)):
        # unbounded admissible range (e.g. spectrum all zero): search a wide box
        lo = max(lo, -1e6)
        hi = min(hi, 1e6)
    margin = 1e-6 * (hi - lo)
    cache = _ProfileCache(data, S)
    res = minimize_scalar(
        lambda r: -cache.loglik(r),
        bounds=(lo + margin, hi - margin),
        method="bounded",
        options={"xatol": 1e-8, "maxiter": _MAX_ITER},
    )
    if not res.success:
        raise ConvergenceError(
            f"rho optimizer failed after {res.nfev} evaluations: {res.message}",
            best_rho=float(res.x),
        )
    rho_hat = float(res.x)
    beta_hat = profile_beta(rho_hat, data, S)
    sigma2_hat = cache.sigma2(rho_hat)
    theta_hat = Theta(rho_hat, sigma2_hat, beta_hat)
    loglik = full_loglik(theta_hat, data, S)
    warnings: tuple[str, ...] = ()
    info = None
    if with_info:
        info, warnings = _observed_info_checked(theta_hat, data, S)
    return FitResult(
        theta_hat=theta_hat,
        loglik=loglik,
        info=info,
        submodel=S,
        converged=True,
        iterations=int(res.nfev),
        warnings=warnings,
    )


def _fd_steps(theta_vec: np.ndarray, data: Dataset) -> np.ndarray:
    """Per-coordinate central-difference steps, kept inside the domain."""
    h = _EPS_THIRD * np.maximum(1.0, np.abs(theta_vec))
    lo, hi = data.W.rho_interval
    gap = min(theta_vec[0] - lo, hi - theta_vec[0])
    if np.isfinite(gap):
        h[0] = min(h[0], 0.49 * gap)
    h[1] = min(h[1], 0.49 * theta_vec[1])  # keep sigma2 positive
    return h


def observed_info(theta_hat: Theta, data: Dataset, S: SubmodelId) -> FisherInfo:
    """Estimate the per-observation Fisher information at theta_hat.

    Central finite-difference Hessian of the full log-likelihood, symmetrized
    and scaled by -1/n.
    """
    info, _ = _observed_info_checked(theta_hat, data, S)
    return info


def _observed_info_checked(theta_hat, data, S):
    v = theta_hat.to_vector()
    m = len(v)
    h = _fd_steps(v, data)

    def f(vec):
        val = full_loglik(Theta.from_vector(vec), data, S)
        if not np.isfinite(val):
            raise StencilError("non-finite log-likelihood inside Hessian stencil")
        return val

    H = np.empty((m, m))
    f0 = f(v)
    for i in range(m):
        ei = np.zeros(m)
        ei[i] = h[i]
        H[i, i] = (f(v + ei) - 2.0 * f0 + f(v - ei)) / (h[i] * h[i])
        for j in range(i + 1, m):
            ej = np.zeros(m)
            ej[j] = h[j]
            H[i, j] = H[j, i] = (
                f(v + ei + ej) - f(v + ei - ej) - f(v - ei + ej) + f(v - ei - ej)
            ) / (4.0 * h[i] * h[j])
    H = 0.5 * (H + H.T)
    I_hat = -H / data.n
    warnings: tuple[str, ...] = ()
    eigs = np.linalg.eigvalsh(I_hat)
    if eigs[0] <= 0:
        warnings = ("information matrix not positive definite at the fitted point",)
    cond = abs(eigs[-1] / eigs[0]) if eigs[0] != 0 else np.inf
    if cond > 1e12:
        raise SingularInformationError(f"information condition number {cond:.3e}")
    return FisherInfo(matrix=I_hat, n_obs=data.n), warnings


def score_vector(theta: Theta, data: Dataset, S: SubmodelId) -> np.ndarray:
    """Central finite-difference gradient of the full log-likelihood."""
    v = theta.to_vector()
    h = _fd_steps(v, data)
    g = np.empty(len(v))
    for i in range(len(v)):
        e = np.zeros(len(v))
        e[i] = h[i]
        g[i] = (
            full_loglik(Theta.from_vector(v + e), data, S)
            - full_loglik(Theta.from_vector(v - e), data, S)
        ) / (2.0 * h[i])
    return g
