import numpy as np
import pytest

from slmfic import Dataset, SpatialWeights, build_chain_lag1


def random_symmetric_adjacency(rng, n, density=0.4):
    """Random connected-ish symmetric 0/1 adjacency with zero diagonal."""
    A = (rng.random((n, n)) < density).astype(float)
    A = np.triu(A, k=1)
    # guarantee no isolated unit by chaining
    for i in range(n - 1):
        A[i, i + 1] = 1.0
    return A + A.T


def random_dataset(rng, n=30, p=3, rho=0.3, beta=None, sigma2=1.0, row_normalize=True):
    A = random_symmetric_adjacency(rng, n)
    W = SpatialWeights.from_adjacency(A, row_normalize=row_normalize)
    if beta is None:
        beta = rng.normal(size=p)
    X = rng.standard_normal((n, p))
    eps = np.sqrt(sigma2) * rng.standard_normal(n)
    Y = np.linalg.solve(np.eye(n) - rho * W.matrix, X @ beta + eps)
    return Dataset(Y=Y, X=X, W=W)


def random_info(rng, p, n_obs=50, zero_sigma_beta=False):
    """Random SPD information over (rho, sigma^2, beta)."""
    from slmfic import FisherInfo

    m = p + 2
    B = rng.standard_normal((m, m))
    M = B @ B.T + m * np.eye(m)
    if zero_sigma_beta:
        M[1, 2:] = 0.0
        M[2:, 1] = 0.0
    return FisherInfo(matrix=M, n_obs=n_obs)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def chain75():
    return SpatialWeights.from_adjacency(build_chain_lag1(75), row_normalize=True)
