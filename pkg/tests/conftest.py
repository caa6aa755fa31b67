import numpy as np
import pytest

from surfridge import Circle, GaussianMixtureDensity, manifold_oracle


@pytest.fixture(scope="session")
def circle():
    return Circle((0.0, 0.0), 3.0)


@pytest.fixture(scope="session")
def circle_oracle(circle):
    return manifold_oracle(circle, 0.5, 512)


@pytest.fixture(scope="session")
def aniso():
    """Zero-mean Gaussian with covariance diag(4, 1)."""
    return GaussianMixtureDensity([1.0], [[0.0, 0.0]], covariances=[np.diag([4.0, 1.0])])


def brute_hausdorff(A, B):
    A = np.asarray(A, float)
    B = np.asarray(B, float)
    best_a = max(min(np.sqrt(np.sum((a - b) ** 2)) for b in B) for a in A)
    best_b = max(min(np.sqrt(np.sum((a - b) ** 2)) for a in A) for b in B)
    return max(best_a, best_b)


def union_find_components(A, eps):
    A = np.asarray(A, float)
    n = len(A)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    adj = np.sqrt(((A[:, None, :] - A[None, :, :]) ** 2).sum(-1)) <= 2 * eps
    for i in range(n):
        for j in range(i + 1, n):
            if adj[i, j]:
                parent[find(i)] = find(j)
    return len({find(i) for i in range(n)})
