"""Gaussian kernel density estimator and Gaussian mixture densities with
analytic gradient, Hessian and Hessian derivative."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .geometry import Circle, Segments, check_points

#: log_eval refuses points whose density is below this value.
DENSITY_FLOOR = 1e-300
_LOG_FLOOR = np.log(DENSITY_FLOOR)
_LOG_2PI = np.log(2.0 * np.pi)
# elements of one (rows x components) temporary per chunk
_CHUNK_BUDGET = 2_000_000


class DensityUnderflowError(ArithmeticError):
    """The density at ``point`` is below :data:`DENSITY_FLOOR`."""

    def __init__(self, point, log_p=None):
        self.point = np.asarray(point, dtype=float)
        self.log_p = log_p
        super().__init__(f"density underflow at x={self.point.tolist()} "
                         f"(log p = {log_p})")


@dataclass(frozen=True)
class LocalDensityInfo:
    """Value, gradient, Hessian and (optionally) Hessian derivative at a point.

    ``hessian_deriv`` is the ``D^2 x D`` Jacobian of ``vec(H)``, with
    ``vec`` stacking columns. When ``log`` is true all quantities refer to
    ``log p`` instead of ``p``.
    """

    value: float
    gradient: np.ndarray
    hessian: np.ndarray
    hessian_deriv: Optional[np.ndarray] = None
    log: bool = False


def silverman_bandwidth(X):
    """Normal-reference bandwidth ``s * (4 / ((D + 2) n)) ** (1 / (D + 4))``
    with ``s`` the mean per-coordinate sample standard deviation."""
    X = check_points(X)
    n, D = X.shape
    if n < 2:
        raise ValueError("Silverman's rule needs at least two points")
    s = float(np.mean(np.std(X, axis=0, ddof=1)))
    if not s > 0:
        raise ValueError("Silverman's rule needs nonzero spread; all points are identical")
    return s * (4.0 / ((D + 2) * n)) ** (1.0 / (D + 4))


def _vec_jacobian(T):
    # T[a, b, l] = dH_ab/dx_l  ->  row a + b*D (column-stacked vec)
    D = T.shape[0]
    return np.ascontiguousarray(T.transpose(1, 0, 2).reshape(D * D, D))


class _GaussianSum:
    """Weighted sum of Gaussians, isotropic or full covariance.

    All batched kernels reduce along the component axis, which is stored
    last and contiguous, so each query row is computed independently of
    the other rows in its batch.
    """

    def __init__(self, centers, weights, variances=None, covariances=None):
        self.centers = check_points(centers, name="centers")
        k, D = self.centers.shape
        weights = np.asarray(weights, dtype=float).reshape(k)
        self.dim = D
        self._centers_T = np.ascontiguousarray(self.centers.T)
        self.isotropic = covariances is None
        if self.isotropic:
            var = np.broadcast_to(np.asarray(variances, dtype=float), (k,)).copy()
            self.inv_var = 1.0 / var
            log_det = D * np.log(var)
            self.precisions = None
            # a single shared variance allows a leaner evaluation path
            self.common_inv_var = float(self.inv_var[0]) if np.all(var == var[0]) else None
        else:
            cov = np.asarray(covariances, dtype=float).reshape(k, D, D)
            self.precisions = np.linalg.inv(cov)
            log_det = np.linalg.slogdet(cov)[1]
            self.inv_var = None
            self.common_inv_var = None
        self.log_norm = np.log(weights) - 0.5 * (D * _LOG_2PI + log_det)
        self.n_components = k

    def chunk_rows(self):
        return max(1, _CHUNK_BUDGET // (self.n_components * (self.dim + 2)))

    def _terms(self, X):
        diff = X[:, :, None] - self._centers_T[None, :, :]   # (m, D, k): x - mu
        if self.isotropic:
            u = diff * self.inv_var
        else:
            u = np.einsum("kab,mbk->mak", self.precisions, diff)
        maha = diff[:, 0, :] * u[:, 0, :]
        for a in range(1, self.dim):
            maha = maha + diff[:, a, :] * u[:, a, :]
        return u, self.log_norm - 0.5 * maha

    def local(self, X, hessian=True):
        """Log-density quantities for a batch of query points.

        Returns a dict with ``log_p`` (m,), ``grad_log`` (m, D), ``shift``
        (m, D; mean-shift displacement ``m(x) - x``) and, when ``hessian``,
        ``curv`` = H/p (m, D, D) and ``hess_log`` (m, D, D).
        """
        X = np.ascontiguousarray(X, dtype=float)
        out = {"log_p": [], "grad_log": [], "shift": [], "curv": [], "hess_log": []}
        step = self.chunk_rows()
        for start in range(0, X.shape[0], step):
            part = self._local_chunk(X[start:start + step], hessian)
            for key, value in part.items():
                out[key].append(value)
        return {key: np.concatenate(v) for key, v in out.items() if v}

    def _local_chunk_common(self, X, hessian):
        # equal variances: work with x - mu directly, one (m, k) array per axis
        m, D = X.shape
        iv = self.common_inv_var
        diffs = [X[:, a, None] - self._centers_T[a][None, :] for a in range(D)]
        logc = diffs[0] * diffs[0]
        for a in range(1, D):
            logc += diffs[a] * diffs[a]
        logc *= -0.5 * iv
        logc += self.log_norm
        top = logc.max(axis=1)
        logc -= top[:, None]
        r = np.exp(logc, out=logc)
        total = r.sum(axis=1)
        r /= total[:, None]
        log_p = top + np.log(total)
        rd = [r * diffs[a] for a in range(D)]
        # sum_k r_k (x - mu_k) = x - m(x)
        mean_diff = np.column_stack([rd[a].sum(axis=1) for a in range(D)])
        grad_log = -iv * mean_diff
        res = {"log_p": log_p, "grad_log": grad_log, "shift": -mean_diff}
        if hessian:
            curv = np.empty((m, D, D))
            for i in range(D):
                for j in range(i, D):
                    curv[:, i, j] = (iv * iv) * (rd[i] * diffs[j]).sum(axis=1)
                    curv[:, j, i] = curv[:, i, j]
                curv[:, i, i] -= iv
            res["curv"] = curv
            res["hess_log"] = curv - grad_log[:, :, None] * grad_log[:, None, :]
        return res

    def _local_chunk(self, X, hessian):
        if self.common_inv_var is not None:
            return self._local_chunk_common(X, hessian)
        m, D = X.shape
        u, logc = self._terms(X)
        top = logc.max(axis=1)
        a = np.exp(logc - top[:, None])
        total = a.sum(axis=1)
        r = a / total[:, None]
        log_p = top + np.log(total)
        ru = r[:, None, :] * u
        grad_log = -ru.sum(axis=2)
        if self.isotropic:
            w = (r * self.inv_var).sum(axis=1)
            W = w[:, None, None] * np.eye(D)
            shift = grad_log / w[:, None]
        else:
            W = np.einsum("mk,kab->mab", r, self.precisions)
            shift = np.linalg.solve(W, grad_log[:, :, None])[:, :, 0]
        res = {"log_p": log_p, "grad_log": grad_log, "shift": shift}
        if hessian:
            second = np.empty((m, D, D))
            for i in range(D):
                for j in range(i, D):
                    second[:, i, j] = (ru[:, i, :] * u[:, j, :]).sum(axis=1)
                    second[:, j, i] = second[:, i, j]
            curv = second - W
            res["curv"] = curv
            res["hess_log"] = curv - grad_log[:, :, None] * grad_log[:, None, :]
        return res

    def third(self, x):
        """``(H'/p)[a, b, l]`` at a single point."""
        u, logc = self._terms(x[None, :])
        u = u[0]                                  # (D, k)
        r = np.exp(logc[0] - logc[0].max())
        r /= r.sum()
        T = -np.einsum("k,ak,bk,lk->abl", r, u, u, u)
        D = self.dim
        if self.isotropic:
            t = (r * self.inv_var * u).sum(axis=1)     # sum_k r_k iv_k u_k
            eye = np.eye(D)
            T += (eye[:, :, None] * t[None, None, :]
                  + eye[:, None, :] * t[None, :, None]
                  + t[:, None, None] * eye[None, :, :])
        else:
            P = self.precisions
            T += (np.einsum("k,kab,lk->abl", r, P, u)
                  + np.einsum("k,kal,bk->abl", r, P, u)
                  + np.einsum("k,kbl,ak->abl", r, P, u))
        return T


class _DensityMixin:
    """Shared evaluation interface of the density models."""

    def _sum(self):
        raise NotImplementedError

    @property
    def dim(self):
        return self._sum().dim

    def _point(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise ValueError(f"query point must have shape ({self.dim},), got {x.shape}")
        if not np.all(np.isfinite(x)):
            raise ValueError("query point must be finite")
        return x

    def density(self, X):
        """Density values at the rows of ``X``."""
        X = check_points(X, dim=self.dim, name="X")
        return np.exp(self._sum().local(X, hessian=False)["log_p"])

    def local_batch(self, X, hessian=True):
        X = check_points(X, dim=self.dim, name="X")
        return self._sum().local(X, hessian=hessian)

    def mean_shift_target(self, x):
        x = self._point(x)
        return x + self._sum().local(x[None, :], hessian=False)["shift"][0]

    def eval(self, x, with_hprime=False):
        """Density, gradient, Hessian (and Hessian derivative) at ``x``."""
        x = self._point(x)
        s = self._sum()
        loc = s.local(x[None, :])
        p = float(np.exp(loc["log_p"][0]))
        hprime = None
        if with_hprime:
            hprime = _vec_jacobian(p * s.third(x))
        return LocalDensityInfo(value=p, gradient=p * loc["grad_log"][0],
                                hessian=p * loc["curv"][0],
                                hessian_deriv=hprime, log=False)

    def log_eval(self, x, with_hprime=False):
        """``log p`` with its gradient ``g/p`` and Hessian ``H/p - g g^T/p^2``.

        Raises
        ------
        DensityUnderflowError
            If ``p(x)`` is below :data:`DENSITY_FLOOR`.
        """
        x = self._point(x)
        s = self._sum()
        loc = s.local(x[None, :])
        log_p = float(loc["log_p"][0])
        if log_p < _LOG_FLOOR:
            raise DensityUnderflowError(x, log_p)
        grad = loc["grad_log"][0]
        hess = loc["hess_log"][0]
        hprime = None
        if with_hprime:
            curv = loc["curv"][0]
            T = s.third(x)
            T = (T - curv[:, :, None] * grad[None, None, :]
                 - hess[:, None, :] * grad[None, :, None]
                 - grad[:, None, None] * hess[None, :, :])
            hprime = _vec_jacobian(T)
        return LocalDensityInfo(value=log_p, gradient=grad, hessian=hess,
                                hessian_deriv=hprime, log=True)


class GaussianKDE(_DensityMixin, BaseEstimator):
    """Kernel density estimator with the normalized Gaussian kernel.

    Parameters
    ----------
    bandwidth : float, optional
        Kernel bandwidth ``h``. Defaults to :func:`silverman_bandwidth`.

    Attributes
    ----------
    data_ : ndarray of shape (n, D)
    bandwidth_ : float
    n_features_in_ : int
    """

    def __init__(self, bandwidth=None):
        self.bandwidth = bandwidth

    def fit(self, X, y=None):
        X = check_points(X, name="X")
        if self.bandwidth is None:
            h = silverman_bandwidth(X)
        else:
            h = float(self.bandwidth)
            if not (np.isfinite(h) and h > 0):
                raise ValueError("bandwidth must be positive")
        self.data_ = X
        self.bandwidth_ = h
        self.n_features_in_ = X.shape[1]
        n = X.shape[0]
        self._gauss = _GaussianSum(X, np.full(n, 1.0 / n), variances=h * h)
        return self

    def _sum(self):
        check_is_fitted(self, "data_")
        return self._gauss

    def score_samples(self, X):
        """Log-density at the rows of ``X``."""
        X = check_points(X, dim=self.dim, name="X")
        return self._sum().local(X, hessian=False)["log_p"]

    def score(self, X, y=None):
        return float(np.sum(self.score_samples(X)))

    def to_dict(self, include_data=False):
        check_is_fitted(self, "data_")
        out = {"kind": "kde", "bandwidth": self.bandwidth_, "dim": self.dim,
               "n": int(self.data_.shape[0])}
        if include_data:
            out["data"] = self.data_.tolist()
        return out


class GaussianMixtureDensity(_DensityMixin):
    """Finite mixture of Gaussians with fixed parameters.

    Each component has either an isotropic scale (``sigmas``) or a full
    covariance matrix (``covariances``).

    Parameters
    ----------
    weights : array-like of shape (k,)
        Positive, summing to one within 1e-12.
    means : array-like of shape (k, D)
    sigmas : array-like of shape (k,) or float, optional
    covariances : array-like of shape (k, D, D), optional
    """

    def __init__(self, weights, means, sigmas=None, covariances=None):
        means = check_points(means, name="means")
        k, D = means.shape
        weights = np.asarray(weights, dtype=float).reshape(-1)
        if weights.shape != (k,):
            raise ValueError("need one weight per component")
        if np.any(~np.isfinite(weights)) or np.any(weights <= 0):
            raise ValueError("mixture weights must be positive")
        if abs(weights.sum() - 1.0) > 1e-12:
            raise ValueError(f"mixture weights sum to {weights.sum()!r}, not 1")
        if (sigmas is None) == (covariances is None):
            raise ValueError("give exactly one of sigmas or covariances")
        self.weights = weights
        self.means = means
        if sigmas is not None:
            sig = np.broadcast_to(np.asarray(sigmas, dtype=float), (k,)).copy()
            if np.any(~np.isfinite(sig)) or np.any(sig <= 0):
                raise ValueError("component sigmas must be positive")
            self.sigmas = sig
            self.covariances = None
            self._gauss = _GaussianSum(means, weights, variances=sig ** 2)
        else:
            cov = np.asarray(covariances, dtype=float).reshape(k, D, D)
            if not np.allclose(cov, np.swapaxes(cov, 1, 2)):
                raise ValueError("covariances must be symmetric")
            if np.any(np.linalg.eigvalsh(cov) <= 0):
                raise ValueError("covariances must be positive definite")
            self.sigmas = None
            self.covariances = cov
            self._gauss = _GaussianSum(means, weights, covariances=cov)

    def _sum(self):
        return self._gauss

    def to_dict(self):
        comps = []
        for j in range(len(self.weights)):
            comp = {"weight": self.weights[j], "mean": self.means[j].tolist()}
            if self.sigmas is not None:
                comp["sigma"] = self.sigmas[j]
            else:
                comp["covariance"] = self.covariances[j].tolist()
            comps.append(comp)
        return {"kind": "mixture", "dim": self.dim, "components": comps}


def density_from_dict(desc, data=None):
    """Rebuild a density model from :meth:`to_dict` output."""
    kind = desc.get("kind")
    if kind == "kde":
        if data is None:
            data = desc.get("data")
        if data is None:
            raise ValueError("a kde description needs its data points")
        return GaussianKDE(bandwidth=desc["bandwidth"]).fit(data)
    if kind == "mixture":
        try:
            comps = desc["components"]
            weights = [c["weight"] for c in comps]
            means = [c["mean"] for c in comps]
            if all("sigma" in c for c in comps):
                return GaussianMixtureDensity(weights, means,
                                              sigmas=[c["sigma"] for c in comps])
            covs = [c["covariance"] for c in comps]
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed mixture description: missing {exc}") from None
        return GaussianMixtureDensity(weights, means, covariances=covs)
    raise ValueError(f"unknown density kind: {kind!r}")


def manifold_oracle(M, sigma, m=512, weight=None):
    """Finite-mixture discretisation of ``integral phi_sigma(x - z) dW(z)``.

    ``m`` components are placed at equal arclength spacing on ``M`` (a
    :class:`Circle` or :class:`Segments`), weighted by ``weight(points)``
    (uniform when omitted) and renormalised to total mass one.
    """
    if not isinstance(M, (Circle, Segments)):
        raise ValueError("manifold_oracle supports circle and segments manifolds only")
    if not (isinstance(m, (int, np.integer)) and m >= 1):
        raise ValueError("m must be a positive integer")
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    if isinstance(M, Circle):
        nodes = M.probes(m)
    else:
        nodes = M.points_at((np.arange(m) + 0.5) * M.length / m)
    w = np.ones(m) if weight is None else np.asarray(weight(nodes), dtype=float).reshape(m)
    if np.any(w < 0) or not w.sum() > 0:
        raise ValueError("weight must be nonnegative with positive total")
    keep = w > 0
    w = w[keep] / w[keep].sum()
    return GaussianMixtureDensity(w, nodes[keep], sigmas=float(sigma))
