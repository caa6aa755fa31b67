"""Subspace constrained mean shift, the SuRF pipeline, an integral-curve
solver for the projected-gradient flow, and path diagnostics."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import brentq
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .density import _LOG_FLOOR, DensityUnderflowError, GaussianKDE
from .geometry import check_points
from .spectral import projector_batch

CONVERGED = "converged"
MAX_ITER = "max_iter_reached"
DENOISED = "denoised"
UNDERFLOW = "underflow"


@dataclass(frozen=True)
class SurfConfig:
    """Settings of the SuRF pipeline and the SCMS iteration."""

    d: int = 1
    bandwidth: Optional[float] = None
    threshold_frac: float = 0.05
    use_log: bool = True
    step_tol: float = 1e-7
    grad_tol: float = 1e-6
    max_iter: int = 500

    def __post_init__(self):
        if not (isinstance(self.d, (int, np.integer)) and self.d >= 0):
            raise ValueError("d must be a nonnegative integer")
        if self.bandwidth is not None and not self.bandwidth > 0:
            raise ValueError("bandwidth must be positive")
        if not 0 <= self.threshold_frac < 1:
            raise ValueError("threshold_frac must lie in [0, 1)")
        if not (self.step_tol > 0 and self.grad_tol > 0):
            raise ValueError("tolerances must be positive")
        if not (isinstance(self.max_iter, (int, np.integer)) and self.max_iter > 0):
            raise ValueError("max_iter must be a positive integer")

    def to_dict(self):
        return asdict(self)


@dataclass
class RidgeEstimate:
    """Per-mesh-point outcome of a ridge search.

    All arrays are indexed by mesh point. ``destinations`` holds the final
    iterate (the origin itself for denoised points); the diagnostic arrays
    are NaN where the iteration never ran.
    """

    origins: np.ndarray
    destinations: np.ndarray
    status: np.ndarray
    iterations: np.ndarray
    density: np.ndarray
    grad_ratio: np.ndarray
    lambda_next: np.ndarray
    eigengap: np.ndarray
    config: SurfConfig = field(default_factory=SurfConfig)
    bandwidth: Optional[float] = None
    threshold: Optional[float] = None

    @property
    def converged(self):
        return self.status == CONVERGED

    @property
    def ridge_points(self):
        """Destinations of the converged mesh points."""
        return self.destinations[self.converged]

    @property
    def ridge_origins(self):
        return self.origins[self.converged]

    def counts(self):
        return {s: int(np.sum(self.status == s))
                for s in (CONVERGED, MAX_ITER, DENOISED, UNDERFLOW)}

    def sidecar(self):
        """JSON-ready description: resolved configuration and per-point
        status and diagnostics."""
        points = []
        for i in range(len(self.status)):
            points.append({
                "index": i,
                "status": str(self.status[i]),
                "iterations": int(self.iterations[i]),
                "origin": self.origins[i],
                "density": self.density[i],
                "grad_ratio": self.grad_ratio[i],
                "lambda_next": self.lambda_next[i],
                "eigengap": self.eigengap[i],
            })
        return {"config": self.config.to_dict(), "bandwidth": self.bandwidth,
                "threshold": self.threshold, "counts": self.counts(),
                "points": points}


def _frames(model, X, d, use_log):
    loc = model.local_batch(X)
    # L is unchanged by the positive factor p; only the eigenvalues scale
    hess = loc["hess_log"] if use_log else np.exp(loc["log_p"])[:, None, None] * loc["curv"]
    evals, L = projector_batch(hess, d)
    return loc, evals, L


def scms_step(model, x, d=1, use_log=True):
    """One subspace constrained mean-shift update ``x + L(x)(m(x) - x)``.

    Raises
    ------
    DensityUnderflowError
        If the density at ``x`` is below the underflow floor.
    """
    x = model._point(x)
    loc, _, L = _frames(model, x[None, :], d, use_log)
    if loc["log_p"][0] < _LOG_FLOOR:
        raise DensityUnderflowError(x, float(loc["log_p"][0]))
    return x + L[0] @ loc["shift"][0]


def _scms_chunk(model, X0, d, use_log, step_tol, grad_tol, max_iter):
    m, D = X0.shape
    x = X0.copy()
    status = np.full(m, "", dtype=object)
    iterations = np.zeros(m, dtype=int)
    diag = np.full((m, 4), np.nan)
    last_step = np.full(m, np.inf)
    active = np.arange(m)
    for t in range(max_iter + 1):
        if active.size == 0:
            break
        loc, evals, L = _frames(model, x[active], d, use_log)
        log_p = loc["log_p"]
        under = log_p < _LOG_FLOOR
        g = loc["grad_log"]
        G = np.einsum("mab,mb->ma", L, g)
        gnorm = np.linalg.norm(g, axis=1)
        ratio = np.where(gnorm > 0, np.linalg.norm(G, axis=1) / np.where(gnorm > 0, gnorm, 1.0), 0.0)
        done = ~under & ((ratio <= grad_tol) | (last_step[active] <= step_tol))
        final = done | (~under & (t == max_iter))
        gap = evals[:, d - 1] - evals[:, d] if d > 0 else np.full(len(active), np.inf)
        idx = active[final]
        diag[idx] = np.column_stack([np.exp(log_p), ratio, evals[:, d], gap])[final]
        iterations[idx] = t
        status[active[done]] = CONVERGED
        status[active[final & ~done]] = MAX_ITER
        status[active[under]] = UNDERFLOW
        iterations[active[under]] = t
        keep = ~(under | final)
        active = active[keep]
        step = np.einsum("mab,mb->ma", L[keep], loc["shift"][keep])
        x[active] += step
        last_step[active] = np.linalg.norm(step, axis=1)
    return x, status, iterations, diag


def scms_run(model, mesh, config=None, n_jobs=None):
    """Run SCMS from every mesh point until convergence.

    A point converges when its relative projected gradient ``|G| / |g|``
    falls to ``grad_tol`` or its last step is at most ``step_tol``.
    Mesh points are processed in fixed chunks, so the output does not
    depend on ``n_jobs``.
    """
    config = config or SurfConfig()
    mesh = check_points(mesh, dim=model.dim, name="mesh")
    if config.d >= model.dim:
        raise ValueError(f"d={config.d} must be smaller than D={model.dim}")
    rows = model._sum().chunk_rows()
    chunks = [mesh[i:i + rows] for i in range(0, mesh.shape[0], rows)]

    def work(chunk):
        return _scms_chunk(model, chunk, config.d, config.use_log,
                           config.step_tol, config.grad_tol, config.max_iter)

    if n_jobs is not None and n_jobs > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            parts = list(pool.map(work, chunks))
    else:
        parts = [work(c) for c in chunks]
    dest = np.concatenate([p[0] for p in parts])
    status = np.concatenate([p[1] for p in parts]).astype("<U16")
    iterations = np.concatenate([p[2] for p in parts])
    diag = np.concatenate([p[3] for p in parts])
    return RidgeEstimate(origins=mesh, destinations=dest, status=status,
                         iterations=iterations, density=diag[:, 0],
                         grad_ratio=diag[:, 1], lambda_next=diag[:, 2],
                         eigengap=diag[:, 3], config=config)


def surf(X, config=None, mesh=None, n_jobs=None):
    """Subspace ridge finder: estimate the density, denoise the mesh, run SCMS.

    Parameters
    ----------
    X : array-like of shape (n, D)
        Sample.
    config : SurfConfig, optional
    mesh : array-like of shape (m, D), optional
        Starting points; defaults to ``X``.

    Returns
    -------
    RidgeEstimate
        Mesh points whose estimated density is below
        ``threshold_frac * max(mesh density)`` carry status ``denoised``.
    """
    config = config or SurfConfig()
    X = check_points(X, name="X")
    if X.shape[0] < 2:
        raise ValueError("surf needs at least two sample points")
    kde = GaussianKDE(bandwidth=config.bandwidth).fit(X)
    mesh = X if mesh is None else check_points(mesh, dim=X.shape[1], name="mesh")
    p_mesh = kde.density(mesh)
    threshold = config.threshold_frac * float(p_mesh.max())
    keep = ~(p_mesh < threshold)
    if not keep.any():
        raise ValueError("empty mesh after denoising")
    run = scms_run(kde, mesh[keep], config, n_jobs=n_jobs)
    m = mesh.shape[0]
    dest = mesh.copy()
    dest[keep] = run.destinations
    status = np.full(m, DENOISED, dtype="<U16")
    status[keep] = run.status
    iterations = np.zeros(m, dtype=int)
    iterations[keep] = run.iterations
    arrays = {}
    for name in ("grad_ratio", "lambda_next", "eigengap"):
        full = np.full(m, np.nan)
        full[keep] = getattr(run, name)
        arrays[name] = full
    density = p_mesh.copy()
    density[keep] = run.density
    return RidgeEstimate(origins=mesh, destinations=dest, status=status,
                         iterations=iterations, density=density,
                         config=config, bandwidth=kde.bandwidth_,
                         threshold=threshold, **arrays)


# ---------------------------------------------------------------------------
# Projected-gradient flow


@dataclass
class IntegralCurve:
    """Samples along a unit-speed ascent path of the projected gradient.

    ``s`` is arclength from the start. ``values`` holds the ascended
    function (``log p`` when ``use_log``), ``p`` the density.
    """

    s: np.ndarray
    points: np.ndarray
    p: np.ndarray
    values: np.ndarray
    destination: np.ndarray
    converged: bool
    truncated: bool
    use_log: bool
    d: int


def _flow(model, x, d, use_log):
    loc, evals, L = _frames(model, x[None, :], d, use_log)
    g = loc["grad_log"][0]
    G = L[0] @ g
    gnorm = np.linalg.norm(g)
    ratio = np.linalg.norm(G) / gnorm if gnorm > 0 else 0.0
    log_p = float(loc["log_p"][0])
    value = log_p if use_log else float(np.exp(log_p))
    return G, ratio, log_p, value


def integral_curve(model, x0, d=1, use_log=True, step=0.01, grad_tol=1e-6,
                   max_len=10.0):
    """Integrate ``dx/ds = G(x) / |G(x)|`` with classical RK4.

    Samples are ``step`` apart in arclength. When the next step would
    cross the ridge, the crossing is located by root finding along the
    current direction and taken as a final partial step. Integration also
    stops when ``|G|/|g| <= grad_tol``; reaching ``max_len`` first sets
    ``truncated``.
    """
    x = model._point(x0).copy()
    if not (step > 0 and max_len > 0):
        raise ValueError("step and max_len must be positive")

    def direction(y):
        G = _flow(model, y, d, use_log)[0]
        n = np.linalg.norm(G)
        return G / n if n > 0 else np.zeros_like(G)

    G, ratio, log_p, value = _flow(model, x, d, use_log)
    s_list, pts, ps, vals = [0.0], [x.copy()], [np.exp(log_p)], [value]
    s = 0.0
    converged = truncated = False
    while True:
        if ratio <= grad_tol:
            converged = True
            break
        if s >= max_len:
            truncated = True
            break
        k1 = G / np.linalg.norm(G)
        probe = x + step * k1
        if _flow(model, probe, d, use_log)[0] @ k1 <= 0:
            phi = lambda t: _flow(model, x + t * step * k1, d, use_log)[0] @ k1
            t_root = brentq(phi, 0.0, 1.0, xtol=1e-14, rtol=4 * np.finfo(float).eps)
            x = x + t_root * step * k1
            s += t_root * step
            G, ratio, log_p, value = _flow(model, x, d, use_log)
            s_list.append(s); pts.append(x.copy()); ps.append(np.exp(log_p)); vals.append(value)
            converged = True
            break
        k2 = direction(x + 0.5 * step * k1)
        k3 = direction(x + 0.5 * step * k2)
        k4 = direction(x + step * k3)
        x = x + step * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0
        s += step
        G, ratio, log_p, value = _flow(model, x, d, use_log)
        s_list.append(s); pts.append(x.copy()); ps.append(np.exp(log_p)); vals.append(value)
    return IntegralCurve(s=np.asarray(s_list), points=np.asarray(pts),
                         p=np.asarray(ps), values=np.asarray(vals),
                         destination=x.copy(), converged=converged,
                         truncated=truncated, use_log=use_log, d=d)


@dataclass(frozen=True)
class PathDiagnostics:
    """Drop ``xi`` of the ascended function below its value at the
    destination, indexed by arclength ``s`` measured back from the
    destination."""

    s: np.ndarray
    xi: np.ndarray
    monotone: bool
    quadratic_lb_ok: bool
    beta_est: float


def path_diagnostics(curve, model, safety=1.0):
    """Check that ``xi`` starts at zero, grows along the path and stays above
    ``(beta/4) |destination - gamma(s)|^2``, with ``beta`` the magnitude of
    the first normal eigenvalue at the destination times ``safety``."""
    if curve.truncated or not curve.converged:
        raise ValueError("path_diagnostics needs a converged, untruncated curve")
    if len(curve.s) < 3:
        raise ValueError("path_diagnostics needs at least three samples")
    order = np.arange(len(curve.s))[::-1]
    s_back = curve.s[-1] - curve.s[order]
    xi = curve.values[-1] - curve.values[order]
    dist2 = np.sum((curve.points[order] - curve.destination) ** 2, axis=1)
    loc, evals, _ = _frames(model, curve.destination[None, :], curve.d, curve.use_log)
    beta = abs(float(evals[0, curve.d])) * safety
    monotone = bool(np.all(np.diff(xi) >= -1e-12))
    quad = bool(np.all(xi >= 0.25 * beta * dist2 - 1e-12))
    return PathDiagnostics(s=s_back, xi=xi, monotone=monotone,
                           quadratic_lb_ok=quad, beta_est=beta)


# ---------------------------------------------------------------------------
# Estimator interface


class SubspaceRidgeFinder(TransformerMixin, BaseEstimator):
    """Estimate a ``d``-dimensional density ridge from a point cloud.

    ``fit`` runs the full SuRF pipeline with the training sample as mesh;
    ``transform`` moves arbitrary points onto the fitted ridge by SCMS
    (no denoising).

    Parameters
    ----------
    d : int, default=1
        Ridge dimension.
    bandwidth : float, optional
        KDE bandwidth; Silverman's rule when omitted.
    threshold_frac : float, default=0.05
        Mesh points below this fraction of the maximum mesh density are
        dropped before SCMS.
    use_log : bool, default=True
        Build the projector from the Hessian of ``log p``.
    step_tol, grad_tol : float
        Convergence tolerances.
    max_iter : int, default=500
    n_jobs : int, optional
        Worker threads; results do not depend on it.

    Attributes
    ----------
    kde_ : GaussianKDE
    bandwidth_ : float
    ridge_ : RidgeEstimate
    ridge_points_ : ndarray of shape (n_converged, D)
    """

    def __init__(self, d=1, bandwidth=None, threshold_frac=0.05, use_log=True,
                 step_tol=1e-7, grad_tol=1e-6, max_iter=500, n_jobs=None):
        self.d = d
        self.bandwidth = bandwidth
        self.threshold_frac = threshold_frac
        self.use_log = use_log
        self.step_tol = step_tol
        self.grad_tol = grad_tol
        self.max_iter = max_iter
        self.n_jobs = n_jobs

    def _config(self):
        return SurfConfig(d=self.d, bandwidth=self.bandwidth,
                          threshold_frac=self.threshold_frac,
                          use_log=self.use_log, step_tol=self.step_tol,
                          grad_tol=self.grad_tol, max_iter=self.max_iter)

    def fit(self, X, y=None):
        X = check_points(X, name="X")
        config = self._config()
        if config.d >= X.shape[1]:
            raise ValueError(f"d={config.d} must be smaller than D={X.shape[1]}")
        self.ridge_ = surf(X, config, n_jobs=self.n_jobs)
        self.bandwidth_ = self.ridge_.bandwidth
        self.kde_ = GaussianKDE(bandwidth=self.bandwidth_).fit(X)
        self.ridge_points_ = self.ridge_.ridge_points
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        """SCMS destinations of the rows of ``X``."""
        check_is_fitted(self, "ridge_")
        X = check_points(X, dim=self.n_features_in_, name="X")
        return scms_run(self.kde_, X, self._config(), n_jobs=self.n_jobs).destinations

    def fit_transform(self, X, y=None):
        self.fit(X)
        out = self.ridge_.destinations.copy()
        denoised = self.ridge_.status == DENOISED
        if denoised.any():
            out[denoised] = self.transform(self.ridge_.origins[denoised])
        return out
