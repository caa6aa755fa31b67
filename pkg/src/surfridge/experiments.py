"""Scaling studies: estimation rate in n, surrogate bias in sigma,
bandwidth sweeps and ridge stability under density perturbation.

Every study returns an :class:`ExperimentReport` whose JSON form is a pure
function of its inputs (wall-clock timings are kept out of the JSON
unless explicitly requested).
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import stats

from .density import GaussianMixtureDensity, manifold_oracle
from .geometry import (Circle, PointSet, dilation_components, hausdorff,
                       hausdorff_to_manifold, nearest_distances)
from .ridge import SurfConfig, scms_run, surf
from .synth import sample

#: solver settings used on the analytic oracles
ORACLE_CONFIG = SurfConfig(d=1, use_log=True, step_tol=1e-12, grad_tol=1e-10,
                           max_iter=2000)


@dataclass
class ExperimentReport:
    """Result of a scaling study.

    ``cells`` holds one record per (setting, replication); ``summary`` one
    record per setting with the median and quartiles over successful cells.
    ``slope``/``slope_stderr`` come from least squares of log median
    against log setting, fitted only with three or more usable settings.
    """

    kind: str
    parameter: str
    grid: list
    cells: list
    summary: list
    slope: float = float("nan")
    slope_stderr: float = float("nan")
    config: dict = field(default_factory=dict)
    notes: dict = field(default_factory=dict)

    def medians(self):
        return np.array([s["median"] for s in self.summary], dtype=float)

    def to_dict(self, include_timing=False):
        cells = []
        for cell in self.cells:
            cell = dict(cell)
            if not include_timing:
                cell.pop("runtime", None)
            cells.append(cell)
        return {"kind": self.kind, "parameter": self.parameter,
                "grid": list(self.grid), "cells": cells,
                "summary": self.summary, "slope": self.slope,
                "slope_stderr": self.slope_stderr, "config": self.config,
                "notes": self.notes}

    def csv_rows(self):
        """One row per cell: setting, replication, seed, status, value."""
        header = [self.parameter, "replication", "seed", "status", "value"]
        rows = [[c["setting"], c["replication"], c.get("seed", ""), c["status"],
                 c["value"]] for c in self.cells]
        return header, rows


def _summarise(grid, cells):
    summary = []
    for setting in grid:
        vals = np.array([c["value"] for c in cells
                         if c["setting"] == setting and c["status"] == "ok"], dtype=float)
        n_fail = sum(1 for c in cells if c["setting"] == setting and c["status"] != "ok")
        if vals.size:
            q25, med, q75 = np.percentile(vals, [25, 50, 75])
        else:
            q25 = med = q75 = float("nan")
        summary.append({"setting": setting, "median": float(med), "q25": float(q25),
                        "q75": float(q75), "n_ok": int(vals.size), "n_failed": n_fail})
    return summary


def fit_loglog_slope(x, y):
    """Least-squares slope of ``log y`` on ``log x`` and its standard error."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    ok = np.isfinite(y) & (y > 0)
    if ok.sum() < 3:
        return float("nan"), float("nan")
    fit = stats.linregress(np.log(x[ok]), np.log(y[ok]))
    return float(fit.slope), float(fit.stderr)


def _strictly_monotone(grid, increasing):
    diffs = np.diff(np.asarray(grid, dtype=float))
    return bool(np.all(diffs > 0) if increasing else np.all(diffs < 0))


def default_restrict_radius(manifold, sigma):
    """Three times the expected bias scale: ``3 sigma^2 / r`` for a circle,
    ``3 sigma`` otherwise."""
    if isinstance(manifold, Circle):
        return 3.0 * sigma ** 2 / manifold.radius
    return 3.0 * sigma


def oracle_ridge(manifold, sigma, m=1024, weight=None, d=1, use_log=True,
                 probe_count=1000, n_jobs=None):
    """Ridge points of the smoothed manifold density, found by SCMS from
    probes on the manifold."""
    oracle = manifold_oracle(manifold, sigma, m, weight=weight)
    config = replace(ORACLE_CONFIG, d=d, use_log=use_log)
    run = scms_run(oracle, manifold.probes(probe_count), config, n_jobs=n_jobs)
    return run.ridge_points


def rate_experiment(n_grid, replications, model, config, reference="oracle_ridge",
                    delta_restrict=None, probe_count=1000, oracle_m=1024,
                    n_jobs=None):
    """Hausdorff error of SuRF against a reference set as the sample grows.

    Replication ``r`` uses seed ``model.seed + r`` for every ``n``. With
    ``reference="oracle_ridge"`` the reference is the ridge of the manifold
    density smoothed by noise and kernel together (standard deviation
    ``sqrt(sigma^2 + h^2)``), which needs a fixed ``config.bandwidth`` and
    no clutter; ``reference="manifold"`` compares with the manifold itself.
    Estimated ridge points farther than ``delta_restrict`` from the
    reference are discarded before measuring.
    """
    n_grid = [int(n) for n in n_grid]
    if len(n_grid) < 3 or not _strictly_monotone(n_grid, True):
        raise ValueError("n_grid must be strictly increasing with at least 3 values")
    if replications < 1:
        raise ValueError("replications must be positive")
    M = model.manifold
    if delta_restrict is None:
        delta_restrict = default_restrict_radius(M, model.sigma)
    if reference == "oracle_ridge":
        if config.bandwidth is None:
            raise ValueError("the oracle ridge reference needs a fixed bandwidth")
        if model.eta != 1:
            raise ValueError("the oracle ridge reference needs eta = 1")
        smooth = float(np.hypot(model.sigma, config.bandwidth))
        ref_pts = oracle_ridge(M, smooth, oracle_m, weight=model.weight(),
                               d=config.d, use_log=config.use_log,
                               probe_count=probe_count, n_jobs=n_jobs)
        ref = PointSet(ref_pts)
        measure = lambda pts: hausdorff(ref_pts, pts)
    elif reference == "manifold":
        ref = M
        measure = lambda pts: hausdorff_to_manifold(pts, M, probe_count)
    else:
        raise ValueError(f"unknown reference {reference!r}")

    cells = []
    for n in n_grid:
        for rep in range(replications):
            seed = model.seed + rep
            t0 = time.perf_counter()
            X = sample(replace(model, seed=seed), n)
            cell = {"setting": n, "replication": rep, "seed": seed}
            try:
                est = surf(X, config, n_jobs=n_jobs)
            except ValueError as exc:
                cell.update(status="failed", value=float("nan"), reason=str(exc))
            else:
                pts = est.ridge_points
                near = pts[ref.distances(pts) <= delta_restrict] if len(pts) else pts
                if len(near) == 0:
                    cell.update(status="failed", value=float("nan"),
                                reason="no ridge points near the reference")
                else:
                    cell.update(status="ok", value=measure(near),
                                n_ridge=int(len(pts)), n_restricted=int(len(near)))
            cell["runtime"] = time.perf_counter() - t0
            cells.append(cell)
    summary = _summarise(n_grid, cells)
    slope, se = fit_loglog_slope(n_grid, [s["median"] for s in summary])
    echo = {"model": model.to_dict(), "surf": config.to_dict(),
            "reference": reference, "delta_restrict": delta_restrict,
            "probe_count": probe_count, "oracle_m": oracle_m,
            "replications": replications,
            "seeds": [model.seed + r for r in range(replications)]}
    return ExperimentReport(kind="rate", parameter="n", grid=n_grid, cells=cells,
                            summary=summary, slope=slope, slope_stderr=se, config=echo)


def bias_experiment(sigma_grid, manifold, m_quadrature=2048, d=1, use_log=True,
                    probe_count=512, weight=None, config=None, n_jobs=None):
    """Distance between a manifold and the ridge of its Gaussian blur.

    For each ``sigma`` the blurred density is discretised with
    ``m_quadrature`` components, SCMS is started from ``probe_count``
    probes on the manifold, and the Hausdorff distance between the
    destinations and the manifold is recorded. Any non-converged start
    marks the cell failed. For circles, each cell also reports the mean
    and maximum radius of the recovered ridge.
    """
    sigma_grid = [float(s) for s in sigma_grid]
    if len(sigma_grid) < 3 or not _strictly_monotone(sigma_grid, False):
        raise ValueError("sigma_grid must be strictly decreasing with at least 3 values")
    config = config or replace(ORACLE_CONFIG, d=d, use_log=use_log)
    starts = manifold.probes(probe_count)
    cells = []
    for sigma in sigma_grid:
        t0 = time.perf_counter()
        oracle = manifold_oracle(manifold, sigma, m_quadrature, weight=weight)
        run = scms_run(oracle, starts, config, n_jobs=n_jobs)
        cell = {"setting": sigma, "replication": 0}
        if not run.converged.all():
            cell.update(status="failed", value=float("nan"),
                        reason=f"{int((~run.converged).sum())} starts did not converge")
        else:
            dest = run.destinations
            cell.update(status="ok",
                        value=hausdorff_to_manifold(dest, manifold, probe_count),
                        max_lambda_next=float(np.max(run.lambda_next)))
            if isinstance(manifold, Circle):
                rel = dest - np.asarray(manifold.center)
                radii = np.hypot(rel[:, 0], rel[:, 1])
                cell.update(mean_radius=float(radii.mean()), max_radius=float(radii.max()))
        cell["runtime"] = time.perf_counter() - t0
        cells.append(cell)
    summary = _summarise(sigma_grid, cells)
    slope, se = fit_loglog_slope(sigma_grid, [s["median"] for s in summary])
    echo = {"manifold": manifold.to_dict(), "m_quadrature": m_quadrature,
            "probe_count": probe_count, "weighted": weight is not None,
            "scms": config.to_dict()}
    return ExperimentReport(kind="bias", parameter="sigma", grid=sigma_grid,
                            cells=cells, summary=summary, slope=slope,
                            slope_stderr=se, config=echo)


def bandwidth_sweep(h_grid, data, config, eps_connect, manifold=None,
                    probe_count=1000, n_jobs=None):
    """Run SuRF at each bandwidth and report ridge connectivity.

    Each cell records the number of connected components of the
    ``eps_connect``-dilation of the ridge points and, when ``manifold`` is
    given, the Hausdorff distance to it.
    """
    h_grid = [float(h) for h in h_grid]
    if len(h_grid) < 3:
        raise ValueError("h_grid needs at least 3 values")
    cells = []
    for h in h_grid:
        t0 = time.perf_counter()
        cell = {"setting": h, "replication": 0}
        try:
            est = surf(data, replace(config, bandwidth=h), n_jobs=n_jobs)
        except ValueError as exc:
            cell.update(status="failed", value=float("nan"), reason=str(exc))
        else:
            pts = est.ridge_points
            if len(pts) == 0:
                cell.update(status="failed", value=float("nan"),
                            reason="no converged ridge points")
            else:
                comps = dilation_components(pts, eps_connect)
                cell.update(status="ok", value=float(comps), components=comps,
                            n_ridge=int(len(pts)))
                if manifold is not None:
                    cell["hausdorff"] = hausdorff_to_manifold(pts, manifold, probe_count)
        cell["runtime"] = time.perf_counter() - t0
        cells.append(cell)
    # fragmentation should not decrease as h shrinks; inversions are recorded
    counts = [c.get("components") for c in cells]
    known = [(h, k) for h, k in sorted(zip(h_grid, counts)) if k is not None]
    inversions = sum(1 for (_, a), (_, b) in zip(known, known[1:]) if b > a)
    echo = {"surf": config.to_dict(), "eps_connect": eps_connect,
            "manifold": manifold.to_dict() if manifold is not None else None,
            "probe_count": probe_count, "n": int(len(data))}
    return ExperimentReport(kind="sweep", parameter="bandwidth", grid=h_grid,
                            cells=cells, summary=_summarise(h_grid, cells),
                            config=echo, notes={"component_inversions": inversions})


def stability_experiment(delta_grid, manifold, sigma, m=512, seed=0,
                         probe_count=256, config=None, n_jobs=None):
    """Ridge displacement under multiplicative jitter of the oracle weights.

    The perturbed density reweights component ``j`` by ``1 + delta * u_j``
    with fixed ``u_j ~ Unif(-1, 1)`` drawn from ``seed``; each cell is the
    Hausdorff distance between the two ridge point sets reached by SCMS
    from the same starts.
    """
    config = config or ORACLE_CONFIG
    base = manifold_oracle(manifold, sigma, m)
    u = np.random.default_rng(seed).uniform(-1.0, 1.0, size=len(base.weights))
    starts = manifold.probes(probe_count)
    ref = scms_run(base, starts, config, n_jobs=n_jobs)
    cells = []
    for delta in delta_grid:
        t0 = time.perf_counter()
        w = base.weights * (1.0 + float(delta) * u)
        w = w / w.sum()
        pert = GaussianMixtureDensity(w, base.means, sigmas=base.sigmas)
        run = scms_run(pert, starts, config, n_jobs=n_jobs)
        cell = {"setting": float(delta), "replication": 0, "seed": seed}
        ok = ref.converged & run.converged
        if not ok.all():
            cell.update(status="failed", value=float("nan"),
                        reason=f"{int((~ok).sum())} starts did not converge")
        else:
            cell.update(status="ok", value=hausdorff(ref.destinations, run.destinations))
        cell["runtime"] = time.perf_counter() - t0
        cells.append(cell)
    grid = [float(x) for x in delta_grid]
    summary = _summarise(grid, cells)
    slope, se = (fit_loglog_slope(grid, [s["median"] for s in summary])
                 if len(grid) >= 3 else (float("nan"), float("nan")))
    echo = {"manifold": manifold.to_dict(), "sigma": sigma, "m": m, "seed": seed,
            "probe_count": probe_count, "scms": config.to_dict()}
    return ExperimentReport(kind="stability", parameter="delta", grid=grid,
                            cells=cells, summary=summary, slope=slope,
                            slope_stderr=se, config=echo)
