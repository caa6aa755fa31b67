"""Symmetric eigendecomposition, normal-space projectors and the eigengap
and path-smoothness diagnostics."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100
SYMMETRY_TOL = 1e-10


def _off_norm(A):
    off = A * (1.0 - np.eye(A.shape[-1]))
    return np.sqrt(np.sum(off * off, axis=(-2, -1)))


def jacobi_eigh(A, tol=JACOBI_TOL, max_sweeps=JACOBI_MAX_SWEEPS):
    """Eigen-decompose a stack of symmetric matrices by cyclic Jacobi sweeps.

    Each matrix is rotated until its off-diagonal Frobenius norm is at most
    ``tol`` times its Frobenius norm. Matrices that are already converged
    receive identity rotations, so the result for one matrix never depends
    on the others in the stack.

    Parameters
    ----------
    A : array-like of shape (..., D, D)

    Returns
    -------
    eigenvalues : ndarray of shape (..., D)
        Sorted in descending order.
    eigenvectors : ndarray of shape (..., D, D)
        Columns are unit eigenvectors, sign-fixed so that the entry of
        largest magnitude in each column is positive.
    """
    A = np.array(A, dtype=float)
    if A.ndim < 2 or A.shape[-1] != A.shape[-2]:
        raise ValueError(f"expected square matrices, got shape {A.shape}")
    batch_shape = A.shape[:-2]
    D = A.shape[-1]
    A = A.reshape(-1, D, D)
    A = 0.5 * (A + np.swapaxes(A, -1, -2))
    V = np.broadcast_to(np.eye(D), A.shape).copy()
    scale = np.sqrt(np.sum(A * A, axis=(-2, -1)))

    for _ in range(max_sweeps):
        active = _off_norm(A) > tol * scale
        if not active.any():
            break
        for p in range(D - 1):
            for q in range(p + 1, D):
                apq = A[:, p, q]
                rotate = active & (apq != 0.0)
                safe = np.where(rotate, apq, 1.0)
                with np.errstate(over="ignore"):
                    tau = (A[:, q, q] - A[:, p, p]) / (2.0 * safe)
                    t = np.where(tau >= 0, 1.0, -1.0) / (np.abs(tau) + np.sqrt(1.0 + tau * tau))
                c = np.where(rotate, 1.0 / np.sqrt(1.0 + t * t), 1.0)
                s = np.where(rotate, t * c, 0.0)
                # A <- J^T A J with J the (p, q) Givens rotation
                colp, colq = A[:, :, p].copy(), A[:, :, q].copy()
                A[:, :, p] = c[:, None] * colp - s[:, None] * colq
                A[:, :, q] = s[:, None] * colp + c[:, None] * colq
                rowp, rowq = A[:, p, :].copy(), A[:, q, :].copy()
                A[:, p, :] = c[:, None] * rowp - s[:, None] * rowq
                A[:, q, :] = s[:, None] * rowp + c[:, None] * rowq
                vp, vq = V[:, :, p].copy(), V[:, :, q].copy()
                V[:, :, p] = c[:, None] * vp - s[:, None] * vq
                V[:, :, q] = s[:, None] * vp + c[:, None] * vq

    evals = np.einsum("...ii->...i", A).copy()
    order = np.argsort(-evals, axis=-1, kind="stable")
    evals = np.take_along_axis(evals, order, axis=-1)
    V = np.take_along_axis(V, order[:, None, :], axis=-1)
    # largest-magnitude entry of each eigenvector made positive
    pivot = np.argmax(np.abs(V), axis=1)
    signs = np.sign(np.take_along_axis(V, pivot[:, None, :], axis=1))
    V = V * np.where(signs == 0, 1.0, signs)
    return evals.reshape(batch_shape + (D,)), V.reshape(batch_shape + (D, D))


@dataclass(frozen=True)
class SpectralFrame:
    """Local eigenstructure of a Hessian relative to a ridge dimension ``d``.

    ``V`` spans the normal space (eigenvectors of the ``D - d`` smallest
    eigenvalues), ``L = V V^T`` projects onto it and ``G = L g`` is the
    projected gradient.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    V: np.ndarray
    L: np.ndarray
    G: np.ndarray
    eigengap: float
    lambda_next: float
    d: int

    @property
    def L_perp(self):
        return np.eye(self.L.shape[0]) - self.L


def _check_symmetric(H):
    H = np.asarray(H, dtype=float)
    if H.ndim < 2 or H.shape[-1] != H.shape[-2]:
        raise ValueError(f"Hessian must be square, got shape {H.shape}")
    asym = np.max(np.abs(H - np.swapaxes(H, -1, -2)), initial=0.0)
    scale = np.max(np.abs(H), initial=0.0)
    if asym > SYMMETRY_TOL * max(scale, 1.0):
        raise ValueError(f"matrix is not symmetric (max asymmetry {asym:.3g})")
    return H


def _check_d(d, D):
    if not (isinstance(d, (int, np.integer)) and 0 <= d < D):
        raise ValueError(f"ridge dimension d must be an integer in [0, {D - 1}], got {d!r}")
    return int(d)


def projector_batch(H, d):
    """Normal-space projectors for a stack of Hessians.

    Returns ``(eigenvalues, L)`` with ``L`` of shape ``(m, D, D)``.
    """
    evals, U = jacobi_eigh(H)
    D = evals.shape[-1]
    if d == 0:
        L = np.broadcast_to(np.eye(D), U.shape).copy()
    else:
        V = U[..., :, d:]
        L = V @ np.swapaxes(V, -1, -2)
    return evals, L


def spectral_frame(g, H, d):
    """Spectral frame of the Hessian ``H`` with gradient ``g``.

    ``d = 0`` gives ``L = I`` and ``G = g`` (modes), with an infinite
    eigengap since there is no eigenvalue above the normal block.
    """
    H = _check_symmetric(H)
    if H.ndim != 2:
        raise ValueError("spectral_frame expects a single D x D matrix")
    D = H.shape[0]
    g = np.asarray(g, dtype=float).reshape(D)
    d = _check_d(d, D)
    evals, U = jacobi_eigh(H)
    V = U[:, d:]
    if d == 0:
        L = np.eye(D)
        G = g.copy()
        gap = np.inf
    else:
        L = V @ V.T
        G = L @ g
        gap = float(evals[d - 1] - evals[d])
    return SpectralFrame(eigenvalues=evals, eigenvectors=U, V=V, L=L, G=G,
                         eigengap=gap, lambda_next=float(evals[d]), d=d)


@dataclass(frozen=True)
class ConditionReport:
    a1_holds: bool
    a2_holds: bool
    beta_used: float
    lambda_next: float
    eigengap: float
    a2_lhs: float
    a2_rhs: float


def check_conditions(info, d, beta):
    """Evaluate the eigengap and path-smoothness conditions at one point.

    ``info`` must carry the Hessian derivative (``hessian_deriv``);
    ``||H'||_max`` is its largest absolute entry.
    """
    if info.hessian_deriv is None:
        raise ValueError("check_conditions needs the Hessian derivative; "
                         "evaluate with with_hprime=True")
    if not beta > 0:
        raise ValueError("beta must be positive")
    frame = spectral_frame(info.gradient, info.hessian, d)
    D = frame.L.shape[0]
    tangential = frame.L_perp @ np.asarray(info.gradient, dtype=float)
    lhs = float(np.linalg.norm(tangential) * np.max(np.abs(info.hessian_deriv)))
    rhs = float(beta ** 2 / (2.0 * D ** 1.5))
    a1 = bool(frame.lambda_next < -beta and frame.eigengap > beta)
    return ConditionReport(a1_holds=a1, a2_holds=bool(lhs < rhs),
                           beta_used=float(beta),
                           lambda_next=frame.lambda_next,
                           eigengap=frame.eigengap, a2_lhs=lhs, a2_rhs=rhs)


def perturbation_bounds(H, Htilde, d):
    """Both sides of the Weyl and Davis-Kahan inequalities.

    Returns
    -------
    weyl_lhs, weyl_rhs, dk_lhs, dk_rhs : float
        ``max_i |lambda_i(H) - lambda_i(Htilde)| <= ||H - Htilde||`` and
        ``||L - Ltilde|| <= ||H - Htilde||_F / gap(H)``, with ``L`` the
        projector on the ``D - d`` smallest eigenvalues.
    """
    H = _check_symmetric(H)
    Ht = _check_symmetric(Htilde)
    if H.shape != Ht.shape or H.ndim != 2:
        raise ValueError("H and Htilde must be D x D matrices of the same size")
    D = H.shape[0]
    d = _check_d(d, D)
    if d == 0:
        raise ValueError("d must be >= 1 for a nontrivial projector")
    # one batched call; each matrix's result is independent of the other
    (ev, evt), (U, Ut) = jacobi_eigh(np.stack([H, Ht]))
    gap = ev[d - 1] - ev[d]
    if not gap > 0:
        raise ValueError("gap degenerate: H has a repeated eigenvalue at the split")
    E = H - Ht
    weyl_lhs = float(np.max(np.abs(ev - evt)))
    weyl_rhs = float(np.linalg.norm(E, 2))
    L = U[:, d:] @ U[:, d:].T
    Lt = Ut[:, d:] @ Ut[:, d:].T
    dk_lhs = float(np.linalg.norm(L - Lt, 2))
    dk_rhs = float(np.linalg.norm(E, "fro") / gap)
    return weyl_lhs, weyl_rhs, dk_lhs, dk_rhs
