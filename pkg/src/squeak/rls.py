"""Ridge leverage scores: exact values and the dictionary-based estimator.

For a dictionary with distinct retained points ``I`` and aggregate selection
weights ``w_j = Q_j / (qbar p_j)``, the bordered selection matrix of the
estimator collapses to ``W^{1/2}`` on ``I + {t+1}`` (the new point enters with
weight 1). Writing ``G`` for the kernel block on those points and
``A = W^{1/2} G W^{1/2}``, the estimate for position ``i`` is::

    (1 + eps) / (alpha * gamma) * (G_ii - a_i^T (A + gamma I)^{-1} a_i / w_i)

with ``a_i`` the ``i``-th column of ``A``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .exceptions import ContractViolation, InputError, NumericalDomainError

PSD_RTOL = 1e-8


@dataclass(frozen=True)
class RlsConfig:
    gamma: float
    epsilon: float = 0.5

    def __post_init__(self):
        if not self.gamma > 0:
            raise InputError("gamma must be positive")
        if not 0 <= self.epsilon < 1:
            raise InputError("epsilon must lie in [0, 1)")

    @property
    def alpha(self) -> float:
        return (1 + self.epsilon) / (1 - self.epsilon)

    @property
    def prefactor(self) -> float:
        # equals (1 - eps) / gamma
        return (1 + self.epsilon) / (self.alpha * self.gamma)


@dataclass(frozen=True)
class RlsEstimate:
    index: int
    value: float


def check_psd(K: np.ndarray, what: str = "kernel matrix") -> np.ndarray:
    """Return the eigenvalues of ``K``; raise if it is not PSD within tolerance."""
    K = np.asarray(K, dtype=float)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise InputError(f"{what} must be square, got shape {K.shape}")
    if K.size == 0:
        return np.zeros(0)
    eig = np.linalg.eigvalsh(K)
    if eig[0] < -PSD_RTOL * max(eig[-1], 0.0) - 1e-300:
        raise NumericalDomainError(f"{what} is not PSD: min eigenvalue {eig[0]:.3e}, max {eig[-1]:.3e}")
    return eig


def exact_rls(K, gamma: float) -> np.ndarray:
    """``tau_i = [K (K + gamma I)^{-1}]_ii`` via a Cholesky solve."""
    if not gamma > 0:
        raise InputError("gamma must be positive")
    K = np.asarray(K, dtype=float)
    check_psd(K)
    t = K.shape[0]
    if t == 0:
        return np.zeros(0)
    factor = linalg.cho_factor(K + gamma * np.eye(t), lower=True)
    X = linalg.cho_solve(factor, K)
    return np.clip(np.diag(X).copy(), 0.0, 1.0)


def effective_dimension(rls) -> float:
    rls = np.asarray(rls, dtype=float)
    if rls.size and (rls.min() < 0 or rls.max() > 1):
        raise InputError("ridge leverage scores must lie in [0, 1]")
    return float(rls.sum())


def _weighted_core(gram: np.ndarray, weights: np.ndarray, gamma: float):
    sw = np.sqrt(weights)
    A = sw[:, None] * gram * sw[None, :]
    B = A.copy()
    B.flat[:: A.shape[0] + 1] += gamma
    return A, B


def estimate_all(gram, weights, config: RlsConfig) -> np.ndarray:
    """Estimates for every position of ``gram`` at once.

    ``gram`` is the kernel block over retained points followed by the new
    point; ``weights`` the matching aggregate selection weights (1 for the new
    point). Uses ``G_ii - a_i^T B^{-1} a_i / w_i = gamma (1 - gamma [B^{-1}]_ii) / w_i``
    so that one factorization plus its inverse serves all targets.
    """
    gram = np.asarray(gram, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if gram.shape != (weights.size, weights.size):
        raise InputError("gram and weights sizes disagree")
    if weights.size == 0:
        return np.zeros(0)
    if np.any(weights <= 0):
        raise ContractViolation("selection weights must be positive")
    _, B = _weighted_core(gram, weights, config.gamma)
    chol, info = linalg.lapack.dpotrf(B, lower=1, clean=0, overwrite_a=1)
    if info != 0:
        raise NumericalDomainError(f"weighted dictionary Gram not positive definite (info={info})")
    inv, info = linalg.lapack.dpotri(chol, lower=1, overwrite_c=1)
    if info != 0:
        raise NumericalDomainError(f"inverse of weighted dictionary Gram failed (info={info})")
    residual = config.gamma * (1.0 - config.gamma * np.diag(inv)) / weights
    return np.clip(config.prefactor * residual, 0.0, 1.0)


def estimate_rls(dictionary, target: int, new_point, new_index: int, kernel,
                 config: RlsConfig) -> RlsEstimate:
    """Estimate the RLS of ``target`` after point ``new_index`` arrives.

    Only kernel entries among retained points, ``target`` and the new point
    are evaluated. ``target`` must be retained in ``dictionary`` or equal
    ``new_index``; dropped columns are never re-estimated.
    """
    if new_index != dictionary.step + 1:
        raise ContractViolation(f"new point must be {dictionary.step + 1}, got {new_index}")
    positions = {int(j): p for p, j in enumerate(dictionary.indices)}
    if target == new_index:
        pos = len(positions)
    elif target in positions:
        pos = positions[target]
    else:
        raise ContractViolation(f"index {target} is not in the dictionary (dropped or never kept)")
    new_point = np.atleast_2d(np.asarray(new_point, dtype=float))
    pts = new_point if dictionary.size == 0 else np.vstack([dictionary.points, new_point])
    gram = kernel.cross(pts, pts)
    weights = np.append(dictionary.weights(), 1.0)
    return RlsEstimate(target, float(estimate_single(gram, weights, pos, config)))


def estimate_single(gram, weights, pos: int, config: RlsConfig) -> float:
    """Literal quadratic-form evaluation for one position (a second route to :func:`estimate_all`)."""
    gram = np.asarray(gram, dtype=float)
    weights = np.asarray(weights, dtype=float)
    A, B = _weighted_core(gram, weights, config.gamma)
    factor = linalg.cho_factor(B, lower=True)
    v = A[:, pos] / np.sqrt(weights[pos])
    quad = v @ linalg.cho_solve(factor, v)
    return float(np.clip(config.prefactor * (gram[pos, pos] - quad), 0.0, 1.0))
