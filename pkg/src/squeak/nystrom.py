"""Regularized Nyström reconstruction, kernel ridge solves and fixed-design risk.

A sketch over ``m`` distinct retained columns with weights ``W`` is held as
the ``t x m`` factor ``F = C W^{1/2} L^{-T}`` where ``C = K[:, I]`` and
``L L^T = W^{1/2} K_II W^{1/2} + gamma I``. Then ``K~ = F F^T`` and all solves
run in ``O(t m^2 + m^3)`` time without forming a ``t x t`` matrix.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import linalg

from .exceptions import InputError
from .rls import PSD_RTOL, check_psd


@dataclass(frozen=True)
class NystromSketch:
    indices: np.ndarray   # 1-based stream positions of the retained columns
    weights: np.ndarray
    cross: np.ndarray     # C = K_t[:, indices], shape (t, m)
    core_factor: np.ndarray  # lower Cholesky factor of W^1/2 K_II W^1/2 + gamma I
    gamma: float

    @property
    def t(self) -> int:
        return self.cross.shape[0]

    @property
    def m(self) -> int:
        return self.cross.shape[1]

    def factor(self) -> np.ndarray:
        """``F`` with ``K~ = F F^T``."""
        if self.m == 0:
            return np.zeros((self.t, 0))
        scaled = self.cross * np.sqrt(self.weights)[None, :]
        return linalg.solve_triangular(self.core_factor, scaled.T, lower=True).T

    def materialize(self) -> np.ndarray:
        """Dense ``K~`` (verification only)."""
        F = self.factor()
        return F @ F.T


def _sketch(indices, weights, cross, block, gamma) -> NystromSketch:
    if not gamma > 0:
        raise InputError("gamma must be positive")
    indices = np.asarray(indices, dtype=np.int64)
    weights = np.asarray(weights, dtype=float)
    if indices.size:
        check_psd(block, "dictionary Gram submatrix")
        sw = np.sqrt(weights)
        core = sw[:, None] * block * sw[None, :] + gamma * np.eye(indices.size)
        chol = linalg.cholesky(core, lower=True)
    else:
        chol = np.zeros((0, 0))
    return NystromSketch(indices, weights, np.asarray(cross, dtype=float), chol, float(gamma))


def build_sketch(dictionary, kernel, points, gamma: float) -> NystromSketch:
    """Sketch of ``K_t`` for the stream prefix ``points`` (``t`` rows)."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if dictionary.size and dictionary.indices[-1] > points.shape[0]:
        raise InputError("dictionary refers to points beyond the given prefix")
    if dictionary.size == 0:
        return _sketch([], [], np.zeros((points.shape[0], 0)), np.zeros((0, 0)), gamma)
    kept = dictionary.points if dictionary.points is not None else points[dictionary.indices - 1]
    cross = kernel.cross(points, kept)
    block = cross[dictionary.indices - 1]
    return _sketch(dictionary.indices, dictionary.weights(), cross, block, gamma)


def sketch_from_matrix(K, dictionary, gamma: float) -> NystromSketch:
    """Sketch from a materialized kernel matrix (baselines and tests)."""
    K = np.asarray(K, dtype=float)
    idx = dictionary.indices - 1
    return _sketch(dictionary.indices, dictionary.weights(), K[:, idx], K[np.ix_(idx, idx)], gamma)


def literal_nystrom(K, S, gamma: float) -> np.ndarray:
    """``K S (S^T K S + gamma I)^{-1} S^T K`` with an explicit selection matrix."""
    K = np.asarray(K, dtype=float)
    S = np.asarray(S, dtype=float)
    if S.shape[1] == 0:
        return np.zeros_like(K)
    KS = K @ S
    inner = S.T @ KS + gamma * np.eye(S.shape[1])
    return KS @ linalg.solve(inner, KS.T, assume_a="pos")


@dataclass(frozen=True)
class GammaCheck:
    holds: bool
    margin: float
    lower_min_eig: float
    upper_min_eig: float


class GammaChecker:
    """Reusable check against a fixed ``K``: the ``K``-side bound is computed once."""

    def __init__(self, K, gamma: float, epsilon: float):
        K = np.asarray(K, dtype=float)
        if K.ndim != 2 or K.shape[0] != K.shape[1]:
            raise InputError("K must be square")
        if not 0 <= epsilon < 1:
            raise InputError("epsilon must lie in [0, 1)")
        self.K = K
        t = K.shape[0]
        if t == 0:
            self.tol, self.bound = 0.0, K
            return
        self.tol = PSD_RTOL * max(np.linalg.eigvalsh(K)[-1], 0.0)
        smoother = linalg.cho_solve(linalg.cho_factor(K + gamma * np.eye(t), lower=True), K)
        self.bound = gamma / (1 - epsilon) * (smoother + smoother.T) / 2

    def __call__(self, K_tilde) -> GammaCheck:
        K_tilde = np.asarray(K_tilde, dtype=float)
        if K_tilde.shape != self.K.shape:
            raise InputError("K and K_tilde must be square and of equal size")
        if self.K.shape[0] == 0:
            return GammaCheck(True, 0.0, 0.0, 0.0)
        diff = self.K - K_tilde
        diff = (diff + diff.T) / 2
        lo = float(linalg.eigvalsh(diff, subset_by_index=[0, 0])[0])
        hi = float(linalg.eigvalsh(self.bound - diff, subset_by_index=[0, 0])[0])
        return GammaCheck(lo >= -self.tol and hi >= -self.tol, min(lo, hi), lo, hi)


def gamma_approx_check(K, K_tilde, gamma: float, epsilon: float) -> GammaCheck:
    """Test ``0 <= K - K~ <= gamma / (1 - eps) * K (K + gamma I)^{-1}`` in the PSD order.

    ``margin`` is the smaller of the two minimum eigenvalues; the check holds
    when both exceed ``-1e-8 * max_eig(K)``.
    """
    return GammaChecker(K, gamma, epsilon)(K_tilde)


@dataclass(frozen=True)
class WeightVector:
    values: np.ndarray
    regularization: float
    kind: str  # "exact" | "nystrom"

    def __len__(self):
        return self.values.size


def solve_exact(K, y, mu: float) -> WeightVector:
    """``(K + mu I)^{-1} y`` by Cholesky."""
    if not mu > 0:
        raise InputError("mu must be positive")
    K = np.asarray(K, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if K.shape != (y.size, y.size):
        raise InputError("K and y sizes disagree")
    w = linalg.cho_solve(linalg.cho_factor(K + mu * np.eye(y.size), lower=True), y)
    return WeightVector(w, float(mu), "exact")


def solve_nystrom(sketch: NystromSketch, y, mu: float) -> WeightVector:
    """``(K~ + mu I)^{-1} y = (y - F (F^T F + mu I)^{-1} F^T y) / mu``."""
    if not mu > 0:
        raise InputError("mu must be positive")
    y = np.asarray(y, dtype=float).ravel()
    if y.size != sketch.t:
        raise InputError("y length must equal the sketch size t")
    if sketch.m == 0:
        return WeightVector(y / mu, float(mu), "nystrom")
    F = sketch.factor()
    small = F.T @ F + mu * np.eye(sketch.m)
    coef = linalg.cho_solve(linalg.cho_factor(small, lower=True), F.T @ y)
    return WeightVector((y - F @ coef) / mu, float(mu), "nystrom")


def hat_matrix(K_fit, mu: float, K_predict: Optional[np.ndarray] = None) -> np.ndarray:
    """``K_predict (K_fit + mu I)^{-1}``: maps labels to predictions at the inputs."""
    K_fit = np.asarray(K_fit, dtype=float)
    K_predict = K_fit if K_predict is None else np.asarray(K_predict, dtype=float)
    factor = linalg.cho_factor(K_fit + mu * np.eye(K_fit.shape[0]), lower=True)
    # (K_fit + mu I) is symmetric, so K_p A^{-1} = (A^{-1} K_p^T)^T
    return linalg.cho_solve(factor, K_predict.T).T


def fixed_design_risk(H, f_star, noise_stddev: float) -> float:
    """``E ||f* - H (f* + eta)||^2 = ||(I - H) f*||^2 + sigma^2 ||H||_F^2``."""
    if f_star is None:
        raise InputError("fixed-design risk needs the true function values")
    if noise_stddev is None or noise_stddev < 0:
        raise InputError("noise_stddev must be a nonnegative number")
    H = np.asarray(H, dtype=float)
    f_star = np.asarray(f_star, dtype=float).ravel()
    bias = f_star - H @ f_star
    return float(bias @ bias + noise_stddev**2 * np.sum(H * H))


def risks(K, K_tilde, f_star, noise_stddev: float, mu: float) -> dict:
    """Exact risk and both Nyström variants (predict with ``K~`` or with ``K``)."""
    return {
        "risk_exact": fixed_design_risk(hat_matrix(K, mu), f_star, noise_stddev),
        "risk_nystrom": fixed_design_risk(hat_matrix(K_tilde, mu), f_star, noise_stddev),
        "risk_nystrom_kpred": fixed_design_risk(hat_matrix(K_tilde, mu, K), f_star, noise_stddev),
    }
