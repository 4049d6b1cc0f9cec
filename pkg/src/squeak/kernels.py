"""Kernel functions, datasets and incremental kernel columns.

All pairwise evaluations go through :func:`_pairwise`, which evaluates each
pair with the same arithmetic regardless of whether it is requested as part
of a full Gram matrix, a bordering column or a dictionary block. Streaming
code and oracle code therefore see bit-identical kernel entries.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .exceptions import InputError

FAMILIES = ("gaussian", "linear", "polynomial")

# rows per block when broadcasting (rows, cols, d) differences
_CHUNK_ELEMS = 1 << 22


@dataclass(frozen=True)
class KernelFunction:
    """A positive definite kernel.

    Parameters
    ----------
    family : {"gaussian", "linear", "polynomial"}
    bandwidth : float
        Gaussian length scale, ``exp(-|x - y|^2 / (2 bandwidth^2))``.
    degree, offset
        Polynomial kernel ``(x.y + offset) ** degree``.
    """

    family: str
    bandwidth: float = 1.0
    degree: int = 2
    offset: float = 1.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InputError(f"unknown kernel family {self.family!r}; expected one of {FAMILIES}")
        if self.family == "gaussian" and not self.bandwidth > 0:
            raise InputError("gaussian bandwidth must be positive")
        if self.family == "polynomial":
            if int(self.degree) != self.degree or self.degree < 1:
                raise InputError("polynomial degree must be a positive integer")
            if self.offset < 0:
                raise InputError("polynomial offset must be nonnegative")

    @classmethod
    def gaussian(cls, bandwidth: float = 1.0) -> "KernelFunction":
        return cls("gaussian", bandwidth=bandwidth)

    @classmethod
    def linear(cls) -> "KernelFunction":
        return cls("linear")

    @classmethod
    def polynomial(cls, degree: int = 2, offset: float = 1.0) -> "KernelFunction":
        return cls("polynomial", degree=degree, offset=offset)

    @classmethod
    def parse(cls, spec: str) -> "KernelFunction":
        """Build a kernel from ``"gaussian:bandwidth=2"``-style strings."""
        name, _, rest = spec.partition(":")
        params = _parse_params(rest)
        try:
            if name == "gaussian":
                return cls.gaussian(float(params.pop("bandwidth", 1.0)))
            if name == "linear":
                return cls.linear()
            if name == "polynomial":
                return cls.polynomial(int(params.pop("degree", 2)), float(params.pop("offset", 1.0)))
        except ValueError as exc:
            raise InputError(f"bad kernel spec {spec!r}: {exc}") from exc
        raise InputError(f"unknown kernel family {name!r}")

    def to_spec(self) -> str:
        if self.family == "gaussian":
            return f"gaussian:bandwidth={self.bandwidth!r}"
        if self.family == "polynomial":
            return f"polynomial:degree={self.degree},offset={self.offset!r}"
        return "linear"

    def __call__(self, x, y) -> float:
        return eval_kernel(self, x, y)

    def cross(self, X, Y) -> np.ndarray:
        """Matrix of ``K(X[a], Y[b])``."""
        return _pairwise(self, np.atleast_2d(X), np.atleast_2d(Y))

    def diag(self, X) -> np.ndarray:
        """``K(x, x)`` for every row of ``X``."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return _from_components(self, np.sum(X * X, axis=-1), np.sum(X * X, axis=-1), zero=True)


def _parse_params(text: str) -> dict:
    params = {}
    for item in filter(None, (s.strip() for s in text.split(","))):
        key, sep, value = item.partition("=")
        if not sep:
            raise InputError(f"expected key=value, got {item!r}")
        params[key.strip()] = value.strip()
    return params


def _from_components(kernel, sq_or_dot, dots, zero=False):
    if kernel.family == "gaussian":
        sq = np.zeros_like(sq_or_dot) if zero else sq_or_dot
        return np.exp(-sq / (2.0 * kernel.bandwidth**2))
    if kernel.family == "linear":
        return dots
    return (dots + kernel.offset) ** kernel.degree


def _pairwise(kernel: KernelFunction, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if X.shape[1] != Y.shape[1]:
        raise InputError(f"dimension mismatch: {X.shape[1]} vs {Y.shape[1]}")
    out = np.empty((X.shape[0], Y.shape[0]))
    if X.shape[0] == 0 or Y.shape[0] == 0:
        return out
    step = max(1, _CHUNK_ELEMS // max(1, Y.shape[0] * X.shape[1]))
    for lo in range(0, X.shape[0], step):
        block = X[lo:lo + step, None, :]
        if kernel.family == "gaussian":
            # elementwise differences keep K(a, b) == K(b, a) bit for bit
            vals = np.sum((block - Y[None, :, :]) ** 2, axis=-1)
        else:
            vals = np.sum(block * Y[None, :, :], axis=-1)
        out[lo:lo + step] = _from_components(kernel, vals, vals)
    return out


def eval_kernel(kernel: KernelFunction, x, y) -> float:
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.shape != y.shape:
        raise InputError(f"dimension mismatch: {x.shape[0]} vs {y.shape[0]}")
    return float(_pairwise(kernel, x[None, :], y[None, :])[0, 0])


class InstrumentedKernel:
    """Kernel wrapper that logs every evaluated pair of points.

    ``log`` holds one ``(X_rows, Y_rows)`` tuple per call; ``evaluations``
    counts scalar kernel entries.
    """

    def __init__(self, kernel: KernelFunction):
        self.kernel = kernel
        self.family = kernel.family
        self.log: list[tuple[np.ndarray, np.ndarray]] = []
        self.evaluations = 0

    def __call__(self, x, y) -> float:
        return float(self.cross(np.atleast_2d(x), np.atleast_2d(y))[0, 0])

    def cross(self, X, Y) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        Y = np.atleast_2d(np.asarray(Y, dtype=float))
        self.log.append((X.copy(), Y.copy()))
        self.evaluations += X.shape[0] * Y.shape[0]
        return self.kernel.cross(X, Y)

    def diag(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        self.log.append((X.copy(), None))
        self.evaluations += X.shape[0]
        return self.kernel.diag(X)

    def reset(self):
        self.log.clear()
        self.evaluations = 0


@dataclass(frozen=True)
class Dataset:
    """Ordered regression stream ``y_t = f*(x_t) + noise``."""

    points: np.ndarray
    labels: np.ndarray
    truth: Optional[np.ndarray] = None
    noise_stddev: Optional[float] = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        points = np.asarray(self.points, dtype=float)
        if points.ndim == 1:
            points = points[:, None]
        if points.ndim != 2:
            raise InputError("points must be a 2-d array (n, d)")
        labels = np.asarray(self.labels, dtype=float).ravel()
        if labels.shape[0] != points.shape[0]:
            raise InputError(f"{points.shape[0]} points but {labels.shape[0]} labels")
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "labels", labels)
        if self.truth is not None:
            truth = np.asarray(self.truth, dtype=float).ravel()
            if truth.shape[0] != points.shape[0]:
                raise InputError(f"{points.shape[0]} points but {truth.shape[0]} truth values")
            object.__setattr__(self, "truth", truth)
        if self.noise_stddev is not None and self.noise_stddev < 0:
            raise InputError("noise_stddev must be nonnegative")

    def __len__(self):
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def prefix(self, t: int) -> "Dataset":
        truth = None if self.truth is None else self.truth[:t]
        return Dataset(self.points[:t], self.labels[:t], truth, self.noise_stddev, dict(self.meta))

    @classmethod
    def from_csv(cls, path, noise_stddev: Optional[float] = None) -> "Dataset":
        """Read ``x_1..x_d, y[, f_star]`` columns; a header row is required."""
        path = Path(path)
        try:
            with path.open(newline="") as fh:
                reader = csv.reader(fh)
                header = [h.strip() for h in next(reader)]
                rows = [[float(v) for v in row] for row in reader if row]
        except StopIteration:
            raise InputError(f"{path}: empty file, header row required") from None
        except ValueError as exc:
            raise InputError(f"{path}: non-numeric entry ({exc})") from exc
        if "y" not in header:
            raise InputError(f"{path}: header must contain a 'y' column")
        xcols = [i for i, h in enumerate(header) if h.startswith("x_")]
        if not xcols:
            raise InputError(f"{path}: header has no x_1..x_d columns")
        data = np.array(rows, dtype=float).reshape(len(rows), len(header))
        if data.shape[0] == 0:
            raise InputError(f"{path}: no samples")
        truth = data[:, header.index("f_star")] if "f_star" in header else None
        return cls(data[:, xcols], data[:, header.index("y")], truth, noise_stddev)

    def to_csv(self, path) -> None:
        header = [f"x_{j + 1}" for j in range(self.dim)] + ["y"]
        cols = [self.points, self.labels[:, None]]
        if self.truth is not None:
            header.append("f_star")
            cols.append(self.truth[:, None])
        with Path(path).open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for row in np.hstack(cols):
                writer.writerow([repr(float(v)) for v in row])


@dataclass(frozen=True)
class KernelColumn:
    """Bordering payload for point ``index`` (1-based): ``cross[i-1] = K(x_index, x_i)``."""

    index: int
    cross: np.ndarray
    diag: float


def column(kernel: KernelFunction, dataset: Dataset, t_plus_1: int) -> KernelColumn:
    n = len(dataset)
    if not 1 <= t_plus_1 <= n:
        raise InputError(f"column index {t_plus_1} outside [1, {n}]")
    x = dataset.points[t_plus_1 - 1:t_plus_1]
    cross = kernel.cross(x, dataset.points[:t_plus_1 - 1])[0]
    diag = float(kernel.cross(x, x)[0, 0])
    return KernelColumn(t_plus_1, cross, diag)


def full_matrix(kernel: KernelFunction, dataset: Dataset, t: Optional[int] = None) -> np.ndarray:
    """Dense ``K_t``; an oracle for tests and verification, never used by the stream."""
    n = len(dataset)
    t = n if t is None else t
    if not 0 <= t <= n:
        raise InputError(f"prefix length {t} outside [0, {n}]")
    X = dataset.points[:t]
    return kernel.cross(X, X)


# ---------------------------------------------------------------------------
# synthetic generators


def gaussian_expansion(n: int, dim: int = 2, kernel: Optional[KernelFunction] = None,
                       n_centers: int = 5, spread: float = 1.0, noise: float = 0.1,
                       seed: int = 0) -> Dataset:
    """i.i.d. Gaussian inputs with ``f*`` a small random kernel expansion.

    ``f*(x) = sum_j a_j K(x, c_j)`` with ``a ~ N(0, 1/n_centers)`` and centers
    drawn from the same distribution as the inputs.
    """
    if n < 1 or dim < 1 or n_centers < 1:
        raise InputError("n, dim and n_centers must be positive")
    if spread <= 0 or noise < 0:
        raise InputError("spread must be positive and noise nonnegative")
    kernel = kernel or KernelFunction.gaussian(1.0)
    rng = np.random.default_rng(seed)
    points = spread * rng.standard_normal((n, dim))
    centers = spread * rng.standard_normal((n_centers, dim))
    coef = rng.standard_normal(n_centers) / np.sqrt(n_centers)
    truth = kernel.cross(points, centers) @ coef
    labels = truth + noise * rng.standard_normal(n)
    meta = dict(generator="gaussian", n=n, dim=dim, n_centers=n_centers, spread=spread,
                noise=noise, seed=seed)
    return Dataset(points, labels, truth, noise, meta)


def orthogonal_blocks(n: int, blocks: int = 4, scales=None, noise: float = 0.1,
                      seed: int = 0) -> Dataset:
    """Points drawn from ``blocks`` orthogonal directions ``scale_b * e_b``.

    Under the linear kernel the Gram matrix is block diagonal with rank-one
    all-``scale_b**2`` blocks, so the effective dimension is the closed form
    ``sum_b n_b s_b / (n_b s_b + gamma)`` with ``s_b = scale_b**2``
    (see :func:`blocks_effective_dimension`).
    """
    if n < 1 or blocks < 1:
        raise InputError("n and blocks must be positive")
    if noise < 0:
        raise InputError("noise must be nonnegative")
    rng = np.random.default_rng(seed)
    scales = np.ones(blocks) if scales is None else np.asarray(scales, dtype=float)
    if scales.shape != (blocks,) or np.any(scales <= 0):
        raise InputError("need one positive scale per block")
    assignment = rng.integers(0, blocks, size=n)
    points = np.zeros((n, blocks))
    points[np.arange(n), assignment] = scales[assignment]
    theta = rng.standard_normal(blocks)
    truth = points @ theta
    labels = truth + noise * rng.standard_normal(n)
    meta = dict(generator="blocks", n=n, blocks=blocks, scales=scales.tolist(), noise=noise,
                seed=seed)
    return Dataset(points, labels, truth, noise, meta)


def blocks_effective_dimension(dataset: Dataset, gamma: float, t: Optional[int] = None) -> float:
    """Closed-form linear-kernel effective dimension of an orthogonal-blocks prefix."""
    X = dataset.points[: len(dataset) if t is None else t]
    sq = np.sum(X * X, axis=0)  # block eigenvalues n_b * scale_b**2
    return float(np.sum(sq / (sq + gamma)))
