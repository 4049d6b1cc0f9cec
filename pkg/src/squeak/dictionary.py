"""The multiset column dictionary and its randomized Shrink / Expand updates.

A dictionary is stored collapsed: one row per distinct stream index with its
multiplicity ``Q_j`` and probability ``p_j``. Every copy of index ``j`` carries
the selection weight ``(qbar p_j)^{-1/2}``, so the distinct row aggregates to
``Q_j / (qbar p_j)`` on the diagonal of ``S S^T``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Mapping, Optional

import numpy as np

from .exceptions import ContractViolation, InputError


@dataclass(frozen=True)
class DictEntry:
    index: int
    multiplicity: int
    probability: float
    point: Optional[np.ndarray] = None


@dataclass(frozen=True, eq=False)
class Dictionary:
    """Immutable collapsed dictionary.

    ``indices`` are 1-based stream positions in increasing order. ``points`` is
    ``None`` for dictionaries built directly from a kernel matrix (baselines).
    """

    indices: np.ndarray
    counts: np.ndarray
    probs: np.ndarray
    qbar: int
    step: int = 0
    points: Optional[np.ndarray] = None

    def __post_init__(self):
        indices = np.asarray(self.indices, dtype=np.int64).ravel()
        counts = np.asarray(self.counts, dtype=np.int64).ravel()
        probs = np.asarray(self.probs, dtype=float).ravel()
        if not (indices.size == counts.size == probs.size):
            raise InputError("indices, counts and probs must have equal length")
        if int(self.qbar) < 1:
            raise InputError("qbar must be a positive integer")
        if indices.size:
            if np.any(np.diff(indices) <= 0):
                raise InputError("dictionary indices must be strictly increasing")
            if indices[0] < 1 or indices[-1] > self.step:
                raise InputError("dictionary indices must lie in [1, step]")
            if np.any(counts < 1):
                raise InputError("retained entries need multiplicity >= 1")
            if np.any(probs <= 0) or np.any(probs > 1):
                raise InputError("probabilities must lie in (0, 1]")
        for arr in (indices, counts, probs):
            arr.setflags(write=False)
        object.__setattr__(self, "indices", indices)
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "qbar", int(self.qbar))
        if self.points is not None:
            points = np.asarray(self.points, dtype=float)
            if points.ndim != 2 or points.shape[0] != indices.size:
                raise InputError("need one stored point per dictionary entry")
            points.setflags(write=False)
            object.__setattr__(self, "points", points)

    @classmethod
    def empty(cls, qbar: int, dim: Optional[int] = None) -> "Dictionary":
        points = None if dim is None else np.zeros((0, dim))
        return cls(np.zeros(0), np.zeros(0), np.zeros(0), qbar, 0, points)

    @property
    def size(self) -> int:
        """Number of distinct retained indices."""
        return int(self.indices.size)

    @property
    def copies(self) -> int:
        """``|I_t|``: total number of stored copies."""
        return int(self.counts.sum())

    def weights(self) -> np.ndarray:
        return self.counts / (self.qbar * self.probs)

    @property
    def entries(self) -> list:
        pts = self.points if self.points is not None else [None] * self.size
        return [DictEntry(int(i), int(q), float(p), x)
                for i, q, p, x in zip(self.indices, self.counts, self.probs, pts)]

    def __eq__(self, other):
        if not isinstance(other, Dictionary):
            return NotImplemented
        same_points = (self.points is None and other.points is None) or (
            self.points is not None and other.points is not None
            and np.array_equal(self.points, other.points))
        return (self.qbar == other.qbar and self.step == other.step
                and np.array_equal(self.indices, other.indices)
                and np.array_equal(self.counts, other.counts)
                and np.array_equal(self.probs, other.probs) and same_points)

    def to_json(self) -> str:
        """Snapshot as a JSON array of ``{index, multiplicity, probability}``."""
        return json.dumps([{"index": e.index, "multiplicity": e.multiplicity,
                            "probability": e.probability} for e in self.entries])

    @classmethod
    def from_json(cls, text: str, qbar: int, step: int, points=None) -> "Dictionary":
        """Restore a snapshot; ``points`` (all stream points) are looked up by index."""
        rows = json.loads(text)
        indices = np.array([r["index"] for r in rows], dtype=np.int64)
        kept = None
        if points is not None:
            points = np.asarray(points, dtype=float)
            kept = points[indices - 1] if indices.size else np.zeros((0, points.shape[1]))
        return cls(indices, [r["multiplicity"] for r in rows],
                   [r["probability"] for r in rows], qbar, step, kept)


def probability_update(tau_estimate, prev_prob):
    """``max(min(tau, p_prev), p_prev / 2)``; works elementwise on arrays."""
    if np.ndim(tau_estimate) == 0 and np.ndim(prev_prob) == 0:
        return max(min(float(tau_estimate), float(prev_prob)), float(prev_prob) / 2)
    prev = np.asarray(prev_prob, dtype=float)
    return np.maximum(np.minimum(np.asarray(tau_estimate, dtype=float), prev), prev / 2)


def _aligned(dictionary: Dictionary, new_probs) -> np.ndarray:
    if isinstance(new_probs, Mapping):
        try:
            return np.array([new_probs[int(j)] for j in dictionary.indices], dtype=float)
        except KeyError as exc:
            raise ContractViolation(f"no new probability for retained index {exc}") from None
    arr = np.asarray(new_probs, dtype=float).ravel()
    if arr.size != dictionary.size:
        raise InputError("new_probs must align with dictionary entries")
    return arr


def shrink(dictionary: Dictionary, new_probs, rng: np.random.Generator) -> Dictionary:
    """Thin each retained entry: ``Q' ~ Binomial(Q, p_new / p_old)``.

    Draws happen in ascending index order, one per retained entry; entries
    whose multiplicity reaches zero are removed.
    """
    new = _aligned(dictionary, new_probs)
    if dictionary.size == 0:
        return dictionary
    ratio = new / dictionary.probs
    if np.any(~(ratio >= 0)) or np.any(ratio > 1):
        raise ContractViolation("shrink ratio outside [0, 1]; probabilities may only decrease")
    counts = rng.binomial(dictionary.counts, ratio)
    keep = counts > 0
    points = None if dictionary.points is None else dictionary.points[keep]
    return Dictionary(dictionary.indices[keep], counts[keep], new[keep], dictionary.qbar,
                      dictionary.step, points)


def expand(dictionary: Dictionary, new_point, new_index: int, prob: float,
           rng: np.random.Generator) -> Dictionary:
    """Admit point ``new_index`` with ``Binomial(qbar, prob)`` copies and advance ``step``."""
    if new_index != dictionary.step + 1:
        raise ContractViolation(f"expected point {dictionary.step + 1}, got {new_index}")
    if not 0 < prob <= 1:
        raise ContractViolation(f"admission probability {prob} outside (0, 1]")
    q = int(rng.binomial(dictionary.qbar, prob))
    if q == 0:
        return Dictionary(dictionary.indices, dictionary.counts, dictionary.probs,
                          dictionary.qbar, new_index, dictionary.points)
    points = dictionary.points
    if new_point is not None:
        x = np.atleast_2d(np.asarray(new_point, dtype=float))
        points = x if points is None or points.size == 0 else np.vstack([points, x])
    elif points is not None:
        raise InputError("this dictionary stores points; new_point is required")
    return Dictionary(np.append(dictionary.indices, new_index), np.append(dictionary.counts, q),
                      np.append(dictionary.probs, prob), dictionary.qbar, new_index, points)


def selection_weights(dictionary: Dictionary) -> dict:
    """``{index: Q_j / (qbar p_j)}``, the diagonal of ``S S^T`` on retained indices."""
    return {int(j): float(w) for j, w in zip(dictionary.indices, dictionary.weights())}


def selection_matrix(dictionary: Dictionary, t: Optional[int] = None) -> np.ndarray:
    """Literal ``t x |I_t|`` selection matrix with one column per copy (tests and small cases)."""
    t = dictionary.step if t is None else t
    cols = []
    for j, q, p in zip(dictionary.indices, dictionary.counts, dictionary.probs):
        e = np.zeros(t)
        e[j - 1] = 1.0 / np.sqrt(dictionary.qbar * p)
        cols.extend([e] * int(q))
    return np.array(cols).T if cols else np.zeros((t, 0))
