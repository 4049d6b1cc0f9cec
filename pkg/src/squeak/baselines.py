"""Offline reference samplers: uniform columns and exact-RLS (oracle) columns.

Both return a :class:`~squeak.dictionary.Dictionary` with ``qbar = m`` and the
per-index sampling probability, so every copy carries weight ``(m p_i)^{-1/2}``
and the sketch is built by the same reconstruction path as the stream.
"""

from __future__ import annotations

import numpy as np

from .dictionary import Dictionary
from .exceptions import InputError
from .rls import effective_dimension, exact_rls


def _from_draws(draws: np.ndarray, probs: np.ndarray, n: int, m: int, points=None) -> Dictionary:
    counts = np.bincount(draws, minlength=n)
    kept = np.flatnonzero(counts)
    pts = None if points is None else np.asarray(points)[kept]
    return Dictionary(kept + 1, counts[kept], probs[kept], m, n, pts)


def uniform_sample(n: int, m: int, rng: np.random.Generator, replace: bool = True,
                   points=None) -> Dictionary:
    """``m`` i.i.d. uniform draws over ``[n]`` (``replace=False`` draws without replacement)."""
    if n < 1 or m < 1:
        raise InputError("n and m must be positive")
    if not replace and m > n:
        raise InputError("cannot draw more than n columns without replacement")
    draws = rng.choice(n, size=m, replace=replace)
    # with or without replacement the per-column weight is n / m
    probs = np.full(n, 1.0 / n)
    return _from_draws(draws, probs, n, m, points)


def oracle_rls_sample(K, gamma: float, m: int, rng: np.random.Generator, points=None) -> Dictionary:
    """``m`` i.i.d. draws with ``p_i = tau_i / d_eff`` from the exact scores of ``K``."""
    if m < 1:
        raise InputError("m must be positive")
    tau = exact_rls(K, gamma)
    probs = tau / effective_dimension(tau)
    draws = rng.choice(tau.size, size=m, replace=True, p=probs)
    return _from_draws(draws, probs, tau.size, m, points)


def d_max(rls, n: int | None = None) -> float:
    """Maximal degree of freedom ``n * max_i tau_i``."""
    rls = np.asarray(rls, dtype=float)
    n = rls.size if n is None else n
    return float(n * rls.max()) if rls.size else 0.0
