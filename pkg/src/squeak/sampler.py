"""Single-pass ridge-leverage-score column sampling (the SQUEAK loop).

Each arriving point is scored together with the retained points against the
previous dictionary bordered by the new point, probabilities are updated,
and the dictionary is thinned (Shrink) and then extended (Expand). The kernel
block over retained points is carried between steps, so a step evaluates the
kernel only between the new point and the retained points, plus its diagonal.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Optional

import numpy as np

from .dictionary import Dictionary, expand, probability_update, shrink
from .exceptions import ContractViolation, InputError
from .kernels import Dataset, KernelColumn, KernelFunction
from .rls import RlsConfig, RlsEstimate, estimate_all


@dataclass(frozen=True)
class SqueakConfig:
    """Run parameters.

    ``qbar = ceil(qbar_constant * alpha / eps^2 * log(n_hint / delta))`` unless
    ``qbar_override`` is given (required when ``epsilon == 0``).
    """

    gamma: float
    epsilon: float = 0.5
    delta: float = 0.1
    qbar_constant: float = 1.0
    n_hint: int = 1000
    seed: int = 0
    qbar_override: Optional[int] = None

    def __post_init__(self):
        RlsConfig(self.gamma, self.epsilon)
        if not 0 < self.delta < 1:
            raise InputError("delta must lie in (0, 1)")
        if not self.qbar_constant > 0:
            raise InputError("qbar_constant must be positive")
        if self.n_hint < 1:
            raise InputError("n_hint must be a positive integer")
        if self.qbar_override is not None and self.qbar_override < 1:
            raise InputError("qbar_override must be a positive integer")
        if self.qbar_override is None and self.epsilon == 0:
            raise InputError("epsilon = 0 makes qbar infinite; pass qbar_override")
        if self.gamma < 1:
            warnings.warn(f"gamma={self.gamma} < 1: the space/accuracy guarantee assumes gamma > 1",
                          stacklevel=2)

    @property
    def rls(self) -> RlsConfig:
        return RlsConfig(self.gamma, self.epsilon)

    @property
    def alpha(self) -> float:
        return self.rls.alpha

    @property
    def qbar(self) -> int:
        if self.qbar_override is not None:
            return int(self.qbar_override)
        raw = self.qbar_constant * self.alpha / self.epsilon**2 * math.log(self.n_hint / self.delta)
        return max(1, math.ceil(raw))


@dataclass(frozen=True, eq=False)
class StepState:
    """Dictionary and estimates after ``step`` points.

    ``gram`` caches the kernel block over retained points (in dictionary
    order). It is an optimization: a state without it is rebuilt from the
    stored points.
    """

    step: int
    dictionary: Dictionary
    estimate_indices: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    estimate_values: np.ndarray = field(default_factory=lambda: np.zeros(0))
    copies_total: int = 0
    gram: Optional[np.ndarray] = field(default=None, repr=False)
    kernel_evals: int = 0

    @classmethod
    def initial(cls, qbar: int, dim: int) -> "StepState":
        return cls(0, Dictionary.empty(qbar, dim), copies_total=0, gram=np.zeros((0, 0)))

    @property
    def estimates(self) -> dict:
        """``{i: RlsEstimate}`` for every index scored at this step."""
        return {int(i): RlsEstimate(int(i), float(v))
                for i, v in zip(self.estimate_indices, self.estimate_values)}

    @property
    def prob_sum(self) -> float:
        return float(self.dictionary.probs.sum())

    def without_cache(self) -> "StepState":
        return replace(self, gram=None)


def process_point(state: StepState, point, config: SqueakConfig, rng: np.random.Generator,
                  kernel, column: Optional[KernelColumn] = None,
                  estimate_hook: Optional[Callable[[np.ndarray], np.ndarray]] = None) -> StepState:
    """Advance the stream by one point.

    Kernel entries come from ``column`` when the caller streams full bordering
    columns, otherwise they are evaluated against the retained points only.
    ``estimate_hook`` may rewrite the raw estimates (testing).
    """
    t = state.step
    dictionary = state.dictionary
    x = np.atleast_2d(np.asarray(point, dtype=float))
    if column is not None and column.index != t + 1:
        raise ContractViolation(f"column index {column.index} does not follow step {t}")
    if dictionary.points is None:
        raise InputError("streaming dictionaries must store their points")

    evals = 0
    gram = state.gram
    if gram is None or gram.shape[0] != dictionary.size:
        gram = kernel.cross(dictionary.points, dictionary.points)
        evals += dictionary.size**2
    if column is not None:
        cross = np.asarray(column.cross, dtype=float)[dictionary.indices - 1]
        diag = float(column.diag)
    else:
        cross = kernel.cross(x, dictionary.points)[0] if dictionary.size else np.zeros(0)
        diag = float(kernel.cross(x, x)[0, 0])
        evals += dictionary.size + 1

    m = dictionary.size
    bordered = np.empty((m + 1, m + 1))
    bordered[:m, :m] = gram
    bordered[:m, m] = cross
    bordered[m, :m] = cross
    bordered[m, m] = diag
    weights = np.append(dictionary.weights(), 1.0)

    tau = estimate_all(bordered, weights, config.rls)
    if estimate_hook is not None:
        tau = np.clip(np.asarray(estimate_hook(tau), dtype=float), 0.0, 1.0)

    old_probs = probability_update(tau[:m], dictionary.probs)
    new_prob = probability_update(float(tau[m]), 1.0)

    shrunk = shrink(dictionary, old_probs, rng)
    keep = np.isin(dictionary.indices, shrunk.indices, assume_unique=True)
    grown = expand(shrunk, x[0], t + 1, new_prob, rng)
    if grown.size > shrunk.size:
        sel = np.append(np.flatnonzero(keep), m)
    else:
        sel = np.flatnonzero(keep)
    new_gram = bordered[np.ix_(sel, sel)]

    scored = np.append(dictionary.indices, t + 1)
    return StepState(t + 1, grown, scored, tau, grown.copies, new_gram, evals)


def run_stream(dataset: Dataset, kernel, config: SqueakConfig,
               callback: Optional[Callable[..., None]] = None, keep="all",
               columns: Optional[Iterable[KernelColumn]] = None,
               estimate_hook=None) -> list:
    """Run the sampler over ``dataset`` in order.

    ``keep`` selects the returned states: ``"all"``, ``"last"`` or a
    collection of step numbers. Returned states other than the last drop
    their kernel cache. ``callback(t, copies, prob_sum, elapsed)`` runs after
    every step.
    """
    n = len(dataset)
    if n == 0:
        raise InputError("dataset is empty")
    rng = np.random.default_rng(config.seed)
    state = StepState.initial(config.qbar, dataset.dim)
    wanted = None if keep in ("all", "last") else {int(s) for s in keep}
    out = []
    column_iter = iter(columns) if columns is not None else None
    start = time.perf_counter()
    for t in range(n):
        col = next(column_iter) if column_iter is not None else None
        state = process_point(state, dataset.points[t], config, rng, kernel, column=col,
                              estimate_hook=estimate_hook)
        if callback is not None:
            callback(state.step, state.copies_total, state.prob_sum, time.perf_counter() - start)
        if keep == "all" or (wanted is not None and state.step in wanted):
            out.append(state.without_cache() if state.step < n else state)
    if keep == "last":
        out.append(state)
    return out


def squeak(dataset: Dataset, kernel: KernelFunction, config: SqueakConfig, mu: float):
    """Full pipeline: stream the data, then return ``(sketch, weights)`` for the final dictionary."""
    from .nystrom import build_sketch, solve_nystrom

    final = run_stream(dataset, kernel, config, keep="last")[-1]
    sketch = build_sketch(final.dictionary, kernel, dataset.points, config.gamma)
    return sketch, solve_nystrom(sketch, dataset.labels, mu)
