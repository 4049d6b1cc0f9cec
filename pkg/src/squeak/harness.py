"""Seeded experiment runner: samplers, checkpoint verification, JSON-lines reports."""

from __future__ import annotations

import csv
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .baselines import d_max, oracle_rls_sample, uniform_sample
from .exceptions import ConfigError, InputError
from .kernels import (Dataset, KernelFunction, _parse_params, full_matrix, gaussian_expansion,
                      orthogonal_blocks)
from .nystrom import build_sketch, gamma_approx_check, risks, sketch_from_matrix
from .rls import effective_dimension, exact_rls
from .sampler import SqueakConfig, StepState, process_point

log = logging.getLogger(__name__)

SAMPLERS = ("squeak", "uniform", "oracle-rls")
TIMING_FIELDS = ("wall_time",)


@dataclass
class ExperimentConfig:
    dataset: str = "gaussian:n=256"
    kernel: str = "gaussian:bandwidth=1.0"
    gamma: float = 1.0
    mu: float = 1.0
    epsilon: float = 0.5
    delta: float = 0.1
    qbar_const: float = 1.0
    sampler: str = "squeak"
    seeds: list = field(default_factory=lambda: [0])
    checkpoints: Optional[list] = None
    out: Optional[str] = None
    verify_cap: int = 2000
    workers: int = 1
    resume: bool = False

    def validate(self) -> None:
        if not 0 < self.epsilon < 1:
            raise ConfigError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if not 0 < self.delta < 1:
            raise ConfigError(f"delta must lie in (0, 1), got {self.delta}")
        if not self.gamma > 0 or not self.mu > 0:
            raise ConfigError("gamma and mu must be positive")
        if not self.qbar_const > 0:
            raise ConfigError("qbar_const must be positive")
        if self.sampler not in SAMPLERS:
            raise ConfigError(f"sampler must be one of {SAMPLERS}, got {self.sampler!r}")
        if not self.seeds:
            raise ConfigError("at least one seed is required")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    @classmethod
    def from_mapping(cls, data: dict) -> "ExperimentConfig":
        known = {f for f in cls.__dataclass_fields__}
        clean = {k.replace("-", "_"): v for k, v in data.items()}
        unknown = set(clean) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**clean)


@dataclass
class RunReport:
    config: dict
    version: str
    records: list

    def by_seed(self) -> dict:
        out = {}
        for rec in self.records:
            out.setdefault(rec["seed"], []).append(rec)
        return out


def generate_synthetic(spec) -> Dataset:
    """Build a dataset from ``"gaussian:n=..,dim=.."``/``"blocks:n=..,blocks=.."`` or a dict."""
    if isinstance(spec, str):
        name, _, rest = spec.partition(":")
        params = _parse_params(rest)
    else:
        params = dict(spec)
        name = params.pop("generator")
    try:
        if name == "gaussian":
            kernel = KernelFunction.gaussian(float(params.pop("fbandwidth", 1.0)))
            kw = dict(n=int(params.pop("n")), dim=int(params.pop("dim", 2)), kernel=kernel,
                      n_centers=int(params.pop("n_centers", 5)),
                      spread=float(params.pop("spread", 1.0)),
                      noise=float(params.pop("noise", 0.1)), seed=int(params.pop("seed", 0)))
            if params:
                raise ConfigError(f"unknown gaussian generator parameters {sorted(params)}")
            return gaussian_expansion(**kw)
        if name == "blocks":
            blocks = int(params.pop("blocks", 4))
            scales = params.pop("scales", None)
            if isinstance(scales, str):
                scales = [float(s) for s in scales.split("/")]
            kw = dict(n=int(params.pop("n")), blocks=blocks, scales=scales,
                      noise=float(params.pop("noise", 0.1)), seed=int(params.pop("seed", 0)))
            if params:
                raise ConfigError(f"unknown blocks generator parameters {sorted(params)}")
            return orthogonal_blocks(**kw)
    except KeyError as exc:
        raise ConfigError(f"synthetic spec {spec!r} is missing {exc}") from None
    except (ValueError, InputError) as exc:
        raise ConfigError(f"bad synthetic spec {spec!r}: {exc}") from exc
    raise ConfigError(f"unknown generator {name!r}; expected 'gaussian' or 'blocks'")


def load_dataset(spec: str) -> Dataset:
    path = Path(spec)
    if path.suffix.lower() == ".csv" or path.exists():
        if not path.exists():
            raise ConfigError(f"dataset file {spec} does not exist")
        try:
            return Dataset.from_csv(path)
        except InputError as exc:
            raise ConfigError(f"could not parse dataset: {exc}") from exc
    return generate_synthetic(spec)


def default_checkpoints(n: int) -> list:
    pts = [2**k for k in range(4, max(4, math.ceil(math.log2(n)))) if 2**k < n]
    return pts + [n]


def _budget(config: ExperimentConfig, d: float, n: int) -> int:
    return max(1, math.ceil(config.qbar_const / config.epsilon**2 * d * math.log(n / config.delta)))


def _verify(config, dataset, kernel, t, sketch_fn):
    K = full_matrix(kernel, dataset, t)
    tau = exact_rls(K, config.gamma)
    deff = effective_dimension(tau)
    dictionary, sketch = sketch_fn(K, tau, deff)
    K_tilde = sketch.materialize()
    check = gamma_approx_check(K, K_tilde, config.gamma, config.epsilon)
    rec = dict(t=t, dict_size=dictionary.copies, distinct=dictionary.size, qbar=dictionary.qbar,
               d_eff_oracle=deff, d_max=d_max(tau), gamma_holds=bool(check.holds),
               gamma_margin=check.margin)
    if dataset.truth is not None and dataset.noise_stddev is not None:
        rec.update(risks(K, K_tilde, dataset.truth[:t], dataset.noise_stddev, config.mu))
    else:
        rec.update(risk_exact=None, risk_nystrom=None, risk_nystrom_kpred=None)
    return rec


def run_seed(config: ExperimentConfig, dataset: Dataset, seed: int, checkpoints, skip=()) -> list:
    """All checkpoint records for one seed, in checkpoint order."""
    kernel = KernelFunction.parse(config.kernel)
    todo = [t for t in checkpoints if (seed, t) not in skip]
    records = []
    if not todo:
        return records
    if config.sampler == "squeak":
        scfg = SqueakConfig(config.gamma, config.epsilon, config.delta, config.qbar_const,
                            n_hint=len(dataset), seed=seed)
        rng = np.random.default_rng(seed)
        state = StepState.initial(scfg.qbar, dataset.dim)
        peak, elapsed = 0, 0.0
        wanted = set(todo)
        for t in range(1, max(todo) + 1):
            start = time.perf_counter()
            state = process_point(state, dataset.points[t - 1], scfg, rng, kernel)
            elapsed += time.perf_counter() - start
            peak = max(peak, state.kernel_evals)
            if t in wanted:
                st = state
                rec = _verify(config, dataset, kernel, t, lambda K, tau, d: (
                    st.dictionary,
                    build_sketch(st.dictionary, kernel, dataset.points[:t], config.gamma)))
                rec.update(wall_time=elapsed, peak_kernel_evals=peak)
                records.append(rec)
    else:
        for t in todo:
            rng = np.random.default_rng([seed, t])
            start = time.perf_counter()

            def sample(K, tau, deff, rng=rng, t=t):
                if config.sampler == "uniform":
                    d = uniform_sample(t, _budget(config, d_max(tau), t), rng)
                else:
                    d = oracle_rls_sample(K, config.gamma, _budget(config, deff, t), rng)
                return d, sketch_from_matrix(K, d, config.gamma)

            rec = _verify(config, dataset, kernel, t, sample)
            rec.update(wall_time=time.perf_counter() - start, peak_kernel_evals=t * t)
            records.append(rec)
    for rec in records:
        rec.update(seed=seed, sampler=config.sampler)
    return records


def _seed_job(args):
    config, dataset, seed, checkpoints, skip = args
    return run_seed(config, dataset, seed, checkpoints, skip)


def _read_done(path: Path) -> set:
    done = set()
    if path.exists():
        for line in path.read_text().splitlines():
            rec = json.loads(line)
            if rec.get("type") == "checkpoint":
                done.add((rec["seed"], rec["t"]))
    return done


def _dump(rec: dict) -> str:
    return json.dumps(rec, sort_keys=True, default=float)


def run_experiment(config: ExperimentConfig) -> RunReport:
    config.validate()
    dataset = load_dataset(config.dataset)
    n = len(dataset)
    try:
        KernelFunction.parse(config.kernel)
    except InputError as exc:
        raise ConfigError(str(exc)) from exc
    checkpoints = sorted(set(config.checkpoints or default_checkpoints(n)))
    if checkpoints[0] < 1 or checkpoints[-1] > n:
        raise ConfigError(f"checkpoints must lie in [1, {n}], got {checkpoints}")
    if checkpoints[-1] > config.verify_cap:
        raise ConfigError(f"checkpoint {checkpoints[-1]} exceeds --verify-cap {config.verify_cap}; "
                          "raise the cap to allow dense O(t^2) verification")

    out = Path(config.out) if config.out else None
    skip = _read_done(out) if (out is not None and config.resume) else set()
    header = {"type": "config", "config": asdict(config), "version": __version__, "n": n}
    for key in ("out", "resume", "workers"):
        header["config"].pop(key)
    fh = None
    if out is not None:
        out.parent.mkdir(parents=True, exist_ok=True)
        fresh = not (config.resume and out.exists())
        fh = out.open("w" if fresh else "a")
        if fresh:
            fh.write(_dump(header) + "\n")

    jobs = [(config, dataset, seed, checkpoints, skip) for seed in config.seeds]
    records = []
    try:
        if config.workers > 1:
            with ProcessPoolExecutor(config.workers) as pool:
                results = pool.map(_seed_job, jobs)
                for seed_records in results:
                    records.extend(_emit(fh, seed_records))
        else:
            for job in jobs:
                records.extend(_emit(fh, _seed_job(job)))
    finally:
        if fh is not None:
            fh.close()
    if out is not None:
        write_summary(out)
    return RunReport(header["config"], __version__, records)


def _emit(fh, seed_records):
    for rec in seed_records:
        rec["type"] = "checkpoint"
        log.info("seed=%s t=%s |I|=%s d_eff=%.3f gamma_ok=%s", rec["seed"], rec["t"],
                 rec["dict_size"], rec["d_eff_oracle"], rec["gamma_holds"])
        if fh is not None:
            fh.write(_dump(rec) + "\n")
            fh.flush()
    return seed_records


SUMMARY_FIELDS = ("seed", "sampler", "t", "dict_size", "distinct", "qbar", "d_eff_oracle", "d_max",
                  "gamma_holds", "gamma_margin", "risk_exact", "risk_nystrom", "risk_nystrom_kpred",
                  "wall_time", "peak_kernel_evals")


def write_summary(jsonl: Path) -> Path:
    """Rewrite the CSV summary next to a JSON-lines report."""
    rows = [json.loads(line) for line in jsonl.read_text().splitlines()]
    rows = sorted((r for r in rows if r.get("type") == "checkpoint"), key=lambda r: (r["seed"], r["t"]))
    path = jsonl.with_name(jsonl.stem + ".summary.csv")
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=SUMMARY_FIELDS, extrasaction="ignore")
        writer.writeheader()
        writer.writerows(rows)
    return path
