"""Head-to-head comparison of the three strategies on one synthetic track."""
from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import evaluation as ev
from .data import records_of
from .errors import InputError
from .grid import GridConfig
from .synthetic import generate_synthetic, standard_spec
from .topic_model import Hyperparameters, TrainedModel, batch_train


@dataclass(frozen=True)
class BenchmarkConfig:
    alpha: float = 1.0
    beta: float = 10.0
    gamma: float = 3e-3
    cell_size_m: float = 5000.0
    neighborhood_depth: int = 0
    train_sweeps: int = 30
    test_sweeps: int = 10
    n_targets: int = 8
    n_hotspots: int = 12
    sigmas: tuple = (0.0, 15000.0)
    kmeans_restarts: int = 10

    @classmethod
    def from_dict(cls, d: dict) -> "BenchmarkConfig":
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise InputError(f"unknown benchmark keys: {sorted(unknown)}")
        d = dict(d)
        if "sigmas" in d:
            d["sigmas"] = tuple(float(s) for s in d["sigmas"])
        return cls(**d)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["sigmas"] = list(self.sigmas)
        return d

    @property
    def hyperparameters(self) -> Hyperparameters:
        return Hyperparameters(self.alpha, self.beta, self.gamma)

    @property
    def grid(self) -> GridConfig:
        return GridConfig(self.cell_size_m, 0.0, self.neighborhood_depth)


@dataclass
class BenchmarkResult:
    regime: str
    seed: int
    bayes_auc: float
    auc: dict                      # strategy -> best AUC over the sigma grid
    best_sigma: dict               # strategy -> sigma attaining it
    n_topics: int
    seconds: float
    per_sigma: dict = field(default_factory=dict)

    def beats_baselines(self) -> bool:
        return self.auc["topic"] > self.auc["nn"] and self.auc["topic"] > self.auc["kmeans"]


def bayes_auc_for(seed: int, regime, cfg: BenchmarkConfig) -> float:
    ds, truth = generate_synthetic(standard_spec(seed))
    _, test = ev.split_samples(ds.samples, regime)
    return ev.bayes_optimal_auc(test, ds.most_frequent_taxa(cfg.n_targets), cfg.n_hotspots, truth.phi, truth.theta)


def run_benchmark(seed: int, regime, cfg: BenchmarkConfig = BenchmarkConfig()) -> BenchmarkResult:
    """Train on one half (or alternate samples) of the standard track and score all strategies.

    Each strategy reports its best AUC over ``cfg.sigmas``.  k-means uses as
    many centroids as the trained topic model has communities.
    """
    start = time.perf_counter()
    regime = ev.SplitRegime.parse(regime)
    ds, truth = generate_synthetic(standard_spec(seed))
    train, test = ev.split_samples(ds.samples, regime)
    targets = ds.most_frequent_taxa(cfg.n_targets)
    grid, h = cfg.grid, cfg.hyperparameters

    state, _, _ = batch_train(records_of(train), h, grid, np.random.default_rng(seed), cfg.train_sweeps,
                              vocab_size=ds.vocab_size, rng_seed=seed)
    model = TrainedModel.from_state(state, h, ds.vocab_names)
    results = {
        "topic": ev.evaluate_topic(model, test, targets, cfg.sigmas, cfg.n_hotspots, seed, cfg.test_sweeps),
        "nn": ev.evaluate_nn(train, test, targets, cfg.sigmas, cfg.n_hotspots, grid),
        "kmeans": ev.evaluate_kmeans(train, test, targets, cfg.sigmas, cfg.n_hotspots, grid,
                                     min(model.n_topics, len(train)), seed, cfg.kmeans_restarts),
    }
    auc, best_sigma, per_sigma = {}, {}, {}
    for name, res in results.items():
        best = max(res, key=lambda r: r.auc)
        auc[name], best_sigma[name] = best.auc, best.sigma
        per_sigma[name] = {r.sigma: r.auc for r in res}
    bayes = ev.bayes_optimal_auc(test, targets, cfg.n_hotspots, truth.phi, truth.theta)
    return BenchmarkResult(regime.value, seed, bayes, auc, best_sigma, model.n_topics,
                           time.perf_counter() - start, per_sigma)
