"""Train/test regimes, hotspot ground truth, precision-recall scoring and sweeps."""
from __future__ import annotations

import enum
import itertools
import logging
from dataclasses import dataclass, field

import numpy as np

from . import baselines
from .data import SurveyDataset, records_of
from .errors import InputError
from .grid import GridConfig, cell_of
from .prediction import ScalarField, assign_test_topics, median_smooth, predict_target_field
from .topic_model import Hyperparameters, TrainedModel, batch_train

log = logging.getLogger(__name__)

# threshold below every score so the all-positive operating point is present
EPS = 1e-12

DEFAULT_ALPHAS = (0.001, 0.01, 0.1, 0.5, 1.0)
DEFAULT_BETAS = (0.001, 0.01, 0.1, 0.5, 1.0)
DEFAULT_GAMMAS = (1e-6, 1e-5, 1e-4)

STRATEGIES = ("topic", "nn", "kmeans")


class SplitRegime(enum.Enum):
    INTERLEAVED = "interleaved"
    HALVES = "halves"

    @classmethod
    def parse(cls, value) -> "SplitRegime":
        if isinstance(value, cls):
            return value
        aliases = {"split": "halves", "halves": "halves", "interleaved": "interleaved"}
        try:
            return cls(aliases[str(value).lower()])
        except KeyError:
            raise InputError(f"unknown regime {value!r}; expected 'interleaved' or 'halves'") from None


def split_samples(samples, regime) -> tuple:
    """Interleaved: even positions train, odd test.  Halves: first ceil(N/2) train."""
    regime = SplitRegime.parse(regime)
    samples = list(samples)
    if len(samples) < 2:
        raise InputError("need at least two samples to split")
    if regime is SplitRegime.INTERLEAVED:
        return samples[0::2], samples[1::2]
    mid = (len(samples) + 1) // 2
    return samples[:mid], samples[mid:]


def ground_truth_hotspots(test, v_star: int, n: int = 50) -> set:
    """Ids of the ``n`` test samples with the highest relative abundance of ``v_star``."""
    if n < 1:
        raise InputError("n must be >= 1")
    ranked = sorted(test, key=lambda s: (-s.rel_abundance[v_star], s.time))
    return {s.sample_id for s in ranked[:n]}


@dataclass(frozen=True)
class PRPoint:
    tau: float
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def precision(self) -> float:
        pred = self.tp + self.fp
        return self.tp / pred if pred else 1.0

    @property
    def recall(self) -> float:
        pos = self.tp + self.fn
        return self.tp / pos if pos else 0.0


def threshold_grid(*score_maps) -> list:
    """Distinct scores across all maps, ascending, preceded by ``-EPS``."""
    vals = set()
    for m in score_maps:
        vals.update(float(v) for v in m.values())
    return [-EPS] + sorted(vals)


def score_predictions(predicted_scores: dict, truth: set, thresholds=None) -> list:
    """One PR point per threshold; a sample is predicted hot if its score > tau."""
    missing = set(truth) - set(predicted_scores)
    if missing:
        raise InputError(f"no score for truth samples {sorted(missing)[:5]}")
    if thresholds is None:
        thresholds = threshold_grid(predicted_scores)
    ids = list(predicted_scores)
    s = np.array([predicted_scores[i] for i in ids], dtype=float)
    is_true = np.array([i in truth for i in ids], dtype=bool)
    pos = np.sort(s[is_true])
    neg = np.sort(s[~is_true])
    n_pos, n_neg = len(pos), len(neg)
    tau = np.asarray(thresholds, dtype=float)
    tp = n_pos - np.searchsorted(pos, tau, side="right")
    fp = n_neg - np.searchsorted(neg, tau, side="right")
    return [PRPoint(float(t), int(a), int(b), int(n_pos - a), int(n_neg - b))
            for t, a, b in zip(tau, tp, fp)]


def aggregate_pr(per_taxon_points) -> list:
    """Micro-average: sum confusion counts per threshold across taxa."""
    per_taxon_points = [list(p) for p in per_taxon_points]
    if not per_taxon_points:
        return []
    grid = [p.tau for p in per_taxon_points[0]]
    for pts in per_taxon_points[1:]:
        if [p.tau for p in pts] != grid:
            raise InputError("threshold grids are not aligned across taxa")
    out = []
    for j, t in enumerate(grid):
        out.append(PRPoint(t, *(sum(getattr(pts[j], f) for pts in per_taxon_points)
                                for f in ("tp", "fp", "fn", "tn"))))
    return out


def auc_pr(points) -> float:
    """Trapezoidal area under precision over recall.

    Points are deduplicated and ordered by recall, with precision descending
    within equal recall (the order a falling threshold visits them).
    """
    pr = sorted({(float(p.recall), float(p.precision)) for p in points}, key=lambda x: (x[0], -x[1]))
    if len({r for r, _ in pr}) < 2:
        return 0.0
    area = 0.0
    for (r0, p0), (r1, p1) in zip(pr, pr[1:]):
        area += (r1 - r0) * (p0 + p1) / 2.0
    return float(min(max(area, 0.0), 1.0))


# ---- strategy scoring ------------------------------------------------------

def field_to_sample_scores(field: ScalarField, samples, grid: GridConfig) -> dict:
    """Each sample takes its cell's value; samples in uncovered cells score 0."""
    return {s.sample_id: field.values.get(cell_of(s.location, grid), 0.0) for s in samples}


def samples_to_field(per_sample: dict, samples, grid: GridConfig) -> ScalarField:
    """Average per-sample predictions within each cell."""
    acc: dict = {}
    for s in samples:
        acc.setdefault(cell_of(s.location, grid), []).append(per_sample[s.sample_id])
    return ScalarField({c: float(np.mean(v)) for c, v in acc.items()})


def topic_raw_field(model: TrainedModel, test_samples, v_star, rng, n_sweeps=20) -> ScalarField:
    recs = records_of(test_samples, exclude_taxon=v_star)
    theta = assign_test_topics(model, recs, v_star, rng, n_sweeps)
    return predict_target_field(theta, model.phi(), v_star)


def nn_raw_field(train, test, v_star, grid) -> ScalarField:
    index = baselines.NearestNeighborIndex(train, v_star)
    return samples_to_field({s.sample_id: index.predict(s) for s in test}, test, grid)


def kmeans_raw_field(cs, test, v_star, grid) -> ScalarField:
    return samples_to_field({s.sample_id: baselines.kmeans_predict(cs, s, v_star) for s in test}, test, grid)


@dataclass
class StrategyResult:
    """PR curves of one strategy at one smoothing width."""

    strategy: str
    sigma: float
    per_taxon: dict
    aggregated: list
    auc: float
    per_taxon_auc: dict
    extra: dict = field(default_factory=dict)


def score_fields(strategy, raw_fields: dict, test, truth: dict, sigma, grid, extra=None) -> StrategyResult:
    """Smooth per-taxon raw fields, score against truth on a shared threshold grid."""
    scores = {v: field_to_sample_scores(median_smooth(f, sigma, grid), test, grid) for v, f in raw_fields.items()}
    grid_tau = threshold_grid(*scores.values())
    per_taxon = {v: score_predictions(scores[v], truth[v], grid_tau) for v in raw_fields}
    agg = aggregate_pr(per_taxon.values())
    return StrategyResult(strategy, float(sigma), per_taxon, agg, auc_pr(agg),
                          {int(v): auc_pr(p) for v, p in per_taxon.items()}, dict(extra or {}))


def _check_targets(targets, V):
    targets = [int(v) for v in targets]
    for v in targets:
        if not 0 <= v < V:
            raise InputError(f"taxon id {v} out of range [0, {V})")
    if not targets:
        raise InputError("no target taxa given")
    return targets


def evaluate_topic(model: TrainedModel, test, targets, sigmas, n_hotspots, seed, n_sweeps=20) -> list:
    targets = _check_targets(targets, model.vocab_size)
    truth = {v: ground_truth_hotspots(test, v, n_hotspots) for v in targets}
    raw = {v: topic_raw_field(model, test, v, np.random.default_rng([seed, v]), n_sweeps) for v in targets}
    return [score_fields("topic", raw, test, truth, s, model.grid, {"K": model.n_topics}) for s in sigmas]


def evaluate_nn(train, test, targets, sigmas, n_hotspots, grid) -> list:
    V = len(test[0].counts)
    targets = _check_targets(targets, V)
    truth = {v: ground_truth_hotspots(test, v, n_hotspots) for v in targets}
    raw = {v: nn_raw_field(train, test, v, grid) for v in targets}
    return [score_fields("nn", raw, test, truth, s, grid) for s in sigmas]


def evaluate_kmeans(train, test, targets, sigmas, n_hotspots, grid, k, seed, n_restarts=10) -> list:
    V = len(test[0].counts)
    targets = _check_targets(targets, V)
    truth = {v: ground_truth_hotspots(test, v, n_hotspots) for v in targets}
    raw = {}
    for v in targets:
        cs = baselines.kmeans_fit(train, k, v, np.random.default_rng([seed, v]), n_restarts)
        raw[v] = kmeans_raw_field(cs, test, v, grid)
    return [score_fields("kmeans", raw, test, truth, s, grid, {"K": int(k)}) for s in sigmas]


def bayes_optimal_auc(test, targets, n_hotspots, phi_true, theta_true) -> float:
    """AUC of scoring each test sample with the generating model's exact target probability."""
    truth = {v: ground_truth_hotspots(test, v, n_hotspots) for v in targets}
    scores = {v: {s.sample_id: float(theta_true[s.sample_id] @ phi_true[:, v]) for s in test} for v in targets}
    tau = threshold_grid(*scores.values())
    return auc_pr(aggregate_pr([score_predictions(scores[v], truth[v], tau) for v in targets]))


# ---- hyperparameter sweep ----------------------------------------------------

@dataclass
class SweepConfig:
    alphas: tuple = DEFAULT_ALPHAS
    betas: tuple = DEFAULT_BETAS
    gammas: tuple = DEFAULT_GAMMAS
    sigmas: tuple = (25000.0, 35000.0)
    n_hotspots: int = 50
    target_taxa: tuple = ()
    n_sweeps: int = 50
    test_sweeps: int = 20

    def __post_init__(self):
        for name in ("alphas", "betas", "gammas", "sigmas"):
            vals = tuple(float(x) for x in getattr(self, name))
            if not vals:
                raise InputError(f"{name} must be non-empty")
            if name != "sigmas" and any(x <= 0 for x in vals):
                raise InputError(f"{name} must be positive")
            if name == "sigmas" and any(x < 0 for x in vals):
                raise InputError("sigmas must be non-negative")
            setattr(self, name, vals)
        self.target_taxa = tuple(int(v) for v in self.target_taxa)
        if self.n_hotspots < 1:
            raise InputError("n_hotspots must be >= 1")

    @classmethod
    def from_dict(cls, d: dict) -> "SweepConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise InputError(f"unknown sweep grid keys: {sorted(unknown)}")
        return cls(**d)


def _best(results: list) -> StrategyResult:
    # first maximum wins, so grid order breaks ties
    return max(results, key=lambda r: r.auc)


def run_sweep(dataset: SurveyDataset, regime, sweep: SweepConfig, strategies=STRATEGIES, rng=None,
              grid: GridConfig | None = None, budget: int | None = None) -> dict:
    """Grid search over (alpha, beta, gamma, sigma); returns a JSON-ready report.

    One model is trained per (alpha, beta, gamma) and evaluated at every sigma
    in the grid.  The k-means baseline uses as many centroids as the best
    topic model has communities.
    """
    regime = SplitRegime.parse(regime)
    grid = grid or GridConfig()
    rng = rng if rng is not None else np.random.default_rng(0)
    strategies = tuple(strategies)
    for s in strategies:
        if s not in STRATEGIES:
            raise InputError(f"unknown strategy {s!r}")
    base_seed = int(rng.integers(2**31))
    train, test = split_samples(dataset.samples, regime)
    targets = list(sweep.target_taxa) or dataset.most_frequent_taxa(8)
    targets = _check_targets(targets, dataset.vocab_size)

    combos = list(itertools.product(sweep.alphas, sweep.betas, sweep.gammas, sweep.sigmas))
    chosen = range(len(combos))
    if budget is not None and budget < len(combos):
        if budget < 1:
            raise InputError("budget must be >= 1")
        chosen = sorted(rng.choice(len(combos), size=budget, replace=False).tolist())
    by_model: dict = {}
    for j in chosen:
        a, b, g, s = combos[j]
        by_model.setdefault((a, b, g), []).append(s)

    report = {"regime": regime.value, "targets": targets, "n_hotspots": sweep.n_hotspots,
              "grid_config": grid.to_dict(), "per_config": [], "best": None}
    best_topic = None
    if "topic" in strategies or "kmeans" in strategies:
        train_recs = records_of(train)
        for m_idx, ((a, b, g), sigmas) in enumerate(by_model.items()):
            h = Hyperparameters(a, b, g)
            model_seed = [base_seed, 1, m_idx]
            state, _, _ = batch_train(train_recs, h, grid, np.random.default_rng(model_seed), sweep.n_sweeps,
                                      vocab_size=dataset.vocab_size)
            model = TrainedModel.from_state(state, h, dataset.vocab_names)
            log.info("alpha=%g beta=%g gamma=%g: K=%d", a, b, g, model.n_topics)
            for r in evaluate_topic(model, test, targets, sigmas, sweep.n_hotspots,
                                    base_seed + 7919 * (m_idx + 1), sweep.test_sweeps):
                entry = {"alpha": a, "beta": b, "gamma": g, "sigma": r.sigma, "K_learned": model.n_topics,
                         "auc": r.auc, "per_taxon_auc": {str(k): v for k, v in r.per_taxon_auc.items()}}
                report["per_config"].append(entry)
                if best_topic is None or r.auc > best_topic["auc"]:
                    best_topic = entry
        report["best"] = best_topic
    if "topic" in strategies:
        report.setdefault("strategies", {})["topic"] = best_topic
    if "nn" in strategies:
        res = evaluate_nn(train, test, targets, sweep.sigmas, sweep.n_hotspots, grid)
        report.setdefault("strategies", {})["nn"] = _baseline_entry(res)
    if "kmeans" in strategies:
        k = min(best_topic["K_learned"], len(train))
        res = evaluate_kmeans(train, test, targets, sweep.sigmas, sweep.n_hotspots, grid, k, base_seed + 2)
        report.setdefault("strategies", {})["kmeans"] = _baseline_entry(res, K=k)
    return report


def _baseline_entry(results, **extra) -> dict:
    best = _best(results)
    return {**extra, "per_sigma": [{"sigma": r.sigma, "auc": r.auc,
                                    "per_taxon_auc": {str(k): v for k, v in r.per_taxon_auc.items()}}
                                   for r in results],
            "best": {"sigma": best.sigma, "auc": best.auc}}
