"""Synthetic survey tracks drawn from a known community model.

Samples sit one per cell along a straight east-west track with 5 km steps.
Each sample's taxa are drawn from a per-cell mixture of communities, so the
generating community matrix and mixtures are available as ground truth.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .data import SampleDistribution, SurveyDataset
from .errors import InputError

TRACK_STEP_M = 5000.0
SAMPLE_INTERVAL_S = 1200.0


@dataclass(frozen=True)
class SynthSpec:
    n_communities: int = 5
    vocab_size: int = 20
    n_cells: int = 200
    obs_per_cell: int = 100
    phi_concentration: float = 0.1
    theta_concentration: float = 0.1
    spatial_smoothness: float = 0.5
    seed: int = 0
    # concentration for cells in the second half of the track; None keeps
    # one regime along the whole track
    second_half_theta_concentration: float | None = None

    def __post_init__(self):
        for name in ("n_communities", "vocab_size", "n_cells", "obs_per_cell"):
            if int(getattr(self, name)) < 1:
                raise InputError(f"{name} must be a positive integer")
        if self.phi_concentration <= 0 or self.theta_concentration <= 0:
            raise InputError("Dirichlet concentrations must be positive")
        if self.second_half_theta_concentration is not None and self.second_half_theta_concentration <= 0:
            raise InputError("second_half_theta_concentration must be positive")
        if not 0.0 <= self.spatial_smoothness <= 1.0:
            raise InputError("spatial_smoothness must lie in [0, 1]")

    @classmethod
    def from_dict(cls, d: dict) -> "SynthSpec":
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise InputError(f"unknown synth spec keys: {sorted(unknown)}")
        return cls(**d)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(eq=False)
class SyntheticTruth:
    phi: np.ndarray     # K x V community rows
    theta: np.ndarray   # n_cells x K, row i belongs to sample i

    def target_probability(self, sample_id: int, taxon: int) -> float:
        return float(self.theta[sample_id] @ self.phi[:, taxon])


def standard_spec(seed: int = 0) -> SynthSpec:
    """The recovery/benchmark fixture: five communities over 20 taxa, 200 samples.

    Cells in the first half of the track are close to a single community;
    cells in the second half are broad mixtures.  Splitting the track in two
    therefore trains on one regime and tests on the other.
    """
    return SynthSpec(n_communities=5, vocab_size=20, n_cells=200, obs_per_cell=100,
                     phi_concentration=0.1, theta_concentration=0.1, spatial_smoothness=0.25,
                     seed=seed, second_half_theta_concentration=1.0)


def generate_synthetic(spec: SynthSpec):
    """Return ``(dataset, truth)`` for a synthetic track."""
    rng = np.random.default_rng(spec.seed)
    K, V, n = spec.n_communities, spec.vocab_size, spec.n_cells
    phi = rng.dirichlet(np.full(V, spec.phi_concentration), size=K)
    conc = np.full(n, spec.theta_concentration)
    if spec.second_half_theta_concentration is not None:
        conc[(n + 1) // 2:] = spec.second_half_theta_concentration
    raw = np.array([rng.dirichlet(np.full(K, c)) for c in conc])
    theta = raw.copy()
    s = spec.spatial_smoothness
    if s > 0 and n > 1:
        for i in range(n):
            nbrs = [j for j in (i - 1, i + 1) if 0 <= j < n]
            theta[i] = (1 - s) * raw[i] + s * raw[nbrs].mean(axis=0)
    samples = []
    for i in range(n):
        p = theta[i] @ phi
        counts = rng.multinomial(spec.obs_per_cell, p / p.sum())
        loc = (i * SAMPLE_INTERVAL_S, (i + 0.5) * TRACK_STEP_M, 0.5 * TRACK_STEP_M)
        samples.append(SampleDistribution(i, loc, counts))
    names = [f"taxon_{v:02d}" for v in range(V)]
    return SurveyDataset(names, samples), SyntheticTruth(phi, theta)


def fixture_statistics(dataset: SurveyDataset, truth: SyntheticTruth) -> dict:
    """Summary numbers stored alongside a fixture to detect generator drift."""
    phi = truth.phi
    K = phi.shape[0]
    tv = [0.5 * np.abs(phi[a] - phi[b]).sum() for a in range(K) for b in range(a + 1, K)]
    totals = np.sum([s.counts for s in dataset.samples], axis=0)
    return {
        "n_samples": len(dataset.samples),
        "n_records": int(totals.sum()),
        "min_community_tv_distance": float(min(tv)) if tv else 1.0,
        "taxon_base_rates": (totals / totals.sum()).tolist(),
    }
