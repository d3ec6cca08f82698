"""Target-taxon probability fields, median smoothing and hotspot extraction."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .grid import CellKey, GridConfig, cell_of, neighborhood_list
from .topic_model import CellTopicField, CommunityMatrix, Hyperparameters, TrainedModel, stream_order


@dataclass(frozen=True, eq=False)
class ScalarField:
    """One value in [0, 1] per covered cell."""

    values: dict

    def __post_init__(self):
        vals = {}
        for c, v in self.values.items():
            v = float(v)
            if not (math.isfinite(v) and 0.0 <= v <= 1.0):
                raise InputError(f"field value {v} at {tuple(c)} outside [0, 1]")
            vals[CellKey(*c)] = v
        object.__setattr__(self, "values", vals)

    @property
    def covered_cells(self) -> set:
        return set(self.values)

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True)
class HotspotConfig:
    target_taxon: int
    sigma_m: float = 25000.0
    tau: float = 0.5

    def __post_init__(self):
        if self.sigma_m < 0:
            raise InputError("sigma_m must be >= 0")
        if not 0.0 <= self.tau <= 1.0:
            raise InputError("tau must lie in [0, 1]")


def heldout_phi(model, h: Hyperparameters, v_star: int) -> CommunityMatrix:
    """Community/taxon matrix renormalized over every taxon except ``v_star``."""
    if hasattr(model, "live_counts"):
        ids, counts = model.live_counts()
    else:
        counts = np.asarray(model, dtype=np.int64)
        ids = tuple(range(counts.shape[0]))
    V = counts.shape[1]
    if V < 2:
        raise InputError("held-out posterior needs at least two taxa")
    if not 0 <= v_star < V:
        raise InputError(f"taxon id {v_star} out of range [0, {V})")
    keep = [v for v in range(V) if v != v_star]
    kept = counts[:, keep]
    phi = (kept + h.beta) / (kept.sum(axis=1, keepdims=True) + (V - 1) * h.beta)
    return CommunityMatrix(phi, tuple(ids), tuple(keep))


def assign_test_topics(model: TrainedModel, test_records, v_star: int, rng, n_sweeps: int = 20) -> CellTopicField:
    """Label test observations against frozen training communities.

    Only test labels are sampled; the training counts are read-only.  The
    neighborhood term sums frozen training cell counts and current test
    labels, and no new community can be opened.  The returned weights per
    test cell are the smoothed neighborhood counts after the last sweep.
    """
    test_records = stream_order(test_records, rng)
    K = model.n_topics
    V = model.vocab_size
    if not 0 <= v_star < V:
        raise InputError(f"taxon id {v_star} out of range [0, {V})")
    if K == 0:
        raise InputError("model has no communities")
    if not test_records:
        return CellTopicField({}, tuple(range(K)))
    h = model.hyperparameters
    grid = model.grid
    ho = heldout_phi(model, h, v_star)
    phi = np.zeros((V, K))
    phi[list(ho.taxa)] = ho.phi.T

    rows: dict = {}
    taxa = np.empty(len(test_records), dtype=np.intp)
    obs_row = np.empty(len(test_records), dtype=np.intp)
    for i, rec in enumerate(test_records):
        if rec.taxon == v_star:
            raise InputError(f"test record {i} observes the held-out taxon {v_star}")
        if not 0 <= rec.taxon < V:
            raise InputError(f"taxon id {rec.taxon} out of range [0, {V})")
        taxa[i] = rec.taxon
        obs_row[i] = rows.setdefault(cell_of(rec.location, grid), len(rows))
    cells = list(rows)
    train = model.cell_topic_counts
    base = np.zeros((len(cells), K))
    nbr_rows = []
    for c in cells:
        for n in neighborhood_list(c, grid):
            if n in train:
                base[rows[c]] += train[n]
        nbr_rows.append(np.array([rows[n] for n in neighborhood_list(c, grid) if n in rows], dtype=np.intp))
    base += h.alpha

    test_counts = np.zeros((len(cells), K), dtype=np.int64)
    labels = np.full(len(test_records), -1, dtype=np.intp)

    def draw(i):
        r = obs_row[i]
        p = phi[taxa[i]] * (base[r] + test_counts[nbr_rows[r]].sum(axis=0))
        cum = np.cumsum(p)
        return int(np.searchsorted(cum, rng.random() * cum[-1], side="right"))

    for i in range(len(test_records)):
        k = draw(i)
        labels[i] = k
        test_counts[obs_row[i], k] += 1
    for _ in range(n_sweeps):
        for i in range(len(test_records)):
            test_counts[obs_row[i], labels[i]] -= 1
            k = draw(i)
            labels[i] = k
            test_counts[obs_row[i], k] += 1

    theta = {}
    for c in cells:
        r = rows[c]
        v = base[r] + test_counts[nbr_rows[r]].sum(axis=0)
        theta[c] = v / v.sum()
    return CellTopicField(theta, tuple(range(K)))


def predict_target_field(theta_star: CellTopicField, phi_full: CommunityMatrix, v_star: int) -> ScalarField:
    """Probability of observing ``v_star`` per cell: ``theta_c . phi[:, v_star]``."""
    col = phi_full.column(v_star)
    K = len(col)
    values = {}
    for c, th in theta_star.theta.items():
        if len(th) != K:
            raise InputError(f"theta has {len(th)} communities but phi has {K}")
        values[c] = float(np.dot(th, col))
    return ScalarField(values)


def median_smooth(field: ScalarField, sigma_m: float, grid: GridConfig) -> ScalarField:
    """Median over covered cells whose centers fall in a sigma-wide square.

    Uncovered cells are skipped.  The time index is ignored, so cells from
    different time slices at the same place share a window.
    """
    if sigma_m < 0:
        raise InputError("sigma_m must be >= 0")
    keys = list(field.values)
    if not keys or sigma_m < grid.cell_size_m:
        return ScalarField(dict(field.values))
    vals = np.array([field.values[c] for c in keys])
    e = np.array([c[1] for c in keys], dtype=float)
    n = np.array([c[2] for c in keys], dtype=float)
    half = sigma_m / 2.0
    size = grid.cell_size_m
    out = {}
    for j, c in enumerate(keys):
        inside = (np.abs(e - e[j]) * size <= half) & (np.abs(n - n[j]) * size <= half)
        out[c] = float(np.median(vals[inside]))
    return ScalarField(out)


def extract_hotspots(smoothed: ScalarField, tau: float) -> set:
    return {c for c, v in smoothed.values.items() if v > tau}
