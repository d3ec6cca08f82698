"""Spatial CRP topic model with an online collapsed Gibbs sampler.

Communities (topics) are distributions over taxa with a symmetric Dirichlet
prior.  The community of an observation is drawn from a Chinese restaurant
process whose table weights are the community counts in the observation's
cell neighborhood plus ``alpha``; a new community is opened with mass
``gamma``.

Community ids are slots: a pruned community frees its id and the next new
community takes the smallest free id.  Surviving communities keep their ids.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import ObservationRecord
from .errors import InputError
from .grid import CellKey, GridConfig, cell_of, neighborhood_list


@dataclass(frozen=True)
class Hyperparameters:
    alpha: float = 0.1
    beta: float = 0.1
    gamma: float = 1e-5

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise InputError(f"{name} must be a positive finite number, got {v}")

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "beta": self.beta, "gamma": self.gamma}


@dataclass(frozen=True, eq=False)
class CommunityMatrix:
    """Per-community taxon distributions, one row per community.

    ``taxa`` names the taxon id of every column (all taxa for the full
    posterior, all but the held-out one for :func:`heldout_phi`).
    """

    phi: np.ndarray
    topic_ids: tuple
    taxa: tuple

    @property
    def n_topics(self) -> int:
        return self.phi.shape[0]

    def column(self, taxon: int) -> np.ndarray:
        return self.phi[:, self.taxa.index(taxon)]


@dataclass(frozen=True, eq=False)
class CellTopicField:
    """Normalized community weights per cell, ordered like ``topic_ids``."""

    theta: dict
    topic_ids: tuple

    def __len__(self):
        return len(self.theta)


class TopicState:
    """Labels and sufficient statistics of the Gibbs sampler.

    Count vectors are indexed by community id; ids not in ``live_topics`` hold
    zeros.  The grid configuration is bound at construction because every
    observation's cell is fixed when it is added.
    """

    def __init__(self, vocab_size: int, grid: GridConfig | None = None, rng_seed: int | None = None):
        if vocab_size < 1:
            raise InputError("vocab_size must be >= 1")
        self.vocab_size = int(vocab_size)
        self.grid = grid if grid is not None else GridConfig()
        self.rng_seed = rng_seed
        cap = 8
        self._ntv = np.zeros((cap, self.vocab_size), dtype=np.int64)
        self._nt = np.zeros(cap, dtype=np.int64)
        self._alive = np.zeros(cap, dtype=bool)
        self._cell_rows: dict = {}
        self._cells: list = []
        self._ncell = np.zeros((16, cap), dtype=np.int64)
        self._nbr: list = []
        self.labels: list = []
        self._taxa: list = []
        self._obs_row: list = []

    # ---- views -----------------------------------------------------------
    @property
    def n_observations(self) -> int:
        return len(self.labels)

    @property
    def n_slots(self) -> int:
        return self._nt.shape[0]

    @property
    def live_topics(self) -> list:
        return [int(k) for k in np.flatnonzero(self._alive)]

    @property
    def n_topics(self) -> int:
        return int(self._alive.sum())

    @property
    def topic_taxon_counts(self) -> np.ndarray:
        return self._ntv.copy()

    @property
    def topic_totals(self) -> np.ndarray:
        return self._nt.copy()

    @property
    def cell_topic_counts(self) -> dict:
        return {c: self._ncell[r].copy() for c, r in self._cell_rows.items()}

    @property
    def taxa(self) -> list:
        return list(self._taxa)

    def cell_of_observation(self, i: int) -> CellKey:
        return self._cells[self._obs_row[i]]

    def live_counts(self):
        """(topic ids, K x V counts) restricted to live communities."""
        ids = np.flatnonzero(self._alive)
        return tuple(int(k) for k in ids), self._ntv[ids].copy()

    # ---- bookkeeping -----------------------------------------------------
    def _grow_topics(self):
        cap = self.n_slots
        self._ntv = np.vstack([self._ntv, np.zeros_like(self._ntv)])
        self._nt = np.concatenate([self._nt, np.zeros(cap, dtype=np.int64)])
        self._alive = np.concatenate([self._alive, np.zeros(cap, dtype=bool)])
        self._ncell = np.hstack([self._ncell, np.zeros_like(self._ncell)])

    def _row_for(self, c: CellKey) -> int:
        r = self._cell_rows.get(c)
        if r is not None:
            return r
        r = len(self._cells)
        if r == self._ncell.shape[0]:
            self._ncell = np.vstack([self._ncell, np.zeros_like(self._ncell)])
        self._cell_rows[c] = r
        self._cells.append(c)
        rows = [self._cell_rows[n] for n in neighborhood_list(c, self.grid) if n in self._cell_rows]
        self._nbr.append(np.array(rows, dtype=np.intp))
        for q in rows:
            if q != r:
                self._nbr[q] = np.append(self._nbr[q], r)
        return r

    def add_observation(self, rec: ObservationRecord) -> int:
        """Register an unlabeled observation; returns its index."""
        if not 0 <= rec.taxon < self.vocab_size:
            raise InputError(f"taxon id {rec.taxon} out of range [0, {self.vocab_size})")
        r = self._row_for(cell_of(rec.location, self.grid))
        self._taxa.append(int(rec.taxon))
        self._obs_row.append(r)
        self.labels.append(-1)
        return len(self.labels) - 1

    def _inc(self, i: int, k: int):
        self._ntv[k, self._taxa[i]] += 1
        self._nt[k] += 1
        self._ncell[self._obs_row[i], k] += 1
        self._alive[k] = True
        self.labels[i] = k

    def _dec(self, i: int) -> int:
        k = self.labels[i]
        self._ntv[k, self._taxa[i]] -= 1
        self._nt[k] -= 1
        self._ncell[self._obs_row[i], k] -= 1
        self.labels[i] = -1
        return k

    def _prune(self, k: int):
        if self._nt[k] == 0:
            self._alive[k] = False

    def _new_topic_id(self) -> int:
        free = np.flatnonzero(~self._alive)
        if len(free) == 0:
            k = self.n_slots
            self._grow_topics()
            return k
        return int(free[0])

    def _neighborhood_counts_row(self, r: int) -> np.ndarray:
        return self._ncell[self._nbr[r]].sum(axis=0)

    def conditional(self, i: int, h: Hyperparameters, allow_new: bool = True):
        """Unnormalized full conditional of observation ``i`` given the rest.

        Must be called with observation ``i`` already removed from the counts.
        Returns (weights per slot, weight of a new community).
        """
        w = self._taxa[i]
        nbr = self._neighborhood_counts_row(self._obs_row[i])
        phi = (self._ntv[:, w] + h.beta) / (self._nt + self.vocab_size * h.beta)
        p = phi * (nbr + h.alpha) * self._alive
        p_new = h.gamma / self.vocab_size if allow_new else 0.0
        return p, p_new

    def _draw(self, i, h, rng, allow_new):
        p, p_new = self.conditional(i, h, allow_new)
        cum = np.cumsum(p)
        live_mass = cum[-1]
        total = live_mass + p_new
        if not total > 0:
            raise InputError("no admissible community for observation (empty model and new communities disabled)")
        u = rng.random() * total
        if u < live_mass:
            return int(np.searchsorted(cum, u, side="right"))
        return self._new_topic_id()

    def sample_initial(self, i: int, h: Hyperparameters, rng, allow_new: bool = True) -> int:
        """Give an unlabeled observation its first label."""
        if self.labels[i] != -1:
            raise InputError(f"observation {i} is already labeled")
        k = self._draw(i, h, rng, allow_new)
        self._inc(i, k)
        return k

    def resample(self, i: int, h: Hyperparameters, rng, allow_new: bool = True) -> int:
        old = self._dec(i)
        k = self._draw(i, h, rng, allow_new)
        self._inc(i, k)
        self._prune(old)
        return k

    # ---- diagnostics -----------------------------------------------------
    def check_invariants(self):
        """Recount everything from labels; raise AssertionError on any mismatch."""
        n = self.n_observations
        labels = np.asarray(self.labels, dtype=np.int64)
        if n and (labels < 0).any():
            raise AssertionError("unlabeled observation present")
        ntv = np.zeros_like(self._ntv)
        ncell = np.zeros_like(self._ncell)
        if n:
            np.add.at(ntv, (labels, np.asarray(self._taxa)), 1)
            np.add.at(ncell, (np.asarray(self._obs_row), labels), 1)
        if not np.array_equal(ntv, self._ntv):
            raise AssertionError("topic_taxon_counts disagree with labels")
        if not np.array_equal(self._ntv.sum(axis=1), self._nt):
            raise AssertionError("row sums of topic_taxon_counts != topic_totals")
        if self._nt.sum() != n:
            raise AssertionError("topic_totals do not sum to the number of observations")
        if not np.array_equal(ncell, self._ncell):
            raise AssertionError("cell_topic_counts disagree with labels")
        if n and not self._alive[labels].all():
            raise AssertionError("label refers to a dead community")
        if not np.array_equal(self._alive, self._nt > 0):
            raise AssertionError("live_topics differ from communities with positive totals")

    def neighborhood_count_matrix(self) -> np.ndarray:
        """Neighborhood-summed community counts, one row per known cell."""
        out = np.zeros((len(self._cells), self.n_slots), dtype=np.int64)
        for r, rows in enumerate(self._nbr):
            out[r] = self._ncell[rows].sum(axis=0)
        return out


# ---- module-level operations ---------------------------------------------

def neighborhood_topic_counts(state: TopicState, c, grid: GridConfig | None = None) -> np.ndarray:
    grid = grid or state.grid
    out = np.zeros(state.n_slots, dtype=np.int64)
    rows = state._cell_rows
    for n in neighborhood_list(c, grid):
        r = rows.get(n)
        if r is not None:
            out += state._ncell[r]
    return out


def _counts_of(model):
    if hasattr(model, "live_counts"):
        return model.live_counts()
    counts = np.asarray(model, dtype=np.int64)
    return tuple(range(counts.shape[0])), counts


def phi_posterior(model, h: Hyperparameters) -> CommunityMatrix:
    """Dirichlet-smoothed community/taxon matrix from counts.

    ``model`` is a TopicState, a TrainedModel or a raw K x V count array.
    """
    ids, counts = _counts_of(model)
    V = counts.shape[1]
    phi = (counts + h.beta) / (counts.sum(axis=1, keepdims=True) + V * h.beta)
    return CommunityMatrix(phi, ids, tuple(range(V)))


def topic_proposal_weights(counts, h: Hyperparameters) -> np.ndarray:
    """CRP weights: ``counts + alpha`` per known community, ``gamma`` appended for a new one."""
    counts = np.asarray(counts, dtype=float)
    return np.append(counts + h.alpha, h.gamma)


def gibbs_resample(state: TopicState, i: int, h: Hyperparameters, rng, allow_new: bool = True) -> TopicState:
    if not 0 <= i < state.n_observations:
        raise InputError(f"observation index {i} out of range")
    state.resample(i, h, rng, allow_new)
    return state


def online_step(state: TopicState, new_batch, h: Hyperparameters, rng, refine_budget: int | None = None) -> TopicState:
    """Label a new batch, then spend ``refine_budget`` resamples on random past observations.

    The default budget equals the batch size, splitting effort evenly between
    the newest observations and the history.
    """
    new_batch = list(new_batch)
    if refine_budget is None:
        refine_budget = len(new_batch)
    if refine_budget < 0:
        raise InputError("refine_budget must be >= 0")
    for rec in new_batch:
        i = state.add_observation(rec)
        state.sample_initial(i, h, rng)
    n = state.n_observations
    if n:
        for j in rng.integers(0, n, size=refine_budget):
            state.resample(int(j), h, rng)
    return state


def gibbs_sweep(state: TopicState, h: Hyperparameters, rng):
    for i in range(state.n_observations):
        state.resample(i, h, rng)


def cell_theta(state, h: Hyperparameters) -> CellTopicField:
    """Per-cell community weights with additive ``alpha`` smoothing."""
    if isinstance(state, TopicState):
        ids = state.live_topics
        theta = {}
        for c, r in state._cell_rows.items():
            v = state._ncell[r, ids] + h.alpha
            theta[c] = v / v.sum()
        return CellTopicField(theta, tuple(ids))
    K = state.n_topics
    theta = {}
    for c, v in state.cell_topic_counts.items():
        v = v + h.alpha
        theta[c] = v / v.sum()
    return CellTopicField(theta, tuple(range(K)))


def stream_order(records, rng) -> list:
    """Order records by time, shuffling detections that share a timestamp.

    Detections from one sample carry no ordering information; feeding them
    grouped by taxon would make the sequential pass open one community per
    taxon.
    """
    records = list(records)
    perm = rng.permutation(len(records))
    return [records[j] for j in sorted(perm.tolist(), key=lambda j: records[j].time)]


def batch_train(records, h: Hyperparameters, grid: GridConfig, rng, n_sweeps: int = 50,
                vocab_size: int | None = None, rng_seed: int | None = None):
    """Offline training: one online pass for initialization, then full sweeps.

    Returns ``(state, phi, theta)``.
    """
    records = list(records)
    if not records:
        raise InputError("no observations to train on")
    if n_sweeps < 1:
        raise InputError("n_sweeps must be >= 1")
    if vocab_size is None:
        vocab_size = max(r.taxon for r in records) + 1
    state = TopicState(vocab_size, grid, rng_seed)
    online_step(state, stream_order(records, rng), h, rng, refine_budget=0)
    for _ in range(n_sweeps):
        gibbs_sweep(state, h, rng)
    return state, phi_posterior(state, h), cell_theta(state, h)


def log_joint(state: TopicState, h: Hyperparameters) -> float:
    """Sum of log unnormalized leave-one-out conditionals of the current labels.

    A convergence diagnostic, not a normalized likelihood.
    """
    n = state.n_observations
    if n == 0:
        return 0.0
    z = np.asarray(state.labels, dtype=np.intp)
    w = np.asarray(state._taxa, dtype=np.intp)
    rows = np.asarray(state._obs_row, dtype=np.intp)
    V = state.vocab_size
    phi = (state._ntv[z, w] - 1 + h.beta) / (state._nt[z] - 1 + V * h.beta)
    nbr = state.neighborhood_count_matrix()
    crp = nbr[rows, z] - 1 + h.alpha
    return float(np.sum(np.log(phi)) + np.sum(np.log(crp)))


@dataclass(eq=False)
class TrainedModel:
    """Frozen training statistics with live communities compacted to ids 0..K-1."""

    grid: GridConfig
    hyperparameters: Hyperparameters
    vocab_names: list
    topic_taxon_counts: np.ndarray
    cell_topic_counts: dict
    rng_seed: int | None = None
    n_observations: int = 0

    def __post_init__(self):
        self.topic_taxon_counts = np.asarray(self.topic_taxon_counts, dtype=np.int64).reshape(-1, len(self.vocab_names))
        K = self.topic_taxon_counts.shape[0]
        if (self.topic_taxon_counts < 0).any():
            raise InputError("negative community/taxon counts")
        cells = {}
        for c, v in self.cell_topic_counts.items():
            v = np.asarray(v, dtype=np.int64)
            if v.shape != (K,):
                raise InputError(f"cell {tuple(c)} has {v.size} community counts, expected {K}")
            if (v < 0).any():
                raise InputError(f"negative counts in cell {tuple(c)}")
            cells[CellKey(*c)] = v
        self.cell_topic_counts = cells

    @classmethod
    def from_state(cls, state: TopicState, h: Hyperparameters, vocab_names=None) -> "TrainedModel":
        ids, counts = state.live_counts()
        if vocab_names is None:
            vocab_names = [str(v) for v in range(state.vocab_size)]
        ids = list(ids)
        cells = {c: state._ncell[r, ids].copy() for c, r in sorted(state._cell_rows.items())}
        return cls(state.grid, h, list(vocab_names), counts, cells, state.rng_seed, state.n_observations)

    @property
    def vocab_size(self) -> int:
        return len(self.vocab_names)

    @property
    def n_topics(self) -> int:
        return self.topic_taxon_counts.shape[0]

    def live_counts(self):
        return tuple(range(self.n_topics)), self.topic_taxon_counts.copy()

    def phi(self) -> CommunityMatrix:
        return phi_posterior(self, self.hyperparameters)
