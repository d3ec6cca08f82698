"""Observation containers shared by the model, the baselines and the loaders."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError


@dataclass(frozen=True)
class ObservationRecord:
    """A single classified detection at a spatio-temporal location."""

    taxon: int
    time: float
    easting: float
    northing: float
    sample_id: int = 0

    def __post_init__(self):
        if self.taxon < 0:
            raise InputError(f"negative taxon id {self.taxon}")
        if not all(math.isfinite(x) for x in (self.time, self.easting, self.northing)):
            raise InputError(f"non-finite location for sample {self.sample_id}")

    @property
    def location(self) -> tuple:
        return (self.time, self.easting, self.northing)


@dataclass(frozen=True, eq=False)
class SampleDistribution:
    """Per-sample taxon counts, e.g. one water sample run through the classifier."""

    sample_id: int
    location: tuple
    counts: np.ndarray
    rel_abundance: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.ndim != 1:
            raise InputError("counts must be a 1-d vector")
        if (counts < 0).any():
            raise InputError(f"sample {self.sample_id}: negative count")
        total = counts.sum()
        if total == 0:
            raise InputError(f"sample {self.sample_id}: all counts are zero")
        counts.setflags(write=False)
        rel = counts / total
        rel.setflags(write=False)
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "rel_abundance", rel)
        object.__setattr__(self, "location", tuple(float(x) for x in self.location))

    @property
    def time(self) -> float:
        return self.location[0]

    @property
    def vocab_size(self) -> int:
        return len(self.counts)

    def records(self, exclude_taxon=None) -> list:
        t, e, n = self.location
        out = []
        for v, c in enumerate(self.counts):
            if v == exclude_taxon:
                continue
            out.extend([ObservationRecord(v, t, e, n, self.sample_id)] * int(c))
        return out


@dataclass
class SurveyDataset:
    vocab_names: list
    samples: list
    dropped_rows: int = 0

    def __post_init__(self):
        V = len(self.vocab_names)
        for s in self.samples:
            if len(s.counts) != V:
                raise InputError(f"sample {s.sample_id} has {len(s.counts)} counts, expected {V}")
        self.samples = sorted(self.samples, key=lambda s: s.time)

    @property
    def vocab_size(self) -> int:
        return len(self.vocab_names)

    @property
    def records(self) -> list:
        return records_of(self.samples)

    def most_frequent_taxa(self, n: int) -> list:
        totals = np.sum([s.counts for s in self.samples], axis=0)
        order = sorted(range(len(totals)), key=lambda v: (-totals[v], v))
        return order[:n]


def records_of(samples, exclude_taxon=None) -> list:
    out = []
    for s in samples:
        out.extend(s.records(exclude_taxon))
    return out
