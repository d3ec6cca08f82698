"""CSV ingestion, model snapshots and result export."""
from __future__ import annotations

import csv
import json
import logging
import math
import os
import tempfile
from contextlib import contextmanager

import numpy as np

from .data import SampleDistribution, SurveyDataset
from .errors import InputError, ParseError, SnapshotError
from .grid import CellKey, GridConfig
from .topic_model import Hyperparameters, TrainedModel

log = logging.getLogger(__name__)

SNAPSHOT_VERSION = 1
EARTH_RADIUS_M = 6371000.0

COUNTS_HEADER = ("sample_id", "time_s", "easting_m", "northing_m")
LATLON_HEADER = ("sample_id", "time_s", "lat_deg", "lon_deg")


@contextmanager
def atomic_write(path, mode="w", **kwargs):
    """Write to a temporary file next to ``path`` and rename it into place."""
    path = os.fspath(path)
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=d)
    try:
        with os.fdopen(fd, mode, **kwargs) as f:
            yield f
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ---- ingestion ---------------------------------------------------------------

def _read_rows(path, fixed):
    try:
        f = open(path, newline="")
    except OSError as e:
        raise InputError(f"cannot open {path}: {e.strerror}") from None
    with f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty file", 1, path) from None
        header = [h.strip() for h in header]
        if tuple(header[:4]) != fixed or len(header) < 5:
            raise ParseError(f"malformed header; expected {','.join(fixed)},<taxon_1>,...", 1, path)
        taxa = header[4:]
        if len(set(taxa)) != len(taxa) or any(not t for t in taxa):
            raise ParseError("duplicate or empty taxon names in header", 1, path)
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ParseError(f"expected {len(header)} fields, got {len(row)}", lineno, path)
            try:
                sid = int(row[0])
                a, b, c = (float(x) for x in row[1:4])
                counts = [int(x) for x in row[4:]]
            except ValueError as e:
                raise ParseError(f"non-numeric field ({e})", lineno, path) from None
            if not all(math.isfinite(x) for x in (a, b, c)):
                raise ParseError("non-finite coordinate", lineno, path)
            if any(x < 0 for x in counts):
                raise ParseError("negative count", lineno, path)
            rows.append((lineno, sid, a, b, c, counts))
    if not rows:
        raise InputError(f"{path}: no samples")
    return taxa, rows


def _build(taxa, rows, path):
    samples, dropped, seen = [], 0, set()
    for lineno, sid, t, e, n, counts in rows:
        if sid in seen:
            raise ParseError(f"duplicate sample_id {sid}", lineno, path)
        seen.add(sid)
        if sum(counts) == 0:
            dropped += 1
            continue
        samples.append(SampleDistribution(sid, (t, e, n), np.array(counts)))
    if dropped:
        log.warning("%s: dropped %d all-zero rows", path, dropped)
    if not samples:
        raise InputError(f"{path}: no samples")
    return SurveyDataset(list(taxa), samples, dropped_rows=dropped)


def load_counts_csv(path) -> SurveyDataset:
    """Wide per-sample count table with projected coordinates in meters."""
    taxa, rows = _read_rows(path, COUNTS_HEADER)
    return _build(taxa, rows, path)


def project_equirectangular(lat, lon, lat0, lon0, ref_lat):
    k = math.pi / 180.0
    easting = EARTH_RADIUS_M * (lon - lon0) * k * math.cos(ref_lat * k)
    northing = EARTH_RADIUS_M * (lat - lat0) * k
    return easting, northing


def unproject_equirectangular(easting, northing, lat0, lon0, ref_lat):
    k = math.pi / 180.0
    lat = lat0 + northing / (EARTH_RADIUS_M * k)
    lon = lon0 + easting / (EARTH_RADIUS_M * k * math.cos(ref_lat * k))
    return lat, lon


def load_latlon_csv(path, ref_lat: float | None = None) -> SurveyDataset:
    """Like :func:`load_counts_csv` but with geographic coordinates.

    Positions are projected about ``ref_lat`` (default: the first sample's
    latitude) relative to the first sample of the file.
    """
    taxa, rows = _read_rows(path, LATLON_HEADER)
    for lineno, _, _, lat, lon, _ in rows:
        if abs(lat) > 90 or abs(lon) > 180:
            raise ParseError(f"coordinate out of range (lat={lat}, lon={lon})", lineno, path)
    lat0, lon0 = rows[0][3], rows[0][4]
    if ref_lat is None:
        ref_lat = lat0
    projected = []
    for lineno, sid, t, lat, lon, counts in rows:
        e, n = project_equirectangular(lat, lon, lat0, lon0, ref_lat)
        projected.append((lineno, sid, t, e, n, counts))
    return _build(taxa, projected, path)


def write_counts_csv(dataset: SurveyDataset, path):
    with atomic_write(path, newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(list(COUNTS_HEADER) + list(dataset.vocab_names))
        for s in dataset.samples:
            w.writerow([s.sample_id, repr(s.location[0]), repr(s.location[1]), repr(s.location[2])]
                       + [int(c) for c in s.counts])


# ---- model snapshots ---------------------------------------------------------

def model_to_dict(model: TrainedModel) -> dict:
    cells = {c.to_str(): [int(x) for x in v]
             for c, v in sorted(model.cell_topic_counts.items())}
    return {
        "version": SNAPSHOT_VERSION,
        "grid_config": model.grid.to_dict(),
        "hyperparameters": model.hyperparameters.to_dict(),
        "vocab_size": model.vocab_size,
        "vocab_names": list(model.vocab_names),
        "topic_taxon_counts": [[int(x) for x in row] for row in model.topic_taxon_counts],
        "cell_topic_counts": cells,
        "rng_seed": model.rng_seed,
        "n_observations": int(model.n_observations),
    }


def model_from_dict(d: dict) -> TrainedModel:
    if not isinstance(d, dict):
        raise SnapshotError("snapshot must be a JSON object")
    if "version" not in d:
        raise SnapshotError("unversioned snapshot")
    if d["version"] != SNAPSHOT_VERSION:
        raise SnapshotError(f"snapshot version {d['version']!r} is not supported (expected {SNAPSHOT_VERSION})")
    try:
        grid = GridConfig(**d["grid_config"])
        h = Hyperparameters(**d["hyperparameters"])
        names = list(d["vocab_names"])
        if len(names) != d["vocab_size"]:
            raise SnapshotError("vocab_names length differs from vocab_size")
        counts = np.array(d["topic_taxon_counts"], dtype=np.int64).reshape(-1, len(names))
        cells = {CellKey.from_str(k): v for k, v in d["cell_topic_counts"].items()}
        model = TrainedModel(grid, h, names, counts, cells, d.get("rng_seed"), int(d["n_observations"]))
    except SnapshotError:
        raise
    except (KeyError, TypeError, ValueError) as e:
        raise SnapshotError(f"malformed snapshot: {e}") from None
    if (counts < 0).any():
        raise SnapshotError("negative counts in snapshot")
    if counts.sum() != model.n_observations or sum(v.sum() for v in model.cell_topic_counts.values()) != counts.sum():
        raise SnapshotError("snapshot counts are inconsistent")
    return model


def save_model(model: TrainedModel, path):
    with atomic_write(path) as f:
        json.dump(model_to_dict(model), f, indent=1, sort_keys=True)
        f.write("\n")


def load_model(path) -> TrainedModel:
    try:
        with open(path) as f:
            d = json.load(f)
    except OSError as e:
        raise SnapshotError(f"cannot open {path}: {e.strerror}") from None
    except json.JSONDecodeError as e:
        raise SnapshotError(f"{path}: corrupt snapshot ({e})") from None
    return model_from_dict(d)


# ---- result export -----------------------------------------------------------

def write_field_csv(field, path):
    with atomic_write(path, newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["t_idx", "e_idx", "n_idx", "value"])
        for c in sorted(field.values):
            w.writerow([c[0], c[1], c[2], repr(field.values[c])])


def write_hotspots_csv(cells, path):
    with atomic_write(path, newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["t_idx", "e_idx", "n_idx"])
        for c in sorted(tuple(c) for c in cells):
            w.writerow(list(c))


def write_pr_csv(rows, path):
    """``rows``: iterable of (strategy, taxon, PRPoint)."""
    with atomic_write(path, newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["strategy", "taxon", "tau", "tp", "fp", "fn", "tn", "precision", "recall"])
        for strategy, taxon, p in rows:
            w.writerow([strategy, taxon, repr(p.tau), p.tp, p.fp, p.fn, p.tn, repr(p.precision), repr(p.recall)])


def write_json(obj, path):
    with atomic_write(path) as f:
        json.dump(obj, f, indent=1, sort_keys=True)
        f.write("\n")
