"""Walk through predicting hotspots of a taxon that the test half never shows.

Run with ``python3 demos/hotspots_on_synthetic_track.py``.  Takes about 20 s.
"""
import numpy as np

from hotspot_topics import evaluation as ev
from hotspot_topics.data import records_of
from hotspot_topics.grid import GridConfig, cell_of
from hotspot_topics.prediction import (assign_test_topics, extract_hotspots, heldout_phi, median_smooth,
                                       predict_target_field)
from hotspot_topics.synthetic import fixture_statistics, generate_synthetic, standard_spec
from hotspot_topics.topic_model import Hyperparameters, TrainedModel, batch_train

SEED = 2

# A 1000 km track of 200 stations, each with 100 classified organisms drawn
# from five hidden communities.  Community mixtures change character halfway.
dataset, truth = generate_synthetic(standard_spec(SEED))
stats = fixture_statistics(dataset, truth)
print(f"{stats['n_samples']} samples, {stats['n_records']} detections, {dataset.vocab_size} taxa")

# Learn communities from the first half of the track only.
train, test = ev.split_samples(dataset.samples, "halves")
h = Hyperparameters(alpha=1.0, beta=10.0, gamma=3e-3)
grid = GridConfig(cell_size_m=5000.0, neighborhood_depth=0)
state, _, _ = batch_train(records_of(train), h, grid, np.random.default_rng(SEED), n_sweeps=30,
                          vocab_size=dataset.vocab_size)
model = TrainedModel.from_state(state, h, dataset.vocab_names)
print(f"learned {model.n_topics} communities from {len(train)} training samples")

# Pick the most common taxon and pretend the second half never saw it.
target = dataset.most_frequent_taxa(1)[0]
test_records = [r for s in test for r in s.records(exclude_taxon=target)]
theta = assign_test_topics(model, test_records, target, np.random.default_rng(SEED), n_sweeps=10)
raw = predict_target_field(theta, model.phi(), target)
smooth = median_smooth(raw, 15000.0, grid)
print(f"held-out community matrix has {heldout_phi(model, h, target).phi.shape[1]} taxa per row")

values = np.array(sorted(smooth.values.values()))
tau = float(np.quantile(values, 0.9))
hot = extract_hotspots(smooth, tau)
truth_ids = ev.ground_truth_hotspots(test, target, 12)
hot_ids = {s.sample_id for s in test if cell_of(s.location, grid) in hot}
print(f"taxon {target}: {len(hot)} hotspot cells above tau={tau:.3f}, "
      f"{len(hot_ids & truth_ids)} of the {len(truth_ids)} truly richest samples among them")

# Compare the three strategies on the same held-out taxon.
scores = {
    "topic": ev.evaluate_topic(model, test, [target], [15000.0], 12, SEED, 10)[0].auc,
    "nn": ev.evaluate_nn(train, test, [target], [15000.0], 12, grid)[0].auc,
    "kmeans": ev.evaluate_kmeans(train, test, [target], [15000.0], 12, grid, model.n_topics, SEED)[0].auc,
}
for name, auc in scores.items():
    print(f"  {name:7s} AUC-PR {auc:.3f}")
