import numpy as np
import pytest

from hotspot_topics.data import ObservationRecord, SampleDistribution, SurveyDataset, records_of
from hotspot_topics.errors import InputError
from hotspot_topics.synthetic import SynthSpec, fixture_statistics, generate_synthetic, standard_spec


def test_sample_distribution_normalizes_and_freezes():
    s = SampleDistribution(3, (10, 0, 0), [1, 3, 0])
    np.testing.assert_allclose(s.rel_abundance, [0.25, 0.75, 0.0])
    assert s.time == 10.0 and s.vocab_size == 3
    with pytest.raises(ValueError):
        s.counts[0] = 9


@pytest.mark.parametrize("counts", [[0, 0, 0], [1, -1, 2], [[1, 2]]])
def test_sample_distribution_rejects_bad_counts(counts):
    with pytest.raises(InputError):
        SampleDistribution(0, (0, 0, 0), counts)


def test_record_validation():
    with pytest.raises(InputError):
        ObservationRecord(-1, 0.0, 0.0, 0.0)
    with pytest.raises(InputError):
        ObservationRecord(0, float("inf"), 0.0, 0.0)


def test_records_exclude_target():
    s = SampleDistribution(1, (0, 5, 5), [2, 1, 4])
    assert [r.taxon for r in s.records(exclude_taxon=2)] == [0, 0, 1]
    assert len(records_of([s, s])) == 14


def test_dataset_checks_vocabulary_and_orders_by_time():
    a = SampleDistribution(1, (50, 0, 0), [1, 0])
    b = SampleDistribution(2, (10, 0, 0), [0, 1])
    ds = SurveyDataset(["x", "y"], [a, b])
    assert [s.sample_id for s in ds.samples] == [2, 1]
    with pytest.raises(InputError):
        SurveyDataset(["x"], [a])


def test_most_frequent_taxa_tie_goes_to_lower_id():
    ds = SurveyDataset(list("abcd"), [SampleDistribution(0, (0, 0, 0), [2, 5, 5, 1])])
    assert ds.most_frequent_taxa(3) == [1, 2, 0]


# ---- synthetic generator -----------------------------------------------------

def _bytes(ds):
    return b"".join(np.asarray(s.counts).tobytes() + np.asarray(s.location).tobytes() for s in ds.samples)


def test_generator_is_deterministic():
    spec = SynthSpec(n_cells=20, obs_per_cell=30, seed=9)
    (a, ta), (b, tb) = generate_synthetic(spec), generate_synthetic(spec)
    assert _bytes(a) == _bytes(b)
    np.testing.assert_array_equal(ta.phi, tb.phi)
    np.testing.assert_array_equal(ta.theta, tb.theta)
    assert _bytes(generate_synthetic(SynthSpec(n_cells=20, obs_per_cell=30, seed=10))[0]) != _bytes(a)


def test_track_geometry():
    ds, truth = generate_synthetic(SynthSpec(n_cells=4, obs_per_cell=5, seed=0))
    east = [s.location[1] for s in ds.samples]
    assert np.diff(east).tolist() == [5000.0] * 3
    assert truth.theta.shape == (4, 5) and truth.phi.shape == (5, 20)
    assert all(s.counts.sum() == 5 for s in ds.samples)


def test_single_community_frequencies_converge():
    ds, truth = generate_synthetic(SynthSpec(n_communities=1, vocab_size=20, n_cells=100, obs_per_cell=1000,
                                             phi_concentration=0.5, seed=2))
    totals = np.sum([s.counts for s in ds.samples], axis=0)
    assert totals.sum() == 10**5
    assert 0.5 * np.abs(totals / totals.sum() - truth.phi[0]).sum() < 0.01
    np.testing.assert_allclose(truth.theta, 1.0)


def test_no_smoothing_keeps_raw_draws():
    spec = SynthSpec(n_cells=50, obs_per_cell=1, spatial_smoothness=0.0, seed=4)
    _, truth = generate_synthetic(spec)
    rng = np.random.default_rng(4)
    phi = rng.dirichlet(np.full(20, 0.1), size=5)
    raw = np.array([rng.dirichlet(np.full(5, 0.1)) for _ in range(50)])
    np.testing.assert_array_equal(truth.phi, phi)
    np.testing.assert_array_equal(truth.theta, raw)


def test_smoothing_blends_neighbors():
    _, t0 = generate_synthetic(SynthSpec(n_cells=30, obs_per_cell=1, spatial_smoothness=0.0, seed=6))
    _, t1 = generate_synthetic(SynthSpec(n_cells=30, obs_per_cell=1, spatial_smoothness=0.4, seed=6))
    np.testing.assert_allclose(t1.theta[5], 0.6 * t0.theta[5] + 0.2 * (t0.theta[4] + t0.theta[6]))
    np.testing.assert_allclose(t1.theta.sum(axis=1), 1.0)


@pytest.mark.parametrize("kw", [dict(n_cells=0), dict(phi_concentration=0.0), dict(spatial_smoothness=1.5),
                                dict(second_half_theta_concentration=-1.0)])
def test_spec_validation(kw):
    with pytest.raises(InputError):
        SynthSpec(**kw)


def test_spec_dict_round_trip():
    spec = standard_spec(3)
    assert SynthSpec.from_dict(spec.to_dict()) == spec
    with pytest.raises(InputError):
        SynthSpec.from_dict({"bogus": 1})


def test_standard_fixture_shape_and_statistics():
    spec = standard_spec(0)
    assert (spec.n_communities, spec.vocab_size, spec.n_cells, spec.obs_per_cell, spec.phi_concentration) == \
        (5, 20, 200, 100, 0.1)
    ds, truth = generate_synthetic(spec)
    stats = fixture_statistics(ds, truth)
    assert stats["n_samples"] == 200 and stats["n_records"] == 20000
    assert stats["min_community_tv_distance"] > 0.3
    assert sum(stats["taxon_base_rates"]) == pytest.approx(1.0)
