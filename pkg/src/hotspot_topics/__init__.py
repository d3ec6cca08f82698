"""Spatial community models for predicting hotspots of rarely observed taxa."""
from .baselines import CentroidSet, kmeans_fit, kmeans_predict, masked_distance, nn_predict
from .data import ObservationRecord, SampleDistribution, SurveyDataset
from .errors import InputError, ParseError, SnapshotError
from .evaluation import (PRPoint, SplitRegime, SweepConfig, aggregate_pr, auc_pr, ground_truth_hotspots,
                         run_sweep, score_predictions, split_samples)
from .grid import CellKey, GridConfig, cell_of, neighborhood
from .io import load_counts_csv, load_latlon_csv, load_model, save_model
from .prediction import (HotspotConfig, ScalarField, assign_test_topics, extract_hotspots, heldout_phi,
                         median_smooth, predict_target_field)
from .synthetic import SynthSpec, generate_synthetic, standard_spec
from .topic_model import (CellTopicField, CommunityMatrix, Hyperparameters, TopicState, TrainedModel,
                          batch_train, gibbs_resample, log_joint, online_step, phi_posterior)

__version__ = "0.1.0"
