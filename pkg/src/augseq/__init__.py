"""Learned data-augmentation policies over sequences of transformation functions."""
from .catalog import build_tf_set, rebuild_tf_set
from .config import ConfigError, TrainingConfig, load_config, validate_config
from .core import TfRegistry, Trajectory, apply_sequence, apply_tf, make_rng, register_tf, rollout
from .diagnostics import generalized_jaccard, mean_pairwise_jaccard, ngram_uniqueness
from .discriminator import MLPDiscriminator, OracleDiscriminator
from .generator import LSTMGenerator, MeanFieldGenerator, SGDMomentum
from .training import adversarial_train, null_rate

__version__ = "0.1.0"
