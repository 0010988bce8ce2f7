from .checkpoint import (
    Checkpoint, CheckpointError, VocabularyMismatch, checkpoint_digest, load_checkpoint,
    model_from_checkpoint, read_checkpoint, save_checkpoint,
)
from .model import (
    GPT, REFERENCE_CONFIG, ConfigError, ModelConfig, count_parameters, forward, init_model, loss,
    next_distribution, next_distributions,
)
from .train import REFERENCE_TRAIN_CONFIG, TrainConfig, learning_rate, train

__all__ = [
    "Checkpoint", "CheckpointError", "ConfigError", "GPT", "ModelConfig", "REFERENCE_CONFIG",
    "REFERENCE_TRAIN_CONFIG", "TrainConfig", "VocabularyMismatch", "checkpoint_digest",
    "count_parameters", "forward", "init_model", "learning_rate", "load_checkpoint", "loss",
    "model_from_checkpoint", "next_distribution", "next_distributions", "read_checkpoint",
    "save_checkpoint", "train",
]
