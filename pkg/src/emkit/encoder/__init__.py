"""The desk-scale Transformer matcher: model, training, checkpoints."""

from .checkpoint import Checkpoint, CheckpointError, load_checkpoint, save_checkpoint
from .config import ConfigError, EncoderConfig, TrainConfig, linear_decay
from .gradcheck import gradient_check, loss_and_grads
from .model import EncoderError, EncoderModel, assemble_record
from .training import TrainingDiverged, build_model, train
from .vocab import Vocabulary

__all__ = [
    "Checkpoint",
    "CheckpointError",
    "ConfigError",
    "EncoderConfig",
    "EncoderError",
    "EncoderModel",
    "TrainConfig",
    "TrainingDiverged",
    "Vocabulary",
    "assemble_record",
    "build_model",
    "gradient_check",
    "linear_decay",
    "load_checkpoint",
    "loss_and_grads",
    "save_checkpoint",
    "train",
]
