"""Desk-scale neural-operator training on IEDA dataset files."""

from .data import DatasetFileError, LoadedDataset, load_dataset, load_many
from .models import EncoderDecoder2d, SpectralOperator2d, build_model
from .train import TrainResult, TrainRun, evaluate, rollout, train, write_metrics

__version__ = "0.1.0"
