"""Predict fine-tuning performance of language models from probing accuracies."""

__version__ = "0.1.0"

from .datamodel import (
    EmbeddingDataset,
    FeatureId,
    ModelId,
    ProbeMatrix,
    ProbeMethod,
    ScoreTable,
    StudyConfig,
    join,
)
from .errors import DataError, ProbeOracleError

__all__ = [
    "__version__",
    "DataError",
    "EmbeddingDataset",
    "FeatureId",
    "ModelId",
    "ProbeMatrix",
    "ProbeMethod",
    "ProbeOracleError",
    "ScoreTable",
    "StudyConfig",
    "join",
]
