"""Transformer hidden-state extraction into .pemb embedding files."""

from .errors import ExtractorError, FormatError, LayerOutOfRange, ModelLoadError
from .extract import ExtractionJob, ExtractionSummary, extract

__version__ = "0.1.0"

__all__ = [
    "ExtractionJob",
    "ExtractionSummary",
    "ExtractorError",
    "FormatError",
    "LayerOutOfRange",
    "ModelLoadError",
    "extract",
]
