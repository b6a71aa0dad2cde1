"""Error taxonomy for the extraction client."""


class ExtractorError(Exception):
    """Base class; the CLI maps these to exit code 2."""


class ModelLoadError(ExtractorError):
    """Checkpoint or tokenizer could not be loaded."""


class LayerOutOfRange(ExtractorError):
    """A requested layer index does not exist in the model."""


class FormatError(ExtractorError):
    """Task file malformed, or constraints on its contents violated."""
