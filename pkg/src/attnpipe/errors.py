"""Exception types shared across the pipeline."""


class AttnPipeError(Exception):
    """Base class for all pipeline errors."""


class InvalidSpecError(AttnPipeError):
    """A filter or network specification violates its invariants."""


class InvalidArgumentError(AttnPipeError):
    """An operation argument is out of its documented domain."""


class IngestError(AttnPipeError):
    """An input file does not match its documented format."""


class AlignmentError(AttnPipeError):
    """Streams handed to the fusion stage are not time-aligned."""


class InvalidDatasetError(AttnPipeError):
    """A training dataset is empty or carries unlabeled samples."""


class UndefinedMetricError(AttnPipeError):
    """A saliency metric is undefined for the given inputs."""


class ConfigError(AttnPipeError):
    """A run-configuration file failed validation."""
