"""Exception hierarchy shared across the package.

The CLI maps these onto stable exit codes: ValidationError -> 2,
DataError -> 3, ModelFormatError (and subclasses) -> 4.
"""


class DualCentroidError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(DualCentroidError):
    """Invalid configuration or invalid caller-supplied values."""


class DataError(DualCentroidError):
    """Unreadable, unparseable, or structurally broken dataset input."""


class ModelFormatError(DualCentroidError):
    """Model file cannot be read safely."""


class UnsupportedVersionError(ModelFormatError):
    """Model file carries a format version this build does not understand."""


class ChecksumError(ModelFormatError):
    """Model file content does not match its recorded checksum."""


class TruncatedModelError(ModelFormatError):
    """Model file ends before all declared sections are present."""


class EmbeddingNotFoundError(DataError):
    """A precomputed-embedding lookup key is absent from the sidecar table."""

    def __init__(self, key: str):
        super().__init__(f"embedding not found for key: {key!r}")
        self.key = key


class ReclusterRequiredError(DualCentroidError):
    """Incremental update touched multi-centroid nodes; those need retraining."""

    def __init__(self, node_paths):
        paths = ", ".join(sorted(node_paths))
        super().__init__(
            "incremental update requires recluster: multi-centroid nodes "
            f"affected ({paths}); retrain these nodes or the full model"
        )
        self.node_paths = tuple(sorted(node_paths))
