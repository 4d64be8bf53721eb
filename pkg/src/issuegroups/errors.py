"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Domain data violates an invariant (duplicate id, zero vector, id mismatch)."""


class SchemaError(ValidationError):
    """An input file is missing required columns/fields or has the wrong shape."""


class FormatError(ValueError):
    """A file parses but its contents are internally inconsistent."""


class ProviderError(RuntimeError):
    """An embedding provider failed to produce vectors."""


class MissingEmbeddingError(ProviderError):
    """A stored-embeddings provider was asked for an id it does not hold."""
