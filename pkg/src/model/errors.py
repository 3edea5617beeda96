class ModelError(ValueError):
    """Raised when a model cannot be fitted or queried with the given input."""
