class InvalidInputError(ValueError):
    """Malformed model, state, site index or parameter."""


class ResourceCapError(RuntimeError):
    """Requested structure exceeds the dense size caps."""


class NumericalError(RuntimeError):
    """Eigensolver or other numerical routine failed."""
