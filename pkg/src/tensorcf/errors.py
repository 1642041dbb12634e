class BelowThresholdError(ValueError):
    """Sampling density is at or below the connectivity threshold (p^2 n^3 <= 1)."""


class DenseRegimeError(ValueError):
    """The clipping threshold is undefined because p * n >= 1."""


class EmptyLayerError(ValueError):
    """A BFS layer or restricted pair set needed for a computation is empty."""
