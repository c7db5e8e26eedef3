"""Exception types shared across the package.

Argument and dimension problems raise plain ValueError; the classes here
cover failures that only show up at runtime on real data.
"""


class WhiteningError(RuntimeError):
    """Noise covariance cannot be whitened (singular or near-singular)."""


class EstimationError(RuntimeError):
    """A data-driven parameter estimate is outside its valid range."""


class NumericError(RuntimeError):
    """A numeric procedure failed (non-convergence, pole, undefined ratio)."""
