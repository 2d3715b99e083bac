"""Semi-supervised classification with alpha-divergence consistency.

AlphaMatch alternates a closed-form update of a target distribution ``gamma``
(a weighted alpha-barycenter of the model's predictions on a point and its
perturbations) with a gradient step on the model parameters.
"""

from ._backend import BACKEND
from .errors import DomainError, NumericError, OracleConvergenceError, SpecError

__version__ = "0.1.0"

__all__ = ["BACKEND", "DomainError", "NumericError", "OracleConvergenceError", "SpecError", "__version__"]
