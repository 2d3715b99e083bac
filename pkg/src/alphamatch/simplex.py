"""Probability vectors and the KL / alpha-divergence family.

Probability vectors are plain 1-D float64 numpy arrays whose entries are
floored at :data:`~alphamatch.constants.EPS_FLOOR` and sum to one.  Every
function here is pure.
"""

import math

import numpy as np

from .constants import ALPHA_SWITCH, EPS_FLOOR
from .errors import DomainError, NumericError

__all__ = [
    "normalize",
    "softmax",
    "kl_divergence",
    "alpha_divergence",
    "rho_alpha",
    "rho_fixmatch",
    "argmax_first",
    "check_prob_vector",
]


def _vector(v, name="input"):
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1:
        raise DomainError(f"{name} must be a 1-D vector, got shape {v.shape}")
    return v


def _pair(p, q):
    p, q = _vector(p, "p"), _vector(q, "q")
    if p.shape != q.shape:
        raise DomainError(f"dimension mismatch: {p.shape[0]} vs {q.shape[0]}")
    return p, q


def check_prob_vector(p, tol=1e-9):
    """Raise :class:`DomainError` unless ``p`` is a point on the simplex."""
    p = _vector(p, "p")
    if p.size < 2:
        raise DomainError("a probability vector needs at least 2 entries")
    if not np.all(np.isfinite(p)) or np.any(p < 0):
        raise DomainError("probabilities must be finite and nonnegative")
    if abs(p.sum() - 1.0) > tol:
        raise DomainError(f"probabilities sum to {p.sum()!r}, not 1")
    return p


def normalize(raw):
    """Floor ``raw`` at ``EPS_FLOOR`` and rescale it to sum to one."""
    raw = _vector(raw, "raw")
    if raw.size < 2:
        raise DomainError("need at least 2 entries")
    if not np.all(np.isfinite(raw)):
        raise NumericError("non-finite entry in raw weights")
    if np.any(raw < 0) or not np.any(raw > 0):
        raise DomainError("raw weights must be nonnegative with at least one positive entry")
    out = np.maximum(raw, EPS_FLOOR)
    return out / out.sum()


def softmax(logits):
    """Softmax of ``logits`` followed by the floor clamp."""
    logits = _vector(logits, "logits")
    if not np.all(np.isfinite(logits)):
        raise NumericError("logits must be finite")
    e = np.exp(logits - logits.max())
    return normalize(e / e.sum())


def kl_divergence(p, q):
    """``KL(p || q) = sum_y p_y log(p_y / q_y)``."""
    p, q = _pair(p, q)
    return float(np.sum(p * (np.log(p) - np.log(q))))


def _log_power_sum(p, q, alpha):
    """``log sum_y p_y**alpha * q_y**(1 - alpha)`` evaluated stably."""
    e = alpha * np.log(p) + (1.0 - alpha) * np.log(q)
    m = e.max()
    return m + math.log(np.exp(e - m).sum())


def alpha_divergence(p, q, alpha):
    """Alpha-divergence ``1/(a(a-1)) * (sum p^a q^(1-a) - 1)``.

    Within ``ALPHA_SWITCH`` of 1 this returns ``KL(p || q)``; at or below
    ``ALPHA_SWITCH`` it returns ``KL(q || p)``.
    """
    p, q = _pair(p, q)
    if not alpha > 0:
        raise DomainError(f"alpha must be positive, got {alpha}")
    if alpha <= ALPHA_SWITCH:
        return kl_divergence(q, p)
    if abs(alpha - 1.0) <= ALPHA_SWITCH:
        return kl_divergence(p, q)
    # expm1 keeps precision when the power sum is close to 1
    return math.expm1(_log_power_sum(p, q, alpha)) / (alpha * (alpha - 1.0))


def rho_alpha(p_t, p_theta, alpha):
    """Importance weights ``(p_t / p_theta) ** (alpha - 1)``, computed from logs."""
    p_t, p_theta = _pair(p_t, p_theta)
    if not alpha > 0:
        raise DomainError(f"alpha must be positive, got {alpha}")
    if alpha == 1.0:
        return np.ones_like(p_t)
    return np.exp((alpha - 1.0) * (np.log(p_t) - np.log(p_theta)))


def argmax_first(p):
    """Index of the largest entry, ties going to the smallest index."""
    return int(np.argmax(_vector(p, "p")))


def rho_fixmatch(p_t, tau):
    """Hard-label indicator: one at the argmax when its confidence reaches ``tau``."""
    p_t = _vector(p_t, "p_t")
    out = np.zeros_like(p_t)
    y = argmax_first(p_t)
    if p_t[y] >= tau:
        out[y] = 1.0
    return out
