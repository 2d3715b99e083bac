"""Stochastic, label-preserving perturbations of feature vectors.

These stand in for image augmentation: ``gaussian`` is the weak kernel,
``gaussian-rotate`` and ``coordinate-dropout`` the strong ones.
"""

from dataclasses import dataclass, asdict

import numpy as np

from .errors import DomainError

KINDS = ("gaussian", "gaussian-rotate", "coordinate-dropout")

__all__ = ["KINDS", "PerturbationKernel", "sample_perturbation", "sample_n", "perturb_batch"]


@dataclass(frozen=True)
class PerturbationKernel:
    kind: str = "gaussian"
    sigma: float = 0.05
    max_angle: float = 0.0
    drop_prob: float = 0.0
    center: tuple = (0.0, 0.0)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown kernel kind {self.kind!r}; expected one of {KINDS}")
        if not self.sigma >= 0:
            raise DomainError(f"sigma must be >= 0, got {self.sigma}")
        if not self.max_angle >= 0:
            raise DomainError(f"max_angle must be >= 0, got {self.max_angle}")
        if not 0.0 <= self.drop_prob < 1.0:
            raise DomainError(f"drop_prob must lie in [0, 1), got {self.drop_prob}")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))

    def to_dict(self):
        d = asdict(self)
        d["center"] = list(self.center)
        return d


def perturb_batch(kernel, X, n, rng):
    """Draw ``n`` perturbations of every row of ``X``; returns shape ``(m, n, D)``.

    Random numbers are consumed in a fixed order (angles or dropout masks
    first, then noise) so the result depends only on the generator state.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n}")
    m, D = X.shape
    out = np.broadcast_to(X[:, None, :], (m, n, D)).copy()
    if kernel.kind == "gaussian-rotate":
        if D != 2:
            raise DomainError("gaussian-rotate needs 2-D features")
        theta = rng.uniform(-kernel.max_angle, kernel.max_angle, size=(m, n))
        c, s = np.cos(theta), np.sin(theta)
        cx, cy = kernel.center
        dx, dy = out[..., 0] - cx, out[..., 1] - cy
        out[..., 0] = cx + c * dx - s * dy
        out[..., 1] = cy + s * dx + c * dy
    elif kernel.kind == "coordinate-dropout":
        keep = rng.random(size=(m, n, D)) >= kernel.drop_prob
        out *= keep
    if kernel.sigma > 0:
        out += kernel.sigma * rng.standard_normal(size=(m, n, D))
    return out


def sample_n(kernel, x, n, rng):
    """``n`` independent perturbations of the single point ``x``, as an ``(n, D)`` array."""
    x = np.asarray(x, dtype=np.float64)
    return perturb_batch(kernel, x[None, :], n, rng)[0]


def sample_perturbation(kernel, x, rng):
    """One draw from the perturbation distribution around ``x``."""
    return sample_n(kernel, x, 1, rng)[0]
