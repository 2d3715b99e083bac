"""Small softmax classifiers with hand-derived gradients.

Two architectures are supported: ``linear`` (logits ``W2 x + b2``) and
``mlp-tanh`` (one tanh hidden layer).  For ``linear`` the first layer is the
identity and is never updated.

Gradient routines return a :class:`GradAccumulator` holding the loss value and
one gradient array per parameter.  The target distribution ``gamma`` is always
a constant: no gradient flows into it.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from ._backend import kernels
from .errors import DomainError
from .gamma import beta_weights

ARCHS = ("linear", "mlp-tanh")

__all__ = [
    "ARCHS",
    "ModelParams",
    "GradAccumulator",
    "init_params",
    "forward",
    "forward_batch",
    "predict",
    "supervised_loss_grad",
    "alpha_consistency_grad",
    "consistency_grad_batch",
    "psi_value_grad",
    "sgd_step",
    "cosine_lr",
]


@dataclass
class ModelParams:
    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray
    arch: str = "mlp-tanh"

    def __post_init__(self):
        if self.arch not in ARCHS:
            raise DomainError(f"unknown architecture {self.arch!r}")
        H, D = self.W1.shape
        if self.b1.shape != (H,) or self.W2.shape[1] != H or self.b2.shape != (self.W2.shape[0],):
            raise DomainError("inconsistent parameter shapes")
        if self.arch == "linear" and H != D:
            raise DomainError("linear architecture needs a square identity first layer")

    @property
    def linear(self):
        return self.arch == "linear"

    @property
    def shape(self):
        """``(D, H, K)``: input, hidden and class dimensions."""
        return self.W1.shape[1], self.W1.shape[0], self.W2.shape[0]

    def arrays(self):
        return (self.W1, self.b1, self.W2, self.b2)

    def copy(self):
        return ModelParams(*(a.copy() for a in self.arrays()), arch=self.arch)

    def is_finite(self):
        return all(np.all(np.isfinite(a)) for a in self.arrays())

    def trainable(self):
        """Names of the parameter arrays that receive updates."""
        return ("W2", "b2") if self.linear else ("W1", "b1", "W2", "b2")

    def flat(self):
        return np.concatenate([getattr(self, n).ravel() for n in self.trainable()])

    def with_flat(self, vec):
        out = self.copy()
        i = 0
        for n in self.trainable():
            a = getattr(out, n)
            a[...] = np.reshape(vec[i : i + a.size], a.shape)
            i += a.size
        return out


@dataclass
class GradAccumulator:
    """Loss value plus gradients shaped like the fields of :class:`ModelParams`."""

    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray
    loss: float = 0.0
    arch: str = field(default="mlp-tanh", repr=False)

    @classmethod
    def zeros_like(cls, params):
        return cls(*(np.zeros_like(a) for a in params.arrays()), loss=0.0, arch=params.arch)

    def arrays(self):
        return (self.W1, self.b1, self.W2, self.b2)

    def __add__(self, other):
        return GradAccumulator(
            *(a + b for a, b in zip(self.arrays(), other.arrays())),
            loss=self.loss + other.loss,
            arch=self.arch,
        )

    def scaled(self, c):
        return GradAccumulator(*(c * a for a in self.arrays()), loss=c * self.loss, arch=self.arch)

    def flat(self):
        names = ("W2", "b2") if self.arch == "linear" else ("W1", "b1", "W2", "b2")
        return np.concatenate([getattr(self, n).ravel() for n in names])


def init_params(D, K, arch="mlp-tanh", hidden=16, rng=None):
    """Draw weights uniformly from (-0.1, 0.1); biases start at zero."""
    if arch not in ARCHS:
        raise DomainError(f"unknown architecture {arch!r}")
    rng = np.random.default_rng(rng)
    if arch == "linear":
        W1, b1 = np.eye(D), np.zeros(D)
        H = D
    else:
        H = int(hidden)
        W1 = rng.uniform(-0.1, 0.1, size=(H, D))
        b1 = np.zeros(H)
    W2 = rng.uniform(-0.1, 0.1, size=(K, H))
    b2 = np.zeros(K)
    return ModelParams(W1, b1, W2, b2, arch=arch)


def _rows(params, X):
    X = np.ascontiguousarray(np.atleast_2d(np.asarray(X, dtype=np.float64)))
    if X.shape[1] != params.shape[0]:
        raise DomainError(f"expected {params.shape[0]} features, got {X.shape[1]}")
    return X


def forward_batch(params, X):
    """Return ``(P, A)``: class probabilities and hidden activations for each row."""
    X = _rows(params, X)
    A, Z = kernels.mlp_forward(X, params.W1, params.b1, params.W2, params.b2, params.linear)
    return kernels.softmax_rows(Z), A


def forward(params, x):
    """Predictive distribution ``p_theta(. | x)`` for a single feature vector."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise DomainError("forward expects a single feature vector")
    return forward_batch(params, x[None, :])[0][0]


def predict(params, X):
    P, _ = forward_batch(params, X)
    return np.argmax(P, axis=1)


def _backward(params, X, A, G, loss):
    gW1, gb1, gW2, gb2 = kernels.mlp_backward(X, A, G, params.W2, params.linear)
    return GradAccumulator(gW1, gb1, gW2, gb2, loss=float(loss), arch=params.arch)


def supervised_loss_grad(params, X, y):
    """Mean cross-entropy over the batch ``(X, y)`` and its gradient."""
    X = _rows(params, X)
    y = np.asarray(y)
    K = params.shape[2]
    if X.shape[0] == 0 or y.shape != (X.shape[0],):
        raise DomainError("batch must be nonempty with one label per row")
    if np.any(y < 0) or np.any(y >= K):
        raise DomainError(f"labels must lie in [0, {K})")
    P, A = forward_batch(params, X)
    m = X.shape[0]
    rows = np.arange(m)
    loss = -np.log(P[rows, y]).sum() / m
    G = P.copy()
    G[rows, y] -= 1.0
    G /= m
    return _backward(params, X, A, G, loss)


def consistency_grad_batch(params, X, Gam, alpha, row_weights=None, cache=None):
    """Weighted sum over rows of ``D_alpha(Gam[r] || p_theta(. | X[r]))`` and its gradient.

    ``cache`` may carry ``(P, A)`` from an earlier forward pass at the same
    parameters so it is not recomputed.
    """
    if not alpha > 0:
        raise DomainError(f"alpha must be positive, got {alpha}")
    X = _rows(params, X)
    P, A = cache if cache is not None else forward_batch(params, X)
    vals, G = kernels.alpha_rows(np.ascontiguousarray(Gam, dtype=np.float64), P, float(alpha))
    if row_weights is not None:
        row_weights = np.asarray(row_weights, dtype=np.float64)
        vals = vals * row_weights
        G *= row_weights[:, None]
    return _backward(params, X, A, G, vals.sum())


def alpha_consistency_grad(params, gamma, x_prime, alpha):
    """``D_alpha(gamma || p_theta(. | x'))`` and its gradient with ``gamma`` held fixed."""
    gamma = np.asarray(gamma, dtype=np.float64)
    if gamma.ndim != 1 or gamma.shape[0] != params.shape[2]:
        raise DomainError("gamma must be a vector over the classes")
    if np.any(gamma < 0) or abs(gamma.sum() - 1.0) > 1e-9:
        raise DomainError("gamma must lie on the simplex")
    x_prime = np.asarray(x_prime, dtype=np.float64)
    return consistency_grad_batch(params, x_prime[None, :], gamma[None, :], alpha)


def psi_value_grad(params, gamma, x, x_augs, alpha, beta):
    """Beta-weighted consistency on the clean point and its ``n`` augmentations."""
    x_augs = np.atleast_2d(np.asarray(x_augs, dtype=np.float64))
    w = beta_weights(x_augs.shape[0], beta)
    total = None
    for wi, xi in zip(w, np.vstack([np.asarray(x, dtype=np.float64)[None, :], x_augs])):
        term = alpha_consistency_grad(params, gamma, xi, alpha).scaled(wi)
        total = term if total is None else total + term
    return total


def sgd_step(params, grads, lr, momentum_state=None, momentum=0.0):
    """Heavy-ball update ``v <- momentum * v + g``; ``theta <- theta - lr * v``.

    Returns the new parameters and the new momentum state (a tuple of arrays).
    """
    if not 0.0 <= momentum < 1.0:
        raise DomainError(f"momentum must lie in [0, 1), got {momentum}")
    names = params.trainable()
    if momentum_state is None:
        momentum_state = {n: np.zeros_like(getattr(params, n)) for n in names}
    new = params.copy()
    state = {}
    for n in names:
        v = momentum * momentum_state[n] + getattr(grads, n) if momentum else getattr(grads, n).copy()
        state[n] = v
        setattr(new, n, getattr(params, n) - lr * v)
    return new, state


def cosine_lr(t, T, lr0):
    """Cosine decay from ``lr0`` at ``t = 0`` to zero at ``t = T``."""
    if T <= 0:
        return lr0
    return lr0 * 0.5 * (1.0 + math.cos(math.pi * t / T))
