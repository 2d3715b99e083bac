"""Closed-form alpha-divergence barycenters and a brute-force oracle for them.

The barycenter of members ``p_i`` with weights ``w_i`` minimizes
``sum_i w_i D_alpha(gamma || p_i)`` over the simplex and is proportional to
the weighted power mean ``(sum_i w_i p_i**(1-alpha)) ** (1/(1-alpha))``.
"""

from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .constants import ALPHA_SWITCH, EPS_FLOOR
from .errors import DomainError, OracleConvergenceError
from .simplex import alpha_divergence, check_prob_vector

__all__ = [
    "WeightedEnsemble",
    "beta_weights",
    "power_mean",
    "weighted_alpha_barycenter",
    "gamma_update",
    "barycenter_objective",
    "barycenter_oracle",
    "project_simplex",
]


@dataclass(frozen=True)
class WeightedEnsemble:
    """Member distributions (rows of ``members``) and their mixture weights."""

    members: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        members = np.atleast_2d(np.asarray(self.members, dtype=np.float64))
        weights = np.asarray(self.weights, dtype=np.float64).ravel()
        if members.shape[0] == 0 or members.size == 0:
            raise DomainError("ensemble is empty")
        if weights.shape[0] != members.shape[0]:
            raise DomainError(f"{members.shape[0]} members but {weights.shape[0]} weights")
        if np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-12:
            raise DomainError("weights must be nonnegative and sum to 1")
        for row in members:
            check_prob_vector(row)
        object.__setattr__(self, "members", members)
        object.__setattr__(self, "weights", weights)

    @property
    def n_classes(self):
        return self.members.shape[1]


def beta_weights(n, beta):
    """Weights ``[1 - beta, beta/n, ..., beta/n]`` for a clean point and ``n`` augmentations."""
    if int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n}")
    if not 0.0 <= beta <= 1.0:
        raise DomainError(f"beta must lie in [0, 1], got {beta}")
    n = int(n)
    return np.array([1.0 - beta] + [beta / n] * n)


def power_mean(members, weights, alpha):
    """Unnormalized weighted power mean of order ``1 - alpha``, per class."""
    members = np.atleast_2d(np.asarray(members, dtype=np.float64))
    weights = np.asarray(weights, dtype=np.float64)
    keep = weights > 0
    members, weights = members[keep], weights[keep]
    if alpha <= ALPHA_SWITCH:
        return weights @ members
    if abs(alpha - 1.0) <= ALPHA_SWITCH:
        return np.exp(weights @ np.log(members))
    a = 1.0 - alpha
    e = np.log(weights)[:, None] + a * np.log(members)
    m = e.max(axis=0)
    return np.exp((m + np.log(np.exp(e - m).sum(axis=0))) / a)


def weighted_alpha_barycenter(ensemble, alpha):
    """Closed-form minimizer of ``sum_i w_i D_alpha(gamma || p_i)``."""
    if not alpha > 0:
        raise DomainError(f"alpha must be positive, got {alpha}")
    out = kernels.barycenter_rows(ensemble.members[None, :, :], ensemble.weights, float(alpha))
    return out[0]


def gamma_update(p_clean, p_augs, alpha, beta):
    """Optimal auxiliary distribution given the clean and augmented predictions."""
    p_augs = list(p_augs)
    if not p_augs:
        raise DomainError("need at least one augmented prediction")
    members = np.vstack([np.asarray(p_clean, dtype=np.float64)] + [np.asarray(p) for p in p_augs])
    ens = WeightedEnsemble(members, beta_weights(len(p_augs), beta))
    return weighted_alpha_barycenter(ens, alpha)


def barycenter_objective(gamma, ensemble, alpha):
    """``sum_i w_i D_alpha(gamma || p_i)`` from the plain divergence definition."""
    return float(
        sum(w * alpha_divergence(gamma, p, alpha) for w, p in zip(ensemble.weights, ensemble.members) if w > 0)
    )


def project_simplex(y, lower=0.0):
    """Euclidean projection of ``y`` onto ``{x : x_k >= lower, sum x = 1}`` (sort-based)."""
    y = np.asarray(y, dtype=np.float64)
    K = y.size
    mass = 1.0 - K * lower
    v = y - lower
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - mass
    idx = np.arange(1, K + 1)
    rho = np.nonzero(u - css / idx > 0)[0][-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(v - theta, 0.0) + lower


def _objective_and_grad(gamma, members, weights, alpha):
    """Objective and gradient w.r.t. gamma, written out directly from the definition."""
    if alpha <= ALPHA_SWITCH:
        # sum_i w_i KL(p_i || gamma)
        f = float(np.sum(weights[:, None] * members * (np.log(members) - np.log(gamma))))
        g = -(weights @ members) / gamma
    elif abs(alpha - 1.0) <= ALPHA_SWITCH:
        # sum_i w_i KL(gamma || p_i)
        lg = np.log(gamma)
        f = float(np.sum(weights[:, None] * gamma * (lg - np.log(members))))
        g = (weights[:, None] * (lg + 1.0 - np.log(members))).sum(axis=0)
    else:
        c = weights @ members ** (1.0 - alpha)
        f = float((np.sum(gamma**alpha * c) - 1.0) / (alpha * (alpha - 1.0)))
        g = gamma ** (alpha - 1.0) * c / (alpha - 1.0)
    return f, g


def _grid_oracle(members, weights, alpha, step):
    n_steps = int(round(1.0 / step))
    g0 = np.clip(np.arange(n_steps + 1) * step, EPS_FLOOR, 1.0 - EPS_FLOOR)
    grid = np.stack([g0, 1.0 - g0], axis=1)
    f = np.zeros(grid.shape[0])
    for w, p in zip(weights, members):
        if alpha <= ALPHA_SWITCH:
            f += w * np.sum(p * (np.log(p) - np.log(grid)), axis=1)
        elif abs(alpha - 1.0) <= ALPHA_SWITCH:
            f += w * np.sum(grid * (np.log(grid) - np.log(p)), axis=1)
        else:
            f += w * (np.sum(grid**alpha * p ** (1.0 - alpha), axis=1) - 1.0) / (alpha * (alpha - 1.0))
    j = int(np.argmin(f))
    return grid[j]


def _projected_gradient_oracle(members, weights, alpha, tol, max_iter):
    """Accelerated projected gradient with backtracking, started at the uniform point.

    Stops once the gradient-mapping norm certifies an objective gap below ``tol``
    (the simplex has diameter at most sqrt(2)), or once a momentum-free step
    stops decreasing the objective at working precision.
    """
    K = members.shape[1]
    lower = EPS_FLOOR
    x = np.full(K, 1.0 / K)
    y = x.copy()
    t = 1.0
    L = 1.0
    fx, _ = _objective_and_grad(x, members, weights, alpha)
    best, best_f = x.copy(), fx
    restarted = False
    for _ in range(max_iter):
        fy, gy = _objective_and_grad(y, members, weights, alpha)
        while True:
            x_new = project_simplex(y - gy / L, lower)
            d = x_new - y
            f_new, _ = _objective_and_grad(x_new, members, weights, alpha)
            if f_new <= fy + gy @ d + 0.5 * L * (d @ d) + 1e-15 * abs(fy):
                break
            L *= 2.0
        if f_new < best_f:
            best, best_f = x_new.copy(), f_new
        gap_bound = L * np.linalg.norm(d) * np.sqrt(2.0)
        if gap_bound <= tol:
            return best, best_f
        if f_new > fx + 1e-15 * abs(fx):
            if restarted:
                # a plain projected step from x no longer decreases f in floating point
                return best, best_f
            t = 1.0
            y = x.copy()
            restarted = True
            continue
        restarted = False
        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        # f is undefined outside the simplex, so pull the extrapolated point back in
        y = project_simplex(x_new + ((t - 1.0) / t_new) * (x_new - x), lower)
        x, fx, t = x_new, f_new, t_new
        L *= 0.9
    raise OracleConvergenceError(f"oracle did not reach tol={tol} in {max_iter} iterations", best, best_f)


def barycenter_oracle(ensemble, alpha, tol=1e-10, max_iter=100_000, grid_step=1e-4):
    """Independent numerical minimizer of the weighted barycenter objective.

    Uses an exhaustive grid for two classes and accelerated projected gradient
    descent for three to six.  Returns the minimizing distribution.
    """
    if not alpha > 0:
        raise DomainError(f"alpha must be positive, got {alpha}")
    K = ensemble.n_classes
    if K > 6:
        raise DomainError("oracle is limited to at most 6 classes")
    members, weights = ensemble.members, ensemble.weights
    keep = weights > 0
    members, weights = members[keep], weights[keep]
    if K == 2:
        return _grid_oracle(members, weights, alpha, grid_step)
    best, _ = _projected_gradient_oracle(members, weights, alpha, tol, max_iter)
    return best
