"""Self-checks: barycenter vs. oracle, gradients vs. finite differences,
divergence limits, and monotone descent of the AlphaMatch objective.

Each suite returns a plain dict (JSON-serializable) with a ``passed`` flag and
the worst-case statistics it observed.
"""

import math
import time

import numpy as np

from .augment import PerturbationKernel
from .data import make_two_moons, ssl_split
from .gamma import WeightedEnsemble, barycenter_objective, barycenter_oracle, weighted_alpha_barycenter
from .model import alpha_consistency_grad, forward_batch, init_params, psi_value_grad
from .simplex import alpha_divergence, kl_divergence, normalize
from .trainers import TrainerConfig, train_alphamatch

SUITES = ("barycenter", "gradients", "limits", "monotonicity")

GRAD_ALPHAS = (0.5, 1.0, 1.5, 2.0, 4.0)
BARY_ALPHAS = (0.5, 1.5, 2.0, 4.0)


def random_simplex(rng, K, size=None):
    """Dirichlet(1) draws pushed through :func:`normalize` so they respect the floor."""
    raw = rng.dirichlet(np.ones(K), size=size)
    if raw.ndim == 1:
        return normalize(raw)
    return np.vstack([normalize(r) for r in raw])


def rel_err(a, b, floor=1e-8):
    """Max-norm error relative to the larger of the two max-norms."""
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(a)), np.max(np.abs(b)), floor))


def finite_difference(fun, params, h=1e-5):
    """Central differences of ``fun(params)`` over the trainable parameters."""
    base = params.flat()
    g = np.empty_like(base)
    for i in range(base.size):
        up, dn = base.copy(), base.copy()
        up[i] += h
        dn[i] -= h
        g[i] = (fun(params.with_flat(up)) - fun(params.with_flat(dn))) / (2 * h)
    return g


def _random_params(rng, arch, D=2, K=3, H=5):
    p = init_params(D, K, arch, H, rng)
    for name in p.trainable():
        a = getattr(p, name)
        a[...] = rng.uniform(-1.0, 1.0, size=a.shape)
    return p


def _unclamped(params, X, margin=1e-6):
    P, _ = forward_batch(params, X)
    return bool(np.all(P > margin))


def barycenter_suite(n_instances=200, seed=0, tol_linf=1e-4, tol_obj=1e-8):
    rng = np.random.default_rng(seed)
    worst_linf = 0.0
    worst_excess = -math.inf
    for _ in range(n_instances):
        K = int(rng.integers(2, 6))
        n = int(rng.integers(1, 5))
        alpha = float(rng.choice(BARY_ALPHAS))
        ens = WeightedEnsemble(random_simplex(rng, K, n + 1), rng.dirichlet(np.ones(n + 1)))
        closed = weighted_alpha_barycenter(ens, alpha)
        oracle = barycenter_oracle(ens, alpha)
        worst_linf = max(worst_linf, float(np.max(np.abs(closed - oracle))))
        excess = barycenter_objective(closed, ens, alpha) - barycenter_objective(oracle, ens, alpha)
        worst_excess = max(worst_excess, excess)
    return {
        "suite": "barycenter",
        "instances": n_instances,
        "max_linf_error": worst_linf,
        "max_objective_excess": worst_excess,
        "tol_linf": tol_linf,
        "tol_objective": tol_obj,
        "passed": worst_linf <= tol_linf and worst_excess <= tol_obj,
    }


def gradient_suite(n_instances=50, seed=0, h=1e-5, tol=1e-4):
    """Check both consistency gradients on ``n_instances`` draws per (arch, alpha) pair."""
    rng = np.random.default_rng(seed)
    worst = {"alpha_consistency_grad": 0.0, "psi_value_grad": 0.0}
    counts = {"alpha_consistency_grad": 0, "psi_value_grad": 0}
    for arch in ("linear", "mlp-tanh"):
        for alpha in GRAD_ALPHAS:
            done = 0
            while done < n_instances:
                params = _random_params(rng, arch)
                K = params.shape[2]
                n = int(rng.integers(1, 4))
                X = rng.normal(size=(n + 1, 2))
                if not _unclamped(params, X):
                    continue
                gamma = random_simplex(rng, K)
                beta = float(rng.uniform(0.0, 1.0))
                xp = X[1]

                g = alpha_consistency_grad(params, gamma, xp, alpha)
                fd = finite_difference(lambda p: alpha_consistency_grad(p, gamma, xp, alpha).loss, params, h)
                worst["alpha_consistency_grad"] = max(worst["alpha_consistency_grad"], rel_err(g.flat(), fd))

                g = psi_value_grad(params, gamma, X[0], X[1:], alpha, beta)
                fd = finite_difference(lambda p: psi_value_grad(p, gamma, X[0], X[1:], alpha, beta).loss, params, h)
                worst["psi_value_grad"] = max(worst["psi_value_grad"], rel_err(g.flat(), fd))
                counts["alpha_consistency_grad"] += 1
                counts["psi_value_grad"] += 1
                done += 1
    return {
        "suite": "gradients",
        "instances": counts,
        "max_rel_error": worst,
        "tol": tol,
        "passed": all(v <= tol for v in worst.values()),
    }


def limits_suite(n_instances=100, seed=0, delta=1e-3, tol=1e-2):
    rng = np.random.default_rng(seed)
    worst_one = worst_zero = 0.0
    for _ in range(n_instances):
        K = int(rng.integers(2, 6))
        p, q = random_simplex(rng, K), random_simplex(rng, K)
        kl_pq, kl_qp = kl_divergence(p, q), kl_divergence(q, p)
        for a in (1.0 - delta, 1.0 + delta):
            worst_one = max(worst_one, abs(alpha_divergence(p, q, a) - kl_pq) / (1.0 + kl_pq))
        worst_zero = max(worst_zero, abs(alpha_divergence(p, q, delta) - kl_qp) / (1.0 + kl_qp))
    anchor = alpha_divergence([0.5, 0.5], [0.9, 0.1], 2.0)
    anchor_err = abs(anchor - 0.888889)
    return {
        "suite": "limits",
        "instances": n_instances,
        "max_scaled_error_alpha_near_1": worst_one,
        "max_scaled_error_alpha_near_0": worst_zero,
        "anchor_d2": anchor,
        "anchor_error": anchor_err,
        "tol": tol,
        "passed": worst_one <= tol and worst_zero <= tol and anchor_err <= 1e-6,
    }


def monotonicity_setup(seed=0, n_unlabeled=200, labels_per_class=4, n_test=200):
    """Two-moons split with exactly ``n_unlabeled`` unlabeled points."""
    n = 2 * labels_per_class + n_unlabeled + n_test
    xs, ys = make_two_moons(n, 0.1, seed)
    return ssl_split(xs, ys, labels_per_class, n_test, seed)


def monotonicity_config(iterations=100, seed=0, lr=1e-3):
    return TrainerConfig(
        method="alphamatch",
        alpha=1.5,
        beta=0.5,
        lam=1.0,
        n_aug=1,
        lr0=lr,
        momentum=0.0,
        epochs=iterations,
        seed=seed,
        kernel=PerturbationKernel(sigma=0.1),
        full_batch=True,
        track_objective=True,
    )


def monotonicity_suite(iterations=100, seed=0, lr=1e-3, slack=1e-9):
    labeled, unlabeled, test = monotonicity_setup(seed)
    run = train_alphamatch(monotonicity_config(iterations, seed, lr), labeled, unlabeled, test)
    trace = np.asarray(run.objective_trace)
    increments = np.diff(trace)
    worst = float(increments.max()) if increments.size else 0.0
    return {
        "suite": "monotonicity",
        "iterations": int(increments.size),
        "objective_start": float(trace[0]),
        "objective_end": float(trace[-1]),
        "max_increment": worst,
        "slack": slack,
        "aborted": run.aborted,
        "passed": (not run.aborted) and increments.size == iterations and worst <= slack,
    }


def run_suite(name, **kwargs):
    fn = {
        "barycenter": barycenter_suite,
        "gradients": gradient_suite,
        "limits": limits_suite,
        "monotonicity": monotonicity_suite,
    }[name]
    t0 = time.perf_counter()
    report = fn(**kwargs)
    report["seconds"] = round(time.perf_counter() - t0, 3)
    return report
