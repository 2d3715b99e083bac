"""Training procedures: AlphaMatch, iterative alpha (UDA at alpha=1), FixMatch, supervised.

Every run owns four independent random streams spawned from its seed (weight
init, labeled batches, unlabeled batches, augmentations).  Keeping them apart
means a semi-supervised run with ``lam == 0`` follows exactly the same
trajectory as the supervised baseline with the same seed.

An epoch is one pass over the unlabeled pool.  In ``full_batch`` mode every
step uses the whole labeled and unlabeled sets and a single frozen draw of
augmentations, so the AlphaMatch objective is a deterministic function of the
parameters and can be tracked step by step.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from ._backend import kernels
from .augment import PerturbationKernel, perturb_batch
from .errors import DomainError
from .gamma import beta_weights
from .model import (
    ARCHS,
    consistency_grad_batch,
    cosine_lr,
    forward_batch,
    init_params,
    predict,
    sgd_step,
    supervised_loss_grad,
)

METHODS = ("alphamatch", "iterative-alpha", "fixmatch", "supervised")

__all__ = [
    "METHODS",
    "TrainerConfig",
    "EpochRecord",
    "RunMetrics",
    "pseudo_label",
    "objective_value",
    "train",
    "train_alphamatch",
    "train_iterative_alpha",
    "train_fixmatch",
    "train_supervised",
]


@dataclass(frozen=True)
class TrainerConfig:
    method: str = "alphamatch"
    alpha: float = 1.5
    beta: float = 0.5
    lam: float = 1.0
    n_aug: int = 1
    tau: float = 0.95
    lr0: float = 0.1
    momentum: float = 0.9
    epochs: int = 500
    batch_s: int = 8
    mu_ratio: int = 7
    seed: int = 0
    kernel: PerturbationKernel = field(default_factory=PerturbationKernel)
    arch: str = "mlp-tanh"
    hidden: int = 16
    steps_per_gamma: int = 1
    augment_clean: bool = False
    full_batch: bool = False
    track_objective: bool = False
    steps_per_epoch: int = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise DomainError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if self.arch not in ARCHS:
            raise DomainError(f"unknown arch {self.arch!r}; expected one of {ARCHS}")
        if not self.alpha > 0:
            raise DomainError(f"alpha must be > 0, got {self.alpha}")
        if not 0.0 <= self.beta <= 1.0:
            raise DomainError(f"beta must lie in [0, 1], got {self.beta}")
        if not self.lam >= 0:
            raise DomainError(f"lambda must be >= 0, got {self.lam}")
        if not self.lr0 >= 0:
            raise DomainError(f"lr0 must be >= 0, got {self.lr0}")
        if not 0.0 <= self.momentum < 1.0:
            raise DomainError(f"momentum must lie in [0, 1), got {self.momentum}")
        if self.method == "fixmatch" and not self.tau >= 0:
            raise DomainError(f"tau must be >= 0, got {self.tau}")
        for name in ("n_aug", "epochs", "batch_s", "mu_ratio", "hidden", "steps_per_gamma"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise DomainError(f"{name} must be a positive integer, got {v}")
        if self.steps_per_epoch is not None and self.steps_per_epoch < 1:
            raise DomainError("steps_per_epoch must be a positive integer")

    @property
    def batch_u(self):
        return self.batch_s * self.mu_ratio

    def with_(self, **changes):
        return replace(self, **changes)


@dataclass
class EpochRecord:
    epoch: int
    test_acc: float
    train_acc: float
    sup_loss: float
    consistency: float
    objective: float
    lr: float
    gamma_conf: float = math.nan


@dataclass
class RunMetrics:
    method: str
    seed: int
    records: list = field(default_factory=list)
    aborted: bool = False
    abort_epoch: int = None
    abort_reason: str = ""
    objective_trace: list = field(default_factory=list)
    params: object = None

    @property
    def final_test_acc(self):
        return self.records[-1].test_acc if self.records else math.nan

    def column(self, name):
        return np.array([getattr(r, name) for r in self.records])


def pseudo_label(p):
    """Hard label (argmax, smallest index on ties) and its confidence."""
    p = np.asarray(p, dtype=np.float64)
    y = int(np.argmax(p))
    return y, float(p[y])


def _accuracy(params, X, y):
    if len(y) == 0:
        return math.nan
    return float(np.mean(predict(params, X) == y))


class _Streams:
    def __init__(self, seed):
        ss = np.random.SeedSequence(seed)
        init, lab, unl, aug = ss.spawn(4)
        self.init = np.random.default_rng(init)
        self.labeled = np.random.default_rng(lab)
        self.unlabeled = np.random.default_rng(unl)
        self.augment = np.random.default_rng(aug)


def _steps_per_epoch(config, n_unlabeled):
    if config.full_batch:
        return 1
    if config.steps_per_epoch is not None:
        return int(config.steps_per_epoch)
    if n_unlabeled:
        return math.ceil(n_unlabeled / config.batch_u)
    return 1


def _clean_views(config, Xu, rng):
    if config.augment_clean:
        return perturb_batch(config.kernel, Xu, 1, rng)[:, 0, :]
    return Xu


def _alphamatch_terms(params, Xc, A, config, cache=None):
    """Return ``(Xall, Gam_all, row_w, (P, H), Gam)`` for the beta-weighted consistency."""
    m, n, D = A.shape
    Xall = np.concatenate([Xc, A.reshape(m * n, D)])
    P, H = cache if cache is not None else forward_batch(params, Xall)
    K = P.shape[1]
    w = beta_weights(n, config.beta)
    P3 = np.concatenate([P[:m, None, :], P[m:].reshape(m, n, K)], axis=1)
    Gam = kernels.barycenter_rows(P3, w, float(config.alpha))
    Gam_all = np.concatenate([Gam, np.repeat(Gam, n, axis=0)])
    row_w = np.concatenate([np.full(m, w[0] / m), np.full(m * n, w[1] / m)])
    return Xall, Gam_all, row_w, (P, H), Gam


def objective_value(params, labeled, Xu, A, config):
    """``L(theta) + lam * mean_x min_gamma Psi(theta, gamma, x)`` with frozen augmentations ``A``.

    The inner minimum is attained by the closed-form barycenter at ``theta``.
    """
    sup = supervised_loss_grad(params, labeled.xs, labeled.ys).loss
    if config.lam == 0 or len(Xu) == 0:
        return sup
    Xall, Gam_all, row_w, (P, _), _ = _alphamatch_terms(params, Xu, A, config)
    vals, _ = kernels.alpha_rows(Gam_all, P, float(config.alpha))
    return sup + config.lam * float(np.dot(row_w, vals))


def _run(config, labeled, unlabeled, test, step_fn, n_unlabeled=None):
    """Shared outer loop: batching, lr schedule, abort policy and per-epoch metrics."""
    streams = _Streams(config.seed)
    D = labeled.xs.shape[1]
    K = int(max(labeled.ys.max(), test.ys.max() if len(test) else 0)) + 1
    params = init_params(D, K, config.arch, config.hidden, streams.init)
    Xu = unlabeled.xs if unlabeled is not None else np.zeros((0, D))
    Nu = Xu.shape[0] if n_unlabeled is None else n_unlabeled
    spe = _steps_per_epoch(config, Nu)
    T = config.epochs * spe
    out = RunMetrics(method=config.method, seed=config.seed)
    frozen = None
    if config.full_batch and Xu.shape[0]:
        frozen = perturb_batch(config.kernel, Xu, config.n_aug, streams.augment)
    if config.track_objective and frozen is not None:
        out.objective_trace.append(objective_value(params, labeled, Xu, frozen, config))
    state = None
    t = 0
    Ns = len(labeled)
    for epoch in range(1, config.epochs + 1):
        if Xu.shape[0] and not config.full_batch:
            order = streams.unlabeled.permutation(Xu.shape[0])
        sup_sum = cons_sum = conf_sum = 0.0
        conf_n = 0
        lr = config.lr0
        for s in range(spe):
            if config.batch_s >= Ns or config.full_batch:
                Xs, ys = labeled.xs, labeled.ys
            else:
                idx = streams.labeled.choice(Ns, size=config.batch_s, replace=False)
                Xs, ys = labeled.xs[idx], labeled.ys[idx]
            if config.full_batch or not Xu.shape[0]:
                Xb = Xu
            else:
                lo = (s * config.batch_u) % Xu.shape[0]
                Xb = Xu[order[lo : lo + config.batch_u]]
            lr = cosine_lr(t, T, config.lr0)
            try:
                with np.errstate(over="raise", invalid="raise", divide="raise"):
                    params, state, sup, cons, gconf = step_fn(params, state, Xs, ys, Xb, frozen, lr, streams)
            except FloatingPointError as exc:
                return _abort(out, epoch, f"floating point error: {exc}", params)
            if not (math.isfinite(sup) and math.isfinite(cons) and params.is_finite()):
                return _abort(out, epoch, "non-finite loss or parameters", params)
            sup_sum += sup
            cons_sum += cons
            if gconf is not None:
                conf_sum += gconf
                conf_n += 1
            t += 1
            if config.track_objective and frozen is not None:
                out.objective_trace.append(objective_value(params, labeled, Xu, frozen, config))
        objective = out.objective_trace[-1] if config.track_objective and out.objective_trace else math.nan
        out.records.append(
            EpochRecord(
                epoch=epoch,
                test_acc=_accuracy(params, test.xs, test.ys),
                train_acc=_accuracy(params, labeled.xs, labeled.ys),
                sup_loss=sup_sum / spe,
                consistency=cons_sum / spe,
                objective=objective,
                lr=lr,
                gamma_conf=conf_sum / conf_n if conf_n else math.nan,
            )
        )
    out.params = params
    return out


def _abort(out, epoch, reason, params):
    out.aborted = True
    out.abort_epoch = epoch
    out.abort_reason = reason
    out.params = params
    return out


def _augment(config, Xb, frozen, streams):
    if frozen is not None:
        return frozen
    return perturb_batch(config.kernel, Xb, config.n_aug, streams.augment)


def _make_alphamatch_step(config):
    def step(params, state, Xs, ys, Xb, frozen, lr, streams):
        g = supervised_loss_grad(params, Xs, ys)
        sup = g.loss
        if config.lam == 0 or Xb.shape[0] == 0:
            params, state = sgd_step(params, g, lr, state, config.momentum)
            return params, state, sup, 0.0, None
        A = _augment(config, Xb, frozen, streams)
        Xc = _clean_views(config, Xb, streams.augment)
        # gamma step: closed form at the current parameters, then frozen
        Xall, Gam_all, row_w, cache, Gam = _alphamatch_terms(params, Xc, A, config)
        cons = None
        for k in range(config.steps_per_gamma):
            if k:
                g = supervised_loss_grad(params, Xs, ys)
                cache = None
            cg = consistency_grad_batch(params, Xall, Gam_all, config.alpha, row_w, cache=cache)
            if cons is None:
                cons = cg.loss
            params, state = sgd_step(params, g + cg.scaled(config.lam), lr, state, config.momentum)
        return params, state, sup, cons, float(Gam.max(axis=1).mean())

    return step


def _make_iterative_step(config):
    def step(params, state, Xs, ys, Xb, frozen, lr, streams):
        g = supervised_loss_grad(params, Xs, ys)
        sup = g.loss
        if config.lam == 0 or Xb.shape[0] == 0:
            params, state = sgd_step(params, g, lr, state, config.momentum)
            return params, state, sup, 0.0, None
        A = _augment(config, Xb, frozen, streams)
        Xc = _clean_views(config, Xb, streams.augment)
        m, n, D = A.shape
        target, _ = forward_batch(params, Xc)  # stop-gradient side
        Gam = np.repeat(target, n, axis=0)
        cg = consistency_grad_batch(params, A.reshape(m * n, D), Gam, config.alpha, np.full(m * n, 1.0 / (m * n)))
        params, state = sgd_step(params, g + cg.scaled(config.lam), lr, state, config.momentum)
        return params, state, sup, cg.loss, float(target.max(axis=1).mean())

    return step


def _make_fixmatch_step(config):
    def step(params, state, Xs, ys, Xb, frozen, lr, streams):
        g = supervised_loss_grad(params, Xs, ys)
        sup = g.loss
        if config.lam == 0 or Xb.shape[0] == 0:
            params, state = sgd_step(params, g, lr, state, config.momentum)
            return params, state, sup, 0.0, None
        A = _augment(config, Xb, frozen, streams)
        Xc = _clean_views(config, Xb, streams.augment)
        m, n, D = A.shape
        P, _ = forward_batch(params, Xc)
        yhat = np.argmax(P, axis=1)
        conf = P[np.arange(m), yhat]
        mask = conf >= config.tau
        cons = 0.0
        if mask.any():
            K = P.shape[1]
            rows = np.repeat(mask, n)
            Xa = A.reshape(m * n, D)[rows]
            hard = np.zeros((Xa.shape[0], K))
            hard[np.arange(Xa.shape[0]), np.repeat(yhat[mask], n)] = 1.0
            # masked mean over the whole unlabeled batch
            cg = consistency_grad_batch(params, Xa, hard, 1.0, np.full(Xa.shape[0], 1.0 / (m * n)))
            g = g + cg.scaled(config.lam)
            cons = cg.loss
        params, state = sgd_step(params, g, lr, state, config.momentum)
        return params, state, sup, cons, float(mask.mean())

    return step


def _make_supervised_step(config):
    def step(params, state, Xs, ys, Xb, frozen, lr, streams):
        g = supervised_loss_grad(params, Xs, ys)
        params, state = sgd_step(params, g, lr, state, config.momentum)
        return params, state, g.loss, 0.0, None

    return step


def _check(config, method):
    if config.method != method:
        raise DomainError(f"config.method is {config.method!r}, expected {method!r}")


def train_alphamatch(config, labeled, unlabeled, test):
    """Alternate the closed-form gamma update with one SGD step on theta per batch."""
    _check(config, "alphamatch")
    return _run(config, labeled, unlabeled, test, _make_alphamatch_step(config))


def train_iterative_alpha(config, labeled, unlabeled, test):
    """One SGD step on ``D_alpha(p_{theta_t}(.|x) || p_theta(.|x'))`` with the target frozen."""
    _check(config, "iterative-alpha")
    return _run(config, labeled, unlabeled, test, _make_iterative_step(config))


def train_fixmatch(config, labeled, unlabeled, test):
    """Hard pseudo-labels from the clean view, applied to augmented views above ``tau``."""
    _check(config, "fixmatch")
    return _run(config, labeled, unlabeled, test, _make_fixmatch_step(config))


def train_supervised(config, labeled, test, n_unlabeled=0):
    """Cross-entropy SGD on the labeled set only.

    ``n_unlabeled`` sets the epoch length so the schedule lines up with the
    semi-supervised trainers on the same split.
    """
    _check(config, "supervised")
    return _run(config, labeled, None, test, _make_supervised_step(config), n_unlabeled=n_unlabeled)


def train(config, labeled, unlabeled, test):
    """Dispatch on ``config.method``."""
    if config.method == "supervised":
        return train_supervised(config, labeled, test, n_unlabeled=len(unlabeled))
    fn = {
        "alphamatch": train_alphamatch,
        "iterative-alpha": train_iterative_alpha,
        "fixmatch": train_fixmatch,
    }[config.method]
    return fn(config, labeled, unlabeled, test)
