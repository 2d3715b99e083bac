"""Pure numpy implementation of the hot kernels.

Every function here has a twin in the compiled ``_ckernels`` extension with
the same signature and semantics; :mod:`alphamatch._backend` picks one at
import time.  All arrays are float64 and C-contiguous.
"""

import numpy as np

from .constants import ALPHA_SWITCH, EPS_FLOOR

BACKEND = "python"


def softmax_rows(Z):
    """Row-wise softmax with the probability floor applied and renormalized."""
    Z = np.asarray(Z, dtype=np.float64)
    E = np.exp(Z - Z.max(axis=1, keepdims=True))
    P = E / E.sum(axis=1, keepdims=True)
    np.maximum(P, EPS_FLOOR, out=P)
    P /= P.sum(axis=1, keepdims=True)
    return P


def mlp_forward(X, W1, b1, W2, b2, linear):
    """Return ``(A, Z)``: hidden activations and logits for each row of ``X``.

    For the linear architecture the hidden layer is the identity, so ``A`` is
    ``X`` itself.
    """
    if linear:
        A = np.ascontiguousarray(X, dtype=np.float64)
    else:
        A = np.tanh(X @ W1.T + b1)
    Z = A @ W2.T + b2
    return A, Z


def mlp_backward(X, A, G, W2, linear):
    """Backpropagate logit gradients ``G`` (rows summed) to parameter gradients."""
    gW2 = G.T @ A
    gb2 = G.sum(axis=0)
    if linear:
        D = X.shape[1]
        return np.zeros((D, D)), np.zeros(D), gW2, gb2
    dpre = (G @ W2) * (1.0 - A * A)
    gW1 = dpre.T @ X
    gb1 = dpre.sum(axis=0)
    return gW1, gb1, gW2, gb2


def alpha_rows(Gam, P, alpha):
    """Per-row ``D_alpha(gamma_r || p_r)`` and its gradient w.r.t. the logits of ``p_r``.

    ``P`` must be a softmax output.  Entries of ``Gam`` equal to zero
    contribute nothing (one-hot targets are allowed); ``P`` is assumed floored.
    """
    Gam = np.asarray(Gam, dtype=np.float64)
    P = np.asarray(P, dtype=np.float64)
    logp = np.log(P)
    pos = Gam > 0
    with np.errstate(divide="ignore"):
        logg = np.where(pos, np.log(np.where(pos, Gam, 1.0)), -np.inf)
    if alpha <= ALPHA_SWITCH:
        # KL(p || gamma)
        ell = logp - logg
        vals = (P * ell).sum(axis=1)
        G = P * (ell - vals[:, None])
        return vals, G
    if abs(alpha - 1.0) <= ALPHA_SWITCH:
        # KL(gamma || p)
        vals = np.where(pos, Gam * (np.where(pos, logg, 0.0) - logp), 0.0).sum(axis=1)
        G = P * Gam.sum(axis=1, keepdims=True) - Gam
        return vals, G
    with np.errstate(invalid="ignore"):
        e = np.where(pos, alpha * logg + (1.0 - alpha) * logp, -np.inf)
    m = e.max(axis=1, keepdims=True)
    t = np.exp(e - m)
    scale = np.exp(m[:, 0])
    T = t.sum(axis=1) * scale
    t *= scale[:, None]
    vals = (T - 1.0) / (alpha * (alpha - 1.0))
    G = -(t - P * T[:, None]) / alpha
    return vals, G


def barycenter_rows(P3, w, alpha):
    """Alpha-divergence barycenter of each ``P3[r]`` (members x classes) under weights ``w``.

    Zero weights are dropped.  When a single member carries all the weight it
    is returned unchanged.
    """
    P3 = np.asarray(P3, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    keep = np.flatnonzero(w > 0)
    if keep.size == 1:
        return P3[:, keep[0], :].copy()
    P3 = P3[:, keep, :]
    w = w[keep]
    if alpha <= ALPHA_SWITCH:
        raw = np.einsum("i,rik->rk", w, P3)
    elif abs(alpha - 1.0) <= ALPHA_SWITCH:
        raw = np.exp(np.einsum("i,rik->rk", w, np.log(P3)))
    else:
        a = 1.0 - alpha
        e = np.log(w)[None, :, None] + a * np.log(P3)
        m = e.max(axis=1)
        lse = m + np.log(np.exp(e - m[:, None, :]).sum(axis=1))
        raw = np.exp(lse / a)
    np.maximum(raw, EPS_FLOOR, out=raw)
    raw /= raw.sum(axis=1, keepdims=True)
    return raw
