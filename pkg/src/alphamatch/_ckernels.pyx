# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled twins of the kernels in ``_pykernels``.

Loops are written for the small shapes used here (a few classes, a few
dozen hidden units, batches of a few hundred rows).
"""

import numpy as np

from libc.math cimport exp, log, tanh, fabs, INFINITY

from .constants import ALPHA_SWITCH as _ALPHA_SWITCH, EPS_FLOOR as _EPS_FLOOR

cdef double EPS_FLOOR = _EPS_FLOOR
cdef double ALPHA_SWITCH = _ALPHA_SWITCH

BACKEND = "cython"


cdef inline void _floor_normalize(double[::1] row) noexcept nogil:
    cdef Py_ssize_t k, K = row.shape[0]
    cdef double s = 0.0
    for k in range(K):
        if row[k] < EPS_FLOOR:
            row[k] = EPS_FLOOR
        s += row[k]
    for k in range(K):
        row[k] /= s


def softmax_rows(Z_in):
    cdef double[:, ::1] Z = np.ascontiguousarray(Z_in, dtype=np.float64)
    cdef Py_ssize_t m = Z.shape[0], K = Z.shape[1], r, k
    out = np.empty((m, K))
    cdef double[:, ::1] P = out
    cdef double mx, s
    with nogil:
        for r in range(m):
            mx = Z[r, 0]
            for k in range(1, K):
                if Z[r, k] > mx:
                    mx = Z[r, k]
            s = 0.0
            for k in range(K):
                P[r, k] = exp(Z[r, k] - mx)
                s += P[r, k]
            for k in range(K):
                P[r, k] /= s
            _floor_normalize(P[r])
    return out


def mlp_forward(X_in, W1_in, b1_in, W2_in, b2_in, bint linear):
    cdef double[:, ::1] X = np.ascontiguousarray(X_in, dtype=np.float64)
    cdef double[:, ::1] W2 = np.ascontiguousarray(W2_in, dtype=np.float64)
    cdef double[::1] b2 = np.ascontiguousarray(b2_in, dtype=np.float64)
    cdef double[:, ::1] W1
    cdef double[::1] b1
    cdef Py_ssize_t m = X.shape[0], D = X.shape[1], K = W2.shape[0], H
    cdef Py_ssize_t r, h, d, k
    cdef double acc
    if linear:
        A_arr = np.asarray(X)
        H = D
    else:
        W1 = np.ascontiguousarray(W1_in, dtype=np.float64)
        b1 = np.ascontiguousarray(b1_in, dtype=np.float64)
        H = W1.shape[0]
        A_arr = np.empty((m, H))
    cdef double[:, ::1] A = A_arr
    Z_arr = np.empty((m, K))
    cdef double[:, ::1] Z = Z_arr
    with nogil:
        if not linear:
            for r in range(m):
                for h in range(H):
                    acc = b1[h]
                    for d in range(D):
                        acc += W1[h, d] * X[r, d]
                    A[r, h] = tanh(acc)
        for r in range(m):
            for k in range(K):
                acc = b2[k]
                for h in range(H):
                    acc += W2[k, h] * A[r, h]
                Z[r, k] = acc
    return A_arr, Z_arr


def mlp_backward(X_in, A_in, G_in, W2_in, bint linear):
    cdef double[:, ::1] X = np.ascontiguousarray(X_in, dtype=np.float64)
    cdef double[:, ::1] A = np.ascontiguousarray(A_in, dtype=np.float64)
    cdef double[:, ::1] G = np.ascontiguousarray(G_in, dtype=np.float64)
    cdef double[:, ::1] W2 = np.ascontiguousarray(W2_in, dtype=np.float64)
    cdef Py_ssize_t m = X.shape[0], D = X.shape[1], K = G.shape[1], H = A.shape[1]
    cdef Py_ssize_t r, h, d, k
    cdef double acc
    gW2_arr = np.zeros((K, H))
    gb2_arr = np.zeros(K)
    cdef double[:, ::1] gW2 = gW2_arr
    cdef double[::1] gb2 = gb2_arr
    if linear:
        gW1_arr = np.zeros((D, D))
        gb1_arr = np.zeros(D)
    else:
        gW1_arr = np.zeros((H, D))
        gb1_arr = np.zeros(H)
    cdef double[:, ::1] gW1 = gW1_arr
    cdef double[::1] gb1 = gb1_arr
    with nogil:
        for r in range(m):
            for k in range(K):
                gb2[k] += G[r, k]
                for h in range(H):
                    gW2[k, h] += G[r, k] * A[r, h]
            if not linear:
                for h in range(H):
                    acc = 0.0
                    for k in range(K):
                        acc += G[r, k] * W2[k, h]
                    acc *= 1.0 - A[r, h] * A[r, h]
                    gb1[h] += acc
                    for d in range(D):
                        gW1[h, d] += acc * X[r, d]
    return gW1_arr, gb1_arr, gW2_arr, gb2_arr


def alpha_rows(Gam_in, P_in, double alpha):
    cdef double[:, ::1] Gam = np.ascontiguousarray(Gam_in, dtype=np.float64)
    cdef double[:, ::1] P = np.ascontiguousarray(P_in, dtype=np.float64)
    cdef Py_ssize_t m = P.shape[0], K = P.shape[1], r, k
    vals_arr = np.empty(m)
    G_arr = np.empty((m, K))
    cdef double[::1] vals = vals_arr
    cdef double[:, ::1] G = G_arr
    cdef int mode
    cdef double v, s, mx, T, e, scale
    if alpha <= ALPHA_SWITCH:
        mode = 0
    elif fabs(alpha - 1.0) <= ALPHA_SWITCH:
        mode = 1
    else:
        mode = 2
    with nogil:
        for r in range(m):
            if mode == 0:
                v = 0.0
                for k in range(K):
                    if Gam[r, k] > 0:
                        G[r, k] = log(P[r, k]) - log(Gam[r, k])
                    else:
                        G[r, k] = INFINITY
                    v += P[r, k] * G[r, k]
                for k in range(K):
                    G[r, k] = P[r, k] * (G[r, k] - v)
                vals[r] = v
            elif mode == 1:
                v = 0.0
                s = 0.0
                for k in range(K):
                    if Gam[r, k] > 0:
                        v += Gam[r, k] * (log(Gam[r, k]) - log(P[r, k]))
                    s += Gam[r, k]
                for k in range(K):
                    G[r, k] = P[r, k] * s - Gam[r, k]
                vals[r] = v
            else:
                mx = -INFINITY
                for k in range(K):
                    if Gam[r, k] > 0:
                        e = alpha * log(Gam[r, k]) + (1.0 - alpha) * log(P[r, k])
                    else:
                        e = -INFINITY
                    G[r, k] = e
                    if e > mx:
                        mx = e
                scale = exp(mx)
                T = 0.0
                for k in range(K):
                    G[r, k] = exp(G[r, k] - mx) * scale
                    T += G[r, k]
                vals[r] = (T - 1.0) / (alpha * (alpha - 1.0))
                for k in range(K):
                    G[r, k] = -(G[r, k] - P[r, k] * T) / alpha
    return vals_arr, G_arr


def barycenter_rows(P3_in, w_in, double alpha):
    cdef double[:, :, ::1] P3 = np.ascontiguousarray(P3_in, dtype=np.float64)
    cdef double[::1] w_all = np.ascontiguousarray(w_in, dtype=np.float64)
    cdef Py_ssize_t m = P3.shape[0], S = P3.shape[1], K = P3.shape[2]
    cdef Py_ssize_t r, i, k, j, nk = 0
    keep_arr = np.flatnonzero(np.asarray(w_all) > 0).astype(np.intp)
    cdef Py_ssize_t[::1] keep = keep_arr
    nk = keep.shape[0]
    if nk == 1:
        return np.array(np.asarray(P3)[:, keep_arr[0], :])
    cdef double a = 1.0 - alpha
    cdef double acc, mx, e
    cdef int mode
    if alpha <= ALPHA_SWITCH:
        mode = 0
    elif fabs(alpha - 1.0) <= ALPHA_SWITCH:
        mode = 1
    else:
        mode = 2
    out = np.empty((m, K))
    cdef double[:, ::1] R = out
    with nogil:
        for r in range(m):
            for k in range(K):
                if mode == 0:
                    acc = 0.0
                    for j in range(nk):
                        i = keep[j]
                        acc += w_all[i] * P3[r, i, k]
                    R[r, k] = acc
                elif mode == 1:
                    acc = 0.0
                    for j in range(nk):
                        i = keep[j]
                        acc += w_all[i] * log(P3[r, i, k])
                    R[r, k] = exp(acc)
                else:
                    mx = -INFINITY
                    for j in range(nk):
                        i = keep[j]
                        e = log(w_all[i]) + a * log(P3[r, i, k])
                        if e > mx:
                            mx = e
                    acc = 0.0
                    for j in range(nk):
                        i = keep[j]
                        acc += exp(log(w_all[i]) + a * log(P3[r, i, k]) - mx)
                    R[r, k] = exp((mx + log(acc)) / a)
            _floor_normalize(R[r])
    return out
