"""Synthetic 2-D classification tasks and semi-supervised splits."""

import csv
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

__all__ = [
    "LabeledSet",
    "UnlabeledSet",
    "TestSet",
    "make_two_moons",
    "make_circles",
    "make_blobs",
    "make_dataset",
    "ssl_split",
    "write_csv",
]


@dataclass(frozen=True)
class LabeledSet:
    xs: np.ndarray
    ys: np.ndarray
    seed: int = 0
    index: np.ndarray = None

    def __len__(self):
        return self.xs.shape[0]


@dataclass(frozen=True)
class UnlabeledSet:
    xs: np.ndarray
    seed: int = 0
    index: np.ndarray = None

    def __len__(self):
        return self.xs.shape[0]


@dataclass(frozen=True)
class TestSet:
    xs: np.ndarray
    ys: np.ndarray
    seed: int = 0
    index: np.ndarray = None

    def __len__(self):
        return self.xs.shape[0]


def _class_sizes(n, K):
    # balanced to within one point
    return [n // K + (1 if k < n % K else 0) for k in range(K)]


def _finish(parts, rng):
    xs = np.concatenate([p for p, _ in parts])
    ys = np.concatenate([np.full(p.shape[0], k, dtype=np.int64) for p, k in parts])
    order = rng.permutation(xs.shape[0])
    return xs[order], ys[order]


def make_two_moons(n, noise=0.1, seed=0):
    """Two interleaved half circles of radius one.

    Class 0 is the upper arc centred at the origin; class 1 the lower arc
    centred at (1, 0.5).
    """
    if n < 4:
        raise DomainError("need at least 2 points per class")
    rng = np.random.default_rng(seed)
    n0, n1 = _class_sizes(n, 2)
    t0 = rng.uniform(0.0, np.pi, n0)
    t1 = rng.uniform(0.0, np.pi, n1)
    upper = np.stack([np.cos(t0), np.sin(t0)], axis=1)
    lower = np.stack([1.0 - np.cos(t1), 0.5 - np.sin(t1)], axis=1)
    if noise > 0:
        upper += noise * rng.standard_normal(upper.shape)
        lower += noise * rng.standard_normal(lower.shape)
    return _finish([(upper, 0), (lower, 1)], rng)


def make_circles(n, noise=0.05, factor=0.5, seed=0):
    """Two concentric circles; class 1 is the inner one with radius ``factor``."""
    if n < 4:
        raise DomainError("need at least 2 points per class")
    if not 0.0 < factor < 1.0:
        raise DomainError("factor must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    n0, n1 = _class_sizes(n, 2)
    t0 = rng.uniform(0.0, 2 * np.pi, n0)
    t1 = rng.uniform(0.0, 2 * np.pi, n1)
    outer = np.stack([np.cos(t0), np.sin(t0)], axis=1)
    inner = factor * np.stack([np.cos(t1), np.sin(t1)], axis=1)
    if noise > 0:
        outer += noise * rng.standard_normal(outer.shape)
        inner += noise * rng.standard_normal(inner.shape)
    return _finish([(outer, 0), (inner, 1)], rng)


def blob_centers(K, radius=2.0):
    angles = 2 * np.pi * np.arange(K) / K
    return radius * np.stack([np.cos(angles), np.sin(angles)], axis=1)


def make_blobs(n, centers=3, spread=0.5, seed=0):
    """Isotropic Gaussian blobs with centres evenly spaced on a circle of radius 2."""
    K = int(centers)
    if K < 2 or n < 2 * K:
        raise DomainError("need K >= 2 and at least 2 points per class")
    rng = np.random.default_rng(seed)
    mus = blob_centers(K)
    parts = []
    for k, size in enumerate(_class_sizes(n, K)):
        pts = np.repeat(mus[k][None, :], size, axis=0)
        if spread > 0:
            pts = pts + spread * rng.standard_normal(pts.shape)
        parts.append((pts, k))
    return _finish(parts, rng)


GENERATORS = {
    "two_moons": make_two_moons,
    "circles": make_circles,
    "blobs": make_blobs,
}


def make_dataset(generator, seed=0, **params):
    try:
        fn = GENERATORS[generator]
    except KeyError:
        raise DomainError(f"unknown generator {generator!r}; expected one of {sorted(GENERATORS)}") from None
    return fn(seed=seed, **params)


def ssl_split(xs, ys, labels_per_class, n_test, seed=0):
    """Split into a stratified labeled set, an unlabeled pool and a test set.

    The test points are drawn first at random; from the rest exactly
    ``labels_per_class`` points of every class are labeled and everything
    else becomes unlabeled.  Each returned set records the source row
    indices it was built from in ``index``.
    """
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.int64)
    N = xs.shape[0]
    if ys.shape != (N,):
        raise DomainError("xs and ys have different lengths")
    if not 0 <= n_test < N:
        raise DomainError(f"n_test must lie in [0, {N})")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(N)
    test_idx, train_idx = perm[:n_test], perm[n_test:]
    labeled = []
    for k in np.unique(ys):
        cls = train_idx[ys[train_idx] == k]
        if cls.size < labels_per_class:
            raise DomainError(f"class {k} has {cls.size} training points, fewer than {labels_per_class}")
        labeled.append(rng.choice(cls, size=labels_per_class, replace=False))
    lab_idx = np.sort(np.concatenate(labeled))
    unl_idx = np.setdiff1d(train_idx, lab_idx)
    test_idx = np.sort(test_idx)
    return (
        LabeledSet(xs[lab_idx], ys[lab_idx], seed, lab_idx),
        UnlabeledSet(xs[unl_idx], seed, unl_idx),
        TestSet(xs[test_idx], ys[test_idx], seed, test_idx),
    )


def write_csv(path, xs, ys=None):
    """Write ``x1,x2,label`` rows; ``label`` is left empty for unlabeled points."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x1", "x2", "label"])
        for i, x in enumerate(xs):
            w.writerow([repr(float(x[0])), repr(float(x[1])), "" if ys is None else int(ys[i])])
