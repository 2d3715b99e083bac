import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from alphamatch import _pykernels as py
from alphamatch.verification import random_simplex

ck = pytest.importorskip("alphamatch._ckernels", reason="compiled kernels not built")

ALPHAS = [1e-5, 0.5, 1.0, 1.0 + 5e-5, 1.5, 2.0, 4.0]


def close(a, b, tol=1e-12):
    np.testing.assert_allclose(a, b, rtol=tol, atol=tol)


class TestParity:
    def test_backend_tags(self):
        assert py.BACKEND == "python"
        assert ck.BACKEND == "cython"

    def test_softmax(self, rng):
        Z = rng.normal(scale=30, size=(50, 4))
        close(ck.softmax_rows(Z), py.softmax_rows(Z))

    @pytest.mark.parametrize("linear", [False, True])
    def test_forward_backward(self, rng, linear):
        D, H, K, m = 2, (2 if linear else 7), 3, 40
        X = rng.normal(size=(m, D))
        W1 = np.eye(D) if linear else rng.normal(size=(H, D))
        b1 = np.zeros(D) if linear else rng.normal(size=H)
        W2, b2 = rng.normal(size=(K, H)), rng.normal(size=K)
        Ac, Zc = ck.mlp_forward(X, W1, b1, W2, b2, linear)
        Ap, Zp = py.mlp_forward(X, W1, b1, W2, b2, linear)
        close(Ac, Ap)
        close(Zc, Zp)
        G = rng.normal(size=(m, K))
        for gc, gp in zip(ck.mlp_backward(X, Ac, G, W2, linear), py.mlp_backward(X, Ap, G, W2, linear)):
            close(gc, gp)

    @pytest.mark.parametrize("alpha", ALPHAS)
    def test_alpha_rows(self, rng, alpha):
        Gam = random_simplex(rng, 4, 30)
        P = random_simplex(rng, 4, 30)
        vc, gc = ck.alpha_rows(Gam, P, alpha)
        vp, gp = py.alpha_rows(Gam, P, alpha)
        close(vc, vp)
        close(gc, gp)

    def test_alpha_rows_onehot(self):
        Gam = np.array([[1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
        P = np.array([[0.7, 0.2, 0.1], [0.3, 0.3, 0.4]])
        vc, gc = ck.alpha_rows(Gam, P, 1.0)
        vp, gp = py.alpha_rows(Gam, P, 1.0)
        close(vc, vp)
        close(gc, gp)

    @pytest.mark.parametrize("alpha", ALPHAS)
    def test_barycenter_rows(self, rng, alpha):
        P3 = random_simplex(rng, 3, 60).reshape(20, 3, 3)
        w = rng.dirichlet(np.ones(3))
        close(ck.barycenter_rows(P3, w, alpha), py.barycenter_rows(P3, w, alpha))

    def test_barycenter_single_weight_exact(self, rng):
        P3 = random_simplex(rng, 3, 12).reshape(6, 2, 3)
        for k in (ck, py):
            np.testing.assert_array_equal(k.barycenter_rows(P3, np.array([1.0, 0.0]), 1.5), P3[:, 0])

    @settings(max_examples=60, deadline=None)
    @given(
        st.integers(2, 6),
        st.integers(1, 4),
        st.floats(0.05, 6.0),
        st.integers(0, 2**31 - 1),
    )
    def test_barycenter_property(self, K, n, alpha, seed):
        r = np.random.default_rng(seed)
        P3 = random_simplex(r, K, 5 * (n + 1)).reshape(5, n + 1, K)
        w = r.dirichlet(np.ones(n + 1))
        close(ck.barycenter_rows(P3, w, alpha), py.barycenter_rows(P3, w, alpha), tol=1e-11)


def _backend_in_subprocess(value):
    env = dict(os.environ)
    if value is None:
        env.pop("ALPHAMATCH_BACKEND", None)
    else:
        env["ALPHAMATCH_BACKEND"] = value
    out = subprocess.run(
        [sys.executable, "-c", "import alphamatch; print(alphamatch.BACKEND)"],
        env=env,
        capture_output=True,
        text=True,
        check=True,
    )
    return out.stdout.strip()


class TestSelection:
    def test_default_prefers_compiled(self):
        assert _backend_in_subprocess(None) == "cython"

    def test_env_forces_python(self):
        assert _backend_in_subprocess("python") == "python"

    def test_results_agree_across_backends(self):
        code = (
            "from alphamatch.data import make_two_moons, ssl_split;"
            "from alphamatch.trainers import TrainerConfig, train;"
            "xs, ys = make_two_moons(120, 0.1, 0); L, U, T = ssl_split(xs, ys, 4, 40, 0);"
            "r = train(TrainerConfig(epochs=5), L, U, T);"
            "print(repr(float(r.params.W2.sum())))"
        )
        vals = []
        for backend in ("python", "cython"):
            env = dict(os.environ, ALPHAMATCH_BACKEND=backend)
            out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
            vals.append(float(out.stdout))
        assert vals[0] == pytest.approx(vals[1], rel=1e-9)
