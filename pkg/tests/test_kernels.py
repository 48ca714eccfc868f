import os
import subprocess
import sys

import numpy as np
import pytest

from pelastica import _kernels as kern
from pelastica.special import PContext, amplitude_pair, p_elliptic_F, tanh_p

needs_numba = pytest.mark.skipif(not kern.HAVE_NUMBA, reason="numba not installed")


def both(fn):
    with kern.use_backend("numpy"):
        a = fn()
    with kern.use_backend("numba"):
        b = fn()
    return a, b


def _backend_in_subprocess(flag):
    env = dict(os.environ, PELASTICA_NUMBA=flag)
    out = subprocess.run(
        [sys.executable, "-c", "from pelastica import _kernels as k; print(k.backend())"],
        env=env, capture_output=True, text=True, check=True,
    )
    return out.stdout.strip()


@pytest.mark.parametrize("flag", ["0", "off", "False"])
def test_env_flag_disables_numba(flag):
    assert _backend_in_subprocess(flag) == "numpy"


@needs_numba
def test_env_flag_default_is_numba():
    assert _backend_in_subprocess("1") == "numba"


def test_set_backend_checks_name():
    with pytest.raises(ValueError):
        kern.set_backend("cuda")
    before = kern.backend()
    with kern.use_backend("numpy"):
        assert kern.backend() == "numpy"
    assert kern.backend() == before


def test_de_nodes_weights_integrate_constants():
    xi, w = kern.de_nodes(6)
    assert np.all((xi > 0) & (xi <= 1))
    assert abs(w.sum() - 1) < 1e-14


@needs_numba
@pytest.mark.parametrize("kind", [kern.KIND_SING, kern.KIND_COS, kern.KIND_SIN])
def test_de_sum_backends_agree(kind):
    xi, w = kern.de_nodes(6)
    c = np.linspace(0.01, 1.5, 17)
    a, b = both(lambda: kern.de_sum(c, 0.5, kind, xi, w))
    assert np.max(np.abs(a - b)) <= 1e-14 * np.max(np.abs(a))


@needs_numba
@pytest.mark.parametrize("p", [2.2, 3.0, 9.0])
def test_special_functions_backends_agree(p):
    ctx = PContext(p)
    x = np.linspace(-ctx.K, ctx.K, 41)
    (pa, ca), (pb, cb) = both(lambda: amplitude_pair(ctx, x))
    assert np.max(np.abs(pa - pb)) < 1e-13
    assert np.max(np.abs(ca - cb)) < 1e-13
    phi = np.linspace(0, 1.5, 11)
    fa, fb = both(lambda: p_elliptic_F(ctx, phi))
    assert np.max(np.abs(fa - fb)) < 1e-13
    ta, tb = both(lambda: tanh_p(ctx, x))
    assert np.max(np.abs(ta - tb)) < 1e-13


def _zigzag(M, d, seed):
    rng = np.random.default_rng(seed)
    steps = rng.normal(size=(M, d))
    steps /= np.linalg.norm(steps, axis=1, keepdims=True)
    return np.vstack((np.zeros(d), np.cumsum(steps, axis=0)))


@needs_numba
@pytest.mark.parametrize("d", [2, 3])
def test_energy_grad_backends_agree(d):
    X = _zigzag(50, d, 1)
    (Ea, Ga), (Eb, Gb) = both(lambda: kern.polyline_energy_grad(X, 1.0, 3.0, True))
    assert abs(Ea - Eb) <= 1e-13 * Ea
    assert np.max(np.abs(Ga - Gb)) <= 1e-12 * np.max(np.abs(Ga))


@needs_numba
def test_project_and_retract_backends_agree():
    X = _zigzag(60, 3, 2)
    V = np.random.default_rng(3).normal(size=X.shape)
    Pa, Pb = both(lambda: kern.project_tangent(X, V, 1e-12))
    assert np.max(np.abs(Pa - Pb)) < 1e-11
    noisy = X + 1e-4 * V
    noisy[0], noisy[-1] = X[0], X[-1]
    ra, rb = both(lambda: kern.retract(noisy, 1.0, 1e-11, 50, 1e-12))
    assert ra[1] == rb[1]
    assert np.max(np.abs(ra[0] - rb[0])) < 1e-11
