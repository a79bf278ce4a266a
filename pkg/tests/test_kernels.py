import numpy as np
import pytest

from gaugelat import _kernels_py, kernels

compiled = pytest.importorskip("gaugelat._kernels")


def test_backend_selected_at_import():
    assert kernels.BACKEND in ("cython", "python")


@pytest.fixture
def rng():
    return np.random.default_rng(12)


def test_piece_index_agrees(rng):
    br = np.sort(np.concatenate([[0.0, 1.0], rng.random(50)]))
    t = np.concatenate([rng.random(1000), br, [1.0]])
    assert np.array_equal(_kernels_py.piece_index(br, t), compiled.piece_index(br, t))


def test_piece_masses_agree(rng):
    br = np.linspace(0, 1, 17)
    t = rng.random(500)
    m = rng.random(500)
    assert np.array_equal(_kernels_py.piece_masses(br, t, m), compiled.piece_masses(br, t, m))
    mi = rng.integers(0, 100, 500)
    assert np.array_equal(_kernels_py.piece_masses_int(br, t, mi), compiled.piece_masses_int(br, t, mi))


def test_step_oscillation_agrees(rng):
    br = np.linspace(0, 1, 65)
    vals = rng.normal(size=(64, 2))
    lo = rng.random(200) * 0.9
    hi = lo + rng.random(200) * 0.1
    cl, ch = np.array([0.0, 0.5, 0.8]), np.array([0.3, 0.5, 1.0])
    a = _kernels_py.step_oscillation(br, vals, lo, hi, cl, ch)
    b = compiled.step_oscillation(br, vals, lo, hi, cl, ch)
    assert np.array_equal(a, b)


@pytest.mark.parametrize("k, m", [(4, 1), (8, 2), (10, 3)])
def test_coset_contrast_agrees(k, m, rng):
    w = rng.random(1 << (k - m))
    for j in range(k + 1):
        a = _kernels_py.coset_contrast(k, m, j, w)
        b = compiled.coset_contrast(k, m, j, w)
        assert a[0] == b[0] and a[1] == b[1] and np.array_equal(a[2], b[2])


def test_fallback_forced_by_environment():
    import os
    import subprocess
    import sys

    env = dict(os.environ, GAUGELAT_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from gaugelat import kernels; print(kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
