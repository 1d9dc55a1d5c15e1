import os
import subprocess
import sys

import numpy as np
import pytest

from quantbeam import _kernels_py, kernels
from quantbeam.geometry import ArrayGeometry, steering_vector

try:
    from quantbeam import _kernels as _compiled
except ImportError:
    _compiled = None

needs_ext = pytest.mark.skipif(_compiled is None, reason="compiled extension not built")


def test_backend_reported():
    assert kernels.BACKEND in ("cython", "python")
    if _compiled is not None:
        assert kernels.BACKEND == "cython"


def test_pure_python_switch():
    env = dict(os.environ, QUANTBEAM_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import quantbeam.kernels as k; print(k.BACKEND)"],
                         capture_output=True, text=True, env=env, check=True)
    assert out.stdout.strip() == "python"


def test_quantize_reference_values():
    x = np.array([-10.0, -1.0, -0.5, -1e-12, 0.0, 0.49, 0.5, 1.7, 10.0])
    out = _kernels_py.quantize_midrise(x, 0.5, 8)
    np.testing.assert_array_equal(out, [-1.75, -0.75, -0.25, -0.25, 0.25, 0.25, 0.75, 1.75, 1.75])


@needs_ext
@pytest.mark.parametrize("n_levels", [2, 4, 8, 64, 65536])
def test_quantize_parity(n_levels):
    rng = np.random.default_rng(n_levels)
    x = rng.standard_normal(100_000) * 2.0
    x[:5] = [0.0, -0.0, 1e300, -1e300, 0.3]
    step = 3.0 / n_levels
    np.testing.assert_array_equal(_compiled.quantize_midrise(x, step, n_levels),
                                  _kernels_py.quantize_midrise(x, step, n_levels))


def _beams(rng, s, rows, cols):
    w = rng.standard_normal((s, rows, cols)) + 1j * rng.standard_normal((s, rows, cols))
    return w / np.linalg.norm(w.reshape(s, -1), axis=1)[:, None, None]


def test_array_gain_against_explicit_inner_product():
    rng = np.random.default_rng(3)
    geom = ArrayGeometry(8, 8)
    w = _beams(rng, 5, 8, 8)
    sector = rng.integers(0, 5, 200)
    az = rng.uniform(-np.pi, np.pi, 200)
    el = rng.uniform(-0.4, 0.4, 200)
    u, v = np.sin(az) * np.cos(el), np.sin(el)
    a = steering_vector(geom, az, el)
    expected = np.abs(np.einsum("pn,pn->p", w.reshape(5, -1)[sector].conj(), a)) ** 2
    np.testing.assert_allclose(kernels.array_gain(w, sector, u, v, 0.5), expected, rtol=1e-10, atol=1e-15)
    np.testing.assert_allclose(_kernels_py.array_gain(w, sector, u, v, 0.5), expected, rtol=1e-10, atol=1e-15)


@needs_ext
@pytest.mark.parametrize("shape", [(8, 8), (4, 4), (1, 16), (3, 5)])
def test_array_gain_parity(shape):
    rng = np.random.default_rng(sum(shape))
    w = _beams(rng, 7, *shape)
    n = 5000
    sector = rng.integers(0, 7, n)
    u = rng.uniform(-1, 1, n)
    v = rng.uniform(-0.5, 0.5, n)
    np.testing.assert_allclose(_compiled.array_gain(w, sector, u, v, 0.5),
                               _kernels_py.array_gain(w, sector, u, v, 0.5), rtol=1e-11, atol=1e-15)


def test_array_gain_matched_is_one():
    geom = ArrayGeometry(8, 8)
    a = steering_vector(geom, np.array([0.3]), np.array([-0.1]))
    w = a.reshape(1, 8, 8)
    u, v = np.sin(0.3) * np.cos(-0.1), np.sin(-0.1)
    assert kernels.array_gain(w, np.array([0]), np.array([u]), np.array([v]), 0.5)[0] == pytest.approx(1.0)
