from __future__ import annotations

import importlib
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import kv

from fracneumann import _backend, _kernels_py

compiled = pytest.importorskip("fracneumann._kernels", reason="compiled extension not built")


@settings(max_examples=60, deadline=None)
@given(st.floats(0.01, 0.99), st.lists(st.floats(1e-8, 80.0), min_size=1, max_size=20))
def test_besselk_backends_agree_with_scipy(nu, xs):
    x = np.asarray(xs)
    ref = kv(nu, x)
    for impl in (_kernels_py, compiled):
        got = impl.besselk(nu, x)
        assert np.allclose(got, ref, rtol=5e-13, atol=0)


@settings(max_examples=60, deadline=None)
@given(st.floats(0.01, 0.99), st.lists(st.floats(0.0, 60.0), min_size=1, max_size=20))
def test_rho_backends_agree(s, ts):
    t = np.asarray(ts)
    a, da = _kernels_py.rho_and_derivative(s, t)
    b, db = compiled.rho_and_derivative(s, t)
    assert np.allclose(a, b, rtol=1e-13, atol=1e-300)
    finite = np.isfinite(da)
    assert np.array_equal(finite, np.isfinite(db))
    assert np.allclose(da[finite], db[finite], rtol=1e-13, atol=1e-300)


def test_crossover_is_continuous():
    x = np.array([1.0, np.nextafter(1.0, 2.0)])
    for impl in (_kernels_py, compiled):
        k = impl.besselk(0.3, x)
        assert abs(k[1] - k[0]) < 1e-14
        r, _ = impl.rho_and_derivative(0.6, x)
        assert abs(r[1] - r[0]) < 1e-14


def test_invalid_arguments():
    for impl in (_kernels_py, compiled):
        with pytest.raises(ValueError):
            impl.besselk(1.2, [1.0])
        with pytest.raises(ValueError):
            impl.besselk(0.3, [0.0])


def test_backend_selection_prefers_compiled():
    assert _backend.BACKEND == "cython"


def test_env_forces_pure_python():
    code = "import fracneumann._backend as b; print(b.BACKEND)"
    env = dict(os.environ, FRACNEUMANN_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
