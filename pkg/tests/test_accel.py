import importlib
import os
import subprocess
import sys

import numpy as np
import pytest

from nls_conserve import _accel

pytestmark = pytest.mark.skipif(not _accel.HAVE_NUMBA, reason="numba not installed")


@pytest.fixture
def field():
    rng = np.random.default_rng(0)
    a = rng.normal(size=(64, 64)) + 1j * rng.normal(size=(64, 64))
    a[3, 5] = 0.0
    return a


@pytest.mark.parametrize("p", [2.0, 3.0, 4.5])
def test_backends_agree(field, p):
    assert np.allclose(_accel.power_f_nb(field, -1.3, p), _accel.power_f_np(field, -1.3, p),
                       rtol=1e-13, atol=0)
    assert np.allclose(_accel.nonlinear_phase_nb(field, 0.01, p),
                       _accel.nonlinear_phase_np(field, 0.01, p), rtol=1e-13, atol=0)
    assert _accel.abs_pow_sum_nb(field, p + 1) == pytest.approx(
        _accel.abs_pow_sum_np(field, p + 1), rel=1e-13)


def test_zero_maps_to_zero(field):
    assert _accel.power_f_nb(field, 1.0, 1.5)[3, 5] == 0
    assert _accel.power_f_np(field, 1.0, 1.5)[3, 5] == 0


def test_noncontiguous_input(field):
    view = field[:, ::2]
    assert np.allclose(_accel.power_f_nb(view, 1.0, 3.0), _accel.power_f_np(view, 1.0, 3.0))


def test_numba_is_deterministic(field):
    a = _accel.abs_pow_sum_nb(field, 4.0)
    assert all(_accel.abs_pow_sum_nb(field, 4.0) == a for _ in range(3))


def test_env_flag_selects_numpy():
    code = "from nls_conserve import _accel; print(_accel.backend())"
    env = dict(os.environ, NLS_CONSERVE_NUMBA="0")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True)
    assert out.stdout.strip() == "numpy"
    env["NLS_CONSERVE_NUMBA"] = "1"
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True)
    assert out.stdout.strip() == "numba"


def test_thread_cap(monkeypatch):
    monkeypatch.setenv("NLS_CONSERVE_THREADS", "2")
    assert _accel.thread_cap() == 2
    monkeypatch.setenv("NLS_CONSERVE_THREADS", "0")
    with pytest.raises(ValueError):
        _accel.thread_cap()
    monkeypatch.delenv("NLS_CONSERVE_THREADS")
    assert _accel.thread_cap() is None
