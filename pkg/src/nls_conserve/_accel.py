"""Pointwise kernels with an optional numba backend.

Every kernel has a numba ``@njit`` version and a pure-numpy version with the
same signature.  The numba path is used when numba imports and the
environment variable ``NLS_CONSERVE_NUMBA`` is not set to ``0``.  Both paths
are always importable so the benchmark and the tests can compare them.
"""
import os

import numpy as np

try:
    import numba
    from numba import njit, prange
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda fn: fn

    prange = range


def _env_flag(name, default):
    raw = os.environ.get(name)
    if raw is None:
        return default
    return raw.strip().lower() not in ("0", "false", "no", "off", "")


USE_NUMBA = HAVE_NUMBA and _env_flag("NLS_CONSERVE_NUMBA", True)


def thread_cap():
    """Parallelism cap from ``NLS_CONSERVE_THREADS`` (None when unset)."""
    raw = os.environ.get("NLS_CONSERVE_THREADS")
    if not raw:
        return None
    cap = int(raw)
    if cap < 1:
        raise ValueError("NLS_CONSERVE_THREADS must be a positive integer")
    return cap


if HAVE_NUMBA and thread_cap() is not None:
    numba.set_num_threads(min(thread_cap(), numba.config.NUMBA_NUM_THREADS))


# ---------------------------------------------------------------------------
# numpy reference path

def _int_half(q):
    """``q/2`` as an int when it is a small non-negative integer, else -1."""
    h = 0.5 * q
    return int(h) if h == int(h) and 0 <= h <= 16 else -1


def _abs_pow_np(u, q):
    # |u|**q with the u = 0 branch pinned to 0 (q > 0 here); even q avoids
    # the square root and the exp/log pair entirely.
    r2 = u.real * u.real + u.imag * u.imag
    m = _int_half(q)
    if m >= 0:
        return r2 ** m
    out = np.zeros_like(r2)
    nz = r2 > 0.0
    out[nz] = np.exp(0.5 * q * np.log(r2[nz]))
    return out


def nonlinear_phase_np(u, coef, p):
    """Return ``u * exp(-1j * coef * |u|**(p-1))``."""
    phi = coef * _abs_pow_np(u, p - 1.0)
    return u * (np.cos(phi) - 1j * np.sin(phi))


def power_f_np(u, lam, p):
    """Return ``lam * |u|**(p-1) * u``."""
    return lam * _abs_pow_np(u, p - 1.0) * u


def abs_pow_sum_np(u, q):
    """Return ``sum |u|**q`` over all entries."""
    return float(np.sum(_abs_pow_np(np.asarray(u).ravel(), q)))


# ---------------------------------------------------------------------------
# numba path; callers pass contiguous 1-d views

@njit(cache=True)
def _pow_r2(r2, h, m):
    # r2**h, using repeated products when h == m is a small integer
    if m >= 0:
        out = 1.0
        for _ in range(m):
            out *= r2
        return out
    if r2 > 0.0:
        return np.exp(h * np.log(r2))
    return 0.0


@njit(cache=True, parallel=True)
def _nonlinear_phase_nb(u, coef, p, m):
    out = np.empty_like(u)
    h = 0.5 * (p - 1.0)
    for i in prange(u.shape[0]):
        z = u[i]
        phi = coef * _pow_r2(z.real * z.real + z.imag * z.imag, h, m)
        out[i] = z * complex(np.cos(phi), -np.sin(phi))
    return out


@njit(cache=True, parallel=True)
def _power_f_nb(u, lam, p, m):
    out = np.empty_like(u)
    h = 0.5 * (p - 1.0)
    for i in prange(u.shape[0]):
        z = u[i]
        out[i] = lam * _pow_r2(z.real * z.real + z.imag * z.imag, h, m) * z
    return out


@njit(cache=True)
def _abs_pow_sum_nb(u, q, m):
    # serial on purpose: fixed reduction order keeps results reproducible
    s = 0.0
    h = 0.5 * q
    for i in range(u.shape[0]):
        z = u[i]
        s += _pow_r2(z.real * z.real + z.imag * z.imag, h, m)
    return s


def nonlinear_phase_nb(u, coef, p):
    flat = np.ascontiguousarray(u, dtype=np.complex128).reshape(-1)
    return _nonlinear_phase_nb(flat, float(coef), float(p), _int_half(p - 1.0)).reshape(u.shape)


def power_f_nb(u, lam, p):
    flat = np.ascontiguousarray(u, dtype=np.complex128).reshape(-1)
    return _power_f_nb(flat, float(lam), float(p), _int_half(p - 1.0)).reshape(u.shape)


def abs_pow_sum_nb(u, q):
    flat = np.ascontiguousarray(u, dtype=np.complex128).reshape(-1)
    return float(_abs_pow_sum_nb(flat, float(q), _int_half(float(q))))


if USE_NUMBA:
    nonlinear_phase = nonlinear_phase_nb
    power_f = power_f_nb
    abs_pow_sum = abs_pow_sum_nb
else:
    nonlinear_phase = nonlinear_phase_np
    power_f = power_f_np
    abs_pow_sum = abs_pow_sum_np


def backend():
    return "numba" if USE_NUMBA else "numpy"
