"""Power nonlinearity ``f(z) = lam |z|^(p-1) z`` and the functionals built on it.

With ``V(z) = 2 lam / (p+1) |z|^(p+1)`` one has ``f = dV/d(conj z)`` and
``V'(r) r = (p+1) V``, so every scalar functional here reduces to a multiple
of ``sum |u|^(p+1)``.  The closed forms are checked against finite
differences in the tests rather than trusted.
"""
from dataclasses import dataclass

import numpy as np

from . import _accel
from .grid import ComplexField


@dataclass(frozen=True)
class PowerNonlinearity:
    lam: float
    p: float

    def __post_init__(self):
        if not np.isfinite(self.lam):
            raise ValueError("coefficient must be finite")
        if not (self.p > 1 and np.isfinite(self.p)):
            raise ValueError(f"exponent must satisfy 1 < p < inf, got {self.p}")

    def critical_exponent(self, d):
        return 1.0 + 4.0 / d

    def is_critical(self, d):
        return abs(self.p - self.critical_exponent(d)) <= 1e-12

    def check_dimension(self, d):
        """Reject exponents above the energy-critical bound for ``d >= 3``."""
        if d >= 3 and self.p > 1.0 + 4.0 / (d - 2) + 1e-12:
            raise ValueError(f"p = {self.p} exceeds 1 + 4/(d-2) for d = {d}")

    def admissible_pair(self, d):
        """The exponent pair ``(4(p+1)/(d(p-1)), p+1)``; metadata only."""
        return (4.0 * (self.p + 1.0) / (d * (self.p - 1.0)), self.p + 1.0)

    # pointwise scalar forms ------------------------------------------------

    def f(self, z):
        z = np.asarray(z, dtype=np.complex128)
        return _accel.power_f_np(np.atleast_1d(z), self.lam, self.p).reshape(z.shape)

    def V(self, z):
        a = np.abs(np.asarray(z, dtype=np.complex128))
        return 2.0 * self.lam / (self.p + 1.0) * a ** (self.p + 1.0)

    def dV(self, r):
        """Radial derivative ``V'(r)``."""
        return 2.0 * self.lam * np.asarray(r, dtype=float) ** self.p


def f_eval(nl, u):
    return ComplexField(u.grid, _accel.power_f(u.values, nl.lam, nl.p))


def f_array(nl, a):
    return _accel.power_f(a, nl.lam, nl.p)


def moment(nl, grid, a):
    """``h^d sum |a|^(p+1)`` for a raw array on ``grid``."""
    return grid.cell_volume * _accel.abs_pow_sum(a, nl.p + 1.0)


def v_integral(nl, u):
    """Potential energy ``int V(u) dx``."""
    return 2.0 * nl.lam / (nl.p + 1.0) * moment(nl, u.grid, u.values)


def radial_integral(nl, u):
    """``int V'(|u|) |u| dx``."""
    return 2.0 * nl.lam * moment(nl, u.grid, u.values)


def scaling_derivative(nl, u):
    """Derivative of the potential energy along the L2-preserving dilation."""
    d = u.grid.d
    return -d * v_integral(nl, u) + 0.5 * d * radial_integral(nl, u)


def w_integral(nl, u):
    """``int (d+2) V(u) - (d/2) V'(|u|)|u| dx``; zero at the L2-critical power."""
    d = u.grid.d
    # V'(|u|)|u| = (p+1) V, so the density is a fixed multiple of V
    coef = 0.0 if nl.is_critical(d) else (d + 2) - 0.5 * d * (nl.p + 1.0)
    return coef * v_integral(nl, u)


@dataclass
class AssumptionReport:
    samples: np.ndarray
    charge_residual: np.ndarray
    gauge_residual: np.ndarray
    wirtinger_residual: np.ndarray
    bound: np.ndarray

    @property
    def ok(self):
        worst = np.maximum.reduce([self.charge_residual, self.gauge_residual,
                                   self.wirtinger_residual])
        return bool(np.all(worst <= self.bound))

    def violations(self):
        worst = np.maximum.reduce([self.charge_residual, self.gauge_residual,
                                   self.wirtinger_residual])
        return np.flatnonzero(worst > self.bound)


def wirtinger_fd(nl, z, step=1e-5):
    """Central-difference ``dV/d(conj z) = (V_x + i V_y) / 2``."""
    z = np.asarray(z, dtype=np.complex128)
    hh = step * np.maximum(1.0, np.abs(z))
    vx = (nl.V(z + hh) - nl.V(z - hh)) / (2 * hh)
    vy = (nl.V(z + 1j * hh) - nl.V(z - 1j * hh)) / (2 * hh)
    return 0.5 * (vx + 1j * vy)


def check_assumptions(nl, samples, thetas=None, seed=0):
    """Residuals of the structural assumptions at the sample points.

    Never raises on violation; inspect ``report.ok`` / ``violations()``.
    """
    z = np.atleast_1d(np.asarray(samples, dtype=np.complex128))
    if z.size == 0:
        raise ValueError("need at least one sample")
    if thetas is None:
        thetas = np.random.default_rng(seed).uniform(-np.pi, np.pi, z.shape)
    rot = np.exp(1j * np.asarray(thetas))
    fz = nl.f(z)
    charge = np.abs((np.conj(z) * fz).imag)
    gauge = np.abs(nl.f(rot * z) - rot * fz)
    wirt = np.abs(fz - wirtinger_fd(nl, z))
    bound = 1e-6 * (1.0 + np.abs(z) ** nl.p)
    return AssumptionReport(z, charge, gauge, wirt, bound)
