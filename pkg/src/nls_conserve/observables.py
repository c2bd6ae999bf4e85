"""Scalar observables of a field and running time integrals over trajectories.

Sign conventions: the L2 product conjugates its second slot, the momentum is
``P = Im int conj(u) grad u`` and ``cross_term = sum_j Im (d_j u, x_j u)``.
Expanding ``|x u + i t grad u|^2`` with these conventions gives the exact
algebraic relation

    j_norm_sq = x_norm_sq - 2 t cross_term + t^2 grad_norm_sq.
"""
import csv
from dataclasses import dataclass, fields

import numpy as np

from . import quadrature
from .grid import dot_array, fft, ifft, boundary_fraction_array, _warn_boundary
from .nonlinearity import f_array, moment, v_integral

KERNELS = ("1", "s", "double")


@dataclass(frozen=True)
class ObservableRecord:
    t: float
    charge: float
    energy: float
    momentum: tuple
    potential: float
    w_integral: float
    grad_norm_sq: float
    j_norm_sq: float
    x_norm_sq: float
    cross_term: float
    # pairings needed by the identity checks, so they never revisit states
    scaling_derivative: float = 0.0
    potential_rate: float = 0.0
    im_grad: float = 0.0
    j_pseudo: float = 0.0
    j_cross: float = 0.0
    density_cancel: float = 0.0
    boundary_fraction: float = 0.0


def _grad(grid, a):
    return ifft(grid, 1j * grid.xi * fft(grid, a))


def observe_array(grid, a, nl, t):
    """All observables of the raw array ``a`` at time ``t``."""
    d = grid.d
    ga = _grad(grid, a)
    fa = f_array(nl, a)
    gf = _grad(grid, fa)
    xa = grid.x * a
    ju = xa + 1j * t * ga
    jf = grid.x * fa + 1j * t * gf
    lap = ifft(grid, -grid.xi_sq * fft(grid, a))
    ut = 1j * (0.5 * lap - fa)

    charge = dot_array(grid, a, a).real
    grad_sq = float(np.sum(dot_array(grid, ga, ga).real))
    mom = moment(nl, grid, a)
    potential = 2.0 * nl.lam / (nl.p + 1.0) * mom
    radial = 2.0 * nl.lam * mom
    w_coef = 0.0 if nl.is_critical(d) else (d + 2) - 0.5 * d * (nl.p + 1.0)
    return ObservableRecord(
        t=float(t),
        charge=float(charge),
        energy=0.5 * grad_sq + potential,
        momentum=tuple(float(v) for v in dot_array(grid, ga, a).imag),
        potential=potential,
        w_integral=w_coef * potential,
        grad_norm_sq=grad_sq,
        j_norm_sq=float(np.sum(dot_array(grid, ju, ju).real)),
        x_norm_sq=float(np.sum(dot_array(grid, xa, xa).real)),
        cross_term=float(np.sum(dot_array(grid, ga, xa).imag)),
        scaling_derivative=-d * potential + 0.5 * d * radial,
        potential_rate=2.0 * float(dot_array(grid, ut, fa).real),
        im_grad=float(np.sum(dot_array(grid, ga, gf).imag)),
        j_pseudo=float(np.sum(dot_array(grid, ju, jf).imag)),
        j_cross=float(np.sum(dot_array(grid, ga, jf).real - dot_array(grid, ju, gf).real)),
        density_cancel=float(np.max(np.abs(dot_array(grid, ga, fa).real))),
        boundary_fraction=boundary_fraction_array(grid, a),
    )


def observe(u, nl, t=0.0):
    return observe_array(u.grid, u.values, nl, t)


def record_observables(traj, nl):
    """Return ``traj`` with one ObservableRecord per stored state."""
    recs = [observe_array(traj.grid, a, nl, t) for t, a in zip(traj.times, traj.states)]
    return traj.with_log(recs)


# ---------------------------------------------------------------------------
# single-quantity entry points

def charge(u):
    return float(dot_array(u.grid, u.values, u.values).real)


def grad_norm_sq(u):
    ga = _grad(u.grid, u.values)
    return float(np.sum(dot_array(u.grid, ga, ga).real))


def energy(u, nl):
    return 0.5 * grad_norm_sq(u) + v_integral(nl, u)


def momentum(u):
    ga = _grad(u.grid, u.values)
    return dot_array(u.grid, ga, u.values).imag


def x_norm_sq(u):
    _warn_boundary(u)
    xa = u.grid.x * u.values
    return float(np.sum(dot_array(u.grid, xa, xa).real))


def j_norm_sq(u, t):
    _warn_boundary(u)
    g = u.grid
    ju = g.x * u.values + 1j * t * _grad(g, u.values)
    return float(np.sum(dot_array(g, ju, ju).real))


def cross_term(u):
    """``sum_j Im (d_j u, x_j u)``."""
    _warn_boundary(u)
    g = u.grid
    return float(np.sum(dot_array(g, _grad(g, u.values), g.x * u.values).imag))


# ---------------------------------------------------------------------------

def accumulate(traj, nl=None, kernel="1", rule="simpson", values=None):
    """Running integral of the W-integral along the trajectory.

    ``kernel`` selects ``int_0^t W``, ``int_0^t s W`` or the iterated
    ``int_0^t int_0^s W``.  ``values`` overrides the logged series.
    """
    if kernel not in KERNELS:
        raise ValueError(f"kernel must be one of {KERNELS}")
    times = np.asarray(traj.times)
    w = traj.column("w_integral") if values is None else np.asarray(values, dtype=float)
    if len(times) < 3:
        raise ValueError("need at least three samples to accumulate")
    dt = float(times[1] - times[0])
    if kernel == "s":
        return quadrature.cumulative(times * w, dt, rule)
    once = quadrature.cumulative(w, dt, rule)
    if kernel == "1":
        return once
    return quadrature.cumulative(once, dt, rule)


def csv_columns(d):
    return (["t", "charge", "energy"] + ["px", "py", "pz"][:d]
            + ["potential", "w_integral", "grad_norm_sq", "j_norm_sq", "x_norm_sq", "cross_term"])


def write_csv(path, traj):
    d = traj.grid.d
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(csv_columns(d))
        for r in traj.observable_log:
            w.writerow([repr(v) for v in (
                r.t, r.charge, r.energy, *r.momentum, r.potential, r.w_integral,
                r.grad_norm_sq, r.j_norm_sq, r.x_norm_sq, r.cross_term)])


def record_names():
    return [f.name for f in fields(ObservableRecord)]
