"""Numerical residuals of the conservation laws and integral identities.

Every check returns an :class:`IdentityReport` holding ``lhs`` and ``rhs``
series, so a failure shows *where* in time the two sides separate.

Pairing convention: the bilinear pairing ``<a, b> = int a b`` appears in the
identities with explicit overbars.  With the L2 product ``(a, b) = int a
conj(b)`` the translations used below are

    <a, conj(b)>      == (a, b)
    <conj(a), b>      == (b, a)
    Im <J u, conj(J f)>  == Im (J u, J f)
    Re <grad u, conj(f)> == Re (grad u, f)
"""
from dataclasses import dataclass, field
import math

import numpy as np

from . import quadrature
from .dynamics import duhamel_running
from .grid import dot_array, gradient_array, boundary_fraction, BOUNDARY_MASS_TOL
from .nonlinearity import f_array, scaling_derivative

#: Trajectory-based identities pass when residual/scale <= budget * dt**2.
SECOND_ORDER_BUDGET = 1.0

DEFAULT_TOLERANCE = {
    "master": 1e-9,
    "charge": 1e-12,
    "energy": None,
    "momentum": 1e-10,
    "pseudo_conformal": None,
    "virial1": None,
    "cross_term": None,
    "virial": None,
    "algebra": 1e-8,
    "potential_calculus": None,
    "integrated_J": None,
    "im_grad": 1e-8,
}


def tolerance_for(name, dt, overrides=None):
    if overrides and name in overrides:
        return float(overrides[name])
    tol = DEFAULT_TOLERANCE[name]
    if tol is None:
        tol = max(1e-12, SECOND_ORDER_BUDGET * dt * dt)
    return tol


@dataclass
class IdentityReport:
    name: str
    times: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    tolerance: float
    labels: tuple = None
    params: dict = field(default_factory=dict)
    admissible_pair: tuple = None
    measured_order: object = None
    warnings: list = field(default_factory=list)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.lhs = np.asarray(self.lhs)
        self.rhs = np.asarray(self.rhs)
        if not (self.times.shape == self.lhs.shape == self.rhs.shape):
            raise ValueError("times, lhs and rhs must have equal length")
        if self.labels is not None and len(self.labels) != len(self.times):
            raise ValueError("labels must match the series length")

    @property
    def residual(self):
        return np.abs(self.lhs - self.rhs)

    @property
    def scale(self):
        return max(1.0, float(np.max(np.abs(self.lhs), initial=0.0)))

    @property
    def max_relative(self):
        return float(np.max(self.residual, initial=0.0)) / self.scale

    @property
    def passed(self):
        return self.max_relative <= self.tolerance

    def part(self, label):
        """Sub-report restricted to the rows carrying ``label``."""
        sel = np.array([lab == label for lab in self.labels])
        return IdentityReport(f"{self.name}.{label}", self.times[sel], self.lhs[sel],
                              self.rhs[sel], self.tolerance, None, self.params,
                              self.admissible_pair, self.measured_order, list(self.warnings))

    def to_json(self):
        def num(z):
            z = complex(z) if np.iscomplexobj(z) else float(z)
            return [z.real, z.imag] if isinstance(z, complex) else z

        series = []
        for i in range(len(self.times)):
            row = {"t": float(self.times[i]), "lhs": num(self.lhs[i]),
                   "rhs": num(self.rhs[i]), "residual": float(self.residual[i])}
            if self.labels is not None:
                row["label"] = self.labels[i]
            series.append(row)
        order = self.measured_order
        if isinstance(order, (float, np.floating)):
            order = float(order) if math.isfinite(order) else None
        return {
            "name": self.name,
            "params": self.params,
            "admissible_pair": list(self.admissible_pair) if self.admissible_pair else None,
            "series": series,
            "scale": self.scale,
            "tolerance": self.tolerance,
            "measured_order": order,
            "pass": self.passed,
            "pairing": PAIRINGS.get(self.name.split(".")[0]),
            "warnings": list(self.warnings),
        }


# ---------------------------------------------------------------------------
# helpers

def _meta(traj, nl):
    info = traj.info
    p = {"d": traj.grid.d, "n": traj.grid.n, "L": traj.grid.L,
         "lambda": nl.lam, "p": nl.p,
         "dt": info.get("dt", traj.dt_store), "t_final": float(traj.times[-1]),
         "scheme": info.get("scheme"), "quad": info.get("quad", "simpson")}
    return p, nl.admissible_pair(traj.grid.d)


def _solver_dt(traj):
    return float(traj.info.get("dt", traj.dt_store))


def _boundary_warnings(traj):
    worst = float(np.max(traj.column("boundary_fraction")))
    if worst > BOUNDARY_MASS_TOL:
        return [f"boundary mass fraction reached {worst:.3e}; x-weighted residuals are unreliable"]
    return []


def _report(name, traj, nl, lhs, rhs, tol_overrides=None, labels=None, times=None,
            weighted=False):
    params, pair = _meta(traj, nl)
    return IdentityReport(
        name, traj.times if times is None else times, lhs, rhs,
        tolerance_for(name, _solver_dt(traj), tol_overrides), labels, params, pair,
        warnings=_boundary_warnings(traj) if weighted else [])


def _cum(values, traj):
    return quadrature.cumulative(np.asarray(values), traj.dt_store)


# ---------------------------------------------------------------------------
# master identity

def master_residual(psi1, psi2, g1, g2, T, t_grid=None, quad="simpson", tolerance=None):
    """Check ``(v1(t), v2(t)) = (psi1, psi2) + i int_0^t (<v1, conj g2> - <conj v2, g1>) ds``.

    ``g1``/``g2`` are uniform samples on ``[0, T]`` (leading time axis,
    endpoints included).  ``v_j`` are rebuilt from ``(psi_j, g_j)`` by the
    Duhamel formula with the same quadrature.  ``t_grid`` must be a subset of
    the sample times (default: all of them).
    """
    grid = psi1.grid
    if psi2.grid != grid:
        raise ValueError("psi1 and psi2 live on different grids")
    g1 = np.asarray(g1)
    g2 = np.asarray(g2)
    if g1.shape != g2.shape or g1.shape[1:] != grid.shape:
        raise ValueError("g1 and g2 must share one uniform sampling on the grid")
    m = g1.shape[0]
    if m < 3:
        raise ValueError("need at least three time samples")
    ds = T / (m - 1)
    v1 = duhamel_running(grid, psi1.values, g1, ds, quad)
    v2 = duhamel_running(grid, psi2.values, g2, ds, quad)
    lhs = dot_array(grid, v1, v2)
    integrand = dot_array(grid, v1, g2) - dot_array(grid, g1, v2)
    rhs = complex(dot_array(grid, psi1.values, psi2.values)) + 1j * quadrature.cumulative(integrand, ds, quad)
    times = ds * np.arange(m)
    if t_grid is not None:
        idx = np.rint(np.asarray(t_grid, dtype=float) / ds).astype(int)
        if np.any(np.abs(idx * ds - np.asarray(t_grid)) > 1e-9 * max(1.0, T)) or np.any(idx >= m):
            raise ValueError("t_grid is not a subset of the sample times")
        times, lhs, rhs = times[idx], lhs[idx], rhs[idx]
    params = {"d": grid.d, "n": grid.n, "L": grid.L, "dt": ds, "t_final": T, "quad": quad}
    return IdentityReport("master", times, lhs, rhs,
                          DEFAULT_TOLERANCE["master"] if tolerance is None else tolerance,
                          params=params)


def master_from_trajectory(traj, nl, tol_overrides=None):
    """Master identity with ``psi = phi`` and ``g = f(u)`` along the stored states."""
    g = f_array(nl, traj.states)
    phi = traj.state(0)
    rep = master_residual(phi, phi, g, g, float(traj.times[-1]), quad=traj.info.get("quad", "simpson"))
    params, pair = _meta(traj, nl)
    rep.params = params
    rep.admissible_pair = pair
    rep.tolerance = tolerance_for("master", _solver_dt(traj), tol_overrides)
    return rep


# ---------------------------------------------------------------------------
# conservation laws

def conservation_residuals(traj, nl, tol_overrides=None):
    """Charge, energy and momentum reports (in that order)."""
    I = traj.column("charge")
    E = traj.column("energy")
    P = traj.column("momentum")
    charge = _report("charge", traj, nl, I, np.full_like(I, I[0]), tol_overrides)
    energy = _report("energy", traj, nl, E, np.full_like(E, E[0]), tol_overrides)
    d = traj.grid.d
    comps = ["px", "py", "pz"][:d]
    times = np.repeat(traj.times, d)
    lhs = P.reshape(-1)
    rhs = np.tile(P[0], len(traj.times))
    labels = tuple(comps) * len(traj.times)
    momentum = _report("momentum", traj, nl, lhs, rhs, tol_overrides, labels, times)
    return charge, energy, momentum


# ---------------------------------------------------------------------------
# pseudo-conformal law and virial identities

def _energy_series(traj, energy_mode):
    E = traj.column("energy")
    if energy_mode == "initial":
        return np.full_like(E, E[0])
    if energy_mode == "current":
        return E
    raise ValueError("energy_mode must be 'initial' or 'current'")


def pc_residual(traj, nl, tol_overrides=None):
    t = traj.times
    lhs = traj.column("j_norm_sq") + 2 * t ** 2 * traj.column("potential")
    rhs = traj.column("x_norm_sq")[0] + 2 * _cum(t * traj.column("w_integral"), traj)
    return _report("pseudo_conformal", traj, nl, lhs, rhs, tol_overrides, weighted=True)


def _virial1_sides(traj):
    x2 = traj.column("x_norm_sq")
    return x2, x2[0] + 2 * _cum(traj.column("cross_term"), traj)


def _cross_sides(traj, energy_mode):
    t = traj.times
    ct = traj.column("cross_term")
    E = _energy_series(traj, energy_mode)
    return ct, ct[0] + 2 * t * E - _cum(traj.column("w_integral"), traj)


def _virial_sides(traj, energy_mode):
    t = traj.times
    x2 = traj.column("x_norm_sq")
    E = _energy_series(traj, energy_mode)
    ww = _cum(_cum(traj.column("w_integral"), traj), traj)
    return x2, x2[0] + 2 * t * traj.column("cross_term")[0] + 2 * t ** 2 * E - 2 * ww


def virial1_residual(traj, nl=None, tol_overrides=None):
    lhs, rhs = _virial1_sides(traj)
    return _report("virial1", traj, nl, lhs, rhs, tol_overrides, weighted=True)


def cross_term_residual(traj, nl, tol_overrides=None, energy_mode="initial"):
    lhs, rhs = _cross_sides(traj, energy_mode)
    return _report("cross_term", traj, nl, lhs, rhs, tol_overrides, weighted=True)


def virial_residual(traj, nl, tol_overrides=None, energy_mode="initial"):
    lhs, rhs = _virial_sides(traj, energy_mode)
    return _report("virial", traj, nl, lhs, rhs, tol_overrides, weighted=True)


def virial_chain_defect(traj):
    """How far the virial residual is from virial1 plus twice the integrated cross-term residual.

    Both sides are built from the same running integrals, so the defect is
    pure roundoff; anything larger means the pieces disagree on conventions.
    """
    lhs, rhs = _virial_sides(traj, "initial")
    l1, r1 = _virial1_sides(traj)
    lc, rc = _cross_sides(traj, "initial")
    composed = (l1 - r1) + 2 * _cum(lc - rc, traj)
    return float(np.max(np.abs((lhs - rhs) - composed)))


# ---------------------------------------------------------------------------
# static algebra

def algebra_residuals(v, nl, s, tol=None):
    """Pointwise-in-time identities for a single field ``v`` and time label ``s``.

    Rows: ``J_pseudo``, ``J_cross`` and one ``density_cancel[j]`` per axis.
    """
    g = v.grid
    a = v.values
    ga = gradient_array(g, a)
    fa = f_array(nl, a)
    gf = gradient_array(g, fa)
    ju = g.x * a + 1j * s * ga
    jf = g.x * fa + 1j * s * gf
    dsc = scaling_derivative(nl, v)
    im_grad = float(np.sum(dot_array(g, ga, gf).imag))

    lhs = [float(np.sum(dot_array(g, ju, jf).imag)),
           float(np.sum(dot_array(g, ga, jf).real - dot_array(g, ju, gf).real))]
    rhs = [s * dsc + s * s * im_grad, dsc + 2 * s * im_grad]
    labels = ["J_pseudo", "J_cross"]
    dens = dot_array(g, ga, fa).real
    for j in range(g.d):
        lhs.append(float(dens[j]))
        rhs.append(0.0)
        labels.append(f"density_cancel[{j}]")
    warn = []
    if boundary_fraction(v) > BOUNDARY_MASS_TOL:
        warn.append("field is not boundary-negligible")
    return IdentityReport(
        "algebra", np.full(len(lhs), float(s)), lhs, rhs,
        DEFAULT_TOLERANCE["algebra"] if tol is None else tol, tuple(labels),
        {"d": g.d, "n": g.n, "L": g.L, "lambda": nl.lam, "p": nl.p, "s": float(s)},
        nl.admissible_pair(g.d), warnings=warn)


def merge_reports(reports, name=None):
    """Concatenate reports of one identity (e.g. algebra at several ``s``)."""
    first = reports[0]
    labels = None
    if first.labels is not None:
        labels = tuple(lab for r in reports for lab in r.labels)
    return IdentityReport(
        name or first.name,
        np.concatenate([r.times for r in reports]),
        np.concatenate([r.lhs for r in reports]),
        np.concatenate([r.rhs for r in reports]),
        first.tolerance, labels, first.params, first.admissible_pair,
        warnings=sorted({w for r in reports for w in r.warnings}))


# ---------------------------------------------------------------------------
# potential-energy calculus and the lemmas built on it

def potential_calculus_residual(traj, nl, k, tol_overrides=None):
    """Rows ``rate`` (finite-difference dV/dt vs the pairing, interior samples)
    and ``integrated`` (the weighted identity with power ``k``).

    The rate uses the five-point stencil so its own O(dt^4) error stays well
    under the O(dt^2) splitting error being measured.
    """
    if k not in (1, 2):
        raise ValueError("k must be 1 or 2")
    t = traj.times
    dt = traj.dt_store
    pot = traj.column("potential")
    rate = traj.column("potential_rate")
    if len(t) >= 5:
        fd = (pot[:-4] - 8 * pot[1:-3] + 8 * pot[3:-1] - pot[4:]) / (12 * dt)
        inner = slice(2, -2)
    else:
        fd = (pot[2:] - pot[:-2]) / (2 * dt)
        inner = slice(1, -1)
    int_lhs = _cum(t ** k * rate, traj)
    int_rhs = t ** k * pot - k * _cum(t ** (k - 1) * pot, traj)
    times = np.concatenate([t[inner], t])
    lhs = np.concatenate([fd, int_lhs])
    rhs = np.concatenate([rate[inner], int_rhs])
    labels = ("rate",) * len(fd) + ("integrated",) * len(t)
    rep = _report("potential_calculus", traj, nl, lhs, rhs, tol_overrides, labels, times)
    rep.params["k"] = k
    return rep


def integrated_J_residuals(traj, nl, tol_overrides=None):
    """Rows ``pseudo`` and ``cross`` of the time-integrated J-pairing identities."""
    t = traj.times
    pot = traj.column("potential")
    w = traj.column("w_integral")
    lhs_p = _cum(traj.column("j_pseudo"), traj)
    rhs_p = t ** 2 * pot - _cum(t * w, traj)
    lhs_c = _cum(traj.column("j_cross"), traj)
    rhs_c = -_cum(w, traj) + 2 * t * pot
    n = len(t)
    return _report("integrated_J", traj, nl, np.concatenate([lhs_p, lhs_c]),
                   np.concatenate([rhs_p, rhs_c]), tol_overrides,
                   ("pseudo",) * n + ("cross",) * n, np.concatenate([t, t]), weighted=True)


def im_grad_residual(traj, nl, tol_overrides=None):
    """``Im <grad u, conj(grad f(u))>`` against ``2 Re <u_t, conj f(u)>`` with ``u_t`` from the equation."""
    return _report("im_grad", traj, nl, traj.column("im_grad"),
                   traj.column("potential_rate"), tol_overrides)


# ---------------------------------------------------------------------------
# registry

REGISTRY = {
    "master": "Prop. prop:main",
    "charge": "Prop. Charge conservation",
    "energy": "Prop. Energy conservation",
    "momentum": "Prop. Momentum conservation",
    "pseudo_conformal": "pc-law",
    "virial1": "eq:vi_1st",
    "cross_term": "eq:cross_term_identity",
    "virial": "Prop. Virial identity",
    "algebra": "eq:J_pseudo_algebra, eq:J_cross_algebra, eq:density_cancel",
    "potential_calculus": "eq:potential_time_derivative, eq:potential_weighted_integration",
    "integrated_J": "eq:integrated_pseudo_term, eq:integrated_cross_term",
    "im_grad": "Lemma lem:im_grad",
}


#: Argument order of every Im/Re pairing a report compares, with
#: ``(a, b) = h^d sum a conj(b)``.
PAIRINGS = {
    "master": "lhs (v1, v2); integrand (v1, g2) - (g1, v2)",
    "momentum": "P_j = Im (d_j u, u)",
    "pseudo_conformal": "||J u||^2 = (J u, J u)",
    "virial1": "cross_term = sum_j Im (d_j u, x_j u)",
    "cross_term": "cross_term = sum_j Im (d_j u, x_j u)",
    "virial": "cross_term = sum_j Im (d_j u, x_j u)",
    "algebra": "J_pseudo: Im (J u, J f); J_cross: Re (d u, J f) - Re (J u, d f); "
               "density_cancel: Re (d_j u, f)",
    "potential_calculus": "rate: 2 Re (u_t, f)",
    "integrated_J": "pseudo: Im (J u, J f); cross: Re (d u, J f) - Re (J u, d f)",
    "im_grad": "Im (d u, d f) vs 2 Re (u_t, f)",
}


def list_identities():
    return [f"{name} ({anchor})" for name, anchor in REGISTRY.items()]


def run_check(name, traj, nl, tol_overrides=None, algebra_s=(0.0, 0.7, -1.3),
              potential_k=(1, 2), energy_mode="initial"):
    """Evaluate one registered identity on a logged trajectory."""
    if name not in REGISTRY:
        raise KeyError(f"unknown identity {name!r}")
    if name == "master":
        return master_from_trajectory(traj, nl, tol_overrides)
    if name in ("charge", "energy", "momentum"):
        reps = dict(zip(("charge", "energy", "momentum"),
                        conservation_residuals(traj, nl, tol_overrides)))
        return reps[name]
    if name == "pseudo_conformal":
        return pc_residual(traj, nl, tol_overrides)
    if name == "virial1":
        return virial1_residual(traj, nl, tol_overrides)
    if name == "cross_term":
        return cross_term_residual(traj, nl, tol_overrides, energy_mode)
    if name == "virial":
        return virial_residual(traj, nl, tol_overrides, energy_mode)
    if name == "algebra":
        reps = [algebra_residuals(traj.state(0), nl, s) for s in algebra_s]
        rep = merge_reports(reps)
        rep.params, rep.admissible_pair = _meta(traj, nl)
        rep.tolerance = tolerance_for("algebra", _solver_dt(traj), tol_overrides)
        return rep
    if name == "potential_calculus":
        reps = [potential_calculus_residual(traj, nl, k, tol_overrides) for k in potential_k]
        labels = tuple(f"k={k}:{lab}" for k, r in zip(potential_k, reps) for lab in r.labels)
        rep = merge_reports(reps)
        rep.labels = labels
        rep.params = dict(reps[0].params, k=list(potential_k))
        return rep
    if name == "integrated_J":
        return integrated_J_residuals(traj, nl, tol_overrides)
    return im_grad_residual(traj, nl, tol_overrides)
