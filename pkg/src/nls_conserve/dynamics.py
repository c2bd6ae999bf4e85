"""Time integration of ``i u_t + (1/2) Lap u = f(u)``.

Two independent routes produce trajectories:

* ``strang_step`` / ``evolve``: Strang splitting of the free flow and the
  exact nonlinear flow.  Because ``Im(conj(z) f(z)) = 0`` the modulus is
  frozen under ``i u_t = f(u)``, which therefore integrates to a pointwise
  phase rotation.
* ``picard_solve``: fixed-point iteration on the Duhamel formula
  ``u(t) = U(t) u0 - i int_0^t U(t-s) f(u(s)) ds`` with composite quadrature.
"""
from dataclasses import dataclass, field, replace
import logging

import numpy as np

from . import _accel, quadrature
from .grid import ComplexField, fft, ifft, propagate_array, dealias, laplacian_array
from .nonlinearity import f_array

log = logging.getLogger(__name__)

SCHEMES = ("strang", "picard")


class SolverError(RuntimeError):
    pass


class BlowUpError(SolverError):
    """Non-finite values appeared; carries the last finite state."""

    def __init__(self, t, last_state, trajectory=None):
        super().__init__(f"solution left the finite range after t = {t:g}")
        self.t = t
        self.last_state = last_state
        self.trajectory = trajectory


class NonContractionError(SolverError):
    """Picard differences stopped shrinking; shorten the time window."""


class PicardNotConvergedError(SolverError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    dt: float
    t_final: float = 0.0
    scheme: str = "strang"
    picard_max_iter: int = 50
    picard_tol: float = 1e-12
    picard_segment: float = 0.1
    quad: str = "simpson"
    store_every: int = 1
    dealias: bool = False
    #: sup-norm above which the run is declared blown up (None: only NaN/Inf)
    blowup_amplitude: float = None

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.t_final > 0 and self.dt > self.t_final:
            raise ValueError("dt must not exceed t_final")
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}")
        if self.quad not in quadrature.RULES:
            raise ValueError(f"quad must be one of {quadrature.RULES}")
        if not self.picard_tol > 0:
            raise ValueError("picard_tol must be positive")
        if int(self.store_every) != self.store_every or self.store_every < 1:
            raise ValueError("store_every must be a positive integer")
        if self.blowup_amplitude is not None and not self.blowup_amplitude > 0:
            raise ValueError("blowup_amplitude must be positive")

    def blown_up(self, a):
        if not np.all(np.isfinite(a)):
            return True
        return self.blowup_amplitude is not None and np.max(np.abs(a)) > self.blowup_amplitude

    def steps(self, t_final=None):
        T = self.t_final if t_final is None else t_final
        if T < 0:
            raise ValueError("only forward evolution (t_final >= 0) is supported")
        n = int(round(T / self.dt))
        if abs(n * self.dt - T) > 1e-9 * max(1.0, T):
            raise ValueError(f"t_final = {T} is not a multiple of dt = {self.dt}")
        return n


@dataclass(frozen=True)
class Trajectory:
    grid: object
    times: np.ndarray
    states: np.ndarray
    observable_log: tuple = ()
    info: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.times)

    def state(self, i):
        return ComplexField(self.grid, self.states[i])

    @property
    def dt_store(self):
        return float(self.times[1] - self.times[0]) if len(self.times) > 1 else 0.0

    def with_log(self, records):
        return replace(self, observable_log=tuple(records))

    def column(self, name):
        """Stack one observable across the log (vector observables gain an axis)."""
        if not self.observable_log:
            raise ValueError("trajectory has no observable log")
        return np.array([getattr(rec, name) for rec in self.observable_log])


# ---------------------------------------------------------------------------
# splitting

def _half_multiplier(grid, dt):
    return np.exp(-0.25j * dt * grid.xi_sq)


def _strang_array(grid, a, nl, dt, half, use_dealias=False):
    a = ifft(grid, half * fft(grid, a))
    if nl.lam != 0.0:
        a = _accel.nonlinear_phase(a, dt * nl.lam, nl.p)
        if use_dealias:
            a = dealias(ComplexField(grid, a)).values if np.all(np.isfinite(a)) else a
    return ifft(grid, half * fft(grid, a))


def strang_step(u, nl, dt, dealias=False):
    """One step ``U(dt/2) N(dt) U(dt/2)`` with the exact phase-rotation flow ``N``."""
    g = u.grid
    a = _strang_array(g, u.values, nl, dt, _half_multiplier(g, dt), dealias)
    if not np.all(np.isfinite(a)):
        raise BlowUpError(dt, u)
    return ComplexField(g, a)


def evolve(u0, nl, cfg, t_final=None):
    """Integrate from 0 to ``t_final`` and return the stored trajectory."""
    T = cfg.t_final if t_final is None else t_final
    nsteps = cfg.steps(T)
    if nsteps % cfg.store_every:
        raise ValueError("number of steps must be a multiple of store_every")
    nl.check_dimension(u0.grid.d)
    if cfg.scheme == "picard":
        return _evolve_picard(u0, nl, cfg, T)

    g = u0.grid
    half = _half_multiplier(g, cfg.dt)
    nstore = nsteps // cfg.store_every + 1
    states = np.empty((nstore,) + g.shape, dtype=np.complex128)
    states[0] = u0.values
    times = cfg.dt * cfg.store_every * np.arange(nstore)
    a = np.array(u0.values)
    k = 1
    for step in range(1, nsteps + 1):
        nxt = _strang_array(g, a, nl, cfg.dt, half, cfg.dealias)
        if cfg.blown_up(nxt):
            t_bad = step * cfg.dt
            partial = Trajectory(g, times[:k].copy(), states[:k].copy(),
                                 info={"scheme": "strang", "dt": cfg.dt,
                                       "quad": cfg.quad, "blow_up_time": t_bad})
            log.warning("blow-up detected at t=%g", t_bad)
            raise BlowUpError(t_bad, ComplexField(g, a), partial)
        a = nxt
        if step % cfg.store_every == 0:
            states[k] = a
            k += 1
    return Trajectory(g, times, states, info={"scheme": "strang", "dt": cfg.dt, "quad": cfg.quad})


# ---------------------------------------------------------------------------
# Duhamel integrals

def _as_samples(g, grid):
    if isinstance(g, np.ndarray):
        if grid is None:
            raise ValueError("grid is required when samples are a raw array")
        return grid, g
    g = list(g)
    if not g:
        raise ValueError("no samples")
    grid = g[0].grid
    return grid, np.stack([gi.values for gi in g])


def duhamel_integral(g, t, quad="simpson", grid=None, panels=None):
    """``-i int_0^t U(t-s) g(s) ds``.

    ``g`` is either uniform samples on ``[0, t]`` (sequence of fields or an
    array with leading time axis, endpoints included) or, for ``gauss4``, a
    callable ``s -> ComplexField`` integrated on ``panels`` panels.
    """
    if callable(g):
        if quad != "gauss4" or panels is None:
            raise ValueError("callable integrands need quad='gauss4' and a panel count")
        first = g(0.0)
        gr = first.grid

        def integrand(s):
            return propagate_array(gr, g(s).values, t - s)

        return ComplexField(gr, -1j * quadrature.gauss4(integrand, 0.0, t, panels))
    if quad == "gauss4":
        raise ValueError("gauss4 needs a callable integrand")
    grid, samples = _as_samples(g, grid)
    m = samples.shape[0]
    s = np.linspace(0.0, t, m)
    w = quadrature.weights(m, t / (m - 1), quad) if m > 1 else np.zeros(1)
    hat = fft(grid, samples)
    phase = np.exp(-0.5j * (t - s)[(slice(None),) + (None,) * grid.d] * grid.xi_sq)
    acc = np.tensordot(w, phase * hat, axes=(0, 0))
    return ComplexField(grid, -1j * ifft(grid, acc))


def duhamel_running(grid, psi, g_samples, ds, quad="simpson"):
    """``U(s_m) psi - i int_0^{s_m} U(s_m - s) g(s) ds`` at every sample.

    Works in the interaction picture: ``U(-s) g(s)`` is integrated
    cumulatively and pushed forward once per sample.
    """
    m = g_samples.shape[0]
    s = ds * np.arange(m)
    bshape = (slice(None),) + (None,) * grid.d
    back = np.exp(0.5j * s[bshape] * grid.xi_sq)
    inter = back * fft(grid, g_samples)
    acc = quadrature.cumulative(inter, ds, quad)
    psi_hat = fft(grid, psi)
    return ifft(grid, np.conj(back) * (psi_hat[None] - 1j * acc))


# ---------------------------------------------------------------------------
# Picard iteration

def picard_solve(u0, nl, T, cfg):
    """Fixed-point iteration of the Duhamel formula on ``[0, T]``.

    The whole time-sampled iterate is held in memory
    (``(T/dt + 1) * n**d`` complex values).
    """
    if cfg.quad == "gauss4":
        raise ValueError("picard iteration needs a sample-based rule")
    g = u0.grid
    nsteps = cfg.steps(T)
    if nsteps < 1:
        raise ValueError("picard window must contain at least one step")
    times = cfg.dt * np.arange(nsteps + 1)
    bshape = (slice(None),) + (None,) * g.d
    cur = ifft(g, np.exp(-0.5j * times[bshape] * g.xi_sq) * fft(g, u0.values)[None])
    scale = max(u0.norm(), np.finfo(float).tiny)
    diffs = []
    worse = 0
    for it in range(1, cfg.picard_max_iter + 1):
        with np.errstate(over="ignore", invalid="ignore"):
            nxt = duhamel_running(g, u0.values, f_array(nl, cur), cfg.dt, cfg.quad)
        if not np.all(np.isfinite(nxt)):
            raise NonContractionError(f"iterate {it} is not finite; shorten T")
        diff = float(np.sqrt(np.max(np.sum(np.abs(nxt - cur) ** 2,
                                           axis=tuple(range(1, g.d + 1))) * g.cell_volume)))
        diffs.append(diff)
        cur = nxt
        if diff <= cfg.picard_tol * scale or u0.norm() == 0.0:
            break
        worse = worse + 1 if len(diffs) > 1 and diff >= diffs[-2] else 0
        if worse >= 3:
            raise NonContractionError(
                f"Picard differences grew for 3 iterations (last {diff:.3e}); shorten T")
    else:
        raise PicardNotConvergedError(
            f"no convergence after {cfg.picard_max_iter} iterations (last diff {diffs[-1]:.3e})")
    keep = slice(None, None, cfg.store_every)
    return Trajectory(g, times[keep], cur[keep],
                      info={"scheme": "picard", "dt": cfg.dt, "quad": cfg.quad,
                            "picard_diffs": diffs, "iterations": len(diffs)})


def _evolve_picard(u0, nl, cfg, T):
    nsteps = cfg.steps(T)
    seg_steps = max(1, int(round(cfg.picard_segment / cfg.dt)))
    states = [u0.values[None]]
    diffs = []
    cur = u0
    done = 0
    while done < nsteps:
        k = min(seg_steps, nsteps - done)
        piece = picard_solve(cur, nl, k * cfg.dt, replace(cfg, store_every=1))
        bad = [i for i in range(1, len(piece)) if cfg.blown_up(piece.states[i])]
        if bad:
            t_bad = (done + bad[0]) * cfg.dt
            kept = np.concatenate(states)[::cfg.store_every]
            partial = Trajectory(u0.grid, cfg.dt * cfg.store_every * np.arange(kept.shape[0]), kept,
                                 info={"scheme": "picard", "dt": cfg.dt, "quad": cfg.quad,
                                       "blow_up_time": t_bad})
            raise BlowUpError(t_bad, cur, partial)
        states.append(piece.states[1:])
        diffs.append(piece.info["picard_diffs"])
        cur = piece.state(-1)
        done += k
    allstates = np.concatenate(states)[::cfg.store_every]
    times = cfg.dt * cfg.store_every * np.arange(allstates.shape[0])
    return Trajectory(u0.grid, times, allstates,
                      info={"scheme": "picard", "dt": cfg.dt, "quad": cfg.quad,
                            "picard_diffs": diffs})


# ---------------------------------------------------------------------------

def time_derivative(u, nl):
    """``u_t = i((1/2) Lap u - f(u))`` read off the equation."""
    g = u.grid
    return ComplexField(g, time_derivative_array(g, u.values, nl))


def time_derivative_array(grid, a, nl):
    return 1j * (0.5 * laplacian_array(grid, a) - f_array(nl, a))


def equation_residual(traj, nl):
    """L2 norm of central-difference ``u_t`` minus the equation's ``u_t`` at interior samples."""
    g = traj.grid
    dt = traj.dt_store
    out = []
    for i in range(1, len(traj) - 1):
        fd = (traj.states[i + 1] - traj.states[i - 1]) / (2 * dt)
        r = fd - time_derivative_array(g, traj.states[i], nl)
        out.append(np.sqrt(g.cell_volume * np.sum(np.abs(r) ** 2)))
    return np.array(out)
