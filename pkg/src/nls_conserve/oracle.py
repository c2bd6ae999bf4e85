"""Brute-force references used to validate the fast paths.

Nothing here calls the FFT-based operators it is meant to check: the
propagator is an explicit DFT sum, the scaling derivative is a finite
difference of a spectrally resampled field, and the exact solutions carry
their own closed forms.
"""
from dataclasses import dataclass

import numpy as np

from .grid import ComplexField

DENSE_MAX_N = 32
DENSE_MAX_D = 2


def _dft_matrix(grid):
    k = np.fft.fftfreq(grid.n, d=1.0 / grid.n)
    j = np.arange(grid.n)
    return np.exp(-2j * np.pi * np.outer(k, j) / grid.n)


def dense_propagate(u, t):
    """Free propagator by explicit sums over modes and points (small grids only)."""
    g = u.grid
    if g.n > DENSE_MAX_N or g.d > DENSE_MAX_D:
        raise ValueError(f"dense propagator limited to n <= {DENSE_MAX_N}, d <= {DENSE_MAX_D}")
    F = _dft_matrix(g)
    Finv = np.conj(F).T / g.n
    mult = np.exp(-0.5j * t * g.freqs ** 2)
    if g.d == 1:
        return ComplexField(g, Finv @ (mult * (F @ u.values)))
    hat = np.einsum("ka,lb,ab->kl", F, F, u.values)
    hat *= np.exp(-0.5j * t * (g.freqs[:, None] ** 2 + g.freqs[None, :] ** 2))
    return ComplexField(g, np.einsum("ak,bl,kl->ab", Finv, Finv, hat))


def resample(u, scale, tail_tol=1e-10):
    """Trigonometric interpolant of ``u`` evaluated at ``scale * x``."""
    g = u.grid
    F = _dft_matrix(g)
    x0 = g.coords[0]
    E = np.exp(1j * np.outer(scale * g.coords - x0, g.freqs)) / g.n
    hat = u.values
    for ax in range(g.d):
        hat = np.moveaxis(np.tensordot(F, hat, axes=(1, ax)), 0, ax)
    power = np.abs(hat) ** 2
    total = power.sum()
    if total > 0:
        kidx = np.abs(np.fft.fftfreq(g.n, d=1.0 / g.n))
        high = kidx > 0.4 * g.n
        mask = np.zeros(g.shape, dtype=bool)
        for ax in range(g.d):
            shape = [1] * g.d
            shape[ax] = g.n
            mask |= high.reshape(shape)
        if power[mask].sum() > tail_tol * total:
            raise ValueError("field is under-resolved; spectral resampling is unreliable")
    out = hat
    for ax in range(g.d):
        out = np.moveaxis(np.tensordot(E, out, axes=(1, ax)), 0, ax)
    return ComplexField(g, out)


def fd_scaling_derivative(nl, u, h=1e-4):
    """Centered difference of ``lam -> int V(lam^{d/2} u(lam x)) dx`` at ``lam = 1``."""
    if not 1e-6 <= h <= 1e-2:
        raise ValueError("finite-difference step must lie in [1e-6, 1e-2]")
    g = u.grid

    def potential(lam):
        v = lam ** (0.5 * g.d) * resample(u, lam).values
        return g.cell_volume * float(np.sum(nl.V(v)))

    return (potential(1.0 + h) - potential(1.0 - h)) / (2.0 * h)


@dataclass(frozen=True)
class ExactSolution:
    """Closed-form solutions: ``plane_wave`` or the 1-d focusing cubic ``soliton_1d``."""
    kind: str
    lam: float
    p: float
    amplitude: complex = 1.0
    k: tuple = (0.0,)
    velocity: float = 0.0

    def __post_init__(self):
        if self.kind == "soliton_1d":
            if self.p != 3 or self.lam != -1:
                raise ValueError("soliton_1d requires p = 3 and lam = -1")
        elif self.kind != "plane_wave":
            raise ValueError(f"unknown exact solution {self.kind!r}")

    def check_grid(self, grid):
        if self.kind == "soliton_1d":
            if grid.d != 1:
                raise ValueError("soliton_1d lives in one dimension")
            if grid.L < 30:
                raise ValueError("soliton_1d needs L >= 30 to be boundary-negligible")
            if self.velocity and grid.lattice_index(self.velocity) is None:
                raise ValueError("soliton velocity must be a lattice wavenumber")
        else:
            if len(self.k) != grid.d:
                raise ValueError("wavevector length must equal the dimension")
            if any(grid.lattice_index(kj) is None for kj in self.k):
                raise ValueError("plane-wave wavevector is not on the Fourier lattice")

    @property
    def omega(self):
        """Plane-wave frequency: substituting ``A e^{i(k.x - w t)}`` gives ``w = |k|^2/2 + lam |A|^{p-1}``."""
        k2 = float(np.sum(np.square(self.k)))
        return 0.5 * k2 + self.lam * abs(self.amplitude) ** (self.p - 1)

    def values(self, t, grid):
        self.check_grid(grid)
        if self.kind == "plane_wave":
            phase = sum(kj * xj for kj, xj in zip(self.k, grid.x)) - self.omega * t
            return self.amplitude * np.exp(1j * phase)
        x = grid.x[0]
        v = self.velocity
        # Galilean boost of sech(x) e^{it/2}
        return np.exp(1j * (v * x + 0.5 * (1.0 - v * v) * t)) / np.cosh(x - v * t)


def exact_eval(sol, t, grid):
    return ComplexField(grid, sol.values(t, grid))


def substitution_residual(sol, grid, t, dt=2e-4):
    """``||i u_t + (1/2) Lap u - f(u)||`` with a five-point time derivative.

    The Laplacian is evaluated with an explicit DFT sum per axis so the check
    does not lean on the fast spectral operators.
    """
    vals = [sol.values(t + j * dt, grid) for j in (-2, -1, 1, 2)]
    ut = (vals[0] - 8 * vals[1] + 8 * vals[2] - vals[3]) / (12 * dt)
    u = sol.values(t, grid)
    F = _dft_matrix(grid)
    Finv = np.conj(F).T / grid.n
    lap = np.zeros_like(u)
    for ax in range(grid.d):
        D2 = (Finv * (-grid.freqs ** 2)) @ F
        lap = lap + np.moveaxis(np.tensordot(D2, u, axes=(1, ax)), 0, ax)
    fu = sol.lam * np.abs(u) ** (sol.p - 1) * u
    r = 1j * ut + 0.5 * lap - fu
    return float(np.sqrt(grid.cell_volume * np.sum(np.abs(r) ** 2)))


def fit_order(steps, errors):
    """Least-squares slope of ``log(error)`` against ``log(step)``."""
    steps = np.asarray(steps, dtype=float)
    errors = np.asarray(errors, dtype=float)
    slope, _ = np.polyfit(np.log(steps), np.log(errors), 1)
    return float(slope)


def manufactured_master(grid, samples, T=1.0):
    """Synthetic ``(psi1, psi2, g1, g2)`` with distinct Gaussian envelopes.

    ``g_j(s) = exp(-s) G_j(x)`` sampled at ``samples + 1`` uniform points of
    ``[0, T]``.  Nothing here solves an equation, so the master identity is
    tested on data unrelated to any trajectory.
    """
    x = grid.x
    r2 = lambda c, w: sum((x[j] - c) ** 2 for j in range(grid.d)) / w
    phase = lambda k: np.exp(1j * k * x[0])
    psi1 = ComplexField(grid, np.exp(-r2(1.0, 1.0)))
    psi2 = ComplexField(grid, np.exp(-r2(-0.5, 2.0)) * phase(1.0))
    G1 = np.exp(-r2(0.0, 1.5)) * (1 + 0.5j)
    G2 = np.exp(-r2(2.0, 1.0)) * phase(-0.5)
    s = np.linspace(0.0, T, samples + 1)[(slice(None),) + (None,) * grid.d]
    return psi1, psi2, np.exp(-s) * G1, np.exp(-s) * G2
