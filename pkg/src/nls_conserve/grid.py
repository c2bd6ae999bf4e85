"""Periodic box grids, complex fields and the spectral linear operators.

The box is ``[-L/2, L/2)**d`` with ``n`` points per axis.  Fourier
frequencies are kept in the wraparound order used by ``numpy.fft`` so that
multipliers line up with transformed arrays without any shifting.

Fields are thin immutable wrappers around numpy arrays of shape ``(n,)*d``
(``ComplexField``) or ``(d,) + (n,)*d`` (``VectorField``).
"""
from dataclasses import dataclass
from functools import cached_property
import warnings

import numpy as np

#: Fraction of the half-width that counts as the boundary shell.
SHELL_FRACTION = 0.10
#: Boundary mass (relative to total) above which x-weighted results are suspect.
BOUNDARY_MASS_TOL = 1e-8


class GridMismatchError(ValueError):
    pass


class BoundaryMassWarning(UserWarning):
    """The field carries non-negligible mass near the edge of the box."""


@dataclass(frozen=True)
class Grid:
    d: int
    n: int
    L: float

    def __post_init__(self):
        if self.d not in (1, 2, 3):
            raise ValueError(f"dimension must be 1, 2 or 3, got {self.d}")
        if int(self.n) != self.n or self.n < 4 or self.n % 2:
            raise ValueError(f"points per axis must be an even integer >= 4, got {self.n}")
        if not (self.L > 0 and np.isfinite(self.L)):
            raise ValueError(f"box length must be positive, got {self.L}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "L", float(self.L))

    @property
    def h(self):
        return self.L / self.n

    @property
    def shape(self):
        return (self.n,) * self.d

    @property
    def size(self):
        return self.n ** self.d

    @property
    def cell_volume(self):
        return self.h ** self.d

    @cached_property
    def coords(self):
        """Sawtooth coordinates ``-L/2 + j h`` (same for every axis)."""
        return -0.5 * self.L + self.h * np.arange(self.n)

    @cached_property
    def freqs(self):
        """Angular frequencies ``2 pi k / L`` in wraparound order."""
        return 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.h)

    @cached_property
    def x(self):
        """Coordinate arrays, one per axis, each of full grid shape."""
        return np.stack(np.meshgrid(*([self.coords] * self.d), indexing="ij"))

    @cached_property
    def xi(self):
        """Frequency arrays, one per axis, each of full grid shape."""
        return np.stack(np.meshgrid(*([self.freqs] * self.d), indexing="ij"))

    @cached_property
    def xi_sq(self):
        return np.sum(self.xi ** 2, axis=0)

    @cached_property
    def shell_mask(self):
        edge = 0.5 * self.L * (1.0 - SHELL_FRACTION)
        return np.any(np.abs(self.x) >= edge, axis=0)

    def lattice_index(self, k):
        """Integer mode index for wavenumber ``k``, or None if off-lattice."""
        m = k * self.L / (2.0 * np.pi)
        r = round(m)
        return int(r) if abs(m - r) <= 1e-9 * max(1.0, abs(m)) else None


def make_grid(d, n, L):
    return Grid(d, n, L)


@dataclass(frozen=True, eq=False)
class ComplexField:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.complex128)
        if vals.shape != self.grid.shape:
            if vals.size != self.grid.size:
                raise ValueError(
                    f"expected {self.grid.size} values for grid shape {self.grid.shape}, got {vals.size}")
            vals = vals.reshape(self.grid.shape)
        if not np.all(np.isfinite(vals)):
            raise ValueError("field contains NaN or Inf")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    def _other(self, other):
        if isinstance(other, ComplexField):
            if other.grid != self.grid:
                raise GridMismatchError("fields live on different grids")
            return other.values
        return other

    def __add__(self, other):
        return ComplexField(self.grid, self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return ComplexField(self.grid, self.values - self._other(other))

    def __rsub__(self, other):
        return ComplexField(self.grid, self._other(other) - self.values)

    def __mul__(self, other):
        return ComplexField(self.grid, self.values * self._other(other))

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return ComplexField(self.grid, self.values / scalar)

    def __neg__(self):
        return ComplexField(self.grid, -self.values)

    def conj(self):
        return ComplexField(self.grid, np.conj(self.values))

    def norm(self):
        return float(np.sqrt(inner_product(self, self).real))

    @classmethod
    def zeros(cls, grid):
        return cls(grid, np.zeros(grid.shape, dtype=np.complex128))

    @classmethod
    def from_function(cls, grid, fn):
        """Sample ``fn(*x_axes)`` on the grid."""
        return cls(grid, fn(*grid.x))


@dataclass(frozen=True, eq=False)
class VectorField:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.complex128)
        if vals.shape != (self.grid.d,) + self.grid.shape:
            raise ValueError("vector field must have one component per dimension")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @property
    def components(self):
        return tuple(ComplexField(self.grid, c) for c in self.values)

    def __getitem__(self, j):
        return ComplexField(self.grid, self.values[j])

    def __len__(self):
        return self.grid.d


def _check_same(u, v):
    if u.grid != v.grid:
        raise GridMismatchError("fields live on different grids")


# ---------------------------------------------------------------------------
# array-level kernels (used internally to avoid wrapper churn in time loops)

def fft(grid, a):
    return np.fft.fftn(a, axes=tuple(range(-grid.d, 0)))


def ifft(grid, a):
    return np.fft.ifftn(a, axes=tuple(range(-grid.d, 0)))


def gradient_array(grid, a):
    ah = fft(grid, a)
    return ifft(grid, 1j * grid.xi * ah)


def laplacian_array(grid, a):
    return ifft(grid, -grid.xi_sq * fft(grid, a))


def propagate_array(grid, a, t):
    if t == 0:
        return np.array(a, dtype=np.complex128)
    return ifft(grid, np.exp(-0.5j * t * grid.xi_sq) * fft(grid, a))


def dot_array(grid, a, b):
    """``h^d sum a * conj(b)`` over the trailing grid axes."""
    axes = tuple(range(-grid.d, 0))
    return grid.cell_volume * np.sum(a * np.conj(b), axis=axes)


def boundary_fraction_array(grid, a):
    dens = np.abs(a) ** 2
    total = dens.sum()
    if total == 0:
        return 0.0
    return float(dens[grid.shell_mask].sum() / total)


def boundary_fraction(u):
    """Share of the L2 mass sitting in the outer shell of the box."""
    return boundary_fraction_array(u.grid, u.values)


def _warn_boundary(u):
    frac = boundary_fraction(u)
    if frac > BOUNDARY_MASS_TOL:
        warnings.warn(
            f"{frac:.3e} of the L2 mass lies in the outer boundary shell; "
            "x-weighted quantities are unreliable",
            BoundaryMassWarning, stacklevel=3)
    return frac


# ---------------------------------------------------------------------------
# public field operations

def inner_product(u, v):
    """Discrete L2 product ``h^d sum u conj(v)`` (conjugate-linear in v)."""
    _check_same(u, v)
    return complex(dot_array(u.grid, u.values, v.values))


def pairing(u, v):
    """Bilinear pairing ``h^d sum u v`` (no conjugation).

    Identities written with explicit overbars are coded through this, so
    ``pairing(a, b.conj())`` equals ``inner_product(a, b)``.
    """
    _check_same(u, v)
    return complex(u.grid.cell_volume * np.sum(u.values * v.values))


def gradient(u):
    return VectorField(u.grid, gradient_array(u.grid, u.values))


def laplacian(u):
    return ComplexField(u.grid, laplacian_array(u.grid, u.values))


def free_propagate(u, t):
    """Apply the free group ``exp(i t Delta / 2)``."""
    if not np.isfinite(t):
        raise ValueError("propagation time must be finite")
    return ComplexField(u.grid, propagate_array(u.grid, u.values, float(t)))


def weight_x(u):
    """Multiply by the sawtooth coordinate, one component per axis."""
    _warn_boundary(u)
    return VectorField(u.grid, u.grid.x * u.values)


def galilean(u, t):
    """``J(t) u = x u + i t grad u``."""
    _warn_boundary(u)
    g = u.grid
    return VectorField(g, g.x * u.values + 1j * t * gradient_array(g, u.values))


def dealias(u):
    """Zero every mode outside the 2/3-rule ball (per axis)."""
    g = u.grid
    a = u.values if isinstance(u, ComplexField) else u
    cut = g.n // 3
    idx = np.abs(np.fft.fftfreq(g.n, d=1.0 / g.n))
    keep = idx <= cut
    mask = np.ones(g.shape, dtype=bool)
    for ax in range(g.d):
        shape = [1] * g.d
        shape[ax] = g.n
        mask = mask & keep.reshape(shape)
    out = ifft(g, fft(g, a) * mask)
    return ComplexField(g, out) if isinstance(u, ComplexField) else out


# ---------------------------------------------------------------------------
# field file format

FIELD_MAGIC = "NLSF1"


def write_field(path, u):
    g = u.grid
    with open(path, "w") as fh:
        fh.write(f"{FIELD_MAGIC} d={g.d} n={g.n} L={g.L!r}\n")
        for z in u.values.ravel(order="C"):
            fh.write(f"{z.real:.17g} {z.imag:.17g}\n")


def read_field(path):
    with open(path) as fh:
        header = fh.readline().split()
        if not header or header[0] != FIELD_MAGIC:
            raise ValueError(f"{path}: not an {FIELD_MAGIC} field file")
        meta = dict(item.split("=", 1) for item in header[1:])
        try:
            grid = Grid(int(meta["d"]), int(meta["n"]), float(meta["L"]))
        except KeyError as exc:
            raise ValueError(f"{path}: header missing {exc}") from None
        data = np.loadtxt(fh, dtype=np.float64, ndmin=2)
    if data.shape != (grid.size, 2):
        raise ValueError(f"{path}: expected {grid.size} rows of 're im', got {data.shape}")
    return ComplexField(grid, (data[:, 0] + 1j * data[:, 1]).reshape(grid.shape))
