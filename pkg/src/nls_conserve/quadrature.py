"""Composite quadrature on uniform samples.

All routines integrate along axis 0, so a stack of fields (shape
``(m,) + grid.shape``) is integrated exactly like a scalar series.
"""
import numpy as np

RULES = ("trapezoid", "simpson", "gauss4")

_GL2_NODES = np.array([-1.0, 1.0]) / np.sqrt(3.0)


def weights(m, dx, rule="simpson"):
    """Weights for ``m`` uniform samples spanning ``(m-1) * dx``."""
    if m < 2:
        raise ValueError("need at least two samples")
    w = np.full(m, dx)
    if rule == "trapezoid":
        w[0] = w[-1] = 0.5 * dx
    elif rule == "simpson":
        if (m - 1) % 2:
            raise ValueError(f"simpson needs an odd sample count, got {m}")
        w[1:-1:2] = 4.0 * dx / 3.0
        w[2:-1:2] = 2.0 * dx / 3.0
        w[0] = w[-1] = dx / 3.0
    else:
        raise ValueError(f"rule {rule!r} does not work on fixed samples")
    return w


def integrate(values, dx, rule="simpson"):
    values = np.asarray(values)
    w = weights(values.shape[0], dx, rule)
    return np.tensordot(w, values, axes=(0, 0))


def cumulative(values, dx, rule="simpson"):
    """Running integral ``int_0^{s_m}`` at every sample ``s_m``.

    ``simpson`` is fourth order at every sample: even indices use plain
    composite Simpson, odd indices close with the 3/8 rule on the last three
    panels, and index 1 uses the quadratic through the first three samples.
    """
    f = np.asarray(values)
    m = f.shape[0]
    out = np.zeros_like(f, dtype=np.result_type(f, float))
    if m < 2:
        return out
    if rule == "trapezoid" or m == 2:
        out[1:] = np.cumsum(0.5 * dx * (f[1:] + f[:-1]), axis=0)
        return out
    if rule != "simpson":
        raise ValueError(f"unknown cumulative rule {rule!r}")
    panels = dx / 3.0 * (f[0:-2:2] + 4.0 * f[1:-1:2] + f[2::2])
    out[2::2] = np.cumsum(panels, axis=0)
    out[1] = dx / 12.0 * (5.0 * f[0] + 8.0 * f[1] - f[2])
    if m >= 4:
        idx = np.arange(3, m, 2)
        tail = 3.0 * dx / 8.0 * (f[idx - 3] + 3.0 * f[idx - 2] + 3.0 * f[idx - 1] + f[idx])
        out[3::2] = out[idx - 3] + tail
    return out


def gauss4(fn, a, b, panels):
    """Composite two-point Gauss-Legendre (fourth order) of a callable."""
    if panels < 1:
        raise ValueError("need at least one panel")
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * (edges[1] - edges[0])
    total = None
    for left in edges[:-1]:
        mid = left + half
        for node in _GL2_NODES:
            val = half * np.asarray(fn(mid + half * node))
            total = val if total is None else total + val
    return total
