import numpy as np
import pytest

from nls_conserve.grid import ComplexField, Grid, free_propagate
from nls_conserve.oracle import (ExactSolution, dense_propagate, exact_eval, fd_scaling_derivative,
                                 fit_order, manufactured_master, resample,
                                 substitution_residual)
from nls_conserve.nonlinearity import PowerNonlinearity
from conftest import gaussian, random_packet


@pytest.mark.parametrize("d", [1, 2])
def test_dense_matches_fft(d):
    g = Grid(d, 16, 6.0)
    rng = np.random.default_rng(d)
    u = ComplexField(g, rng.normal(size=g.shape) + 1j * rng.normal(size=g.shape))
    for t in (0.1, -0.9, 2.5):
        assert np.max(np.abs(dense_propagate(u, t).values - free_propagate(u, t).values)) <= 1e-12


def test_dense_guard():
    with pytest.raises(ValueError):
        dense_propagate(ComplexField.zeros(Grid(1, 64, 1.0)), 0.1)


def test_resample_identity_and_dilation():
    g = Grid(1, 128, 40.0)
    u = gaussian(g)
    assert np.allclose(resample(u, 1.0).values, u.values, atol=1e-12)
    x = g.x[0]
    assert np.allclose(resample(u, 1.1).values, np.exp(-(1.1 * x) ** 2), atol=1e-10)
    rough = ComplexField(g, np.where(np.abs(x) < 1, 1.0, 0.0))
    with pytest.raises(ValueError):
        resample(rough, 1.1)


def test_fd_step_bounds(line):
    nl = PowerNonlinearity(1.0, 3.0)
    with pytest.raises(ValueError):
        fd_scaling_derivative(nl, gaussian(line), 1e-8)


def test_exact_solution_validation(line):
    with pytest.raises(ValueError):
        ExactSolution("soliton_1d", 1.0, 3.0)
    with pytest.raises(ValueError):
        ExactSolution("breather", -1.0, 3.0)
    with pytest.raises(ValueError):
        ExactSolution("soliton_1d", -1.0, 3.0).values(0.0, Grid(1, 64, 10.0))
    with pytest.raises(ValueError):
        ExactSolution("soliton_1d", -1.0, 3.0, velocity=0.1).values(0.0, line)
    with pytest.raises(ValueError):
        ExactSolution("plane_wave", 1.0, 3.0, k=(0.1,)).values(0.0, line)


def test_substitution_residuals():
    # the box must hide the sech tail below 1e-10, hence L = 60
    wide = Grid(1, 512, 60.0)
    sol = ExactSolution("soliton_1d", -1.0, 3.0, velocity=2 * np.pi / 60 * 9)
    assert substitution_residual(sol, wide, 0.3) <= 1e-10
    g = Grid(2, 16, 2 * np.pi)
    pw = ExactSolution("plane_wave", 0.8, 4.0, amplitude=0.7 + 0.2j, k=(1.0, -2.0))
    assert substitution_residual(pw, g, 0.4) <= 1e-10
    assert exact_eval(pw, 0.0, g).grid == g


def test_fit_order():
    h = np.array([0.1, 0.05, 0.025])
    assert fit_order(h, 3 * h ** 2) == pytest.approx(2.0)


def test_manufactured_data_shapes(line):
    psi1, psi2, g1, g2 = manufactured_master(line, 16)
    assert g1.shape == (17,) + line.shape and g2.shape == g1.shape
    assert not np.allclose(psi1.values, psi2.values)
    assert np.allclose(g1[-1], np.exp(-1.0) * g1[0])
