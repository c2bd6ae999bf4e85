import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nls_conserve.grid import ComplexField, Grid
from nls_conserve.nonlinearity import (PowerNonlinearity, check_assumptions, f_eval,
                                       radial_integral, scaling_derivative, v_integral,
                                       w_integral, wirtinger_fd)
from nls_conserve.oracle import fd_scaling_derivative
from conftest import gaussian, random_packet


@pytest.mark.parametrize("p", [1.0, 0.9, np.inf, np.nan])
def test_exponent_must_exceed_one(p):
    with pytest.raises(ValueError):
        PowerNonlinearity(1.0, p)


def test_energy_critical_bound_in_3d():
    PowerNonlinearity(1.0, 5.0).check_dimension(3)
    with pytest.raises(ValueError):
        PowerNonlinearity(1.0, 5.5).check_dimension(3)
    PowerNonlinearity(1.0, 9.0).check_dimension(2)


def test_criticality_and_pair():
    nl = PowerNonlinearity(1.0, 5.0)
    assert nl.is_critical(1) and not nl.is_critical(2)
    assert PowerNonlinearity(1.0, 3.0).is_critical(2)
    assert nl.admissible_pair(1) == (6.0, 6.0)


def test_pointwise_forms():
    nl = PowerNonlinearity(-2.0, 3.0)
    z = np.array([0.0, 1 + 1j, -0.5j])
    assert np.allclose(nl.f(z), -2.0 * np.abs(z) ** 2 * z)
    assert np.allclose(nl.V(z), -1.0 * np.abs(z) ** 4)
    r = np.array([0.5, 2.0])
    assert np.allclose(nl.dV(r), -4.0 * r ** 3)
    assert nl.f(0.0) == 0.0


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0, 5.0, 7.3])
def test_assumptions_hold_for_power_laws(p):
    nl = PowerNonlinearity(1.3, p)
    rng = np.random.default_rng(0)
    z = rng.normal(size=200) + 1j * rng.normal(size=200)
    z = np.concatenate([z, [0.0, 1e-8, 3 + 4j]])
    rep = check_assumptions(nl, z)
    assert rep.ok, rep.violations()


def test_assumption_check_flags_a_broken_nonlinearity():
    class Broken(PowerNonlinearity):
        def f(self, z):
            return super().f(z) + 0.1 * np.conj(np.asarray(z))

    rep = check_assumptions(Broken(1.0, 3.0), np.array([1 + 1j, 0.5]))
    assert not rep.ok and len(rep.violations()) == 2


def test_wirtinger_matches_f():
    nl = PowerNonlinearity(-1.0, 4.0)
    z = np.array([0.3 - 0.7j, 2.0 + 0.1j])
    assert np.allclose(wirtinger_fd(nl, z), nl.f(z), rtol=1e-8)


def test_functional_relations(line):
    u = random_packet(line, np.random.default_rng(4))
    for p in (2.0, 3.0, 5.0):
        nl = PowerNonlinearity(-0.7, p)
        V = v_integral(nl, u)
        assert np.isclose(radial_integral(nl, u), (p + 1) * V, rtol=1e-13)
        dsc = scaling_derivative(nl, u)
        assert np.isclose(dsc, 0.5 * (p - 1) * V, rtol=1e-13)
        W = w_integral(nl, u)
        assert abs(W - (2 * V - dsc)) <= 1e-12 * max(1.0, abs(V))
    assert w_integral(PowerNonlinearity(1.0, 5.0), u) == 0.0


def test_potential_matches_direct_sum(line):
    u = gaussian(line, amp=1.5)
    nl = PowerNonlinearity(2.0, 3.0)
    direct = line.h * np.sum(nl.V(u.values))
    assert np.isclose(v_integral(nl, u), direct, rtol=1e-14)
    assert np.allclose(f_eval(nl, u).values, nl.f(u.values))


def test_scaling_derivative_against_finite_difference():
    g = Grid(1, 128, 40.0)
    u = gaussian(g, width=1.5, k=0.5)
    for p in (3.0, 5.0):
        nl = PowerNonlinearity(-1.0, p)
        fd = fd_scaling_derivative(nl, u, 1e-4)
        assert abs(fd - scaling_derivative(nl, u)) <= 1e-6 * max(1.0, abs(fd))


@settings(max_examples=40, deadline=None)
@given(st.floats(1.01, 9.0), st.floats(-3, 3).filter(lambda v: abs(v) > 1e-3),
       st.floats(-5, 5), st.floats(-5, 5), st.floats(-np.pi, np.pi))
def test_gauge_and_charge_properties(p, lam, re, im, theta):
    nl = PowerNonlinearity(lam, p)
    z = complex(re, im)
    fz = complex(nl.f(z))
    rot = np.exp(1j * theta)
    assert abs((np.conj(z) * fz).imag) <= 1e-9 * (1 + abs(z) ** (p + 1))
    assert abs(complex(nl.f(rot * z)) - rot * fz) <= 1e-9 * (1 + abs(fz))
