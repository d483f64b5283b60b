import math

import numpy as np
import pytest
from scipy import integrate

from nanofiber.errors import DomainError
from nanofiber.fields import (
    BACKWARD,
    FORWARD,
    analytic_power,
    energy_norm,
    evaluate_fields,
    evanescent_approximation,
    intensity,
    longitudinal_phase_check,
    normalize_to_power,
    power_by_quadrature,
    power_by_quadrature_2d,
    quasilinear,
)
from nanofiber.mathkernel import CONST
from nanofiber.modes import FiberSpec, ModeId, solve_mode, solve_modes

THIN = FiberSpec(180e-9, 1.45367, 1.0, 780e-9)
THICK = FiberSpec(390e-9, 1.4533, 1.0, 795e-9)
MULTI = FiberSpec(600e-9, 1.45367, 1.0, 780e-9)


@pytest.fixture(scope="module")
def he11():
    return solve_mode(THIN, ModeId.parse("HE11"), 1.0)


@pytest.fixture(scope="module")
def xpol(he11):
    return quasilinear(he11, he11.rotated(-1))


@pytest.mark.parametrize("fiber", [THIN, THICK, MULTI], ids=["thin", "thick", "multi"])
def test_tangential_fields_are_continuous(fiber):
    a = fiber.radius_a
    phi = np.linspace(0.3, 2 * np.pi + 0.3, 6, endpoint=False)
    for s in solve_modes(fiber, 4):
        inner = evaluate_fields(s, np.full(6, a * (1 - 1e-13)), phi, 0.0)
        outer = evaluate_fields(s, np.full(6, a), phi, 0.0)
        for X, Y in ((inner.E, outer.E), (inner.H, outer.H)):
            scale = np.max(np.abs(Y))
            assert np.max(np.abs(X[1:] - Y[1:])) < 1e-9 * scale, s.mode


def test_normal_displacement_is_continuous():
    a = THICK.radius_a
    for s in solve_modes(THICK, 2):
        inner = evaluate_fields(s, a * (1 - 1e-13), 0.7)
        outer = evaluate_fields(s, a, 0.7)
        d_in, d_out = THICK.n_core**2 * inner.E[0], THICK.n_clad**2 * outer.E[0]
        assert abs(d_in - d_out) <= 1e-9 * np.max(np.abs(outer.E))


@pytest.mark.parametrize("label", ["HE11", "EH11", "HE21", "HE12"])
def test_closed_form_power_matches_radial_quadrature(label):
    s = solve_mode(MULTI, ModeId.parse(label), 2.5e-3)
    assert analytic_power(s) == pytest.approx(2.5e-3, rel=1e-12)
    assert power_by_quadrature(s) == pytest.approx(2.5e-3, rel=1e-9)


@pytest.mark.parametrize("label", ["TE01", "TM01"])
def test_te_tm_normalization(label):
    s = solve_mode(MULTI, ModeId.parse(label), 0.5)
    assert power_by_quadrature(s) == pytest.approx(0.5, rel=1e-10)
    with pytest.raises(DomainError):
        analytic_power(s)


def test_quasilinear_power_by_2d_quadrature(xpol):
    p = power_by_quadrature_2d(xpol, THIN.radius_a, 20 * THIN.radius_a)
    assert p == pytest.approx(1.0, rel=1e-8)


def test_surface_intensity_regression(xpol):
    # along and across the polarization axis at the surface, 1 W
    assert float(intensity(xpol(THIN.radius_a, 0.0).e_squared)) == pytest.approx(6480272689752.56, rel=1e-9)
    assert float(intensity(xpol(THIN.radius_a, math.pi / 2).e_squared)) == pytest.approx(1277505359495.8083, rel=1e-9)


def test_quasilinear_is_linearly_polarized_on_axes(xpol):
    for phi in (0.0, math.pi / 2, math.pi):
        E, _ = xpol(250e-9, phi).cartesian()
        assert abs(E[1]) < 1e-12 * abs(E[0])


def test_azimuth_rotates_pattern(he11):
    ypol = quasilinear(he11, he11.rotated(-1), azimuth=math.pi / 2)
    xpol = quasilinear(he11, he11.rotated(-1))
    a = xpol(250e-9, 0.4).e_squared
    b = ypol(250e-9, 0.4 + math.pi / 2).e_squared
    assert a == pytest.approx(b, rel=1e-12)


def test_longitudinal_quadrature_phase(xpol):
    for r in (100e-9, 180e-9, 300e-9):
        for phi in (0.0, math.pi):
            fwd = longitudinal_phase_check(xpol(r, phi, 0.0, FORWARD))
            bwd = longitudinal_phase_check(xpol(r, phi, 0.0, BACKWARD))
            assert abs(abs(fwd) - math.pi / 2) < 1e-9
            assert fwd == pytest.approx(-bwd, abs=1e-9)
    assert abs(longitudinal_phase_check(xpol(250e-9, 0.0)) - math.pi / 2) < 1e-9


def test_nodal_plane_has_undefined_phase(xpol):
    assert longitudinal_phase_check(xpol(250e-9, math.pi / 2)) is None


def test_poynting_density_is_positive_for_fundamental(xpol):
    r = np.linspace(1e-9, 2e-6, 120)[:, None]
    phi = np.linspace(0, 2 * np.pi, 24, endpoint=False)[None, :]
    assert np.all(xpol(r, phi).sz > 0)


def test_periodicity(he11):
    f0 = evaluate_fields(he11, 300e-9, 0.2, 0.0)
    f1 = evaluate_fields(he11, 300e-9, 0.2 + 2 * math.pi, 2 * math.pi / he11.beta)
    assert np.allclose(f0.E, f1.E, rtol=1e-10, atol=0)
    shifted = evaluate_fields(he11, 300e-9, 0.2, 1e-7)
    assert np.allclose(shifted.E, f0.E * np.exp(-1j * he11.beta * 1e-7), rtol=1e-12)


def test_counterpropagating_beams_carry_no_net_power(he11):
    def net(z):
        def f(r):
            fwd = evaluate_fields(he11, r, 0.0, z, FORWARD)
            bwd = evaluate_fields(he11, r, 0.0, z, BACKWARD)
            return (fwd + bwd).sz * r

        a = THIN.radius_a
        i1 = integrate.quad(f, 0, a, epsabs=0, epsrel=1e-11)[0]
        i2 = integrate.quad(f, a, a + 40 / he11.q, epsabs=0, epsrel=1e-11, limit=200)[0]
        return 2 * math.pi * (i1 + i2)

    for z in (0.0, 0.3 * math.pi / he11.beta):
        assert abs(net(z)) < 1e-9


def test_gauss_law(he11):
    # fourth-order central differences of n^2 E in Cartesian coordinates
    h = 2e-9
    a = THIN.radius_a

    def n2E(x, y, z):
        r, phi = math.hypot(x, y), math.atan2(y, x)
        E, _ = evaluate_fields(he11, r, phi, z).cartesian()
        n = THIN.n_core if r < a else THIN.n_clad
        return n**2 * E.ravel()

    def d(f, i, p):
        def at(s):
            q = list(p)
            q[i] += s
            return f(*q)[i]

        return (-at(2 * h) + 8 * at(h) - 8 * at(-h) + at(-2 * h)) / (12 * h)

    for p in ((60e-9, 40e-9, 0.0), (250e-9, -90e-9, 1e-7), (-400e-9, 300e-9, 0.0)):
        div = sum(d(n2E, i, p) for i in range(3))
        ref = THIN.k * np.max(np.abs(n2E(*p)))
        assert abs(div) < 1e-6 * ref


def test_evanescent_fit_construction(he11):
    anchor = THIN.radius_a + THIN.wavelength / 2
    exact, approx = evanescent_approximation(he11, 2, np.array([anchor]))
    assert approx[0] == pytest.approx(exact[0], rel=1e-12)


def test_evanescent_form_decays_faster_than_exponential(he11):
    r0 = THIN.radius_a + THIN.wavelength / 2
    r = r0 + np.linspace(50e-9, 2e-6, 20)
    _, approx = evanescent_approximation(he11, 0, r)
    e0 = abs(evaluate_fields(he11, r0).E[0])
    assert np.all(approx < e0 * np.exp(-he11.q * (r - r0)))


def test_evanescent_form_converges_far_out(he11):
    # the fitted r^-1/2 exp(-qr) form tracks the exact field ratio ever better
    q = he11.q
    r = np.array([5, 20, 80]) / q
    for c in range(3):
        exact, approx = evanescent_approximation(he11, c, r, anchor=100 / q)
        err = np.abs(approx / exact - 1)
        assert err[0] > err[1] > err[2]


def test_evanescent_domain(he11):
    with pytest.raises(DomainError):
        evanescent_approximation(he11, 0, [100e-9])


def test_intensity_definition():
    assert intensity(2.0) == pytest.approx(CONST.c * CONST.eps0)


def test_normalization_scales_power(he11):
    s = normalize_to_power(he11, 4.0)
    assert s.power == 4.0
    assert abs(s.A) == pytest.approx(2 * abs(he11.A), rel=1e-12)
    assert energy_norm(s) == pytest.approx(4 * energy_norm(he11), rel=1e-9)
    with pytest.raises(DomainError):
        normalize_to_power(he11, -1.0)


def test_quasilinear_validation(he11):
    other = solve_mode(THICK, ModeId.parse("HE11"))
    with pytest.raises(DomainError):
        quasilinear(he11, other.rotated(-1))
    with pytest.raises(DomainError):
        quasilinear(he11.rotated(-1), he11)
    with pytest.raises(DomainError):
        quasilinear(he11, he11.rotated(-1).scaled(2.0))
    te = solve_mode(THICK, ModeId.parse("TE01"))
    with pytest.raises(DomainError):
        quasilinear(te, te)


def test_field_argument_checks(he11):
    with pytest.raises(DomainError):
        evaluate_fields(he11, -1e-9)
    with pytest.raises(DomainError):
        evaluate_fields(he11, 1e-7, sense="sideways")
    f = evaluate_fields(he11, 0.0)
    assert np.all(np.isfinite(f.E))
