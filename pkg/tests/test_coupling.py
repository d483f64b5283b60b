import math

import numpy as np
import pytest

from nanofiber.coupling import (
    RB87_D2,
    AtomSpec,
    CavityParams,
    cavity_cooperativity,
    cavity_cooperativity_from_rates,
    coupling_report,
    coupling_sweep,
    dipole_from_gamma0,
    gamma0_fermi,
    gamma_1d,
    mode_area,
    scattering_cross_section,
    single_photon_field,
)
from nanofiber.errors import DomainError
from nanofiber.fields import energy_norm, evaluate_fields, intensity
from nanofiber.mathkernel import CONST
from nanofiber.modes import FiberSpec, ModeId, dbeta_domega, solve_mode

FIBER = FiberSpec(250e-9, 1.4537, 1.0, 780.241209686e-9)


def test_rb87_effective_dipole():
    # reduced D2 matrix element 3.58424e-29 C m times sqrt((2J+1)/(2J'+1)) = sqrt(1/2)
    assert RB87_D2.dipole_d == pytest.approx(3.58424e-29 / math.sqrt(2), rel=1e-4)


def test_decay_rate_round_trip():
    atom = AtomSpec(852e-9, dipole_d=2.7e-29)
    assert dipole_from_gamma0(gamma0_fermi(atom), atom.omega) == pytest.approx(2.7e-29, rel=1e-14)
    assert gamma0_fermi(RB87_D2) == pytest.approx(2 * math.pi * 6.0666e6, rel=1e-14)


def test_single_photon_field():
    v, w = 1e-15, 2.4e15
    assert single_photon_field(v, w) ** 2 * 2 * CONST.eps0 * v == pytest.approx(CONST.hbar * w, rel=1e-14)
    with pytest.raises(DomainError):
        single_photon_field(0.0, w)
    with pytest.raises(DomainError):
        single_photon_field(v, -1.0)


def test_cross_section():
    assert scattering_cross_section(780e-9) == pytest.approx(3 * 780e-9**2 / (2 * math.pi))


def test_cavity_routes_agree():
    for t, length, area in ((1e-3, 1e-2, 1e-10), (0.05, 3e-3, 4e-12), (1.0, 0.2, 7e-9)):
        cav = CavityParams(t, length)
        a = cavity_cooperativity(RB87_D2, cav, area)
        b = cavity_cooperativity_from_rates(RB87_D2, cav, area)
        assert abs(a / b - 1) < 1e-12


def test_cavity_validation():
    with pytest.raises(DomainError):
        CavityParams(0.0, 1e-2)
    with pytest.raises(DomainError):
        CavityParams(0.1, -1.0)
    with pytest.raises(DomainError):
        cavity_cooperativity(RB87_D2, CavityParams(0.1, 1e-2), 0.0)
    assert CavityParams(0.02, 0.5).kappa == pytest.approx(CONST.c * 0.02 / 1.0)


def test_atom_validation():
    with pytest.raises(DomainError):
        AtomSpec(780e-9)
    with pytest.raises(DomainError):
        AtomSpec(780e-9, dipole_d=1e-29, dipole_orientation=(1.0, 1.0, 0.0))
    with pytest.raises(DomainError):
        AtomSpec(780e-9, dipole_d=1e-29, dipole_orientation="random")
    with pytest.raises(DomainError):
        AtomSpec(-1.0, dipole_d=1e-29)


@pytest.mark.parametrize("label", ["HE11", "TM01", "HE21"])
def test_group_velocity_equals_energy_velocity(label):
    # d beta / d omega = (eps0 / 2P) integral n^2 |E|^2 dA for a non-dispersive guide
    fib = FiberSpec(390e-9, 1.4533, 1.0, 795e-9)
    s = solve_mode(fib, ModeId.parse(label), 1.0)
    lhs = CONST.eps0 * energy_norm(s) / 2
    assert lhs == pytest.approx(dbeta_domega(fib, ModeId.parse(label)), rel=1e-9)


def test_guided_rate_from_power_normalized_field():
    # gamma_1D = omega |d . E_P|^2 / (4 hbar P) per direction and rotation
    s = solve_mode(FIBER, ModeId.parse("HE11"), 1.0)
    r = 450e-9
    e_r = [abs(evaluate_fields(x, r).E[0]) for x in (s, s.rotated(-1))]
    d = RB87_D2.dipole_d
    expected = 2 * sum(RB87_D2.omega * d**2 * e**2 / (4 * CONST.hbar) for e in e_r)
    assert gamma_1d(FIBER, RB87_D2, r) == pytest.approx(expected, rel=1e-9)


def test_guided_rate_regression():
    assert gamma_1d(FIBER, RB87_D2, 450e-9) / RB87_D2.gamma0_free == pytest.approx(0.028880235538949355, rel=1e-9)


def test_isotropic_is_axis_average():
    r = 300e-9
    axes = [gamma_1d(FIBER, RB87_D2.with_orientation(u), r) for u in ((1, 0, 0), (0, 1, 0), (0, 0, 1))]
    iso = gamma_1d(FIBER, RB87_D2.with_orientation("isotropic"), r)
    assert iso == pytest.approx(sum(axes) / 3, rel=1e-12)


def test_guided_rate_decays():
    r = FIBER.radius_a + np.array([10e-9, 100e-9, 400e-9, 3e-6])
    g = gamma_1d(FIBER, RB87_D2, r)
    assert np.all(np.diff(g) < 0)
    assert g[-1] < 1e-6 * g[0]


def test_guided_rate_outside_only():
    with pytest.raises(DomainError):
        gamma_1d(FIBER, RB87_D2, 200e-9)


def test_report_identities():
    rep = coupling_report(FIBER, RB87_D2, 400e-9)
    assert rep.C1 == pytest.approx(rep.beta_c / (1 - rep.beta_c), rel=1e-14)
    assert rep.purcell == pytest.approx(rep.gammaTot / rep.gamma0, rel=1e-14)
    assert rep.alpha_enh == pytest.approx(rep.gamma1D / rep.gamma0, rel=1e-14)
    assert rep.gammaTot == pytest.approx(rep.gamma1D + rep.gamma0, rel=1e-14)
    assert rep.od_single == pytest.approx(rep.atom_area / rep.mode_area, rel=1e-14)
    assert rep.total_cooperativity(10) == pytest.approx(10 * rep.C1)
    assert set(rep.as_dict()) >= {"g", "C1", "beta_c", "purcell"}


def test_scaled_radiative_model():
    rep = coupling_report(FIBER, RB87_D2, 400e-9, ("scaled", 0.5))
    assert rep.gammaTot == pytest.approx(rep.gamma1D + 0.5 * rep.gamma0, rel=1e-14)
    with pytest.raises(DomainError):
        coupling_report(FIBER, RB87_D2, 400e-9, "vacuum")


def test_mode_area_definition():
    s = solve_mode(FIBER, ModeId.parse("HE11"), 1.0)
    r = 330e-9
    assert mode_area(FIBER, r) == pytest.approx(1.0 / float(intensity(evaluate_fields(s, r).e_squared)), rel=1e-12)


def test_sweep_shape():
    rows = coupling_sweep(FIBER, RB87_D2, [200e-9, 250e-9], [50e-9, 100e-9, 200e-9])
    assert len(rows) == 6
    assert rows[0][:2] == (200e-9, 50e-9)
    assert rows[0][2].radial_position == pytest.approx(250e-9)
