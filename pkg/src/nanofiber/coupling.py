"""Atom-mode coupling figures of merit for a nanofiber and for a cavity.

Rates are angular frequencies [rad/s].  The guided-mode emission rate uses
the golden-rule expression

    gamma_1D = omega d^2 / (2 hbar eps0) * dbeta/domega * sum |u* . e|^2

summed over both propagation directions and both rotations of the mode,
where ``e`` is the mode profile scaled so that ``integral n^2 |e|^2 dA = 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from .errors import DomainError
from .fields import BACKWARD, FORWARD, energy_norm, evaluate_fields, intensity
from .mathkernel import CONST
from .modes import FiberSpec, ModeId, ModeSolution, dbeta_domega, solve_mode

__all__ = [
    "AtomSpec",
    "CavityParams",
    "CouplingReport",
    "RB87_D2",
    "single_photon_field",
    "gamma0_fermi",
    "dipole_from_gamma0",
    "scattering_cross_section",
    "cavity_cooperativity",
    "cavity_cooperativity_from_rates",
    "gamma_1d",
    "coupling_report",
    "coupling_sweep",
]

RADIAL = (1.0, 0.0, 0.0)
ISOTROPIC = "isotropic"
ALIGNED = "aligned"


@dataclass(frozen=True)
class AtomSpec:
    """Two-level atom.

    Parameters
    ----------
    transition_wavelength : float
        Resonance wavelength [m].
    dipole_d : float, optional
        Dipole moment magnitude [C m].  Filled from ``gamma0_free`` if omitted.
    gamma0_free : float, optional
        Free-space decay rate [rad/s].  Filled from ``dipole_d`` if omitted.
    dipole_orientation : tuple or str
        Unit vector in the local (r, phi, z) frame, ``"isotropic"`` for the
        average over the three local axes, or ``"aligned"`` for a dipole
        parallel to the local field of the + rotation.
    mass : float, optional
        Atomic mass [kg], needed for trap frequencies.
    """

    transition_wavelength: float
    dipole_d: float | None = None
    gamma0_free: float | None = None
    dipole_orientation: tuple | str = RADIAL
    mass: float | None = None

    def __post_init__(self):
        if not self.transition_wavelength > 0:
            raise DomainError("transition wavelength must be positive")
        if self.dipole_d is None and self.gamma0_free is None:
            raise DomainError("give the dipole moment or the free-space decay rate")
        omega = self.omega
        if self.dipole_d is None:
            object.__setattr__(self, "dipole_d", dipole_from_gamma0(self.gamma0_free, omega))
        elif not self.dipole_d > 0:
            raise DomainError("dipole moment must be positive")
        if self.gamma0_free is None:
            object.__setattr__(self, "gamma0_free", _gamma0(self.dipole_d, omega))
        o = self.dipole_orientation
        if isinstance(o, str):
            if o not in (ISOTROPIC, ALIGNED):
                raise DomainError(f"unknown dipole orientation {o!r}")
        else:
            u = np.asarray(o, dtype=complex)
            if u.shape != (3,) or not math.isclose(np.linalg.norm(u), 1.0, rel_tol=1e-9):
                raise DomainError("dipole orientation must be a unit 3-vector")
            object.__setattr__(self, "dipole_orientation", tuple(complex(x) if x.imag else float(x.real) for x in u))

    @property
    def omega(self) -> float:
        return 2 * math.pi * CONST.c / self.transition_wavelength

    def with_orientation(self, orientation) -> "AtomSpec":
        return replace(self, dipole_orientation=orientation)


@dataclass(frozen=True)
class CavityParams:
    """Fabry-Perot cavity with mirror transmission ``T`` and length ``L`` [m]."""

    mirror_transmission: float
    length: float

    def __post_init__(self):
        if not 0 < self.mirror_transmission <= 1:
            raise DomainError("mirror transmission must lie in (0, 1]")
        if not self.length > 0:
            raise DomainError("cavity length must be positive")

    @property
    def kappa(self) -> float:
        """Field half-width ``c T / 2L`` [rad/s]."""
        return CONST.c * self.mirror_transmission / (2 * self.length)


@dataclass(frozen=True)
class CouplingReport:
    g: float
    gamma0: float
    gamma1D: float
    gammaTot: float
    alpha_enh: float
    beta_c: float
    C1: float
    purcell: float
    od_single: float
    mode_area: float
    atom_area: float
    radial_position: float = field(default=math.nan)

    def total_cooperativity(self, n_atoms: int) -> float:
        """``C1 * N``; no collective effects are modeled."""
        return self.C1 * n_atoms

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def single_photon_field(mode_volume: float, omega: float) -> float:
    """Field amplitude [V/m] of one photon of energy ``hbar omega`` in ``mode_volume``."""
    if not mode_volume > 0:
        raise DomainError("mode volume must be positive")
    if omega < 0:
        raise DomainError("angular frequency must be non-negative")
    return math.sqrt(CONST.hbar * omega / (2 * CONST.eps0 * mode_volume))


def _gamma0(d, omega):
    return 4 * omega**3 / (3 * CONST.c**2) * d**2 / (4 * math.pi * CONST.eps0 * CONST.hbar * CONST.c)


def gamma0_fermi(atom: AtomSpec) -> float:
    """Free-space decay rate [rad/s] from the dipole moment."""
    return _gamma0(atom.dipole_d, atom.omega)


def dipole_from_gamma0(gamma0: float, omega: float) -> float:
    """Inverse of :func:`gamma0_fermi`."""
    if not gamma0 > 0:
        raise DomainError("decay rate must be positive")
    return math.sqrt(gamma0 * 3 * math.pi * CONST.eps0 * CONST.hbar * CONST.c**3 / omega**3)


# 87Rb D2 line
RB87_D2 = AtomSpec(
    transition_wavelength=780.241209686e-9,
    gamma0_free=2 * math.pi * 6.0666e6,
    mass=86.909180527 * CONST.amu,
)


def scattering_cross_section(wavelength: float) -> float:
    """Resonant cross section ``3 lambda^2 / 2 pi`` [m^2]."""
    return 3 * wavelength**2 / (2 * math.pi)


def cavity_cooperativity(atom: AtomSpec, cavity: CavityParams, mode_area: float) -> float:
    """``(sigma0 / A_mode) / T``."""
    if not mode_area > 0:
        raise DomainError("mode area must be positive")
    return scattering_cross_section(atom.transition_wavelength) / mode_area / cavity.mirror_transmission


def cavity_cooperativity_from_rates(atom: AtomSpec, cavity: CavityParams, mode_area: float) -> float:
    """``g^2 / (kappa gamma)`` with ``V = A_mode L``.

    Both ``kappa`` and ``gamma`` are half-widths, so ``gamma = gamma0 / 2``
    with ``gamma0`` from the dipole moment.
    """
    e1 = single_photon_field(mode_area * cavity.length, atom.omega)
    g = atom.dipole_d * e1 / CONST.hbar
    return g**2 / (cavity.kappa * gamma0_fermi(atom) / 2)


# -- guided mode -------------------------------------------------------------


@dataclass(frozen=True)
class _GuidedMode:
    plus: ModeSolution
    minus: ModeSolution
    norm: float  # integral n^2 |E|^2 dA for each rotation at its power
    group: float  # dbeta/domega


@lru_cache(maxsize=256)
def _guided(fiber: FiberSpec, mode: ModeId) -> _GuidedMode:
    plus = solve_mode(fiber, mode.rotated(1))
    minus = plus.rotated(-1) if mode.l else plus
    return _GuidedMode(plus, minus, energy_norm(plus), dbeta_domega(fiber, mode.rotated(1)))


def _profiles(g: _GuidedMode, r):
    """Normalized profiles for (direction, rotation) combinations, shape (k, 3, ...)."""
    sols = (g.plus, g.minus) if g.plus.mode.l else (g.plus,)
    out = []
    for s in sols:
        for sense in (FORWARD, BACKWARD):
            out.append(evaluate_fields(s, r, 0.0, 0.0, sense).E / math.sqrt(g.norm))
    return np.stack(out)


def _overlap(e, orientation, aligned_ref=None):
    if orientation == ISOTROPIC:
        return np.sum(np.abs(e) ** 2, axis=1) / 3
    if orientation == ALIGNED:
        u = aligned_ref / np.sqrt(np.sum(np.abs(aligned_ref) ** 2, axis=0))
    else:
        u = np.asarray(orientation, dtype=complex).reshape((3,) + (1,) * (e.ndim - 2))
    return np.abs(np.sum(np.conj(u) * e, axis=1)) ** 2


def gamma_1d(
    fiber: FiberSpec,
    atom: AtomSpec,
    radial_position,
    mode: ModeId | str = "HE11",
) -> np.ndarray | float:
    """Emission rate [rad/s] into ``mode``, both directions and rotations.

    ``radial_position`` is measured from the fiber axis and must exceed the
    fiber radius.  TE/TM modes have a single rotation.
    """
    if isinstance(mode, str):
        mode = ModeId.parse(mode)
    r = np.asarray(radial_position, dtype=float)
    if np.any(r <= fiber.radius_a):
        raise DomainError("the atom must sit outside the fiber")
    if not math.isclose(fiber.wavelength, atom.transition_wavelength, rel_tol=1e-12):
        fiber = fiber.with_wavelength(atom.transition_wavelength)
    g = _guided(fiber, mode)
    e = _profiles(g, r)
    s = np.sum(_overlap(e, atom.dipole_orientation, e[0]), axis=0)
    rate = atom.omega * atom.dipole_d**2 / (2 * CONST.hbar * CONST.eps0) * g.group * s
    return float(rate) if rate.ndim == 0 else rate


def mode_area(fiber: FiberSpec, radial_position, mode: ModeId | str = "HE11"):
    """``P / I(r)`` for one rotation of ``mode`` [m^2]."""
    if isinstance(mode, str):
        mode = ModeId.parse(mode)
    g = _guided(fiber, mode)
    f = evaluate_fields(g.plus, radial_position)
    return g.plus.power / intensity(f.e_squared)


def _scaled_gamma(radiative_model, gamma0):
    if radiative_model in ("free_space", None):
        return gamma0
    if isinstance(radiative_model, tuple) and radiative_model[0] == "scaled":
        factor = float(radiative_model[1])
        if factor < 0:
            raise DomainError("radiative scaling factor must be non-negative")
        return factor * gamma0
    if isinstance(radiative_model, (int, float)):
        return _scaled_gamma(("scaled", radiative_model), gamma0)
    raise DomainError(f"unknown radiative model {radiative_model!r}")


def _report(g1d, gamma0, gamma_rad, area, sigma0, omega, d, qlen, r):
    tot = g1d + gamma_rad
    beta = g1d / tot
    # C1 written from beta so the identity holds to rounding
    c1 = beta / (1 - beta) if beta < 1 else math.inf
    e1 = single_photon_field(area * qlen, omega)
    return CouplingReport(
        g=d * e1 / CONST.hbar,
        gamma0=gamma0,
        gamma1D=g1d,
        gammaTot=tot,
        alpha_enh=g1d / gamma0,
        beta_c=beta,
        C1=c1,
        purcell=tot / gamma0,
        od_single=sigma0 / area,
        mode_area=area,
        atom_area=sigma0,
        radial_position=r,
    )


def coupling_report(
    fiber: FiberSpec,
    atom: AtomSpec,
    radial_position: float,
    radiative_model="free_space",
    mode: ModeId | str = "HE11",
    quantization_length: float | None = None,
) -> CouplingReport:
    """All coupling figures of merit for one atom position.

    Parameters
    ----------
    radiative_model : {"free_space", ("scaled", factor)}
        Rate into non-guided channels: ``gamma0`` or ``factor * gamma0``.
    quantization_length : float, optional
        Length used for the single-photon field behind ``g``; defaults to the
        transition wavelength.
    """
    if not math.isclose(fiber.wavelength, atom.transition_wavelength, rel_tol=1e-12):
        fiber = fiber.with_wavelength(atom.transition_wavelength)
    g1d = gamma_1d(fiber, atom, radial_position, mode)
    gamma0 = atom.gamma0_free
    area = float(mode_area(fiber, radial_position, mode))
    qlen = atom.transition_wavelength if quantization_length is None else quantization_length
    return _report(
        g1d,
        gamma0,
        _scaled_gamma(radiative_model, gamma0),
        area,
        scattering_cross_section(atom.transition_wavelength),
        atom.omega,
        atom.dipole_d,
        qlen,
        float(radial_position),
    )


def coupling_sweep(template: FiberSpec, atom: AtomSpec, radii, distances, radiative_model="free_space", mode="HE11"):
    """Reports on a (fiber radius x distance from surface) grid.

    Returns a list of ``(radius, distance, CouplingReport)`` rows.
    """
    rows = []
    fib0 = template.with_wavelength(atom.transition_wavelength)
    for a in radii:
        fib = fib0.with_radius(float(a))
        for d in distances:
            rows.append((float(a), float(d), coupling_report(fib, atom, float(a + d), radiative_model, mode)))
    return rows
