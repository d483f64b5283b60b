"""Two-color evanescent dipole trap around a nanofiber.

A red-detuned standing wave (two counter-propagating quasilinear HE11 beams)
attracts the atom, a blue-detuned running wave polarized at another azimuth
repels it, and a surface term ``-C3 / d^3`` pulls it toward the glass.  Only
scalar light shifts of a two-level atom are included.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .coupling import AtomSpec
from .errors import DomainError, NoBoundMinimum
from .fields import BACKWARD, FORWARD, intensity, quasilinear
from .mathkernel import CONST
from .modes import FiberSpec, ModeId, solve_mode

__all__ = [
    "STANDING_WAVE",
    "RUNNING_WAVE",
    "TrapBeam",
    "TrapConfig",
    "GridSpec",
    "TrapProfile",
    "scalar_shift",
    "vdw_potential",
    "beam_intensity",
    "standing_wave_intensity",
    "running_wave_intensity",
    "TrapPotential",
    "total_potential",
    "to_microkelvin",
]

STANDING_WAVE = "standing_wave"
RUNNING_WAVE = "running_wave"


def to_microkelvin(energy):
    """Energy [J] expressed as a temperature [uK]."""
    return np.asarray(energy) / CONST.kB * 1e6


@dataclass(frozen=True)
class TrapBeam:
    """Guided trapping beam in the quasilinear HE11 mode.

    ``n_core`` overrides the fiber core index at this wavelength.
    ``weight`` multiplies the scalar shift (hook for state-dependent factors).
    """

    wavelength: float
    power_per_beam: float
    polarization_azimuth: float = 0.0
    configuration: str = RUNNING_WAVE
    n_core: float | None = None
    weight: float = 1.0

    def __post_init__(self):
        if not self.wavelength > 0:
            raise DomainError("beam wavelength must be positive")
        if self.power_per_beam < 0:
            raise DomainError("beam power must be non-negative")
        if self.configuration not in (STANDING_WAVE, RUNNING_WAVE):
            raise DomainError(f"unknown beam configuration {self.configuration!r}")

    def fiber(self, template: FiberSpec) -> FiberSpec:
        n = template.n_core if self.n_core is None else self.n_core
        return replace(template, wavelength=self.wavelength, n_core=n)


@dataclass(frozen=True)
class TrapConfig:
    fiber: FiberSpec
    atom: AtomSpec
    red: TrapBeam
    blue: TrapBeam
    c3_vdw: float

    def __post_init__(self):
        lam0 = self.atom.transition_wavelength
        if not self.red.wavelength > lam0 > self.blue.wavelength:
            raise DomainError("need red wavelength > transition wavelength > blue wavelength")
        if self.c3_vdw < 0:
            raise DomainError("C3 must be non-negative")
        if self.red.configuration != STANDING_WAVE:
            raise DomainError("the red beam must be a standing wave")

    @property
    def mass(self) -> float:
        if self.atom.mass is None:
            raise DomainError("atom mass is required for trap frequencies")
        return self.atom.mass


@dataclass(frozen=True)
class GridSpec:
    """Sampling domain: distance from the surface, azimuth, and axial span.

    ``z_span`` defaults to one red lattice period and ``phi_span`` to a full turn.
    """

    d_min: float = 30e-9
    d_max: float = 800e-9
    n_r: int = 80
    n_phi: int = 36
    n_z: int = 24
    phi_span: float = 2 * math.pi
    z_span: float | None = None

    def __post_init__(self):
        if not 0 < self.d_min < self.d_max:
            raise DomainError("need 0 < d_min < d_max")
        if min(self.n_r, self.n_phi, self.n_z) < 3:
            raise DomainError("each grid axis needs at least three samples")


@dataclass
class TrapProfile:
    r: np.ndarray
    phi: np.ndarray
    z: np.ndarray
    U: np.ndarray  # [J], shape (n_r, n_phi, n_z)
    minimum_position: tuple
    minimum_energy: float
    depth: float  # [uK]
    barrier_energy: float
    lattice_contrast: float
    potential_contrast: float
    trap_frequencies: tuple  # (radial, azimuthal, axial) [rad/s]
    hessian: np.ndarray = field(repr=False)
    components: dict = field(repr=False, default_factory=dict)

    @property
    def U_microkelvin(self) -> np.ndarray:
        return to_microkelvin(self.U)

    @property
    def distance_from_surface(self) -> float:
        return self.minimum_position[0] - self.components["radius_a"]

    def summary(self) -> dict:
        r, p, z = self.minimum_position
        return {
            "minimum_r_m": r,
            "minimum_phi_rad": p,
            "minimum_z_m": z,
            "distance_from_surface_m": self.distance_from_surface,
            "minimum_uK": float(to_microkelvin(self.minimum_energy)),
            "depth_uK": self.depth,
            "lattice_contrast_intensity": self.lattice_contrast,
            "lattice_contrast_potential": self.potential_contrast,
            "omega_r_rad_s": self.trap_frequencies[0],
            "omega_phi_rad_s": self.trap_frequencies[1],
            "omega_z_rad_s": self.trap_frequencies[2],
        }


# -- elementary potentials -----------------------------------------------------


def scalar_shift(intensity_w_m2, atom: AtomSpec, laser_wavelength: float):
    """Two-level scalar light shift [J], counter-rotating term included."""
    w0 = atom.omega
    wl = 2 * math.pi * CONST.c / laser_wavelength
    if math.isclose(wl, w0, rel_tol=1e-12):
        raise DomainError("laser is resonant with the atomic transition")
    pre = -3 * math.pi * CONST.c**2 / (2 * w0**3) * atom.gamma0_free
    return pre * (1 / (w0 - wl) + 1 / (w0 + wl)) * np.asarray(intensity_w_m2)


def vdw_potential(distance, c3: float):
    """Surface attraction ``-C3 / d^3`` [J]."""
    d = np.asarray(distance, dtype=float)
    if np.any(d <= 0):
        raise DomainError("distance from the surface must be positive")
    return -c3 / d**3


# -- beam intensities ----------------------------------------------------------


def _pair(beam: TrapBeam, template: FiberSpec):
    fib = beam.fiber(template)
    plus = solve_mode(fib, ModeId("HE", 1, 1, 1), power=beam.power_per_beam)
    return quasilinear(plus, plus.rotated(-1), 1, beam.polarization_azimuth)


def standing_wave_intensity(beam: TrapBeam, fiber: FiberSpec, suppress_longitudinal: bool = False) -> Callable:
    """Intensity ``I(r, phi, z)`` [W/m^2] of two counter-propagating beams.

    The backward beam carries the sign-flipped longitudinal field, so the
    axial modulation is incomplete wherever ``E_z`` is nonzero.  Period along
    z is ``pi / beta``.
    """
    ql = _pair(beam, fiber)

    def evaluate(r, phi=0.0, z=0.0):
        E = ql(r, phi, z, FORWARD).E + ql(r, phi, z, BACKWARD).E
        if suppress_longitudinal:
            E = E[:2]
        return intensity(np.sum(np.abs(E) ** 2, axis=0))

    evaluate.beta = ql.beta
    return evaluate


def running_wave_intensity(beam: TrapBeam, fiber: FiberSpec) -> Callable:
    """Intensity ``I(r, phi)`` [W/m^2] of one quasilinear beam (z independent)."""
    ql = _pair(beam, fiber)

    def evaluate(r, phi=0.0, z=0.0):
        return intensity(ql(r, phi, z, FORWARD).e_squared)

    evaluate.beta = ql.beta
    return evaluate


def beam_intensity(beam: TrapBeam, fiber: FiberSpec) -> Callable:
    if beam.configuration == STANDING_WAVE:
        return standing_wave_intensity(beam, fiber)
    return running_wave_intensity(beam, fiber)


# -- composed potential --------------------------------------------------------


class TrapPotential:
    """Callable total potential ``U(r, phi, z)`` [J] with its parts."""

    def __init__(self, config: TrapConfig):
        self.config = config
        self.a = config.fiber.radius_a
        self._red = beam_intensity(config.red, config.fiber)
        self._blue = beam_intensity(config.blue, config.fiber)
        self.period = math.pi / self._red.beta

    def parts(self, r, phi=0.0, z=0.0) -> dict:
        c = self.config
        r = np.asarray(r, dtype=float)
        if np.any(r <= self.a):
            raise DomainError("trap points must lie outside the fiber")
        u_red = c.red.weight * scalar_shift(self._red(r, phi, z), c.atom, c.red.wavelength)
        u_blue = c.blue.weight * scalar_shift(self._blue(r, phi, z), c.atom, c.blue.wavelength)
        u_vdw = vdw_potential(r - self.a, c.c3_vdw) + 0 * u_red
        return {"red": u_red, "blue": u_blue, "vdw": u_vdw, "total": u_red + u_blue + u_vdw}

    def __call__(self, r, phi=0.0, z=0.0):
        return self.parts(r, phi, z)["total"]


def _golden(f, lo, hi, x0, tol):
    """Golden-section search on ``[lo, hi]``; keeps ``x0`` if nothing better is found."""
    g = (math.sqrt(5) - 1) / 2
    c, d = hi - g * (hi - lo), lo + g * (hi - lo)
    fc, fd = f(c), f(d)
    while hi - lo > tol:
        if fc < fd:
            hi, d, fd = d, c, fc
            c = hi - g * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + g * (hi - lo)
            fd = f(d)
    x = 0.5 * (lo + hi)
    return x if f(x) <= f(x0) else x0


def _refine(U, x, steps, bounds):
    """Coordinate refinement: three 1D searches, iterated twice."""
    x = list(x)
    for _ in range(2):
        for i in range(3):
            lo = max(x[i] - steps[i], bounds[i][0])
            hi = min(x[i] + steps[i], bounds[i][1])

            def f(v, i=i):
                y = list(x)
                y[i] = v
                return float(U(*y))

            x[i] = _golden(f, lo, hi, x[i], steps[i] * 1e-6)
    return tuple(x)


def _hessian(U, x, h):
    """Central-difference Hessian in local Cartesian coordinates (r, r phi, z)."""
    r0 = x[0]
    scale = np.array([1.0, r0, 1.0])

    def g(v):
        return float(U(v[0], v[1] / r0, v[2]))

    x0 = np.array(x) * scale
    H = np.zeros((3, 3))
    f0 = g(x0)
    for i in range(3):
        e = np.zeros(3)
        e[i] = h[i]
        H[i, i] = (g(x0 + e) - 2 * f0 + g(x0 - e)) / h[i] ** 2
        for j in range(i):
            e2 = np.zeros(3)
            e2[j] = h[j]
            H[i, j] = H[j, i] = (g(x0 + e + e2) - g(x0 + e - e2) - g(x0 - e + e2) + g(x0 - e - e2)) / (4 * h[i] * h[j])
    return H


def _lowest_local_minimum(U, wrap_phi, wrap_z):
    """Index of the lowest grid point not above any of its six neighbours.

    Points on the radial boundary never qualify, and neither do points on a
    non-periodic phi or z edge.
    """
    ok = np.ones(U.shape, dtype=bool)
    ok[0] = ok[-1] = False
    for axis, wrap in ((0, False), (1, wrap_phi), (2, wrap_z)):
        for shift in (1, -1):
            nb = np.roll(U, shift, axis=axis)
            ok &= U <= nb
            if not wrap:
                edge = [slice(None)] * 3
                edge[axis] = 0 if shift == 1 else -1
                ok[tuple(edge)] = False
    if not ok.any():
        raise NoBoundMinimum("potential has no local minimum away from the surface")
    flat = np.where(ok, U, np.inf)
    return np.unravel_index(np.argmin(flat), U.shape)


def total_potential(config: TrapConfig, grid: GridSpec | None = None) -> TrapProfile:
    """Sample the total potential, locate the trap and characterize it.

    The trap is the lowest interior local minimum of the sampled grid (the
    surface divergence of the van der Waals term is excluded), refined by
    golden-section searches along r, phi and z.  ``depth`` is the radial escape depth: the lower of
    zero (free atom far away) and the barrier top between the minimum and
    the surface, minus the minimum energy.

    Raises
    ------
    NoBoundMinimum
        When no interior local minimum exists or the depth is not positive.
    """
    grid = grid or GridSpec()
    pot = TrapPotential(config)
    a = pot.a
    zspan = pot.period if grid.z_span is None else grid.z_span
    r = a + np.linspace(grid.d_min, grid.d_max, grid.n_r)
    phi = np.linspace(-grid.phi_span / 2, grid.phi_span / 2, grid.n_phi, endpoint=grid.phi_span < 2 * math.pi)
    z = np.linspace(0.0, zspan, grid.n_z, endpoint=False)
    R, P, Z = np.meshgrid(r, phi, z, indexing="ij")
    parts = pot.parts(R, P, Z)
    U = parts["total"]

    full_turn = grid.phi_span >= 2 * math.pi
    i, j, k = _lowest_local_minimum(U, full_turn, grid.z_span is None)
    dr, dphi, dz = r[1] - r[0], phi[1] - phi[0], z[1] - z[0]
    bounds = ((r[0], r[-1]), (-math.inf, math.inf), (-math.inf, math.inf))
    x = _refine(pot, (r[i], phi[j], z[k]), (dr, dphi, dz), bounds)
    u_min = float(pot(*x))
    if not u_min < 0:
        raise NoBoundMinimum("potential minimum is not below the free-atom level")

    # radial barrier toward the surface
    rr = np.linspace(a + grid.d_min * 0.25, x[0], 400)
    ur = pot(rr, x[1], x[2])
    barrier = float(np.max(ur))
    depth_j = min(0.0, barrier) - u_min
    if not depth_j > 0:
        raise NoBoundMinimum("no barrier separates the minimum from the surface")

    h = (1e-9, 1e-9, pot.period * 1e-3)
    H = _hessian(pot, x, h)
    eig = np.linalg.eigvalsh(H)
    if np.any(eig <= 0):
        raise NoBoundMinimum("curvature at the minimum is not positive in every direction")
    freqs = tuple(float(math.sqrt(H[n, n] / config.mass)) for n in range(3))

    # axial contrast at the trap radius and azimuth
    zz = np.linspace(0.0, pot.period, 401)
    i_red = pot._red(x[0], x[1], zz)
    lattice = float((i_red.max() - i_red.min()) / (i_red.max() + i_red.min()))
    uz = pot(x[0], x[1], zz)
    pc = float((uz.max() - uz.min()) / (abs(uz.max()) + abs(uz.min())))

    return TrapProfile(
        r=r,
        phi=phi,
        z=z,
        U=U,
        minimum_position=x,
        minimum_energy=u_min,
        depth=float(to_microkelvin(depth_j)),
        barrier_energy=barrier,
        lattice_contrast=lattice,
        potential_contrast=pc,
        trap_frequencies=freqs,
        hessian=H,
        components={"red": parts["red"], "blue": parts["blue"], "vdw": parts["vdw"], "radius_a": a},
    )
