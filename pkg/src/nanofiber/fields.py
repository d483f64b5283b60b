"""Electric and magnetic fields of guided modes.

Conventions: time dependence ``exp(+i omega t)``, forward propagation
``exp(-i beta z)``, azimuthal dependence ``exp(+i sigma l phi)`` with
``sigma`` the mode rotation.  Vectors are (r, phi, z) components; physical
fields are real parts.  A point with ``r == a`` is evaluated with the
exterior expressions.

The exterior transverse expressions use ``q K'_l(qr)`` throughout, so the
tangential fields match the interior ones at the surface.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import DomainError
from .mathkernel import CONST, bessel_j, bessel_j_prime, bessel_k, bessel_k_prime
from .modes import ModeSolution

__all__ = [
    "FORWARD",
    "BACKWARD",
    "FieldSample",
    "evaluate_fields",
    "normalize_to_power",
    "analytic_power",
    "power_by_quadrature",
    "power_by_quadrature_2d",
    "QuasilinearField",
    "quasilinear",
    "longitudinal_phase_check",
    "evanescent_approximation",
    "intensity",
    "energy_norm",
]

FORWARD = 1
BACKWARD = -1


def _sense(sense) -> int:
    if sense in (FORWARD, "forward", "+z", "+"):
        return FORWARD
    if sense in (BACKWARD, "backward", "-z", "-"):
        return BACKWARD
    raise DomainError(f"unknown propagation sense {sense!r}")


@dataclass(frozen=True)
class FieldSample:
    """Complex field vectors on a set of points; ``E`` and ``H`` have shape (3, ...)."""

    r: np.ndarray
    phi: np.ndarray
    z: np.ndarray
    E: np.ndarray
    H: np.ndarray

    def __add__(self, other: "FieldSample") -> "FieldSample":
        return FieldSample(self.r, self.phi, self.z, self.E + other.E, self.H + other.H)

    def scaled(self, factor) -> "FieldSample":
        return FieldSample(self.r, self.phi, self.z, self.E * factor, self.H * factor)

    def cartesian(self) -> tuple[np.ndarray, np.ndarray]:
        """``(E_xyz, H_xyz)`` rotated from the local cylindrical frame."""
        c, s = np.cos(self.phi), np.sin(self.phi)

        def rot(v):
            return np.stack([v[0] * c - v[1] * s, v[0] * s + v[1] * c, v[2]])

        return rot(self.E), rot(self.H)

    @property
    def e_squared(self) -> np.ndarray:
        return np.sum(np.abs(self.E) ** 2, axis=0)

    @property
    def sz(self) -> np.ndarray:
        """Time-averaged axial Poynting density ``Re(E x H*)_z / 2``."""
        E, H = self.E, self.H
        return 0.5 * np.real(E[0] * np.conj(H[1]) - E[1] * np.conj(H[0]))


def intensity(e_squared):
    """``(c eps0 / 2) |E|^2`` from the squared modulus of the complex amplitude."""
    return 0.5 * CONST.c * CONST.eps0 * np.asarray(e_squared)


def _interior(sol, r, sig):
    fib = sol.fiber
    l, beta, h, w0 = sol.mode.l, sol.beta, sol.h, fib.omega
    mu0, eps1 = CONST.mu0, fib.eps1
    x = h * r
    J = bessel_j(l, x)
    Jp = bessel_j_prime(l, x)
    pre = -1j * beta / h**2
    A, B = sol.A, sol.B
    Er = pre * (sig * 1j * mu0 * w0 * l / (beta * r) * B * J + A * h * Jp)
    Ep = pre * (sig * 1j * l / r * A * J - mu0 * w0 * h / beta * B * Jp)
    Ez = A * J
    Hr = pre * (-sig * 1j * eps1 * w0 * l / (beta * r) * A * J + B * h * Jp)
    Hp = pre * (eps1 * w0 / beta * A * h * Jp + sig * 1j * l / r * B * J)
    Hz = B * J
    return Er, Ep, Ez, Hr, Hp, Hz


def _exterior(sol, r, sig):
    fib = sol.fiber
    l, beta, q, w0 = sol.mode.l, sol.beta, sol.q, fib.omega
    mu0, eps2 = CONST.mu0, fib.eps2
    x = q * r
    K = bessel_k(l, x)
    Kp = bessel_k_prime(l, x)
    pre = 1j * beta / q**2
    C, D = sol.C, sol.D
    Er = pre * (sig * 1j * mu0 * w0 * l / (beta * r) * D * K + C * q * Kp)
    Ep = pre * (sig * 1j * l / r * C * K - mu0 * w0 * q / beta * D * Kp)
    Ez = C * K
    Hr = pre * (-sig * 1j * eps2 * w0 * l / (beta * r) * C * K + D * q * Kp)
    Hp = pre * (eps2 * w0 / beta * C * q * Kp + sig * 1j * l / r * D * K)
    Hz = D * K
    return Er, Ep, Ez, Hr, Hp, Hz


def evaluate_fields(sol: ModeSolution, r, phi=0.0, z=0.0, sense=FORWARD, t=0.0) -> FieldSample:
    """Complex E and H of ``sol`` at cylindrical points (broadcast arrays).

    For ``sense=BACKWARD`` the z dependence becomes ``exp(+i beta z)``, the
    longitudinal electric and transverse magnetic components change sign.
    """
    d = _sense(sense)
    r, phi, z = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (r, phi, z)))
    if np.any(r < 0):
        raise DomainError("radial coordinate must be non-negative")
    a = sol.fiber.radius_a
    sig = sol.mode.rotation
    shape = r.shape
    rr = np.where(r == 0, 1e-12 * a, r).ravel()
    inside = rr < a
    comps = np.zeros((6, rr.size), dtype=complex)
    if np.any(inside):
        comps[:, inside] = _interior(sol, rr[inside], sig)
    if np.any(~inside):
        comps[:, ~inside] = _exterior(sol, rr[~inside], sig)
    comps = comps.reshape((6,) + shape)
    if d == BACKWARD:
        comps[2] *= -1
        comps[3] *= -1
        comps[4] *= -1
    phase = np.exp(1j * (sol.fiber.omega * t - d * sol.beta * z + sig * sol.mode.l * phi))
    comps = comps * phase
    return FieldSample(r, phi, z, comps[:3], comps[3:])


def _d_terms(sol):
    fib = sol.fiber
    l, beta, h, q = sol.mode.l, sol.beta, sol.h, sol.q
    a, w0 = fib.radius_a, fib.omega
    u, w = h * a, q * a
    sl = sol.s_param * l
    n1sq = (fib.n_core * fib.k / beta) ** 2
    n2sq = (fib.n_clad * fib.k / beta) ** 2
    J = lambda n: bessel_j(n, u)  # noqa: E731
    K = lambda n: bessel_k(n, w)  # noqa: E731
    pref = a**2 * beta**2 / (4 * CONST.mu0 * w0)
    d_in = pref * beta / h**2 * (
        (1 + sl) * (n1sq + sl) * (J(l + 1) ** 2 - J(l) * J(l + 2))
        + (1 - sl) * (n1sq - sl) * (J(l - 1) ** 2 - J(l) * J(l - 2))
    )
    d_out = -pref * beta / q**2 * (J(l) / K(l)) ** 2 * (
        (1 + sl) * (n2sq + sl) * (K(l + 1) ** 2 - K(l) * K(l + 2))
        + (1 - sl) * (n2sq - sl) * (K(l - 1) ** 2 - K(l) * K(l - 2))
    )
    return float(d_in), float(d_out)


def analytic_power(sol: ModeSolution) -> float:
    """Carried power ``|A|^2 pi (D_in + D_out)`` of a hybrid mode."""
    if sol.mode.family not in ("HE", "EH"):
        raise DomainError("the closed-form power applies to HE/EH modes only")
    d_in, d_out = _d_terms(sol)
    return abs(sol.A) ** 2 * math.pi * (d_in + d_out)


def _radial_limit(sol, decades=40.0):
    return sol.fiber.radius_a + decades / sol.q


def power_by_quadrature(sol: ModeSolution) -> float:
    """Carried power by radial quadrature of ``S_z`` (exact for one rotation,
    whose ``S_z`` does not depend on phi)."""
    a = sol.fiber.radius_a

    def integrand(r):
        return evaluate_fields(sol, r).sz * r

    p_in, _ = integrate.quad(integrand, 0.0, a, epsabs=0, epsrel=1e-12, limit=200)
    p_out, _ = integrate.quad(integrand, a, _radial_limit(sol), epsabs=0, epsrel=1e-12, limit=400)
    return 2 * math.pi * (p_in + p_out)


def power_by_quadrature_2d(evaluator, radius_a: float, r_max: float, sense=FORWARD) -> float:
    """Integrate ``S_z`` over the disc ``r < r_max`` with adaptive 2D quadrature.

    ``evaluator(r, phi, z, sense)`` returns a :class:`FieldSample`; both
    :func:`evaluate_fields` (via a lambda) and :class:`QuasilinearField`
    fit.
    """

    def inner(r):
        f = lambda p: float(evaluator(r, p, 0.0, sense).sz) * r  # noqa: E731
        return integrate.quad(f, 0.0, 2 * math.pi, epsabs=0, epsrel=1e-11, limit=200)[0]

    p_in = integrate.quad(inner, 0.0, radius_a, epsabs=0, epsrel=1e-10, limit=200)[0]
    p_out = integrate.quad(inner, radius_a, r_max, epsabs=0, epsrel=1e-10, limit=400)[0]
    return p_in + p_out


def normalize_to_power(sol: ModeSolution, power: float) -> ModeSolution:
    """Rescale amplitudes so the mode carries ``power`` watts.

    Hybrid modes use the closed form; TE/TM modes are normalized by radial
    quadrature of the Poynting vector.
    """
    if power < 0:
        raise DomainError("power must be non-negative")
    current = analytic_power(sol) if sol.mode.family in ("HE", "EH") else power_by_quadrature(sol)
    if not current > 0:
        raise DomainError(f"non-positive carried power {current} for {sol.mode.label}")
    out = sol.scaled(math.sqrt(power / current))
    return _with_power(out, power)


def _with_power(sol, power):
    from dataclasses import replace

    return replace(sol, power=float(power))


def energy_norm(sol: ModeSolution) -> float:
    """``integral of n^2 |E|^2 dA`` over the full cross-section [V^2]."""
    fib = sol.fiber
    a = fib.radius_a

    def integrand(r, n):
        return n**2 * evaluate_fields(sol, r).e_squared * r

    i_in, _ = integrate.quad(integrand, 0.0, a, args=(fib.n_core,), epsabs=0, epsrel=1e-11, limit=200)
    i_out, _ = integrate.quad(
        integrand, a, _radial_limit(sol), args=(fib.n_clad,), epsabs=0, epsrel=1e-11, limit=400
    )
    return 2 * math.pi * (i_in + i_out)


class QuasilinearField:
    """``(F_plus + sign * F_minus) / sqrt(2)`` for the two rotations of one mode.

    ``azimuth`` rotates the pattern rigidly about the fiber axis.  With
    ``sign=+1`` and ``azimuth=0`` an HE_1m mode is polarized along x.
    """

    def __init__(self, plus: ModeSolution, minus: ModeSolution, sign: int = 1, azimuth: float = 0.0):
        if plus.mode.rotated(1) != minus.mode.rotated(1) or plus.fiber != minus.fiber:
            raise DomainError("quasilinear superposition needs the two rotations of one mode")
        if plus.mode.l == 0:
            raise DomainError("TE/TM modes have no rotational partner")
        if plus.mode.rotation != 1 or minus.mode.rotation != -1:
            raise DomainError("expected the +1 rotation first and the -1 rotation second")
        if sign not in (1, -1):
            raise DomainError("sign must be +1 or -1")
        if not math.isclose(plus.power, minus.power, rel_tol=1e-9):
            raise DomainError("the two rotations must carry equal power")
        self.plus, self.minus, self.sign, self.azimuth = plus, minus, sign, azimuth

    @property
    def fiber(self):
        return self.plus.fiber

    @property
    def power(self) -> float:
        return self.plus.power

    @property
    def beta(self) -> float:
        return self.plus.beta

    def __call__(self, r, phi=0.0, z=0.0, sense=FORWARD, t=0.0) -> FieldSample:
        p = np.asarray(phi, dtype=float) - self.azimuth
        fp = evaluate_fields(self.plus, r, p, z, sense, t)
        fm = evaluate_fields(self.minus, r, p, z, sense, t)
        out = (fp + fm.scaled(self.sign)).scaled(1 / math.sqrt(2))
        return FieldSample(fp.r, np.asarray(phi, dtype=float) + 0 * fp.phi, fp.z, out.E, out.H)


def quasilinear(plus: ModeSolution, minus: ModeSolution, sign: int = 1, azimuth: float = 0.0):
    """Quasilinear evaluator for a rotation pair; see :class:`QuasilinearField`."""
    return QuasilinearField(plus, minus, sign, azimuth)


def longitudinal_phase_check(sample: FieldSample, rel_tol: float = 1e-9):
    """``arg(E_z) - arg(E_major)`` wrapped to (-pi, pi] for a single-point sample.

    ``E_major`` is the larger Cartesian transverse component.  Returns
    ``None`` where ``|E_z|`` is negligible compared with ``|E|``.
    """
    E_xyz, _ = sample.cartesian()
    e = np.asarray(E_xyz).reshape(3, -1)[:, 0]
    norm = np.sqrt(np.sum(np.abs(e) ** 2))
    if norm == 0 or abs(e[2]) <= rel_tol * norm:
        return None
    major = e[0] if abs(e[0]) >= abs(e[1]) else e[1]
    d = np.angle(e[2]) - np.angle(major)
    return float(math.remainder(d, 2 * math.pi))


def evanescent_approximation(sol: ModeSolution, component: int, r, anchor=None):
    """Exact exterior ``|E_i(r)|`` against ``c_i r^(-1/2) exp(-q r)``.

    ``c_i`` is fitted once at ``anchor`` (default ``a + wavelength / 2``).
    Returns ``(exact, approx)`` arrays.
    """
    a = sol.fiber.radius_a
    r = np.asarray(r, dtype=float)
    if np.any(r <= a):
        raise DomainError("the evanescent form applies outside the fiber only")
    r0 = a + 0.5 * sol.fiber.wavelength if anchor is None else anchor
    q = sol.q
    e0 = abs(evaluate_fields(sol, r0).E[component])
    c_i = e0 * math.sqrt(r0) * math.exp(q * r0)
    exact = np.abs(evaluate_fields(sol, r).E[component])
    approx = c_i * r**-0.5 * np.exp(-q * r)
    return exact, approx
