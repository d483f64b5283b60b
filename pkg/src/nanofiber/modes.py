"""Guided modes of a two-layer step-index cylindrical waveguide.

The characteristic equation is written in the hybrid-mode form

    J_{l-1}(u) / (u J_l(u)) = (n1^2 + n2^2)/(4 n1^2) * Kr + l/u^2 +/- R

with ``u = h a``, ``w = q a`` and ``Kr = (K_{l-1}(w) + K_{l+1}(w)) / (w K_l(w))``.
Roots are bracketed on a dense ``n_eff`` grid, brackets straddling a zero of
``J_l(u)`` (a pole of the left side) are discarded, and the survivors are
refined with a safeguarded bisection/secant iteration.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Iterable

import numpy as np
from scipy import special as _sp

from .errors import DomainError, SolverError
from .mathkernel import CONST, bessel_j, bessel_j_prime, bessel_k, bessel_k_prime

log = logging.getLogger(__name__)

__all__ = [
    "FiberSpec",
    "ModeId",
    "ModeSolution",
    "v_number",
    "eigen_residual",
    "solve_modes",
    "solve_mode",
    "neff_curve",
    "find_cutoff",
    "dbeta_domega",
    "bracketed_root",
    "mode_neff",
    "mode_neffs",
    "group_mode_list",
]

HYBRID = ("HE", "EH")
FAMILIES = ("HE", "EH", "TE", "TM")
SCAN_POINTS = 2000
EDGE_POINTS = 400
NOISE_FLOOR = 64.0  # multiples of eps * (|lhs| + |rhs|)


@dataclass(frozen=True)
class FiberSpec:
    """Core radius, indices and vacuum wavelength, all SI."""

    radius_a: float
    n_core: float
    n_clad: float = 1.0
    wavelength: float = 780e-9

    def __post_init__(self):
        if not self.radius_a > 0:
            raise DomainError(f"radius_a must be positive, got {self.radius_a}")
        if not self.wavelength > 0:
            raise DomainError(f"wavelength must be positive, got {self.wavelength}")
        if not self.n_clad >= 1.0:
            raise DomainError(f"n_clad must be >= 1, got {self.n_clad}")
        if not self.n_core >= self.n_clad:
            raise DomainError("n_core must not be below n_clad")

    @property
    def k(self) -> float:
        return 2.0 * math.pi / self.wavelength

    @property
    def omega(self) -> float:
        return CONST.c * self.k

    @property
    def eps1(self) -> float:
        return self.n_core**2 * CONST.eps0

    @property
    def eps2(self) -> float:
        return self.n_clad**2 * CONST.eps0

    @property
    def numerical_aperture(self) -> float:
        return math.sqrt(self.n_core**2 - self.n_clad**2)

    def with_radius(self, radius_a: float) -> "FiberSpec":
        return replace(self, radius_a=radius_a)

    def with_wavelength(self, wavelength: float) -> "FiberSpec":
        return replace(self, wavelength=wavelength)


@dataclass(frozen=True, order=True)
class ModeId:
    """Mode label ``family_lm``; ``rotation`` is +1 or -1 for the exp(+/- i l phi) solution."""

    family: str
    l: int
    m: int
    rotation: int = 1

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise DomainError(f"unknown mode family {self.family!r}")
        if self.l < 0 or self.m < 1:
            raise DomainError(f"invalid mode indices l={self.l}, m={self.m}")
        if (self.family in ("TE", "TM")) != (self.l == 0):
            raise DomainError(f"{self.family} modes require {'l == 0' if self.l else 'l >= 1'}")
        if self.rotation not in (1, -1):
            raise DomainError("rotation must be +1 or -1")
        if self.l == 0 and self.rotation != 1:
            object.__setattr__(self, "rotation", 1)

    @property
    def branch(self) -> int:
        """Sign of R in the characteristic equation (+1 for EH/TE, -1 for HE/TM)."""
        return 1 if self.family in ("EH", "TE") else -1

    @property
    def label(self) -> str:
        return f"{self.family}{self.l}{self.m}"

    def rotated(self, rotation: int) -> "ModeId":
        return replace(self, rotation=rotation)

    @classmethod
    def parse(cls, text: str, rotation: int = 1) -> "ModeId":
        """Parse labels such as ``"HE11"`` or ``"TM01"`` (single-digit l and m)."""
        text = text.strip().upper()
        if len(text) != 4 or text[:2] not in FAMILIES or not text[2:].isdigit():
            raise DomainError(f"cannot parse mode label {text!r}")
        return cls(text[:2], int(text[2]), int(text[3]), rotation)


@dataclass(frozen=True)
class ModeSolution:
    """One guided mode with its boundary-matched amplitude constants.

    ``A`` and ``C`` scale the longitudinal electric field inside and outside
    the core, ``B`` and ``D`` the longitudinal magnetic field.  ``s_param``
    is ``B mu0 omega / (i l beta)`` of the +1 rotation (NaN for l = 0).
    """

    fiber: FiberSpec
    mode: ModeId
    beta: float
    h: float
    q: float
    A: complex
    B: complex
    C: complex
    D: complex
    s_param: float
    power: float = field(default=0.0)

    @property
    def n_eff(self) -> float:
        return self.beta / self.fiber.k

    @property
    def u(self) -> float:
        return self.h * self.fiber.radius_a

    @property
    def w(self) -> float:
        return self.q * self.fiber.radius_a

    def scaled(self, factor: float) -> "ModeSolution":
        """Multiply every amplitude by ``factor`` (power scales by factor**2)."""
        return replace(
            self,
            A=self.A * factor,
            B=self.B * factor,
            C=self.C * factor,
            D=self.D * factor,
            power=self.power * factor**2,
        )

    def rotated(self, rotation: int) -> "ModeSolution":
        """The degenerate partner with the opposite azimuthal rotation."""
        if self.mode.l == 0 or rotation == self.mode.rotation:
            return self
        return replace(self, mode=self.mode.rotated(rotation), B=-self.B, D=-self.D)


def v_number(fiber: FiberSpec) -> float:
    """Normalized frequency ``k a sqrt(n1^2 - n2^2)``."""
    return fiber.k * fiber.radius_a * fiber.numerical_aperture


def _transverse(fiber, n_eff):
    k = fiber.k
    beta = n_eff * k
    # factored differences are exact next to either index (Sterbenz)
    n1, n2 = fiber.n_core, fiber.n_clad
    h = k * np.sqrt(np.maximum((n1 - n_eff) * (n1 + n_eff), 0.0))
    q = k * np.sqrt(np.maximum((n_eff - n2) * (n_eff + n2), 0.0))
    return beta, h, q


def _residual(fiber, l, branch, n_eff, bessel=None, with_scale=False):
    """Characteristic-equation residual; ``bessel`` optionally supplies
    ``(J_{l-1}(u), J_l(u), Ke_{|l-1|}(w), Ke_l(w), Ke_{l+1}(w))``.

    With ``with_scale`` also returns ``|lhs| + |rhs|``, whose product with
    the machine epsilon is the round-off floor of the residual.
    """
    n1, n2 = fiber.n_core, fiber.n_clad
    beta, h, q = _transverse(fiber, n_eff)
    a = fiber.radius_a
    u, w = h * a, q * a
    with np.errstate(all="ignore"):
        # hot path: scipy directly, scaled K so the ratio survives large w
        if bessel is None:
            bessel = (_sp.jv(l - 1, u), _sp.jv(l, u), _sp.kve(abs(l - 1), w), _sp.kve(l, w), _sp.kve(l + 1, w))
        jm, jl, km, kl, kp = bessel
        kr = (km + kp) / (w * kl)
        lhs = jm / (u * jl)
        inv = 1.0 / u**2 + 1.0 / w**2
        r = np.sqrt(
            ((n1**2 - n2**2) / (4 * n1**2)) ** 2 * kr**2
            + (l * beta / (n1 * fiber.k)) ** 2 * inv**2
        )
        rhs = (n1**2 + n2**2) / (4 * n1**2) * kr + l / u**2 + branch * r
        if with_scale:
            return lhs - rhs, np.abs(lhs) + np.abs(rhs) + np.abs(r)
    return lhs - rhs


def eigen_residual(fiber: FiberSpec, l: int, branch: int, n_eff_trial):
    """Left minus right side of the characteristic equation at ``n_eff_trial``.

    ``branch`` is +1 for the ``+R`` (EH, or TE when l = 0) equation and -1
    for ``-R`` (HE, or TM).  Accepts arrays.
    """
    if branch not in (1, -1):
        raise DomainError("branch must be +1 or -1")
    n = np.asarray(n_eff_trial, dtype=float)
    if np.any(~((n > fiber.n_clad) & (n < fiber.n_core))):
        raise DomainError("n_eff_trial must lie strictly between n_clad and n_core")
    res = _residual(fiber, int(l), branch, n)
    return float(res) if res.ndim == 0 else res


def bracketed_root(f, lo, hi, flo=None, fhi=None, xtol=1e-15, maxiter=200):
    """Root of ``f`` in ``[lo, hi]`` given a sign change.

    Bisects until the bracket is small, then switches to secant steps that
    are accepted only while they stay inside the shrinking bracket.  Returns
    ``(x, converged)``.
    """
    flo = f(lo) if flo is None else flo
    fhi = f(hi) if fhi is None else fhi
    if flo == 0:
        return lo, True
    if fhi == 0:
        return hi, True
    if np.sign(flo) == np.sign(fhi):
        raise DomainError("bracket does not contain a sign change")
    width0 = hi - lo
    x_prev = None
    for _ in range(maxiter):
        use_secant = (hi - lo) < 1e-4 * width0 and np.isfinite(flo) and np.isfinite(fhi)
        x = lo - flo * (hi - lo) / (fhi - flo) if use_secant else 0.5 * (lo + hi)
        if not (lo < x < hi):
            x = 0.5 * (lo + hi)
        fx = f(x)
        if fx == 0:
            return x, True
        if np.sign(fx) == np.sign(flo):
            lo, flo = x, fx
        else:
            hi, fhi = x, fx
        step = abs(x - x_prev) if x_prev is not None else np.inf
        x_prev = x
        if hi - lo <= xtol * max(1.0, abs(x)) or step <= xtol * max(1.0, abs(x)):
            return (lo if abs(flo) < abs(fhi) else hi), True
    return 0.5 * (lo + hi), False


def _scan_grid(fiber):
    n1, n2 = fiber.n_core, fiber.n_clad
    span = n1 - n2
    base = np.linspace(n2 + 1e-9, n1 - 1e-9, SCAN_POINTS)
    # roots of weakly guided modes sit exponentially close to n_clad
    tiny = 8 * np.finfo(float).eps * n1
    # dense up to the first uniform step, where a root and a J_l pole can share a cell
    edge = np.geomspace(tiny, 2 * span / SCAN_POINTS, EDGE_POINTS)
    grid = np.unique(np.concatenate([base, n2 + edge, n1 - edge]))
    return grid[(grid > n2) & (grid < n1)]


class _Scan:
    """Scan grid with the Bessel values shared by every (l, branch) of one fiber."""

    def __init__(self, fiber, l_max):
        self.fiber = fiber
        self.grid = _scan_grid(fiber)
        _, h, q = _transverse(fiber, self.grid)
        u, w = h * fiber.radius_a, q * fiber.radius_a
        orders = np.arange(-1, l_max + 2)
        with np.errstate(all="ignore"):
            self.j = {int(n): _sp.jv(n, u) for n in orders[:-1]}
            self.k = {int(n): _sp.kve(n, w) for n in orders[1:]}

    def residual(self, l, branch):
        """``(residual, scale)`` on the grid; see :func:`_residual`."""
        b = (self.j[l - 1], self.j[l], self.k[abs(l - 1)], self.k[l], self.k[l + 1])
        return _residual(self.fiber, l, branch, self.grid, b, with_scale=True)


def _roots_for(fiber, l, branch, scan=None):
    """All guided ``n_eff`` roots for one (l, branch), descending, plus failures."""
    scan = scan or _Scan(fiber, l)
    grid = scan.grid
    res, mag = scan.residual(l, branch)
    jl = scan.j[l]
    roots, failures = [], []
    f = lambda x: float(_residual(fiber, l, branch, np.float64(x)))  # noqa: E731
    finite = np.isfinite(res[:-1]) & np.isfinite(res[1:])
    change = np.sign(res[:-1]) != np.sign(res[1:])
    pole = np.sign(jl[:-1]) != np.sign(jl[1:])  # pole of J_{l-1}/J_l, not a root
    eps = np.finfo(float).eps
    # sign changes buried in the cancellation floor of lhs - rhs are noise
    floor = NOISE_FLOOR * eps * np.maximum(mag[:-1], mag[1:])
    signal = np.maximum(np.abs(res[:-1]), np.abs(res[1:])) > floor
    for i in np.flatnonzero(finite & change & ~pole & signal):
        r0, r1 = res[i], res[i + 1]
        x, ok = bracketed_root(f, grid[i], grid[i + 1], r0, r1)
        if not ok:
            failures.append((l, branch, (grid[i], grid[i + 1])))
            continue
        fx, m = _residual(fiber, l, branch, np.float64(x), with_scale=True)
        # next to n_clad one ulp of n_eff can move the residual by more than 1e-6
        slope = abs(r1 - r0) / (grid[i + 1] - grid[i])
        tol = max(1e-6 * (1.0 + abs(r0) + abs(r1)), 4 * slope * np.spacing(x) + NOISE_FLOOR * eps * m)
        if not abs(fx) <= tol:
            continue  # jump from round-off as w -> 0, not a root
        roots.append(x)
    return sorted(roots, reverse=True), failures


def _family(l, branch):
    if l == 0:
        return "TE" if branch > 0 else "TM"
    return "EH" if branch > 0 else "HE"


def _amplitudes(fiber, l, beta, h, q, family):
    a = fiber.radius_a
    u, w = h * a, q * a
    jl = bessel_j(l, u)
    kl = bessel_k(l, w)
    ratio = jl / kl
    if family == "TE":
        A, B = 0.0, 1.0
        return complex(A), complex(B), 0j, complex(B * ratio), math.nan
    if family == "TM":
        A = 1.0
        return complex(A), 0j, complex(A * ratio), 0j, math.nan
    s = (1 / u**2 + 1 / w**2) / (bessel_j_prime(l, u) / (u * jl) + bessel_k_prime(l, w) / (w * kl))
    A = 1.0
    B = 1j * l * beta * s * A / (CONST.mu0 * fiber.omega)
    return complex(A), complex(B), complex(A * ratio), complex(B * ratio), float(s)


def _build(fiber, family, l, m, n_eff):
    beta, h, q = (float(v) for v in _transverse(fiber, np.float64(n_eff)))
    A, B, C, D, s = _amplitudes(fiber, l, beta, h, q, family)
    return ModeSolution(fiber, ModeId(family, l, m, 1), beta, h, q, A, B, C, D, s, 0.0)


def _normalized(sol, power):
    from .fields import normalize_to_power

    return normalize_to_power(sol, power)


def solve_modes(fiber: FiberSpec, l_max: int = 2, power: float = 1.0) -> list[ModeSolution]:
    """Every guided mode with ``l <= l_max``, sorted by descending ``n_eff``.

    Hybrid modes are returned as both rotations.  Each solution is
    normalized to carry ``power`` watts.  Raises :class:`SolverError`
    listing every bracket whose refinement did not converge.
    """
    if l_max < 0:
        raise DomainError("l_max must be non-negative")
    out, failures = [], []
    scan = _Scan(fiber, l_max)
    for l in range(l_max + 1):
        for branch in (-1, 1):
            roots, fails = _roots_for(fiber, l, branch, scan)
            failures.extend(fails)
            fam = _family(l, branch)
            for m, n_eff in enumerate(roots, start=1):
                sol = _normalized(_build(fiber, fam, l, m, n_eff), power)
                out.append(sol)
                if l > 0:
                    out.append(sol.rotated(-1))
    if failures:
        raise SolverError(f"{len(failures)} bracket(s) failed to converge", failures)
    out.sort(key=lambda s: (-s.n_eff, s.mode.family, s.mode.l, -s.mode.rotation))
    return out


def solve_mode(fiber: FiberSpec, mode: ModeId, power: float = 1.0) -> ModeSolution:
    """Solve a single labelled mode; :class:`DomainError` if it is not guided."""
    roots, failures = _roots_for(fiber, mode.l, mode.branch)
    if failures:
        raise SolverError(f"refinement failed for {mode.label}", failures)
    if len(roots) < mode.m:
        raise DomainError(f"{mode.label} is not guided (V = {v_number(fiber):.4f})")
    sol = _normalized(_build(fiber, mode.family, mode.l, mode.m, roots[mode.m - 1]), power)
    return sol.rotated(mode.rotation)


def mode_neff(fiber: FiberSpec, mode: ModeId) -> float:
    """Effective index of one mode without building amplitudes."""
    roots, failures = _roots_for(fiber, mode.l, mode.branch)
    if failures:
        raise SolverError(f"refinement failed for {mode.label}", failures)
    if len(roots) < mode.m:
        raise DomainError(f"{mode.label} is not guided (V = {v_number(fiber):.4f})")
    return roots[mode.m - 1]


def mode_neffs(fiber: FiberSpec, modes) -> tuple:
    """Effective indices of several modes, sharing one Bessel scan."""
    modes = tuple(modes)
    scan = _Scan(fiber, max(m.l for m in modes))
    out = []
    for mode in modes:
        roots, failures = _roots_for(fiber, mode.l, mode.branch, scan)
        if failures:
            raise SolverError(f"refinement failed for {mode.label}", failures)
        if len(roots) < mode.m:
            raise DomainError(f"{mode.label} is not guided (V = {v_number(fiber):.4f})")
        out.append(roots[mode.m - 1])
    return tuple(out)


def _radius_for_v(template: FiberSpec, v: float) -> float:
    return v / (template.k * template.numerical_aperture)


def neff_curve(
    fiber_template: FiberSpec, v_range: tuple[float, float], samples: int, l_max: int = 2
) -> list[tuple[float, ModeId, float]]:
    """Rows ``(V, mode, n_eff)`` over a V sweep done by scaling the radius.

    Only the +1 rotation of each hybrid mode is listed.  Branches are keyed
    by their label; a branch whose ``n_eff`` decreases with V raises
    :class:`SolverError`.
    """
    v_min, v_max = v_range
    if not 0 < v_min < v_max:
        raise DomainError("v_range must satisfy 0 < v_min < v_max")
    if samples < 2:
        raise DomainError("samples must be >= 2")
    rows = []
    last: dict[ModeId, float] = {}
    for v in np.linspace(v_min, v_max, samples):
        fib = fiber_template.with_radius(_radius_for_v(fiber_template, v))
        scan = _Scan(fib, l_max)
        for l in range(l_max + 1):
            for branch in (-1, 1):
                roots, failures = _roots_for(fib, l, branch, scan)
                if failures:
                    raise SolverError(f"refinement failed at V={v:.6g}", failures)
                for m, n in enumerate(roots, start=1):
                    mid = ModeId(_family(l, branch), l, m)
                    if n < last.get(mid, -np.inf) - 1e-9:
                        raise SolverError(f"branch {mid.label} lost monotonicity at V={v:.6g}")
                    last[mid] = n
                    rows.append((float(v), mid, float(n)))
    rows.sort(key=lambda r: (r[0], -r[2]))
    return rows


def find_cutoff(
    fiber_template: FiberSpec, mode: ModeId, v_bracket: tuple[float, float], vtol: float = 1e-9
) -> float:
    """V at which ``mode`` starts to be guided, by bisection on existence."""

    def guided(v):
        fib = fiber_template.with_radius(_radius_for_v(fiber_template, v))
        roots, _ = _roots_for(fib, mode.l, mode.branch)
        return len(roots) >= mode.m

    lo, hi = v_bracket
    if guided(lo) or not guided(hi):
        raise DomainError(f"{mode.label} cutoff is not bracketed by V in {v_bracket}")
    while hi - lo > vtol:
        mid = 0.5 * (lo + hi)
        if guided(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def _beta_at(fiber, mode, omega):
    fib = fiber.with_wavelength(2 * math.pi * CONST.c / omega)
    return mode_neff(fib, mode) * fib.k


def dbeta_domega(fiber: FiberSpec, mode: ModeId, rel_step: float = 1e-5, stencil: int = 3) -> float:
    """Inverse group velocity ``d beta / d omega`` [s/m] by central differences in omega.

    ``stencil`` is 3 (second order) or 5 (fourth order).  Material
    dispersion is not modelled; the indices are held fixed.
    """
    w0 = fiber.omega
    dw = rel_step * w0
    if stencil == 3:
        return (_beta_at(fiber, mode, w0 + dw) - _beta_at(fiber, mode, w0 - dw)) / (2 * dw)
    if stencil == 5:
        b = [_beta_at(fiber, mode, w0 + j * dw) for j in (-2, -1, 1, 2)]
        return (b[0] - 8 * b[1] + 8 * b[2] - b[3]) / (12 * dw)
    raise DomainError("stencil must be 3 or 5")


def group_mode_list(solutions: Iterable[ModeSolution]) -> dict[str, list[ModeSolution]]:
    """Group solutions by label, e.g. ``{"HE11": [plus, minus]}``."""
    out: dict[str, list[ModeSolution]] = {}
    for s in solutions:
        out.setdefault(s.mode.label, []).append(s)
    return out
