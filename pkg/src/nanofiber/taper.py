"""Heat-and-pull planning for tapered fibers.

Model: every step heats a uniform zone of length ``L`` centred on the
fiber (flame travel plus flame width), and the two motors pull it
symmetrically by ``dL``.  Volume conservation thins the heated glass to
``r * sqrt(L / (L + dL))``.  Glass left outside the next, shorter, hot zone
freezes into the taper.

Lengths are in metres, ``z`` runs from the waist centre outward, and only
one half of the symmetric profile is stored.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import interpolate

from .errors import DomainError
from .modes import FiberSpec, ModeId, mode_neff

__all__ = [
    "TaperProfile",
    "PullStep",
    "PullPlan",
    "PullState",
    "SimulatedProfile",
    "DeltaBetaTable",
    "TransmissionSignal",
    "plan_pull",
    "simulate_pull",
    "transmission_signal",
    "beat_frequency_law",
    "MAX_STEP_RATIO",
]

MAX_STEP_RATIO = 0.999  # smallest allowed r_i / r_(i-1)
ANGLE_RANGE = (0.3e-3, 5e-3)


@dataclass(frozen=True)
class TaperProfile:
    """Target shape: linear taper at ``linear_angle`` down to ``handoff_radius``,
    exponential decay down to ``waist_radius``, then a uniform waist.

    ``decay_length`` defaults to ``handoff_radius / tan(linear_angle)``, which
    makes the slope continuous at the handoff.
    """

    initial_radius: float = 62.5e-6
    linear_angle: float = 2e-3
    handoff_radius: float = 6e-6
    waist_radius: float = 250e-9
    waist_length: float = 5e-3
    decay_length: float | None = None

    def __post_init__(self):
        if min(self.initial_radius, self.waist_radius, self.linear_angle) <= 0 or self.waist_length < 0:
            raise DomainError("radii, angle and waist length must be positive")
        if self.waist_radius > self.initial_radius:
            raise DomainError("waist radius exceeds the initial radius")
        if not self.is_trivial and not self.waist_radius < self.handoff_radius < self.initial_radius:
            raise DomainError("need waist radius < handoff radius < initial radius")
        if not ANGLE_RANGE[0] <= self.linear_angle <= ANGLE_RANGE[1]:
            warnings.warn(f"taper angle {self.linear_angle:g} rad is outside the usual 0.3-5 mrad range", stacklevel=2)
        if self.decay_length is None:
            object.__setattr__(self, "decay_length", self.handoff_radius / math.tan(self.linear_angle))
        elif self.decay_length <= 0:
            raise DomainError("decay length must be positive")

    @property
    def is_trivial(self) -> bool:
        return self.waist_radius == self.initial_radius

    @property
    def exp_length(self) -> float:
        """Axial length of the exponential section [m]."""
        return self.decay_length * math.log(self.handoff_radius / self.waist_radius)

    @property
    def linear_length(self) -> float:
        return (self.initial_radius - self.handoff_radius) / math.tan(self.linear_angle)

    @property
    def half_length(self) -> float:
        """Distance from the waist centre to the untapered fiber [m]."""
        if self.is_trivial:
            return 0.0
        return self.waist_length / 2 + self.exp_length + self.linear_length

    def radius(self, z):
        """``r(z)`` for ``z`` measured from the waist centre (either sign)."""
        z = np.abs(np.asarray(z, dtype=float))
        if self.is_trivial:
            return np.full_like(z, self.initial_radius)
        z1 = self.waist_length / 2
        z2 = z1 + self.exp_length
        z3 = z2 + self.linear_length
        r = np.full_like(z, self.initial_radius)
        r = np.where(z <= z3, self.handoff_radius + (z - z2) * math.tan(self.linear_angle), r)
        r = np.where(z <= z2, self.handoff_radius * np.exp((z - z2) / self.decay_length), r)
        return np.where(z <= z1, self.waist_radius, r)

    def position(self, radius):
        """Inverse of :meth:`radius` on the tapered part: outermost ``z`` with ``r(z) = radius``."""
        r = np.asarray(radius, dtype=float)
        z1 = self.waist_length / 2
        z2 = z1 + self.exp_length
        zl = z2 + (r - self.handoff_radius) / math.tan(self.linear_angle)
        ze = z2 + self.decay_length * np.log(np.maximum(r, self.waist_radius) / self.handoff_radius)
        return np.where(r >= self.handoff_radius, zl, ze)

    def volume(self, half_span: float) -> float:
        """Glass volume of ``|z| <= half_span`` [m^3]."""
        z = np.linspace(0.0, half_span, 200001)
        return 2 * math.pi * float(np.trapezoid(self.radius(z) ** 2, z))


@dataclass(frozen=True)
class PullStep:
    pull_velocity: float  # per motor [m/s]
    flame_travel: float  # [m]
    duration: float  # [s]

    @property
    def elongation(self) -> float:
        return 2 * self.pull_velocity * self.duration


@dataclass(frozen=True)
class PullPlan:
    steps: tuple
    hot_zone_width: float
    predicted_profile: TaperProfile
    radii: np.ndarray = field(repr=False, compare=False, default=None)

    def hot_zone(self, i: int) -> float:
        """Effective heated length of step ``i`` [m]."""
        return self.steps[i].flame_travel + self.hot_zone_width

    @property
    def total_elongation(self) -> float:
        return sum(s.elongation for s in self.steps)

    @property
    def total_duration(self) -> float:
        return sum(s.duration for s in self.steps)

    def as_dict(self) -> dict:
        t = self.predicted_profile
        return {
            "hot_zone_width_m": self.hot_zone_width,
            "target": {
                "initial_radius_m": t.initial_radius,
                "linear_angle_rad": t.linear_angle,
                "handoff_radius_m": t.handoff_radius,
                "waist_radius_m": t.waist_radius,
                "waist_length_m": t.waist_length,
                "decay_length_m": t.decay_length,
            },
            "total_elongation_m": self.total_elongation,
            "total_duration_s": self.total_duration,
            "steps": [
                {"pull_velocity_m_s": s.pull_velocity, "flame_travel_m": s.flame_travel, "duration_s": s.duration}
                for s in self.steps
            ],
        }


def _radius_grid(r0, rw, ratio):
    n = math.ceil(math.log(rw / r0) / math.log(ratio) - 1e-9)
    return r0 * (rw / r0) ** (np.arange(n + 1) / n)


def plan_pull(
    target: TaperProfile,
    hot_zone_width: float,
    pull_velocity: float = 50e-6,
    step_ratio: float = MAX_STEP_RATIO,
) -> PullPlan:
    """Motor steps that produce ``target``.

    The radius is lowered geometrically from the initial to the waist radius
    with ``r_i / r_(i-1) = step_ratio``.  Glass frozen at radius ``r_i`` spans
    the target taper between the geometric midpoints to the neighbouring
    radii.  Hot zones are found backward from the waist: the final heated
    length must end up as the waist, and each earlier step must cover the
    next hot zone plus the two frozen segments.

    Raises
    ------
    DomainError
        If a step needs a hot zone shorter than ``hot_zone_width`` (negative
        flame travel); the message names the step and its radius.
    """
    if not hot_zone_width > 0:
        raise DomainError("hot zone width must be positive")
    if not pull_velocity > 0:
        raise DomainError("pull velocity must be positive")
    if not 0 < step_ratio < 1:
        raise DomainError("step ratio must lie in (0, 1)")
    if target.is_trivial:
        return PullPlan((), hot_zone_width, target, np.array([target.initial_radius]))

    r = _radius_grid(target.initial_radius, target.waist_radius, step_ratio)
    n = len(r) - 1
    mid = np.sqrt(r[:-1] * r[1:])
    zmid = target.position(mid)  # boundary between frozen r_(i-1) and r_i
    # frozen half-length at radius r_i, i = 1..n-1
    t = zmid[:-1] - zmid[1:]
    # the final waist also absorbs the short target stretch above the waist radius
    w = target.waist_length + 2 * (zmid[-1] - target.waist_length / 2)

    hz = np.empty(n)
    for i in range(n, 0, -1):
        hz[i - 1] = w * (r[i] / r[i - 1]) ** 2
        if i > 1:
            w = hz[i - 1] + 2 * t[i - 2]
    travel = hz - hot_zone_width
    bad = np.flatnonzero(travel <= 0)
    if bad.size:
        i = int(bad[0])
        raise DomainError(
            f"infeasible step {i + 1} of {n} (radius {r[i]:.4g} m -> {r[i + 1]:.4g} m): "
            f"needs a {hz[i]:.4g} m hot zone, shorter than the {hot_zone_width:.4g} m flame width"
        )
    dl = hz * ((r[:-1] / r[1:]) ** 2 - 1)
    steps = tuple(PullStep(pull_velocity, float(tr), float(d / (2 * pull_velocity))) for tr, d in zip(travel, dl))
    return PullPlan(steps, hot_zone_width, target, r)


class PullState:
    """Half-profile as contiguous segments from the centre outward."""

    def __init__(self, initial_radius: float, half_length: float):
        self.lengths = np.array([half_length])
        self.radii = np.array([initial_radius])

    def _split(self, half_zone):
        edges = np.cumsum(self.lengths)
        if half_zone > edges[-1] * (1 + 1e-12):
            raise DomainError("hot zone is longer than the simulated fiber")
        k = int(np.searchsorted(edges, half_zone))
        k = min(k, len(edges) - 1)
        inner = half_zone - (edges[k - 1] if k else 0.0)
        if inner < self.lengths[k] * (1 - 1e-12) and inner > self.lengths[k] * 1e-12:
            self.lengths = np.concatenate([self.lengths[:k], [inner, self.lengths[k] - inner], self.lengths[k + 1 :]])
            self.radii = np.concatenate([self.radii[: k + 1], self.radii[k:]])
        return k + 1  # number of segments inside the zone

    def hot_segments(self, hot_zone: float):
        k = self._split(hot_zone / 2)
        return self.lengths[:k], self.radii[:k]

    def apply(self, hot_zone: float, elongation: float):
        """Stretch the central ``hot_zone`` by ``elongation`` conserving volume."""
        k = self._split(hot_zone / 2)
        s = (hot_zone + elongation) / hot_zone
        self.lengths[:k] *= s
        self.radii[:k] /= math.sqrt(s)

    def profile(self):
        """Segment edges ``z`` (len n+1) and radii (len n)."""
        return np.concatenate([[0.0], np.cumsum(self.lengths)]), self.radii.copy()

    def volume(self) -> float:
        return 2 * math.pi * float(np.sum(self.radii**2 * self.lengths))


@dataclass
class SimulatedProfile:
    edges: np.ndarray
    radii: np.ndarray
    elongation: float
    initial_volume: float
    volume: float

    def radius(self, z):
        """Piecewise-constant ``r(z)``; beyond the simulated span the last radius."""
        z = np.abs(np.asarray(z, dtype=float))
        k = np.clip(np.searchsorted(self.edges, z, side="right") - 1, 0, len(self.radii) - 1)
        return self.radii[k]

    def samples(self):
        """Segment midpoints and radii, the natural export grid."""
        return 0.5 * (self.edges[:-1] + self.edges[1:]), self.radii


def _initial_half_length(plan: PullPlan) -> float:
    hz = max((plan.hot_zone(i) for i in range(len(plan.steps))), default=0.0)
    return max(hz / 2, plan.predicted_profile.half_length) * 1.5 + 1e-3


def simulate_pull(plan: PullPlan, initial_radius: float, half_length: float | None = None) -> SimulatedProfile:
    """Execute ``plan`` on a uniform fiber and return the final profile."""
    if not initial_radius > 0:
        raise DomainError("initial radius must be positive")
    state = PullState(initial_radius, half_length or _initial_half_length(plan))
    v0 = state.volume()
    x = 0.0
    for i, s in enumerate(plan.steps):
        state.apply(plan.hot_zone(i), s.elongation)
        x += s.elongation
    edges, radii = state.profile()
    return SimulatedProfile(edges, radii, x, v0, state.volume())


# -- synthetic transmission ------------------------------------------------------


class DeltaBetaTable:
    """Spline of ``beta_1 - beta_2`` [1/m] versus radius for a mode pair.

    Zero outside ``radius_window`` and wherever either mode is not guided.
    """

    def __init__(self, template: FiberSpec, pair, radius_window, samples: int = 400):
        m1, m2 = (ModeId.parse(m) if isinstance(m, str) else m for m in pair)
        lo, hi = radius_window
        if not 0 < lo < hi:
            raise DomainError("radius window must satisfy 0 < lo < hi")
        self.pair = (m1, m2)
        self.window = (lo, hi)
        self.k = template.k
        rr = np.geomspace(lo, hi, samples)
        db = np.array([self._exact(template.with_radius(float(a))) for a in rr])
        if np.any(np.isnan(db)):
            raise DomainError(f"{m1.label} or {m2.label} is not guided over the whole radius window")
        self._spline = interpolate.CubicSpline(np.log(rr), db)

    def _exact(self, fib):
        try:
            return fib.k * (mode_neff(fib, self.pair[0]) - mode_neff(fib, self.pair[1]))
        except DomainError:
            return math.nan

    def __call__(self, radius):
        r = np.asarray(radius, dtype=float)
        lo, hi = self.window
        inside = (r >= lo) & (r <= hi)
        out = np.zeros_like(r)
        out[inside] = self._spline(np.log(r[inside]))
        return out

    def derivative(self, radius):
        r = np.asarray(radius, dtype=float)
        lo, hi = self.window
        inside = (r >= lo) & (r <= hi)
        out = np.zeros_like(r)
        out[inside] = self._spline(np.log(r[inside]), 1) / r[inside]
        return out


def beat_frequency_law(table: DeltaBetaTable, hot_radius):
    """Beat frequency per unit elongation [cycles/m] for a uniform hot zone
    at ``hot_radius``: ``(db - (r / 2) db') / 2 pi``.
    """
    r = np.asarray(hot_radius, dtype=float)
    return (table(r) - 0.5 * r * table.derivative(r)) / (2 * math.pi)


@dataclass
class TransmissionSignal:
    elongation: np.ndarray  # [m]
    transmission: np.ndarray
    phase: np.ndarray  # accumulated mode phase difference [rad]
    hot_radius: np.ndarray  # radius of the heated zone [m]
    eta: float

    @property
    def spacing(self) -> float:
        return float(self.elongation[1] - self.elongation[0])


def transmission_signal(
    plan: PullPlan,
    initial_radius: float,
    table: DeltaBetaTable,
    eta: float,
    spacing: float,
    half_length: float | None = None,
) -> TransmissionSignal:
    """Two-mode interference ``T = 1 - 4 eta (1 - eta) sin^2(dphi / 2)`` during the pull.

    ``dphi`` is the integral of ``table`` over the whole evolving profile
    (both halves), sampled every ``spacing`` metres of elongation.  Inside a
    step the heated glass stretches uniformly, so the samples are exact for
    the model, not interpolated between steps.
    """
    if not 0 <= eta <= 1:
        raise DomainError("eta must lie in [0, 1]")
    if not spacing > 0:
        raise DomainError("sample spacing must be positive")
    state = PullState(initial_radius, half_length or _initial_half_length(plan))
    total = plan.total_elongation
    x = np.arange(0.0, total + 0.5 * spacing, spacing)
    x = x[x <= total]
    phase = np.empty_like(x)
    hot_r = np.empty_like(x)
    x0 = 0.0
    j = 0
    for i, s in enumerate(plan.steps):
        hz = plan.hot_zone(i)
        dl = s.elongation
        hl, hr = state.hot_segments(hz)
        outside = 2 * float(np.sum(state.lengths[len(hl) :] * table(state.radii[len(hl) :])))
        hl, hr = hl.copy(), hr.copy()
        last = i == len(plan.steps) - 1
        while j < len(x) and (x[j] < x0 + dl or last):
            f = (hz + (x[j] - x0)) / hz
            phase[j] = outside + 2 * float(np.sum(hl * f * table(hr / math.sqrt(f))))
            hot_r[j] = hr[0] / math.sqrt(f)
            j += 1
        state.apply(hz, dl)
        x0 += dl
    if not plan.steps:
        phase[:] = 2 * float(np.sum(state.lengths * table(state.radii)))
        hot_r[:] = initial_radius
    t = 1 - 4 * eta * (1 - eta) * np.sin(phase / 2) ** 2
    return TransmissionSignal(x, t, phase, hot_r, eta)
