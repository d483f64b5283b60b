"""Gabor spectrograms of pull signals, beat ridges and radius inversion."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainError
from .modes import FiberSpec, ModeId, mode_neff, mode_neffs

__all__ = [
    "Spectrogram",
    "BeatRidge",
    "spectrogram",
    "extract_ridges",
    "beat_length",
    "beat_frequency",
    "radius_from_beat",
    "PAD_FACTOR",
    "NOISE_FACTOR",
]

PAD_FACTOR = 4
NOISE_FACTOR = 5.0


@dataclass
class Spectrogram:
    """One-sided power spectral density per window.

    ``psd[i, k]`` has units of signal^2 * m, so that summing ``psd * df``
    over a window returns the mean square of the windowed, zero-padded
    segment.
    """

    window_centers: np.ndarray  # [m]
    frequency_bins: np.ndarray  # [cycles/m]
    psd: np.ndarray
    window_width: float
    hop: float
    spacing: float
    windowed_power: np.ndarray  # mean square of each padded segment

    @property
    def bin_width(self) -> float:
        return float(self.frequency_bins[1] - self.frequency_bins[0])

    def parseval_error(self) -> np.ndarray:
        """Relative mismatch between time and frequency power per window."""
        spec = self.psd.sum(axis=1) * self.bin_width
        ref = self.windowed_power
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(ref > 0, np.abs(spec - ref) / ref, np.abs(spec))


def gaussian_window(n: int) -> np.ndarray:
    """Gaussian taper over ``n`` samples with sigma = n / 6."""
    x = np.arange(n) - (n - 1) / 2
    return np.exp(-0.5 * (x / (n / 6)) ** 2)


def spectrogram(signal, spacing: float, window_width: float, hop: float, start: float = 0.0) -> Spectrogram:
    """Short-time Fourier transform with a Gaussian window.

    Parameters
    ----------
    signal : array_like
        Uniformly sampled values.
    spacing : float
        Sample spacing in elongation [m].
    window_width, hop : float
        Window length and step between window starts [m].
    start : float
        Elongation of the first sample.

    Each window is mean-removed, tapered, zero-padded to four times its
    length and transformed.
    """
    y = np.asarray(signal, dtype=float)
    if not spacing > 0 or not window_width > 0 or not hop > 0:
        raise DomainError("spacing, window width and hop must be positive")
    n = int(round(window_width / spacing))
    step = max(int(round(hop / spacing)), 1)
    if n < 4:
        raise DomainError("window covers fewer than four samples")
    if len(y) < n:
        raise DomainError("signal is shorter than one window")
    starts = np.arange(0, len(y) - n + 1, step)
    if len(starts) < 2:
        raise DomainError("fewer than two windows fit in the signal")
    idx = starts[:, None] + np.arange(n)[None, :]
    seg = y[idx]
    seg = (seg - seg.mean(axis=1, keepdims=True)) * gaussian_window(n)
    nfft = PAD_FACTOR * n
    X = np.fft.rfft(seg, n=nfft, axis=1)
    w = np.full(X.shape[1], 2.0)
    w[0] = 1.0
    if nfft % 2 == 0:
        w[-1] = 1.0
    psd = w * np.abs(X) ** 2 * spacing / nfft
    freqs = np.fft.rfftfreq(nfft, spacing)
    centers = start + (starts + (n - 1) / 2) * spacing
    power = np.sum(seg**2, axis=1) / nfft
    return Spectrogram(centers, freqs, psd, n * spacing, step * spacing, spacing, power)


@dataclass
class BeatRidge:
    """Frequency track across windows; NaN where the ridge is absent."""

    frequency: np.ndarray  # [cycles/m]
    amplitude: np.ndarray
    label: str | None = None

    @property
    def present(self) -> np.ndarray:
        return ~np.isnan(self.frequency)

    @property
    def mean_frequency(self) -> float:
        return float(np.nanmean(self.frequency))


def _peaks(p, freqs, floor, count):
    """Up to ``count`` strongest local maxima above ``floor``, parabola-refined."""
    k = np.flatnonzero((p[1:-1] > p[:-2]) & (p[1:-1] >= p[2:]) & (p[1:-1] > floor)) + 1
    if k.size == 0:
        return []
    k = k[np.argsort(p[k])[::-1][:count]]
    df = freqs[1] - freqs[0]
    out = []
    for i in k:
        a, b, c = np.log(p[i - 1 : i + 2])
        den = a - 2 * b + c
        d = 0.5 * (a - c) / den if den < 0 else 0.0
        out.append((freqs[i] + d * df, float(np.exp(b - 0.25 * (a - c) * d))))
    return out


def extract_ridges(
    spec: Spectrogram,
    count: int = 1,
    noise_factor: float = NOISE_FACTOR,
    max_jump: float | None = None,
    min_windows: int = 4,
) -> list[BeatRidge]:
    """Link per-window spectral peaks into ridges.

    In each window the ``count`` strongest local maxima above
    ``noise_factor`` times the window median are kept.  Peaks join the open
    ridge with the nearest last frequency if it lies within ``max_jump``
    (default three bins); otherwise they start a new ridge.  Ridges present
    in fewer than ``min_windows`` windows are discarded, which removes
    isolated noise peaks.  The result is ordered by mean frequency.
    """
    if count < 1:
        raise DomainError("count must be at least 1")
    nwin = len(spec.window_centers)
    jump = 3 * spec.bin_width if max_jump is None else max_jump
    tracks = []  # [freqs, amps, last_f, last_i]
    for i in range(nwin):
        p = spec.psd[i]
        floor = noise_factor * np.median(p)
        if floor <= 0:
            floor = np.finfo(float).tiny
        peaks = _peaks(p, spec.frequency_bins, floor, count)
        open_tracks = [t for t in tracks if t[3] == i - 1]
        used = set()
        # strongest peak claims first
        for f, amp in peaks:
            best, dist = None, jump
            for t in open_tracks:
                d = abs(t[2] - f)
                if id(t) not in used and d <= dist:
                    best, dist = t, d
            if best is None:
                best = [np.full(nwin, np.nan), np.full(nwin, np.nan), f, i]
                tracks.append(best)
            used.add(id(best))
            best[0][i], best[1][i] = f, amp
            best[2], best[3] = f, i
    ridges = [BeatRidge(t[0], t[1]) for t in tracks if np.count_nonzero(~np.isnan(t[0])) >= min_windows]
    ridges.sort(key=lambda r: r.mean_frequency)
    return ridges


# -- mode beating ----------------------------------------------------------------


def _mode(m):
    return ModeId.parse(m) if isinstance(m, str) else m


@lru_cache(maxsize=4096)
def _beat(fiber, m1, m2):
    n1, n2 = mode_neffs(fiber, (m1, m2))
    return fiber.k * (n1 - n2) / (2 * math.pi)


def beat_frequency(fiber: FiberSpec, pair) -> float:
    """``(beta_1 - beta_2) / 2 pi`` [cycles/m]; raises if a mode is not guided."""
    m1, m2 = (_mode(m) for m in pair)
    return _beat(fiber, m1, m2)


def beat_length(fiber: FiberSpec, pair) -> float:
    """``2 pi / |beta_1 - beta_2|`` [m]; ``inf`` for degenerate modes."""
    m1, m2 = (_mode(m) for m in pair)
    if m1.rotated(1) == m2.rotated(1):
        mode_neff(fiber, m1)
        return math.inf
    f = abs(beat_frequency(fiber, (m1, m2)))
    return math.inf if f == 0 else 1 / f


def radius_from_beat(
    measured_frequency: float,
    pair,
    fiber_template: FiberSpec,
    search_range,
    xtol: float = 1e-13,
    probes: int = 48,
) -> float:
    """Fiber radius whose beat frequency equals ``measured_frequency``.

    The beat frequency is sampled on ``probes`` radii across
    ``search_range``; radii where a mode is not guided are left out of the
    attainable band.  Exactly one sampled interval may contain the
    frequency, and the mapping must be strictly monotone inside it (checked
    on a finer sampling).  The root is then bisected to ``xtol``.

    Raises
    ------
    DomainError
        If the frequency lies outside the attainable band, several radii in
        the range share it, or the bracketing interval is not monotone.
    """
    lo, hi = (float(v) for v in search_range)
    if not 0 < lo < hi:
        raise DomainError("search range must satisfy 0 < lo < hi")
    target = float(measured_frequency)

    def f(a):
        return beat_frequency(fiber_template.with_radius(a), pair)

    def f_or_nan(a):
        try:
            return f(a)
        except DomainError:
            return math.nan

    grid = list(np.linspace(lo, hi, probes))
    vals = [f_or_nan(a) for a in grid]
    # close gaps at cutoffs so a root next to an unguided probe is not missed
    for k in range(len(grid) - 2, -1, -1):
        if np.isfinite(vals[k]) != np.isfinite(vals[k + 1]):
            a, b = grid[k], grid[k + 1]
            good_left = np.isfinite(vals[k])
            while b - a > 1e-6 * (b + a):
                m = 0.5 * (a + b)
                if np.isfinite(f_or_nan(m)) == good_left:
                    a = m
                else:
                    b = m
            edge = a if good_left else b
            grid.insert(k + 1, edge)
            vals.insert(k + 1, f(edge))
    grid, vals = np.array(grid), np.array(vals)
    g = vals - target
    g[np.abs(g) <= 1e-12 * abs(target)] = 0.0
    ok = np.isfinite(g[:-1]) & np.isfinite(g[1:])
    hits = list(np.flatnonzero(ok & (g[:-1] * g[1:] <= 0)))
    # a root sitting exactly on a probe shows up in two neighbouring intervals
    hits = [k for k in hits if not (g[k] == 0 and k - 1 in hits)]
    if not hits:
        band = vals[np.isfinite(vals)]
        if band.size == 0:
            raise DomainError("a mode of the pair is not guided anywhere in the search range")
        raise DomainError(
            f"frequency {target:.6g} /m outside the attainable band [{band.min():.6g}, {band.max():.6g}] /m"
        )
    if len(hits) > 1:
        raise DomainError("beat frequency is not monotone over the search range: several radii match")
    k = hits[0]
    a, b = grid[k], grid[k + 1]
    fine = np.array([f(x) for x in np.linspace(a, b, 9)])
    d = np.diff(fine)
    if not (np.all(d > 0) or np.all(d < 0)):
        raise DomainError("beat frequency is not monotone around the matching radius")
    ga = g[k]
    if ga == 0:
        return float(a)
    while b - a > xtol:
        m = 0.5 * (a + b)
        gm = f(m) - target
        if gm == 0:
            return m
        if (gm > 0) == (ga > 0):
            a, ga = m, gm
        else:
            b = m
    return 0.5 * (a + b)
