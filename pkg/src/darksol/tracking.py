"""Dark-soliton detection in density profiles, pair tracking, oscillation
frequency fits, and emulation of finite imaging resolution.

Carpets carry positions in um and times in ms; fitted frequencies are in Hz.
"""
from dataclasses import dataclass, field
import logging

import numpy as np
from scipy.ndimage import convolve1d
from scipy.optimize import least_squares
from scipy.signal import lombscargle

log = logging.getLogger(__name__)


class FitError(RuntimeError):
    """No usable oscillation in a time series."""


@dataclass
class DensityCarpet:
    z: np.ndarray        # um
    times: np.ndarray    # ms
    frames: np.ndarray   # (n_times, n_points)

    def __post_init__(self):
        self.z = np.asarray(self.z, dtype=float)
        self.times = np.asarray(self.times, dtype=float)
        self.frames = np.asarray(self.frames, dtype=float)
        if self.frames.shape != (self.times.size, self.z.size):
            raise ValueError("frames must have shape (n_times, n_points)")
        if self.times.size > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")
        if np.any(self.frames < 0):
            raise ValueError("densities must be non-negative")

    @property
    def dz(self):
        return self.z[1] - self.z[0]


@dataclass
class TrackingOptions:
    search_window_fraction: float = 0.7
    min_contrast: float = 0.2
    background_window_um: float = 1.5
    min_pair_separation_um: float = 0.0
    follow_pair: bool = True


@dataclass
class Dips:
    positions: np.ndarray
    contrasts: np.ndarray
    indices: np.ndarray = field(repr=False, default=None)

    def __len__(self):
        return self.positions.size


def _support_radius(frame, z, level=0.05):
    inside = np.flatnonzero(frame > level * frame.max())
    return 0.5 * (z[inside[-1]] - z[inside[0]])


def find_dips(frame, z, opts=None):
    """Local density minima passing the window and contrast gates, with
    sub-grid positions from a parabola through the minimum and its neighbours.
    Sorted by position."""
    opts = opts or TrackingOptions()
    frame = np.asarray(frame, dtype=float)
    peak = frame.max()
    if not peak > 0 or np.ptp(frame) <= 1e-12 * peak:
        raise ValueError("degenerate frame: no condensate bulk to search")
    dz = z[1] - z[0]
    radius = opts.search_window_fraction * _support_radius(frame, z)
    half_w = max(1, int(round(opts.background_window_um / dz)))

    inner = frame[1:-1]
    is_min = (inner < frame[:-2]) & (inner <= frame[2:])
    idx = np.flatnonzero(is_min) + 1
    idx = idx[np.abs(z[idx]) < radius]

    pos, con, keep = [], [], []
    for i in idx:
        lo, hi = max(0, i - half_w), min(frame.size, i + half_w + 1)
        bg = frame[lo:hi].max()
        if not bg > 0:
            continue
        contrast = (bg - frame[i]) / bg
        if contrast < opts.min_contrast:
            continue
        a, b, c = frame[i - 1], frame[i], frame[i + 1]
        curv = a - 2 * b + c
        shift = 0.5 * (a - c) / curv if curv > 0 else 0.0
        pos.append(z[i] + shift * dz)
        con.append(contrast)
        keep.append(i)
    order = np.argsort(pos)
    return Dips(np.asarray(pos, dtype=float)[order], np.asarray(con, dtype=float)[order],
                np.asarray(keep, dtype=int)[order])


def detect_solitons(frame, z, opts=None):
    """Sorted soliton positions in one density frame (may be empty)."""
    return find_dips(frame, z, opts).positions


@dataclass
class TrackResult:
    times: np.ndarray          # ms
    positions: list            # per frame: all detected positions
    pair: np.ndarray           # (n_times, 2) left/right of the dominant pair, NaN if missing
    distance: np.ndarray       # right - left, NaN if flagged
    flags: list                # "ok", "missing", "close"

    @property
    def valid(self):
        return np.array([f == "ok" for f in self.flags])

    @property
    def counts(self):
        return np.array([len(p) for p in self.positions])


def _dominant(dips, how_many):
    # highest contrast first; ties broken towards the centre
    order = sorted(range(len(dips)), key=lambda j: (-round(dips.contrasts[j], 6),
                                                   abs(dips.positions[j])))
    return sorted(dips.positions[j] for j in order[:how_many])


def _nearest(candidates, target):
    return candidates[np.argmin(np.abs(candidates - target))]


def track_pair(carpet, opts=None):
    """Dominant central pair per frame and its label-free distance series.

    The pair is first picked by contrast. With ``opts.follow_pair`` later
    frames keep, on each side of the previous pair's midpoint, the dip nearest
    the previous position, so that other solitons crossing the cloud do not
    steal the label.
    """
    opts = opts or TrackingOptions()
    positions, flags = [], []
    pair = np.full((carpet.times.size, 2), np.nan)
    prev = None
    for i, frame in enumerate(carpet.frames):
        dips = find_dips(frame, carpet.z, opts)
        positions.append(dips.positions)
        if len(dips) < 2:
            flags.append("missing")
            continue
        if opts.follow_pair and prev is not None:
            mid = 0.5 * (prev[0] + prev[1])
            left = dips.positions[dips.positions < mid]
            right = dips.positions[dips.positions >= mid]
            if left.size and right.size:
                pair[i] = _nearest(left, prev[0]), _nearest(right, prev[1])
            else:
                pair[i] = _dominant(dips, 2)
        else:
            pair[i] = _dominant(dips, 2)
        prev = pair[i].copy()
        if pair[i, 1] - pair[i, 0] < opts.min_pair_separation_um:
            flags.append("close")
        else:
            flags.append("ok")
    distance = pair[:, 1] - pair[:, 0]
    distance[np.array([f != "ok" for f in flags])] = np.nan
    return TrackResult(carpet.times.copy(), positions, pair, distance, flags)


def dip_width(frame, z, position, background_window_um=1.5):
    """Full width (um) of the dip at ``position`` where the density recovers
    to half-way between its minimum and the local background; also returns
    the background density."""
    frame = np.asarray(frame, dtype=float)
    dz = z[1] - z[0]
    j = int(np.argmin(np.abs(z - position)))
    half_w = max(1, int(round(background_window_um / dz)))
    bg = frame[max(0, j - half_w):j + half_w + 1].max()
    level = 0.5 * (bg + frame[j])
    left = j
    while left > 0 and frame[left] < level:
        left -= 1
    right = j
    while right < frame.size - 1 and frame[right] < level:
        right += 1
    return z[right] - z[left], bg


def track_single(carpet, opts=None):
    """Position of the highest-contrast dip per frame (NaN where none)."""
    opts = opts or TrackingOptions()
    out = np.full(carpet.times.size, np.nan)
    for i, frame in enumerate(carpet.frames):
        dips = find_dips(frame, carpet.z, opts)
        if len(dips):
            out[i] = dips.positions[np.argmax(dips.contrasts)]
    return out


# --- frequency fitting ------------------------------------------------------

@dataclass
class SinusoidFit:
    frequency: float        # cycles per unit of t
    amplitude: float        # >= 0
    phase: float
    offset: float
    residual_rms: float
    frequency_sigma: float
    method: str             # "lsq" or "spectral"


def _model(p, t):
    c, a, b, f = p
    return c + a * np.cos(2 * np.pi * f * t) + b * np.sin(2 * np.pi * f * t)


def fit_sinusoid(t, y, min_periods=1.5, min_samples=10):
    """Fit y ~ c + A cos(2 pi f t + phi).

    The starting frequency is the Lomb-Scargle peak of y - mean(y) (samples
    need not be uniform); nonlinear least squares then refines all four
    parameters. Falls back to the spectral estimate, flagged via ``method``,
    if the refinement fails or leaves the spectral peak.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    ok = np.isfinite(t) & np.isfinite(y)
    t, y = t[ok], y[ok]
    if t.size < min_samples:
        raise FitError(f"need at least {min_samples} samples, got {t.size}")
    y0 = y - y.mean()
    scale = max(np.abs(y).max(), 1e-300)
    if np.std(y0) <= 1e-9 * scale:
        raise FitError("no oscillation found: series is constant")

    span = t.max() - t.min()
    step = np.median(np.diff(np.sort(t)))
    f_lo, f_hi = 0.5 / span, 0.5 / step
    freqs = np.linspace(f_lo, f_hi, int(20 * (f_hi - f_lo) * span) + 2)
    power = lombscargle(t - t.min(), y0, 2 * np.pi * freqs)
    j = int(np.argmax(power))
    if 0 < j < freqs.size - 1:
        a, b, c = power[j - 1], power[j], power[j + 1]
        curv = a - 2 * b + c
        f0 = freqs[j] + (0.5 * (a - c) / curv if curv < 0 else 0.0) * (freqs[1] - freqs[0])
    else:
        f0 = freqs[j]
    if span * f0 < min_periods:
        raise FitError(f"series spans only {span * f0:.2f} periods (< {min_periods})")

    # linear amplitudes at f0 as the starting point
    tt = t - t.min()
    basis = np.column_stack([np.ones_like(tt), np.cos(2 * np.pi * f0 * tt),
                             np.sin(2 * np.pi * f0 * tt)])
    lin = np.linalg.lstsq(basis, y, rcond=None)[0]
    p0 = np.array([*lin, f0])

    method = "lsq"
    try:
        sol = least_squares(lambda p: _model(p, tt) - y, p0, method="lm", x_scale="jac")
        p = sol.x
        if not sol.success or abs(p[3] - f0) > 1.0 / span:
            raise FitError("refinement left the spectral peak")
        jac = sol.jac
    except (FitError, np.linalg.LinAlgError, ValueError) as exc:
        log.warning("sinusoid refinement failed (%s); using spectral estimate", exc)
        p, method, jac = p0, "spectral", None

    res = _model(p, tt) - y
    dof = max(tt.size - 4, 1)
    s2 = float(np.sum(res**2) / dof)
    sigma = np.nan
    if jac is not None:
        try:
            cov = np.linalg.inv(jac.T @ jac) * s2
            sigma = float(np.sqrt(cov[3, 3]))
        except np.linalg.LinAlgError:
            pass
    c, a, b, f = p
    amp = float(np.hypot(a, b))
    # phase referenced to t = t.min()
    phase = float(np.arctan2(-b, a))
    return SinusoidFit(float(f), amp, phase, float(c), float(np.sqrt(np.mean(res**2))),
                       sigma, method)


@dataclass
class FrequencyFit:
    distance_frequency: float    # Hz
    soliton_frequency: float     # Hz, distance_frequency / 2 for pairs
    peak_amplitude: float        # um, half the distance oscillation amplitude
    rms_amplitude: float         # um, peak_amplitude / sqrt(2)
    outer_turning_point: float   # um, largest distance from centre, (d0 + A)/2
    residual_rms: float          # um
    uncertainty: float           # Hz, 1-sigma on soliton_frequency
    method: str
    n_samples: int


def fit_frequency(track, min_samples=10):
    """Oscillation frequency of the pair distance; the single-soliton
    frequency is half of it."""
    ok = track.valid & np.isfinite(track.distance)
    if ok.sum() < min_samples:
        raise FitError(f"only {ok.sum()} usable frames (need {min_samples})")
    fit = fit_sinusoid(track.times[ok], track.distance[ok], min_samples=min_samples)
    nu_d = fit.frequency * 1e3
    half_amp = fit.amplitude / 2
    return FrequencyFit(
        distance_frequency=nu_d,
        soliton_frequency=nu_d / 2,
        peak_amplitude=half_amp,
        rms_amplitude=half_amp / np.sqrt(2),
        outer_turning_point=(fit.offset + fit.amplitude) / 2,
        residual_rms=fit.residual_rms,
        uncertainty=fit.frequency_sigma * 1e3 / 2,
        method=fit.method,
        n_samples=int(ok.sum()),
    )


def fit_single_frequency(times_ms, positions, min_samples=10):
    """Frequency of one soliton's position z(t), fitted directly."""
    fit = fit_sinusoid(times_ms, positions, min_samples=min_samples)
    nu = fit.frequency * 1e3
    ok = np.isfinite(positions)
    return FrequencyFit(
        distance_frequency=nu,
        soliton_frequency=nu,
        peak_amplitude=fit.amplitude,
        rms_amplitude=fit.amplitude / np.sqrt(2),
        outer_turning_point=abs(fit.offset) + fit.amplitude,
        residual_rms=fit.residual_rms,
        uncertainty=fit.frequency_sigma * 1e3,
        method=fit.method,
        n_samples=int(ok.sum()),
    )


# --- imaging resolution -----------------------------------------------------

def _gaussian_blur(data, sigma, spacing, axis):
    if sigma <= 0:
        return data
    s = sigma / spacing
    half = max(1, int(np.ceil(4 * s)))
    x = np.arange(-half, half + 1)
    kernel = np.exp(-0.5 * (x / s) ** 2)
    kernel /= kernel.sum()
    num = convolve1d(data, kernel, axis=axis, mode="constant", cval=0.0)
    shape = [1] * data.ndim
    shape[axis] = data.shape[axis]
    ones = np.ones(data.shape[axis]).reshape(shape)
    den = convolve1d(ones, kernel, axis=axis, mode="constant", cval=0.0)
    return num / den


def apply_resolution(carpet, sigma_z, sigma_t):
    """Gaussian blur with std ``sigma_z`` (um) along z and ``sigma_t`` (ms)
    along t. Kernels are truncated at 4 sigma and renormalised at the edges."""
    if sigma_z < 0 or sigma_t < 0:
        raise ValueError("resolution widths must be >= 0")
    frames = carpet.frames
    if sigma_z > 0:
        frames = _gaussian_blur(frames, sigma_z, carpet.dz, axis=1)
    if sigma_t > 0:
        steps = np.diff(carpet.times)
        if steps.size and np.ptp(steps) > 1e-9 * steps.mean():
            raise ValueError("temporal blur needs uniformly spaced frames")
        frames = _gaussian_blur(frames, sigma_t, steps.mean(), axis=0)
    return DensityCarpet(carpet.z.copy(), carpet.times.copy(), np.maximum(frames, 0.0))
