import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import minimize_scalar

from darksol.tracking import (DensityCarpet, FitError, TrackingOptions, TrackResult,
                              apply_resolution, detect_solitons, dip_width, find_dips,
                              fit_frequency, fit_single_frequency, fit_sinusoid, track_pair,
                              track_single)

Z = np.linspace(-15, 15, 601)[:-1]
DZ = Z[1] - Z[0]
XI = 0.35
R = 10.0


def tf(z):
    return np.clip(1 - (z / R) ** 2, 0, None)


def profile(z, centres, xi=XI, depth=1.0):
    n = tf(z)
    for c in centres:
        n = n * (1 - depth / np.cosh(np.clip((z - c) / xi, -300, 300)) ** 2)
    return n


def fine_grid_profile(centres, xi):
    # finer grid so that the sub-grid oracle is meaningful at ~4 points per xi
    z = np.linspace(-15, 15, 2**12 + 1)[:-1]
    return z, profile(z, centres, xi)


# --- detection --------------------------------------------------------------

@pytest.mark.criterion(8)
@settings(max_examples=40, deadline=None)
@given(centre=st.floats(-5.0, 5.0), depth=st.floats(0.3, 1.0))
def test_subgrid_position_oracle(centre, depth):
    z = np.linspace(-15, 15, 2**10 + 1)[:-1]
    dz = z[1] - z[0]
    xi = 4 * dz
    n = profile(z, [centre], xi, depth)
    truth = minimize_scalar(lambda x: profile(np.array([x]), [centre], xi, depth)[0],
                            bounds=(centre - xi, centre + xi), method="bounded",
                            options={"xatol": 1e-10}).x
    found = detect_solitons(n, z)
    assert found.size == 1
    assert abs(found[0] - truth) < dz / 10


def test_paper_like_dip_at_1_7():
    z, n = fine_grid_profile([1.7], 4 * 30 / 2**12)
    dz = z[1] - z[0]
    truth = minimize_scalar(lambda x: profile(np.array([x]), [1.7], 4 * dz)[0],
                            bounds=(1.6, 1.8), method="bounded", options={"xatol": 1e-12}).x
    assert abs(detect_solitons(n, z)[0] - truth) < dz / 10


def test_symmetric_pair_is_centred():
    pos = detect_solitons(profile(Z, [-2.3, 2.3]), Z)
    assert pos.size == 2
    assert abs(pos.mean()) < DZ


def test_no_dip_gives_empty():
    assert detect_solitons(tf(Z), Z).size == 0
    shallow = profile(Z, [1.0], depth=0.1)
    assert detect_solitons(shallow, Z).size == 0


def test_edge_dips_outside_window_ignored():
    pos = detect_solitons(profile(Z, [9.5]), Z)
    assert pos.size == 0


def test_flat_frame_rejected():
    with pytest.raises(ValueError, match="degenerate"):
        find_dips(np.ones_like(Z), Z)
    with pytest.raises(ValueError):
        find_dips(np.zeros_like(Z), Z)


def test_dip_width_black_soliton():
    # half-depth full width of tanh^2 is 2 artanh(1/sqrt2) xi = 1.763 xi
    z = np.linspace(-15, 15, 2**14 + 1)[:-1]
    n = np.tanh(z / 0.3) ** 2
    w, bg = dip_width(n, z, 0.0)
    assert bg == pytest.approx(1.0, abs=1e-3)
    assert w == pytest.approx(1.763 * 0.3, rel=0.01)


# --- pair tracking ----------------------------------------------------------

def pair_carpet(z0=3.0, nu_d=0.08, times=None, crossing=False):
    times = np.arange(0, 100, 0.5) if times is None else times
    frames = []
    for t in times:
        if crossing:
            a = z0 * np.cos(np.pi * nu_d * t)
        else:
            a = 0.5 * (2 * z0 + 2 * np.cos(2 * np.pi * nu_d * t) - 2) / 1.0
        frames.append(profile(Z, [-a, a]))
    return DensityCarpet(Z, times, np.array(frames))


def test_pair_distance_at_t0():
    c = pair_carpet(z0=3.0)
    tr = track_pair(c)
    assert tr.distance[0] == pytest.approx(6.0, abs=2 * DZ / 10)


def test_pair_track_label_free_under_crossing():
    c = pair_carpet(z0=3.0, crossing=True)
    tr = track_pair(c, TrackingOptions(min_pair_separation_um=4 * XI))
    d = tr.pair[:, 1] - tr.pair[:, 0]
    assert np.all(d[np.isfinite(d)] >= 0)
    assert any(f != "ok" for f in tr.flags)          # collisions are flagged
    assert np.all(np.isnan(tr.distance[~tr.valid]))


@pytest.mark.parametrize("follow", [True, False])
def test_pair_frequency(follow):
    c = pair_carpet(z0=3.0, nu_d=0.08)
    fit = fit_frequency(track_pair(c, TrackingOptions(follow_pair=follow)))
    assert fit.distance_frequency == pytest.approx(80.0, rel=1e-3)
    assert fit.soliton_frequency == fit.distance_frequency / 2


def test_dominant_pair_ignores_faint_outer_solitons():
    frames = [profile(Z, [-2.0, 2.0]) * (1 - 0.3 / np.cosh((Z - 5) / XI) ** 2)
              * (1 - 0.3 / np.cosh((Z + 5) / XI) ** 2) for _ in range(12)]
    tr = track_pair(DensityCarpet(Z, np.arange(12.0), np.array(frames)))
    assert np.allclose(tr.pair[0], [-2.0, 2.0], atol=DZ)
    assert tr.counts[0] == 4


def test_track_single():
    times = np.arange(0, 60, 0.5)
    frames = np.array([profile(Z, [1.0 * np.cos(2 * np.pi * 0.04 * t)]) for t in times])
    pos = track_single(DensityCarpet(Z, times, frames))
    fit = fit_single_frequency(times, pos)
    assert fit.soliton_frequency == pytest.approx(40.0, rel=1e-3)
    assert fit.peak_amplitude == pytest.approx(1.0, abs=0.01)


def test_carpet_validation():
    with pytest.raises(ValueError):
        DensityCarpet(Z, np.array([0.0, 0.0]), np.zeros((2, Z.size)))
    with pytest.raises(ValueError):
        DensityCarpet(Z, np.array([0.0]), -np.ones((1, Z.size)))
    with pytest.raises(ValueError):
        DensityCarpet(Z, np.array([0.0, 1.0]), np.zeros((3, Z.size)))


# --- frequency fitting ------------------------------------------------------

def synthetic_track(d, t):
    pair = np.column_stack([-d / 2, d / 2])
    return TrackResult(t, [p for p in pair], pair, d.copy(), ["ok"] * t.size)


def test_fit_synthetic_exact():
    t = np.arange(0, 100, 1.0)   # ms, 1 kHz sampling
    d = 10 + 3 * np.cos(2 * np.pi * 0.075 * t)
    fit = fit_frequency(synthetic_track(d, t))
    assert fit.distance_frequency == pytest.approx(75.0, rel=1e-3)
    assert fit.soliton_frequency == pytest.approx(37.5, rel=1e-3)
    assert fit.peak_amplitude == pytest.approx(1.5, rel=1e-6)
    assert fit.rms_amplitude == pytest.approx(1.5 / np.sqrt(2), rel=1e-6)
    assert fit.outer_turning_point == pytest.approx(6.5, rel=1e-6)
    assert fit.method == "lsq"


@pytest.mark.criterion(8)
def test_fit_monte_carlo_unbiased():
    rng = np.random.default_rng(12345)
    t = np.arange(0, 100, 1.0)
    est = []
    for _ in range(100):
        phase = rng.uniform(0, 2 * np.pi)
        d = 10 + 3 * np.cos(2 * np.pi * 0.075 * t + phase) + rng.normal(0, 0.3, t.size)
        est.append(fit_frequency(synthetic_track(d, t)).distance_frequency)
    est = np.array(est)
    assert np.all(np.abs(est / 75 - 1) < 0.01)
    assert abs(est.mean() / 75 - 1) < 0.002


def test_fit_uncertainty_is_calibrated():
    rng = np.random.default_rng(7)
    t = np.arange(0, 100, 1.0)
    pulls = []
    for _ in range(100):
        d = 10 + 3 * np.cos(2 * np.pi * 0.075 * t + 0.3) + rng.normal(0, 0.3, t.size)
        f = fit_frequency(synthetic_track(d, t))
        pulls.append((f.soliton_frequency - 37.5) / f.uncertainty)
    assert 0.7 < np.std(pulls) < 1.3


def test_fit_constant_series_fails():
    t = np.arange(0, 100, 1.0)
    with pytest.raises(FitError, match="no oscillation"):
        fit_frequency(synthetic_track(np.full(t.size, 4.0), t))


def test_fit_needs_ten_samples():
    t = np.arange(9.0)
    with pytest.raises(FitError):
        fit_frequency(synthetic_track(np.cos(t), t))


def test_fit_needs_enough_periods():
    t = np.linspace(0, 10, 50)
    with pytest.raises(FitError, match="periods"):
        fit_sinusoid(t, np.cos(2 * np.pi * 0.05 * t))


# --- resolution -------------------------------------------------------------

def test_zero_blur_is_identity():
    c = pair_carpet()
    out = apply_resolution(c, 0.0, 0.0)
    assert np.array_equal(out.frames, c.frames)


def test_blur_conserves_atom_number():
    c = pair_carpet()
    out = apply_resolution(c, 1.0, 0.0)
    before = c.frames.sum(axis=1)
    assert np.max(np.abs(out.frames.sum(axis=1) / before - 1)) < 1e-6
    # with equal atom numbers per frame the temporal blur keeps them too
    same = DensityCarpet(c.z, c.times, c.frames / before[:, None])
    out = apply_resolution(same, 1.0, 2.0)
    assert np.max(np.abs(out.frames.sum(axis=1) - 1)) < 1e-6


def test_point_dip_blurs_to_sigma():
    z = np.linspace(-20, 20, 4001)
    n = np.ones_like(z)
    n[2000] = 0.0   # width dz << sigma
    c = DensityCarpet(z, np.array([0.0]), n[None, :])
    sigma = 1.0
    hole = 1 - apply_resolution(c, sigma, 0.0).frames[0]
    std = np.sqrt(np.sum(hole * z**2) / np.sum(hole))
    assert std == pytest.approx(sigma, rel=0.1)


def test_blur_creates_no_deeper_minima():
    c = pair_carpet()
    out = apply_resolution(c, 1.0, 0.0)
    for raw, blurred in zip(c.frames, out.frames):
        assert len(find_dips(blurred, Z, TrackingOptions(min_contrast=0.0))) <= \
            len(find_dips(raw, Z, TrackingOptions(min_contrast=0.0)))
        interior = np.abs(Z) < 0.7 * R
        assert blurred[interior].min() >= raw[interior].min() - 1e-12


def test_temporal_blur_needs_uniform_frames():
    frames = np.ones((3, Z.size))
    c = DensityCarpet(Z, np.array([0.0, 1.0, 3.0]), frames)
    with pytest.raises(ValueError, match="uniform"):
        apply_resolution(c, 0.0, 1.0)
    with pytest.raises(ValueError):
        apply_resolution(c, -1.0, 0.0)
