"""Reproducible pipelines: ground state, merge experiment, single-soliton
frequency, two-soliton amplitude sweep and the four-curve frequency table.

Each ``run_*`` function takes an ``ExperimentConfig`` and, optionally, an
output directory. With a directory it writes CSV tables, a resolved-config
echo and a JSON manifest; without one it only returns results.
"""
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field
import json
import logging
import math
from pathlib import Path
import time

import numpy as np
from scipy.constants import atomic_mass

from . import __version__
from .config import config_from_dict, write_echo
from .core import (Wavefunction, build_grid, density, evolve_real_time,
                   ground_state_imaginary_time, max_energy_scale, stable_timestep)
from .particle import ParticleParams, frequency_vs_amplitude
from .physics import (LatticeConfig, RampConfig, TrapConfig, critical_distance,
                      double_well_minima, gpe1d_thomas_fermi_mu, harmonic_potential,
                      healing_length, imprint_soliton, imprint_soliton_pair,
                      lattice_potential, make_nonlinearity, ramp_sample, sound_speed,
                      thomas_fermi_mu, thomas_fermi_radius)
from .tracking import (DensityCarpet, FitError, TrackingOptions, apply_resolution,
                       dip_width, fit_frequency, fit_single_frequency, track_pair, track_single)
from .units import UnitSystem

log = logging.getLogger(__name__)

FAILURE_MARKER = "FAILED"


# --- output handling --------------------------------------------------------

class RunOutput:
    """Collects per-stage timings and writes artifacts plus a manifest.

    With ``directory=None`` every write is a no-op, so pipelines can be used
    as plain library calls.
    """

    def __init__(self, directory, pipeline, cfg, config_path=None):
        self.directory = None if directory is None else Path(directory)
        self.pipeline = pipeline
        self.cfg = cfg
        self.config_path = None if config_path is None else str(config_path)
        self.timings = {}
        self.files = []
        if self.directory is not None:
            self.directory.mkdir(parents=True, exist_ok=True)
            stale = self.directory / FAILURE_MARKER
            if stale.exists():
                stale.unlink()
            self.files.append(write_echo(cfg, self.directory).name)

    @contextmanager
    def stage(self, name):
        start = time.perf_counter()
        try:
            yield
        finally:
            self.timings[name] = self.timings.get(name, 0.0) + time.perf_counter() - start

    def _path(self, name):
        self.files.append(name)
        return self.directory / name

    def csv(self, name, columns, rows):
        if self.directory is None:
            return
        data = np.asarray(rows, dtype=float).reshape(-1, len(columns))
        np.savetxt(self._path(name), data, delimiter=",", fmt="%.12g",
                   header=",".join(columns), comments="# ")

    def carpet(self, name, carpet):
        """Matrix CSV: first row z (um), first column t (ms)."""
        if self.directory is None:
            return
        m = np.empty((carpet.times.size + 1, carpet.z.size + 1))
        m[0, 0] = np.nan
        m[0, 1:] = carpet.z
        m[1:, 0] = carpet.times
        m[1:, 1:] = carpet.frames
        np.savetxt(self._path(name), m, delimiter=",", fmt="%.12g",
                   header="first row: z [um]; first column: t [ms]; entries: density [atoms/um]",
                   comments="# ")

    def json(self, name, data):
        if self.directory is None:
            return
        self._path(name).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n",
                                    encoding="utf-8")

    def _manifest(self, status, extra=None):
        manifest = {
            "pipeline": self.pipeline,
            "status": status,
            "code_version": __version__,
            "inputs": {"config_path": self.config_path, "config": self.cfg.to_dict()},
            "unit_system": _units(self.cfg).describe(),
            "timings_s": self.timings,
            "outputs": sorted(set(self.files)),
        }
        if extra:
            manifest.update(extra)
        (self.directory / "manifest.json").write_text(
            json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")

    def finish(self):
        if self.directory is not None:
            self._manifest("ok")

    def fail(self, exc):
        if self.directory is None:
            return
        msg = f"{type(exc).__name__}: {exc}"
        (self.directory / FAILURE_MARKER).write_text(msg + "\n", encoding="utf-8")
        self._manifest("failed", {"error": msg})


@contextmanager
def _guarded(out):
    try:
        yield out
    except BaseException as exc:
        out.fail(exc)
        raise
    out.finish()


# --- simulation setup -------------------------------------------------------

def _units(cfg):
    return UnitSystem(mass=cfg.trap.mass_amu * atomic_mass)


def trap_config(cfg, nu_z=None, nu_perp=None):
    t = cfg.trap
    units = _units(cfg)
    return TrapConfig(t.nu_z if nu_z is None else nu_z,
                      t.nu_perp if nu_perp is None else nu_perp,
                      t.atom_number, t.scattering_length_nm, units.mass)


def tf_scales(trap, kind):
    """(mu, R_TF, xi) in internal units from the Thomas-Fermi profile."""
    units = trap.units
    G = make_nonlinearity(trap, kind)
    w_z = units.hz_to_omega(trap.nu_z)
    # the cubic GPE overestimates the radius, so its box contains the cloud
    R_gpe = thomas_fermi_radius(gpe1d_thomas_fermi_mu(G.g1(), w_z), w_z)
    z = np.linspace(-1.5 * R_gpe, 1.5 * R_gpe, 16385)
    mu = thomas_fermi_mu(G, 0.5 * w_z**2 * z**2, z[1] - z[0])
    return mu, thomas_fermi_radius(mu, w_z), healing_length(mu)


def _next_pow2(n):
    return 1 << max(8, int(math.ceil(math.log2(max(n, 1)))))


def make_grid(cfg, traps):
    """Grid from the config; 'auto' sizes it to cover every trap in ``traps``."""
    g = cfg.grid
    R = xi = None
    if g.box_length_um == "auto" or g.n_points == "auto":
        scales = [tf_scales(t, cfg.model.kind) for t in traps]
        R = max(s[1] for s in scales)
        xi = min(s[2] for s in scales)
    box = g.box_tf_radii * R if g.box_length_um == "auto" else float(g.box_length_um)
    if g.n_points == "auto":
        n = _next_pow2(box / (xi / g.points_per_healing_length))
    else:
        n = g.n_points
    return build_grid(n, box)


@dataclass
class GroundState:
    psi: Wavefunction
    mu: float
    trap: TrapConfig
    nonlinearity: object
    potential: np.ndarray

    @property
    def units(self):
        return self.trap.units

    @property
    def omega_z(self):
        return self.units.hz_to_omega(self.trap.nu_z)

    @property
    def radius(self):
        return thomas_fermi_radius(self.mu, self.omega_z)

    def summary(self):
        u = self.units
        return {
            "mu_hz": u.energy_to_hz(self.mu),
            "mu_over_hbar_omega_z": self.mu / self.omega_z,
            "healing_length_um": u.length_to_um(healing_length(self.mu)),
            "sound_speed_mm_per_s": u.speed_to_mm_per_s(sound_speed(self.mu)),
            "tf_radius_um": u.length_to_um(self.radius),
            "n_points": self.psi.grid.n_points,
            "box_length_um": u.length_to_um(self.psi.grid.box_length),
        }


def solve_ground_state(cfg, grid, trap, potential, nonlinearity):
    psi, mu = ground_state_imaginary_time(
        grid, potential, nonlinearity, tol=cfg.time.ground_state_tol,
        energy_scale=trap.units.hz_to_omega(trap.nu_z))
    return GroundState(psi, mu, trap, nonlinearity, potential)


def harmonic_ground_state(cfg, grid=None):
    trap = trap_config(cfg)
    grid = grid or make_grid(cfg, [trap])
    V = harmonic_potential(grid, trap.nu_z, trap.units)
    G = make_nonlinearity(trap, cfg.model.kind)
    return solve_ground_state(cfg, grid, trap, V, G)


def evolve_carpet(cfg, psi0, potential, nonlinearity, duration_ms, interval_ms,
                  atom_number, units, probe_times=()):
    """Real-time evolution sampled every ``interval_ms``; frames in atoms/um.

    The step obeys the phase and kinetic bounds (evaluated with the initial
    density at t=0 and at every internal time in ``probe_times``) and divides
    the snapshot interval exactly.
    """
    ts = cfg.time
    interval = units.ms_to_time(interval_ms)
    if ts.dt_us is not None:
        dt0 = units.ms_to_time(ts.dt_us * 1e-3)
    else:
        e_max = max(max_energy_scale(psi0, potential, nonlinearity, t)
                    for t in (psi0.time, *probe_times))
        dt0 = stable_timestep(psi0.grid, e_max, ts.phase_safety, ts.kinetic_phase)
    sub = max(1, int(math.ceil(interval / dt0 - 1e-9)))
    dt = interval / sub
    n_frames = int(round(duration_ms / interval_ms))
    frames = []

    def observe(psi, step):
        frames.append(atom_number * density(psi))

    evolve_real_time(psi0, potential, nonlinearity, dt, n_frames * sub, observer=observe,
                     observe_every=sub, phase_safety=ts.phase_safety)
    times = np.arange(n_frames + 1) * interval_ms
    z_um = units.length_to_um(psi0.grid.z)
    return DensityCarpet(z_um, times, np.array(frames))


def tracking_options(cfg):
    return TrackingOptions(**asdict(cfg.tracking))


def nu_tf1d(cfg):
    return cfg.trap.nu_z / math.sqrt(2)


# --- ground state -----------------------------------------------------------

def run_ground_state(cfg, out_dir=None, config_path=None):
    out = RunOutput(out_dir, "ground-state", cfg, config_path)
    with _guarded(out):
        with out.stage("ground_state"):
            gs = harmonic_ground_state(cfg)
        u = gs.units
        n = density(gs.psi)
        out.csv("ground_state.csv",
                ["z [um]", "density [atoms/um]", "potential [Hz]"],
                np.column_stack([u.length_to_um(gs.psi.grid.z), gs.trap.atom_number * n,
                                 u.energy_to_hz(gs.potential)]))
        out.json("summary.json", gs.summary())
    return gs


# --- single soliton ---------------------------------------------------------

@dataclass
class SingleResult:
    nu_1s_hz: float
    ratio: float
    fit: object
    ground: GroundState
    z0_um: float
    carpet: DensityCarpet = field(repr=False)
    positions: np.ndarray = field(repr=False)

    @property
    def mu(self):
        return self.ground.mu

    @property
    def mu_hz(self):
        return self.ground.units.energy_to_hz(self.ground.mu)


def single_duration_ms(cfg, periods=5.5):
    """Evolve at least ``periods`` oscillations at the TF1D frequency."""
    return max(cfg.sweep.evolve_ms, periods * 1e3 / nu_tf1d(cfg))


def simulate_single(cfg, ground=None):
    gs = ground or harmonic_ground_state(cfg)
    u = gs.units
    z0 = cfg.sweep.single_offset_fraction * gs.radius
    psi0 = imprint_soliton(gs.psi, z0, 0.0, gs.mu)
    carpet = evolve_carpet(cfg, psi0, gs.potential, gs.nonlinearity, single_duration_ms(cfg),
                           cfg.time.snapshot_interval_ms, gs.trap.atom_number, u)
    positions = track_single(carpet, tracking_options(cfg))
    fit = fit_single_frequency(carpet.times, positions)
    return SingleResult(fit.soliton_frequency, fit.soliton_frequency / nu_tf1d(cfg), fit, gs,
                        u.length_to_um(z0), carpet, positions)


def _single_summary(res):
    return {
        "nu_1s_hz": res.nu_1s_hz,
        "ratio_to_tf1d": res.ratio,
        "nu_tf1d_hz": res.nu_1s_hz / res.ratio,
        "uncertainty_hz": res.fit.uncertainty,
        "fit_method": res.fit.method,
        "imprint_offset_um": res.z0_um,
        "mu_hz": res.mu_hz,
        **{f"ground_{k}": v for k, v in res.ground.summary().items()},
    }


def run_single_soliton_frequency(cfg, out_dir=None, config_path=None):
    out = RunOutput(out_dir, "single-freq", cfg, config_path)
    with _guarded(out):
        with out.stage("ground_state"):
            gs = harmonic_ground_state(cfg)
        with out.stage("evolve_track_fit"):
            res = simulate_single(cfg, gs)
        out.csv("single_track.csv", ["t [ms]", "z_soliton [um]"],
                np.column_stack([res.carpet.times, res.positions]))
        out.json("summary.json", _single_summary(res))
    return res


# --- two-soliton sweep ------------------------------------------------------

@dataclass
class SweepRow:
    requested_um: float
    measured_um: float
    z0_um: float
    nu_s_hz: float
    ratio: float
    uncertainty_hz: float
    matched: bool
    refinements: int
    status: str


def _measure(fit, kind):
    return fit.outer_turning_point if kind == "peak" else fit.rms_amplitude


def _pair_fit(cfg, gs, z0_um):
    u = gs.units
    psi0 = imprint_soliton_pair(gs.psi, u.um_to_length(z0_um), 0.0, gs.mu)
    carpet = evolve_carpet(cfg, psi0, gs.potential, gs.nonlinearity, cfg.sweep.evolve_ms,
                           cfg.time.snapshot_interval_ms, gs.trap.atom_number, u)
    return fit_frequency(track_pair(carpet, tracking_options(cfg)))


def match_amplitude(cfg, gs, target_um):
    """Secant search on the imprint offset until the measured amplitude is
    within the relative tolerance of ``target_um``."""
    s = cfg.sweep
    kind = s.amplitude_kind
    z = target_um if kind == "peak" else 2 * math.sqrt(2) * target_um
    history = []
    best = None
    for it in range(s.max_refinements + 1):
        fit = _pair_fit(cfg, gs, z)
        m = _measure(fit, kind)
        history.append((z, m))
        if best is None or abs(m - target_um) < abs(best[1] - target_um):
            best = (z, m, fit, it)
        if abs(m - target_um) <= s.amplitude_tolerance * target_um:
            return best[:3] + (True, it)
        if len(history) == 1 or history[-1][1] == history[-2][1]:
            z_new = z * target_um / m
        else:
            (z1, m1), (z2, m2) = history[-2], history[-1]
            z_new = z2 + (target_um - m2) * (z2 - z1) / (m2 - m1)
        # keep the step sane: stay positive, at most a factor 2 change
        z = float(np.clip(z_new, 0.5 * z, 2.0 * z))
    return best[:3] + (False, s.max_refinements)


def _sweep_point(args):
    cfg_dict, psi_values, mu, target = args
    cfg = config_from_dict(cfg_dict)
    trap = trap_config(cfg)
    grid = make_grid(cfg, [trap])
    gs = GroundState(Wavefunction(grid, psi_values), mu, trap,
                     make_nonlinearity(trap, cfg.model.kind),
                     harmonic_potential(grid, trap.nu_z, trap.units))
    return sweep_point(cfg, gs, target)


def sweep_point(cfg, gs, target):
    try:
        z0, m, fit, matched, it = match_amplitude(cfg, gs, target)
    except FitError as exc:
        log.warning("amplitude %.3g um: %s", target, exc)
        nan = float("nan")
        return SweepRow(target, nan, nan, nan, nan, nan, False, 0, "fit_failed")
    return SweepRow(target, m, z0, fit.soliton_frequency,
                    fit.soliton_frequency / nu_tf1d(cfg), fit.uncertainty, matched, it,
                    "ok" if matched else "unmatched")


def sweep_rows(cfg, gs, amplitudes):
    """Sweep points in amplitude order; concurrent when ``sweep.workers > 1``."""
    workers = min(cfg.sweep.workers, len(amplitudes))
    if workers <= 1:
        return [sweep_point(cfg, gs, a) for a in amplitudes]
    cfg_dict = cfg.to_dict()
    jobs = [(cfg_dict, gs.psi.values, gs.mu, a) for a in amplitudes]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_sweep_point, jobs))


@dataclass
class SweepResult:
    rows: list
    single: SingleResult


SWEEP_COLUMNS = ["amplitude_requested [um]", "amplitude_measured [um]", "z0 [um]",
                 "nu_s [Hz]", "nu_s/(nu_z/sqrt2) [1]", "uncertainty [Hz]",
                 "matched [0/1]", "refinements [1]", "is_single_reference [0/1]"]


def _sweep_table(result):
    table = []
    for r in result.rows:
        table.append([r.requested_um, r.measured_um, r.z0_um, r.nu_s_hz, r.ratio,
                      r.uncertainty_hz, float(r.matched), r.refinements, 0.0])
    s = result.single
    table.append([s.z0_um, s.fit.outer_turning_point, s.z0_um, s.nu_1s_hz, s.ratio,
                  s.fit.uncertainty, 1.0, 0, 1.0])
    return table


def _sweep(cfg, out, amplitudes):
    with out.stage("ground_state"):
        gs = harmonic_ground_state(cfg)
    with out.stage("single_soliton"):
        single = simulate_single(cfg, gs)
    with out.stage("pair_sweep"):
        rows = sweep_rows(cfg, gs, amplitudes)
    result = SweepResult(rows, single)
    out.csv("sweep.csv", SWEEP_COLUMNS, _sweep_table(result))
    return result


def run_sweep(cfg, out_dir=None, config_path=None):
    out = RunOutput(out_dir, "sweep", cfg, config_path)
    with _guarded(out):
        result = _sweep(cfg, out, cfg.sweep.amplitudes_um)
        out.json("summary.json", {
            "single": _single_summary(result.single),
            "unmatched_amplitudes_um": [r.requested_um for r in result.rows if not r.matched],
        })
    return result


# --- four-curve frequency table ---------------------------------------------

FIG2C_COLUMNS = ["amplitude [um]", "nu_tf1d [Hz]", "nu_single_npse [Hz]",
                 "nu_pair_npse [Hz]", "nu_particle_model [Hz]"]


@dataclass
class Fig2cResult:
    table: np.ndarray      # columns as FIG2C_COLUMNS
    sweep: SweepResult


def particle_curve(single, amplitudes_um, kind):
    """Particle-model frequencies (Hz) calibrated by the single-soliton run."""
    u = single.ground.units
    params = ParticleParams.from_si(single.nu_1s_hz, single.mu_hz, u)
    out = frequency_vs_amplitude(params, [u.um_to_length(a) for a in amplitudes_um],
                                 amplitude_kind=kind)
    return out[:, 1] / u.time_unit


def run_fig2c(cfg, out_dir=None, config_path=None):
    out = RunOutput(out_dir, "fig2c", cfg, config_path)
    with _guarded(out):
        amplitudes = cfg.fig2c.amplitudes_um or cfg.sweep.amplitudes_um
        sweep = _sweep(cfg, out, amplitudes)
        rows = [r for r in sweep.rows if np.isfinite(r.nu_s_hz)]
        measured = [r.measured_um for r in rows]
        with out.stage("particle_model"):
            model = particle_curve(sweep.single, measured, cfg.sweep.amplitude_kind)
        table = np.array([[a, nu_tf1d(cfg), sweep.single.nu_1s_hz, r.nu_s_hz, nm]
                          for a, r, nm in zip(measured, rows, model)])
        out.csv("fig2c.csv", FIG2C_COLUMNS, table)
        out.json("summary.json", {
            "single": _single_summary(sweep.single),
            "amplitude_kind": cfg.sweep.amplitude_kind,
            "max_model_deviation": float(np.max(np.abs(table[:, 4] / table[:, 3] - 1)))
            if table.size else None,
        })
    return Fig2cResult(table, sweep)


# --- merge experiment -------------------------------------------------------

@dataclass
class MergeResult:
    carpet: DensityCarpet
    blurred: DensityCarpet
    track: object
    fit: object              # FrequencyFit or None if the fit failed
    summary: dict


def _merge_schedule(cfg):
    t = cfg.trap
    if t.ramp is None:
        return RampConfig((t.nu_z, t.nu_perp), (t.nu_z, t.nu_perp), 0.0)
    r = t.ramp
    return RampConfig((r.initial_nu_z, r.initial_nu_perp), (t.nu_z, t.nu_perp), r.duration_ms)


def merge_regime(cfg):
    """Well distance against the critical distance of the initial trap."""
    ramp = _merge_schedule(cfg)
    m = cfg.merge
    units = _units(cfg)
    nu_z0 = ramp.initial[0]
    left, right = double_well_minima(nu_z0, m.barrier_depth_hz, m.lattice_spacing_um,
                                     m.lattice_offset_um, units)
    d = right - left if m.barrier_depth_hz > 0 else 0.0
    d_c = critical_distance(cfg.trap.atom_number, cfg.trap.scattering_length_nm, nu_z0,
                            units.mass)
    return {"well_distance_um": d, "critical_distance_um": d_c,
            "regime": "soliton" if d < d_c else "linear"}


# a black soliton is 1.76 healing lengths wide at half depth; linear
# interference fringes are narrower than the local healing length
SOLITON_WIDTH_RATIO = 1.2


def width_over_healing_length(carpet, track, nonlinearity, atom_number, units, opts):
    """Median over tracked dips of half-depth width / local healing length,
    with the healing length 1/sqrt(G(n)) taken at the background density."""
    ratios = []
    for i in np.flatnonzero(track.valid):
        for p in track.pair[i]:
            w, bg = dip_width(carpet.frames[i], carpet.z, p, opts.background_window_um)
            g = float(nonlinearity(np.array([bg / atom_number]), 0.0)[0])
            if g > 0:
                ratios.append(units.um_to_length(w) * math.sqrt(g))
    return float(np.median(ratios)) if ratios else float("nan")


def _finite_or_none(x):
    return float(x) if np.isfinite(x) else None


def _merge_summary(cfg, carpet, track, fit, width_ratio):
    counts = track.counts
    late = carpet.times >= _merge_schedule(cfg).duration_ms
    late_counts = counts[late]
    nonzero = late_counts[late_counts > 0]
    values, freq = np.unique(nonzero, return_counts=True) if nonzero.size else ([], [])
    modal = int(values[np.argmax(freq)]) if len(values) else 0
    centre = np.mean(track.pair[track.valid].mean(axis=1)) if track.valid.any() else np.nan
    with_pair = int(track.valid.sum())
    formed = bool(with_pair >= 0.5 * carpet.times.size and width_ratio >= SOLITON_WIDTH_RATIO)
    return {
        "frames": int(carpet.times.size),
        "frames_with_pair": with_pair,
        "modal_soliton_count": modal,
        "even_count_fraction": float(np.mean(nonzero % 2 == 0)) if nonzero.size else 0.0,
        "max_soliton_count": int(counts.max()) if counts.size else 0,
        "mean_pair_centre_um": _finite_or_none(centre),
        "width_over_healing_length": _finite_or_none(width_ratio),
        "soliton_pair_formed": formed,
        "fit": None if fit is None else {k: float(v) if isinstance(v, (float, np.floating)) else v
                                         for k, v in asdict(fit).items()},
        **merge_regime(cfg),
    }


def run_merge(cfg, out_dir=None, config_path=None):
    out = RunOutput(out_dir, "merge", cfg, config_path)
    with _guarded(out):
        m = cfg.merge
        ramp = _merge_schedule(cfg)
        nu_z0, nu_p0 = ramp.initial
        trap0 = trap_config(cfg, nu_z0, nu_p0)
        trap1 = trap_config(cfg)
        units = trap1.units
        grid = make_grid(cfg, [trap0, trap1])
        lattice = LatticeConfig(m.barrier_depth_hz, m.lattice_spacing_um, m.lattice_offset_um)
        V0 = (harmonic_potential(grid, nu_z0, units)
              + lattice_potential(grid, lattice.depth_hz, lattice.spacing_um,
                                  lattice.offset_um, units))
        with out.stage("ground_state"):
            gs = solve_ground_state(cfg, grid, trap0, V0, make_nonlinearity(trap0, cfg.model.kind))

        def schedule(t):
            return ramp_sample(max(units.time_to_ms(t), 0.0), ramp)

        def potential(t):
            return harmonic_potential(grid, schedule(t)[0], units)

        nonlin = make_nonlinearity(trap1, cfg.model.kind,
                                   omega_perp=lambda t: units.hz_to_omega(schedule(t)[1]))
        psi0 = Wavefunction(grid, gs.psi.values.copy(), 0.0)
        with out.stage("evolve"):
            carpet = evolve_carpet(cfg, psi0, potential, nonlin, m.evolve_ms,
                                   m.snapshot_interval_ms, trap1.atom_number, units,
                                   probe_times=(units.ms_to_time(ramp.duration_ms),))
        with out.stage("track_fit"):
            r = cfg.resolution
            blurred = apply_resolution(carpet, r.sigma_z_um, r.sigma_t_ms)
            track = track_pair(carpet, tracking_options(cfg))
            try:
                fit = fit_frequency(track)
            except FitError as exc:
                log.warning("merge frequency fit failed: %s", exc)
                fit = None
            ratio = width_over_healing_length(carpet, track, nonlin, trap1.atom_number, units,
                                              tracking_options(cfg))
        summary = _merge_summary(cfg, carpet, track, fit, ratio)
        out.carpet("carpet_raw.csv", carpet)
        out.carpet("carpet_blurred.csv", blurred)
        out.csv("track.csv", ["t [ms]", "n_detected [1]", "left [um]", "right [um]",
                              "distance [um]", "valid [0/1]"],
                np.column_stack([track.times, track.counts, track.pair[:, 0], track.pair[:, 1],
                                 track.distance, track.valid.astype(float)]))
        out.json("summary.json", summary)
    return MergeResult(carpet, blurred, track, fit, summary)


# --- critical distance ------------------------------------------------------

def run_critical_distance(cfg, out_dir=None, config_path=None):
    out = RunOutput(out_dir, "critical-distance", cfg, config_path)
    with _guarded(out):
        t = cfg.trap
        d_c = critical_distance(t.atom_number, t.scattering_length_nm, t.nu_z,
                                _units(cfg).mass)
        out.csv("critical_distance.csv",
                ["atom_number [1]", "scattering_length [nm]", "nu_z [Hz]",
                 "critical_distance [um]"],
                [[t.atom_number, t.scattering_length_nm, t.nu_z, d_c]])
    return d_c


PIPELINES = {
    "ground-state": run_ground_state,
    "merge": run_merge,
    "single-freq": run_single_soliton_frequency,
    "sweep": run_sweep,
    "fig2c": run_fig2c,
    "critical-distance": run_critical_distance,
}

