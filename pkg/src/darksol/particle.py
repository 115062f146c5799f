"""Effective-particle model of a trapped dark soliton or a symmetric pair.

Each soliton sits at distance z from the trap centre and moves in

    V(z, zdot) = omega_1s^2 z^2 / 2 + (mu / 2m) B^2 sech^2(2 B z / xi),
    B = sqrt(1 - zdot^2 / c^2),   c = sqrt(mu / m),   xi = hbar / sqrt(m mu)

with Lagrangian L = zdot^2/2 - V. The sech^2 term (dropped in single mode) is
the repulsion between the two solitons at +z and -z. Because V depends on
zdot, the Euler-Lagrange equation has a velocity-dependent effective mass:

    p = dL/dzdot = zdot (1 + h(u)),   h(u) = sech^2 u (1 - u tanh u),  u = 2 B z / xi
    dp/dt = -dV/dz

and E = zdot p - L is conserved. All quantities are in internal units
(hbar = m = 1).
"""
from dataclasses import dataclass
import math

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

SINGLE = "single"
PAIR = "pair"


class TrajectoryError(RuntimeError):
    pass


@dataclass(frozen=True)
class ParticleParams:
    nu_1s: float   # single-soliton frequency, cycles per internal time unit
    mu: float      # interaction energy scale
    mode: str = PAIR
    mass: float = 1.0

    def __post_init__(self):
        if not (self.nu_1s > 0 and self.mu > 0 and self.mass > 0):
            raise ValueError("nu_1s, mu and mass must be positive")
        if self.mode not in (SINGLE, PAIR):
            raise ValueError(f"mode must be 'single' or 'pair', got {self.mode!r}")

    @property
    def omega(self):
        return 2 * math.pi * self.nu_1s

    @property
    def xi(self):
        return 1.0 / math.sqrt(self.mass * self.mu)

    @property
    def c(self):
        return math.sqrt(self.mu / self.mass)

    @classmethod
    def from_si(cls, nu_1s_hz, mu_hz, units, mode=PAIR):
        """``mu_hz`` is the interaction energy expressed as mu / h."""
        return cls(nu_1s_hz * units.time_unit, units.hz_to_energy(mu_hz), mode)


@dataclass
class ParticleState:
    z: float
    zdot: float


def darkness(zdot, params):
    """B = sqrt(1 - (zdot/c)^2)."""
    r = np.asarray(zdot, dtype=float) / params.c
    if np.any(np.abs(r) > 1):
        raise ValueError("|zdot| exceeds the sound speed; no dark soliton")
    return np.sqrt(1 - r * r)


def _h(u):
    s = 1 / np.cosh(u) ** 2
    return s * (1 - u * np.tanh(u))


def _dh(u):
    s = 1 / np.cosh(u) ** 2
    t = np.tanh(u)
    return -3 * s * t + 2 * u * s * t * t - u * s * s


def effective_potential(state, params):
    z, v = state.z, state.zdot
    trap = 0.5 * params.omega**2 * np.asarray(z) ** 2
    if params.mode == SINGLE:
        return trap
    B = darkness(v, params)
    u = 2 * B * z / params.xi
    return trap + params.mu * B * B / (2 * params.mass) / np.cosh(u) ** 2


def lagrangian(state, params):
    return 0.5 * np.asarray(state.zdot) ** 2 - effective_potential(state, params)


def momentum(state, params):
    """Canonical momentum dL/dzdot."""
    if params.mode == SINGLE:
        return state.zdot
    B = darkness(state.zdot, params)
    u = 2 * B * state.z / params.xi
    return state.zdot * (1 + _h(u))


def conserved_energy(state, params):
    """E = zdot dL/dzdot - L."""
    return state.zdot * momentum(state, params) - lagrangian(state, params)


def acceleration(z, v, params):
    """zdot-dot from the Euler-Lagrange equation."""
    w2 = params.omega**2
    if params.mode == SINGLE:
        return -w2 * z
    mu, xi, c = params.mu, params.xi, params.c
    B = math.sqrt(max(1 - (v / c) ** 2, 0.0))
    if B == 0.0:
        raise TrajectoryError("soliton reached the sound speed")
    u = 2 * B * z / xi
    sech2 = 1 / math.cosh(u) ** 2
    dV_dz = w2 * z - (2 * mu * B**3 / xi) * sech2 * math.tanh(u) / params.mass
    dh = _dh(u)
    dp_dz = v * dh * 2 * B / xi
    dp_dv = 1 + _h(u) - v * dh * (2 * z / xi) * v / (c * c * B)
    return (-dV_dz - dp_dz * v) / dp_dv


@dataclass
class Trajectory:
    t: np.ndarray
    z: np.ndarray
    zdot: np.ndarray
    energy: np.ndarray
    outer_turning_times: np.ndarray
    inner_turning_times: np.ndarray

    @property
    def energy_drift(self):
        e0 = self.energy[0]
        return float(np.max(np.abs(self.energy - e0)) / abs(e0))

    def frequency(self):
        """Single-soliton-equivalent frequency from outer turning points.

        Outer turning points are maxima of |z|; the interval between them is
        the period of the distance 2|z|, so the frequency is half its inverse.
        """
        tt = self.outer_turning_times
        if tt.size < 2:
            raise TrajectoryError("fewer than two outer turning points; no oscillation")
        return 1.0 / (2.0 * float(np.mean(np.diff(tt))))


def _rhs(params):
    def f(t, y):
        if params.mode == PAIR and abs(y[1]) >= params.c:
            # an overshooting trial stage; NaN makes the solver reject the step
            return [y[1], math.nan]
        return [y[1], acceleration(y[0], y[1], params)]
    return f


def integrate_trajectory(z0, params, t_max, dt, zdot0=0.0, rtol=1e-12, energy_tol=1e-8):
    """Integrate from (z0, zdot0) to ``t_max``; samples every ``dt``.

    Uses an adaptive 8th-order Runge-Kutta scheme (DOP853) and records turning
    points (zdot = 0) classified as outer (acceleration towards the centre) or
    inner (bounce off the repulsive barrier).
    """
    if not (t_max > 0 and dt > 0):
        raise ValueError("t_max and dt must be positive")
    if params.mode == PAIR and abs(zdot0) >= params.c:
        raise ValueError("initial speed must be below the sound speed")
    t_eval = np.arange(0.0, t_max + 0.5 * dt, dt)
    t_eval = t_eval[t_eval <= t_max]

    def turning(t, y):
        return y[1]

    sol = solve_ivp(_rhs(params), (0.0, t_max), [z0, zdot0], method="DOP853",
                    t_eval=t_eval, events=turning, rtol=rtol, atol=rtol * max(abs(z0), 1e-3))
    if sol.status < 0:
        raise TrajectoryError(f"integration failed ({sol.message}); the soliton may "
                              "have been driven to the sound speed")
    z, v = sol.y
    E = conserved_energy(ParticleState(z, v), params)
    te = sol.t_events[0]
    ye = sol.y_events[0]
    outer, inner = [], []
    for t, (ze, ve) in zip(te, ye):
        if t <= 0:
            continue
        (outer if ze * acceleration(ze, ve, params) < 0 else inner).append(t)
    traj = Trajectory(sol.t, z, v, E, np.array(outer), np.array(inner))
    if traj.energy_drift > energy_tol:
        raise TrajectoryError(f"energy drift {traj.energy_drift:.2e} exceeds {energy_tol:.0e}")
    return traj


def equilibrium_distance(params):
    """Position of the minimum of V(z, 0) for z > 0 (0 in single mode)."""
    if params.mode == SINGLE:
        return 0.0

    def force(z):
        return acceleration(z, 0.0, params)

    hi = params.xi
    while force(hi) > 0:
        hi *= 2
    return brentq(force, 1e-12, hi, xtol=1e-14)


def frequency_vs_amplitude(params, amplitudes, periods=6, amplitude_kind="peak",
                           samples_per_period=200):
    """Frequency table over peak (or rms) amplitudes.

    For a peak amplitude A the particle starts at rest at z0 = A, the outer
    turning point. ``amplitude_kind='rms'`` instead matches the rms deviation
    of |z| about its mean by root-finding on z0.
    Returns an array of shape (len(amplitudes), 2): amplitude, frequency.
    """
    if amplitude_kind not in ("peak", "rms"):
        raise ValueError("amplitude_kind must be 'peak' or 'rms'")
    z_eq = equilibrium_distance(params)
    period = 1.0 / params.nu_1s
    t_max = periods * period
    dt = period / samples_per_period
    rows = []
    for A in amplitudes:
        if not A > 0:
            raise ValueError("amplitudes must be positive")
        if amplitude_kind == "peak":
            if A <= z_eq:
                raise ValueError(f"amplitude {A:.4g} lies inside the barrier (z_eq = {z_eq:.4g})")
            traj = integrate_trajectory(A, params, t_max, dt)
        else:
            traj = _match_rms(A, params, z_eq, t_max, dt)
        rows.append((A, traj.frequency()))
    return np.array(rows)


def rms_amplitude(traj):
    r = np.abs(traj.z)
    return float(np.sqrt(np.mean((r - r.mean()) ** 2)))


def _match_rms(target, params, z_eq, t_max, dt):

    def excess(z0):
        return rms_amplitude(integrate_trajectory(z0, params, t_max, dt)) - target

    lo = z_eq * 1.001 + 1e-9
    hi = max(2 * lo, z_eq + 2 * math.sqrt(2) * target)
    try:
        while excess(hi) < 0:
            hi *= 1.5
    except (TrajectoryError, ValueError) as exc:
        raise ValueError(f"rms amplitude {target:.4g} is not reachable: {exc}") from exc
    z0 = brentq(excess, lo, hi, xtol=1e-10)
    return integrate_trajectory(z0, params, t_max, dt)
