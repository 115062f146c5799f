import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from darksol.particle import (PAIR, SINGLE, ParticleParams, ParticleState, TrajectoryError,
                              acceleration, conserved_energy, darkness, effective_potential,
                              equilibrium_distance, frequency_vs_amplitude,
                              integrate_trajectory, momentum, rms_amplitude)
from darksol.units import UnitSystem

# omega / mu = 0.05, close to the experiments' ratio; much larger trap frequencies
# push the soliton to the sound speed before it turns around
NU = 0.05 / (2 * math.pi)
P = ParticleParams(NU, 1.0, PAIR)
S = ParticleParams(NU, 1.0, SINGLE)


# --- independent oracle -----------------------------------------------------

def _sympy_rhs():
    """zddot from the Euler-Lagrange equation, derived symbolically."""
    z, v, a, w, mu, xi = sp.symbols("z v a omega mu xi", real=True)
    c = sp.sqrt(mu)
    B = sp.sqrt(1 - v**2 / c**2)
    V = w**2 * z**2 / 2 + mu * B**2 / (2 * sp.cosh(2 * B * z / xi) ** 2)
    L = v**2 / 2 - V
    p = sp.diff(L, v)
    # d/dt p = dp/dz v + dp/dv a = dL/dz
    sol = sp.solve(sp.Eq(sp.diff(p, z) * v + sp.diff(p, v) * a, sp.diff(L, z)), a)[0]
    return sp.lambdify((z, v, w, mu, xi), sol, "math"), sp.lambdify((z, v, w, mu, xi), p * v - L, "math")


RHS, ENERGY = _sympy_rhs()


def rk4_period(z0, params, dt):
    """Time between successive outer turning points with classical RK4."""
    w, mu, xi = params.omega, params.mu, params.xi
    f = lambda y: np.array([y[1], RHS(y[0], y[1], w, mu, xi)])
    y = np.array([z0, 0.0])
    t = 0.0
    turns = []
    prev_v = 0.0
    while len(turns) < 3:
        k1 = f(y)
        k2 = f(y + dt / 2 * k1)
        k3 = f(y + dt / 2 * k2)
        k4 = f(y + dt * k3)
        y_new = y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t += dt
        # outer turning point: zdot changes sign from + to - with z > 0
        if y_new[0] > 0 and y[1] > 0 >= y_new[1]:
            s = y[1] / (y[1] - y_new[1])   # linear root of zdot in the step
            turns.append(t - dt + s * dt)
        y = y_new
    return float(np.mean(np.diff(turns)))


# --- potential and darkness -------------------------------------------------

def test_darkness_values():
    c = P.c
    assert darkness(0.0, P) == 1.0
    assert darkness(c, P) == 0.0
    assert darkness(0.6 * c, P) == pytest.approx(0.8)
    with pytest.raises(ValueError):
        darkness(1.01 * c, P)


def test_effective_potential_values():
    params = ParticleParams(1 / (2 * math.pi), 1.0, PAIR)
    assert effective_potential(ParticleState(0.0, 0.0), params) == pytest.approx(0.5)
    assert effective_potential(ParticleState(2.0, params.c), params) == pytest.approx(2.0)
    far = effective_potential(ParticleState(40.0, 0.0), params)
    assert far == pytest.approx(0.5 * 40.0**2, rel=1e-15)
    assert effective_potential(ParticleState(1.0, 0.3), S) == pytest.approx(0.5 * S.omega**2)


def test_params_validation():
    with pytest.raises(ValueError):
        ParticleParams(0.0, 1.0)
    with pytest.raises(ValueError):
        ParticleParams(1.0, 1.0, "triple")
    assert P.xi * P.c == pytest.approx(1.0)


def test_from_si():
    u = UnitSystem()
    p = ParticleParams.from_si(40.0, 1000.0, u)
    assert p.nu_1s == pytest.approx(40.0 * u.time_unit)
    assert p.mu == pytest.approx(u.hz_to_energy(1000.0))


@settings(max_examples=50, deadline=None)
@given(z=st.floats(0.01, 10.0), r=st.floats(-0.95, 0.95))
def test_acceleration_matches_symbolic(z, r):
    v = r * P.c
    assert acceleration(z, v, P) == pytest.approx(RHS(z, v, P.omega, P.mu, P.xi),
                                                  rel=1e-9, abs=1e-12)
    state = ParticleState(z, v)
    assert conserved_energy(state, P) == pytest.approx(ENERGY(z, v, P.omega, P.mu, P.xi),
                                                       rel=1e-12)


def test_momentum_single_mode():
    assert momentum(ParticleState(1.0, 0.3), S) == 0.3


# --- trajectories -----------------------------------------------------------

def test_single_mode_is_harmonic():
    traj = integrate_trajectory(2.0, S, 10 / NU, 0.01 / NU)
    assert traj.frequency() == pytest.approx(NU, rel=1e-6)
    assert np.allclose(traj.z, 2.0 * np.cos(2 * np.pi * NU * traj.t), atol=1e-8)


def test_pair_period_matches_rk4_oracle():
    z0 = 3 * P.xi
    traj = integrate_trajectory(z0, P, 4 / NU, 0.01 / NU)
    # frequency() is half the inverse interval between outer turning points
    interval = 1 / (2 * traj.frequency())
    oracle = rk4_period(z0, P, 2e-5 / NU)
    assert interval == pytest.approx(oracle, rel=1e-6)


@pytest.mark.criterion(8)
def test_energy_conserved_over_ten_periods():
    for z0 in (1.5, 3.0, 6.0):
        traj = integrate_trajectory(z0, P, 10 / NU, 0.01 / NU)
        assert traj.energy_drift < 1e-8


def test_time_reversal():
    z0 = 2.5
    T = 3.3 / NU
    fwd = integrate_trajectory(z0, P, T, T / 100)
    back = integrate_trajectory(fwd.z[-1], P, T, T / 100, zdot0=-fwd.zdot[-1])
    assert back.z[-1] == pytest.approx(z0, abs=1e-8)
    assert back.zdot[-1] == pytest.approx(0.0, abs=1e-8)


def test_energy_tolerance_enforced():
    with pytest.raises(TrajectoryError, match="energy drift"):
        integrate_trajectory(6.0, P, 10 / NU, 0.01 / NU, rtol=1e-7, energy_tol=1e-14)


def test_no_oscillation_flagged():
    traj = integrate_trajectory(3.0, P, 0.2 / NU, 0.01 / NU)
    with pytest.raises(TrajectoryError, match="turning points"):
        traj.frequency()


def test_turning_point_frequency_matches_spectrum():
    traj = integrate_trajectory(4.0, P, 40 / NU, 0.01 / NU)
    r = np.abs(traj.z) - np.abs(traj.z).mean()
    spec = np.abs(np.fft.rfft(r * np.hanning(r.size)))
    f = np.fft.rfftfreq(r.size, traj.t[1] - traj.t[0])
    # |z| oscillates at twice the single-soliton-equivalent frequency
    assert f[np.argmax(spec[1:]) + 1] / 2 == pytest.approx(traj.frequency(), rel=0.02)


# --- frequency vs amplitude -------------------------------------------------

def test_single_mode_table_constant():
    table = frequency_vs_amplitude(S, [0.5, 1.0, 3.0])
    assert np.allclose(table[:, 1], NU, rtol=1e-6)


def test_small_amplitude_single_mode():
    table = frequency_vs_amplitude(S, [1e-3])
    assert table[0, 1] == pytest.approx(NU, rel=1e-4)


def test_pair_upshift_monotone_towards_single():
    amps = [2.5, 3.0, 4.0, 6.0, 9.0, 14.0]
    nu = frequency_vs_amplitude(P, amps)[:, 1]
    assert np.all(np.diff(nu) < 0)
    assert np.all(nu > NU)
    assert nu[-1] / NU - 1 < 0.1 * (nu[0] / NU - 1)


def test_pair_mode_is_mirror_symmetric():
    # the partner soliton sits at -z, so the trajectory stays on one side
    traj = integrate_trajectory(2.0, P, 5 / NU, 0.01 / NU)
    assert traj.z.min() > 0
    assert traj.z.max() == pytest.approx(2.0, rel=1e-9)


def test_equilibrium_distance_is_force_free():
    z_eq = equilibrium_distance(P)
    assert acceleration(z_eq, 0.0, P) == pytest.approx(0.0, abs=1e-10)
    with pytest.raises(ValueError, match="barrier"):
        frequency_vs_amplitude(P, [0.5 * z_eq])


def test_rms_amplitude_matching():
    table = frequency_vs_amplitude(P, [0.5, 1.0], amplitude_kind="rms")
    assert np.all(np.diff(table[:, 1]) < 0)
    with pytest.raises(ValueError, match="not reachable"):
        frequency_vs_amplitude(P, [50.0], amplitude_kind="rms")


def test_rms_of_harmonic_motion():
    traj = integrate_trajectory(2.0, S, 10 / NU, 0.001 / NU)
    # |z| for z = A cos: mean 2A/pi, rms deviation A sqrt(1/2 - 4/pi^2)
    assert rms_amplitude(traj) == pytest.approx(2.0 * math.sqrt(0.5 - 4 / math.pi**2), rel=1e-3)
