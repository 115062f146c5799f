"""Trap potentials, quasi-1D nonlinearities, soliton imprinting and closed-form
condensate quantities.

Potentials and nonlinearities are returned in internal units (hbar = m = 1,
lengths in um); the ``TrapConfig`` holds the SI-style inputs.
"""
from dataclasses import dataclass
import math

import numpy as np
from scipy.constants import hbar
from scipy.optimize import brentq, minimize_scalar

from .core import NumericalError, Wavefunction
from .units import RB87_MASS, RB87_SCATTERING_LENGTH_NM, UnitSystem


@dataclass(frozen=True)
class LatticeConfig:
    depth_hz: float
    spacing_um: float
    offset_um: float = 0.0

    def __post_init__(self):
        if self.depth_hz < 0:
            raise ValueError("lattice depth must be >= 0")
        if not self.spacing_um > 0:
            raise ValueError("lattice spacing must be positive")


@dataclass(frozen=True)
class RampConfig:
    """Linear ramp of (nu_z, nu_perp) in Hz over ``duration_ms``."""
    initial: tuple
    final: tuple
    duration_ms: float

    def __post_init__(self):
        if self.duration_ms < 0:
            raise ValueError("ramp duration must be >= 0")
        for f in (*self.initial, *self.final):
            if not f > 0:
                raise ValueError("ramp frequencies must be positive")


@dataclass(frozen=True)
class TrapConfig:
    nu_z: float
    nu_perp: float
    atom_number: int
    scattering_length_nm: float = RB87_SCATTERING_LENGTH_NM
    mass: float = RB87_MASS
    lattice: LatticeConfig = None
    ramp: RampConfig = None

    def __post_init__(self):
        for name in ("nu_z", "nu_perp", "atom_number", "scattering_length_nm", "mass"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not self.nu_z < self.nu_perp:
            raise ValueError(
                f"nu_z ({self.nu_z}) must be below nu_perp ({self.nu_perp}) for a quasi-1D trap"
            )

    @property
    def aspect_ratio(self):
        return self.nu_z / self.nu_perp

    @property
    def units(self):
        return UnitSystem(mass=self.mass)


# --- potentials -------------------------------------------------------------

def harmonic_potential(grid, nu_z, units=UnitSystem()):
    """(1/2) omega_z^2 z^2 on the grid, internal units."""
    if not nu_z > 0:
        raise ValueError("nu_z must be positive")
    w = units.hz_to_omega(nu_z)
    return 0.5 * w**2 * grid.z**2


def lattice_potential(grid, depth_hz, spacing_um, offset_um=0.0, units=UnitSystem()):
    """depth * cos^2(pi (z - offset) / spacing); offset 0 puts a barrier at z = 0."""
    if depth_hz < 0 or not spacing_um > 0:
        raise ValueError("need depth >= 0 and spacing > 0")
    depth = units.hz_to_energy(depth_hz)
    d = units.um_to_length(spacing_um)
    z0 = units.um_to_length(offset_um)
    return depth * np.cos(np.pi * (grid.z - z0) / d) ** 2


def double_well_minima(nu_z, depth_hz, spacing_um, offset_um=0.0, units=UnitSystem()):
    """Positions (um) of the two minima of harmonic + lattice flanking the
    central barrier, located by bounded 1D minimisation."""
    w = units.hz_to_omega(nu_z)
    depth = units.hz_to_energy(depth_hz)

    def v(z):
        return 0.5 * w**2 * z**2 + depth * math.cos(math.pi * (z - offset_um) / spacing_um) ** 2

    centre = offset_um
    right = minimize_scalar(v, bounds=(centre, centre + spacing_um), method="bounded",
                            options={"xatol": 1e-10})
    left = minimize_scalar(v, bounds=(centre - spacing_um, centre), method="bounded",
                           options={"xatol": 1e-10})
    return left.x, right.x


def ramp_sample(t_ms, ramp):
    """(nu_z, nu_perp) at time ``t_ms``; linear, clamped to the final values."""
    if t_ms < 0:
        raise ValueError("t must be >= 0")
    if ramp.duration_ms == 0 or t_ms >= ramp.duration_ms:
        return tuple(ramp.final)
    f = t_ms / ramp.duration_ms
    return tuple(a + (b - a) * f for a, b in zip(ramp.initial, ramp.final))


# --- nonlinearities ---------------------------------------------------------

GPE1D = "gpe1d"
NPSE = "npse"


@dataclass(frozen=True)
class NonlinearSpec:
    """Quasi-1D mean-field term for ``atom_number`` atoms.

    ``omega_perp`` may be a float or a callable of internal time (for ramps).
    Lengths and frequencies are internal. Callable as ``G(density, t)``.

    gpe1d:  G = g1 n,   g1 = 2 omega_perp a_s N
    npse:   G = omega_perp (2 + 3x) / (2 sqrt(1 + x)) - omega_perp,  x = 2 a_s N n

    The NPSE form is the sum of the interaction term
    g N n / (2 pi a_perp^2 sqrt(1+x)) and the transverse energy
    (omega_perp/2)(1/sqrt(1+x) + sqrt(1+x)), with the n = 0 value omega_perp
    gauged away when ``gauge_subtract`` is set.
    """
    kind: str
    atom_number: float
    scattering_length: float
    omega_perp: object
    gauge_subtract: bool = True

    def __post_init__(self):
        if self.kind not in (GPE1D, NPSE):
            raise ValueError(f"unknown nonlinearity kind {self.kind!r}")
        if not callable(self.omega_perp):
            if not self.a_perp() > self.scattering_length:
                raise ValueError("a_perp must exceed a_s for the quasi-1D reduction")

    def w_perp(self, t=0.0):
        return self.omega_perp(t) if callable(self.omega_perp) else self.omega_perp

    def a_perp(self, t=0.0):
        return 1.0 / math.sqrt(self.w_perp(t))

    def g1(self, t=0.0):
        """Total 1D coupling 2 omega_perp a_s N."""
        return 2.0 * self.w_perp(t) * self.scattering_length * self.atom_number

    def __call__(self, n, t=0.0):
        if self.kind == GPE1D:
            return gpe1d_nonlinearity(self, n, t)
        return npse_nonlinearity(self, n, t)

    def energy_density(self, n, t=0.0):
        """F(n) with dF/dn = G(n), F(0) = 0."""
        wp = self.w_perp(t)
        if self.kind == GPE1D:
            return 0.5 * self.g1(t) * n * n
        x = 2 * self.scattering_length * self.atom_number * n
        F = wp * x * np.sqrt(1 + x) / (2 * self.scattering_length * self.atom_number)
        if self.gauge_subtract:
            F = F - wp * n
        return F

    def derivative(self, n, t=0.0):
        if self.kind == GPE1D:
            return np.full_like(np.asarray(n, dtype=float), self.g1(t))
        c = 2 * self.scattering_length * self.atom_number
        x = c * n
        # d/dx [(2+3x)/(2 sqrt(1+x))] = (4 + 3x) / (4 (1+x)^{3/2})
        return self.w_perp(t) * c * (4 + 3 * x) / (4 * (1 + x) ** 1.5)

    def inverse(self, g, t=0.0):
        """Density n >= 0 with G(n) = g (g clipped at G(0))."""
        g = np.maximum(np.asarray(g, dtype=float), 0.0)
        if self.kind == GPE1D:
            return g / self.g1(t)
        wp = self.w_perp(t)
        y = g / wp + (1.0 if self.gauge_subtract else 0.0)
        y = np.maximum(y, 1.0)
        s = (y + np.sqrt(y * y + 3)) / 3  # root of 3 s^2 - 2 y s - 1 = 0
        return (s * s - 1) / (2 * self.scattering_length * self.atom_number)


def gpe1d_nonlinearity(spec, density, t=0.0):
    return spec.g1(t) * np.asarray(density)


def npse_nonlinearity(spec, density, t=0.0):
    n = np.asarray(density)
    x = 2 * spec.scattering_length * spec.atom_number * n
    if np.any(1 + x <= 0):
        raise NumericalError("NPSE requires 1 + 2 a_s N n > 0")
    wp = spec.w_perp(t)
    s = np.sqrt(1 + x)
    G = wp * (2 + 3 * x) / (2 * s)
    if spec.gauge_subtract:
        G = G - wp
    return G


def make_nonlinearity(trap, kind, omega_perp=None):
    """NonlinearSpec for ``trap``; ``omega_perp`` overrides the trap value
    (float or callable of internal time)."""
    units = trap.units
    w = units.hz_to_omega(trap.nu_perp) if omega_perp is None else omega_perp
    return NonlinearSpec(kind, float(trap.atom_number),
                         units.nm_to_length(trap.scattering_length_nm), w)


# --- closed-form quantities -------------------------------------------------

def healing_length(mu, hbar_=1.0, mass=1.0):
    if not mu > 0:
        raise ValueError("mu must be positive")
    return hbar_ / math.sqrt(mass * mu)


def sound_speed(mu, mass=1.0):
    if not mu > 0:
        raise ValueError("mu must be positive")
    return math.sqrt(mu / mass)


def thomas_fermi_radius(mu, omega_z):
    return math.sqrt(2 * mu) / omega_z


def critical_distance(atom_number, scattering_length_nm, nu_z, mass=RB87_MASS):
    """D_c = pi (6 N hbar a_s / (nu_z m))^(1/3), in um."""
    for v in (atom_number, scattering_length_nm, nu_z, mass):
        if not v > 0:
            raise ValueError("critical_distance inputs must be positive")
    a_s = scattering_length_nm * 1e-9
    d = math.pi * (6 * atom_number * hbar * a_s / (nu_z * mass)) ** (1 / 3)
    return d * 1e6


def gpe1d_thomas_fermi_mu(g1, omega_z):
    """Closed-form TF chemical potential of the 1D cubic GPE (m = 1)."""
    return (3 / (4 * math.sqrt(2)) * g1 * omega_z) ** (2 / 3)


def thomas_fermi_mu(nonlinearity, V, dz):
    """Numerical TF chemical potential: solve int G^{-1}(mu - V) dz = 1."""
    V = np.asarray(V, dtype=float)

    def excess(mu):
        return float(np.sum(nonlinearity.inverse(mu - V)) * dz) - 1.0

    lo = float(V.min())
    hi = lo + 1.0
    while excess(hi) < 0:
        hi = lo + 2 * (hi - lo)
    return brentq(excess, lo, hi, xtol=1e-14, rtol=1e-14)


def thomas_fermi_guess(grid, V, nonlinearity):
    mu = thomas_fermi_mu(nonlinearity, V, grid.dz)
    n = nonlinearity.inverse(mu - V)
    psi = np.sqrt(n) + 0j
    # seed the classically forbidden region so the guess has no zeros
    psi += 1e-6 * np.exp(-grid.z**2 / (grid.box_length / 8) ** 2)
    return Wavefunction(grid, psi).normalized(), mu


# --- soliton imprinting -----------------------------------------------------

def _soliton_factor(z, zc, v, c, xi):
    B = math.sqrt(1 - (v / c) ** 2)
    return B * np.tanh(B * (z - zc) / xi) + 1j * v / c


def imprint_soliton(psi_background, z0, velocity, mu):
    """Multiply by a single dark soliton centred at z0 moving at ``velocity``."""
    c = sound_speed(mu)
    if abs(velocity) >= c:
        raise ValueError(f"|velocity| must be below the sound speed {c:.4g}")
    xi = healing_length(mu)
    z = psi_background.grid.z
    out = psi_background.values * _soliton_factor(z, z0, velocity, c, xi)
    return Wavefunction(psi_background.grid, out, psi_background.time).normalized()


def imprint_soliton_pair(psi_background, z0, velocity, mu):
    """Symmetric pair: soliton at +z0 moving at +velocity and its mirror image."""
    c = sound_speed(mu)
    if abs(velocity) >= c:
        raise ValueError(f"|velocity| must be below the sound speed {c:.4g}")
    xi = healing_length(mu)
    z = psi_background.grid.z
    out = (psi_background.values
           * _soliton_factor(z, z0, velocity, c, xi)
           * _soliton_factor(z, -z0, -velocity, c, xi))
    return Wavefunction(psi_background.grid, out, psi_background.time).normalized()
