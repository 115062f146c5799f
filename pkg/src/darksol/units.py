"""Internal unit system.

Everything inside the solvers runs with hbar = m = 1 and lengths in
micrometres. Configs and outputs use SI-style units (Hz, ms, um, nm), and the
conversion happens only at that boundary.
"""
from dataclasses import dataclass

from scipy.constants import atomic_mass, hbar, pi

RB87_MASS = 86.909180527 * atomic_mass
# |F=2, mF=2> scattering length; reproduces D_c = 25.8 um for N=1500, 63 Hz
RB87_SCATTERING_LENGTH_NM = 5.3


@dataclass(frozen=True)
class UnitSystem:
    mass: float = RB87_MASS
    length_unit: float = 1e-6

    @property
    def time_unit(self):
        """Seconds per internal time unit, m * L**2 / hbar."""
        return self.mass * self.length_unit**2 / hbar

    @property
    def energy_unit(self):
        """Joules per internal energy unit, hbar**2 / (m L**2)."""
        return hbar**2 / (self.mass * self.length_unit**2)

    # frequencies: Hz <-> internal angular frequency (also the energy h*nu,
    # since hbar = 1)
    def hz_to_omega(self, nu):
        return 2 * pi * nu * self.time_unit

    def omega_to_hz(self, omega):
        return omega / (2 * pi * self.time_unit)

    hz_to_energy = hz_to_omega
    energy_to_hz = omega_to_hz

    def ms_to_time(self, t_ms):
        return t_ms * 1e-3 / self.time_unit

    def time_to_ms(self, t):
        return t * self.time_unit * 1e3

    def um_to_length(self, x_um):
        return x_um * 1e-6 / self.length_unit

    def length_to_um(self, x):
        return x * self.length_unit / 1e-6

    def nm_to_length(self, x_nm):
        return x_nm * 1e-9 / self.length_unit

    def length_to_nm(self, x):
        return x * self.length_unit / 1e-9

    def speed_to_mm_per_s(self, v):
        return v * self.length_unit / self.time_unit * 1e3

    def describe(self):
        return {
            "hbar": 1.0,
            "mass_kg": self.mass,
            "length_unit_m": self.length_unit,
            "time_unit_s": self.time_unit,
            "energy_unit_J": self.energy_unit,
        }
