"""Grid, wavefunction and split-step spectral propagators.

The evolved equation is

    i dpsi/dt = [-(1/2) d^2/dz^2 + V(z, t) + G(|psi|^2, t)] psi

in internal units (hbar = m = 1). ``psi`` is normalised to one and the atom
number lives inside the nonlinearity ``G``.

A nonlinearity is any callable ``G(density, t)``. The energy functional and the
Newton polish of the ground-state solver additionally use
``G.energy_density(density, t)`` (the antiderivative of G in the density) and
``G.derivative(density, t)``.
"""
from dataclasses import dataclass, field
import logging

import numpy as np
from scipy import fft as sfft
from scipy.sparse.linalg import LinearOperator, cg

log = logging.getLogger(__name__)

# default phase bound per step: dt * max(|V| + |G|) <= PHASE_SAFETY
PHASE_SAFETY = 0.05
# kinetic phase bound per step at the Nyquist wavenumber; split-step Fourier
# develops a spurious high-k instability well below dt*k_max^2/2 ~ pi
KINETIC_PHASE = 1.0


class NumericalError(RuntimeError):
    """A propagation produced NaNs or lost norm."""


class ConvergenceError(RuntimeError):
    """An iterative solver hit its step cap."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


def _is_power_of_two(n):
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Grid1D:
    n_points: int
    box_length: float
    z: np.ndarray = field(init=False, repr=False, compare=False)
    k: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        dz = self.box_length / self.n_points
        z = (np.arange(self.n_points) - self.n_points // 2) * dz
        k = 2 * np.pi * np.fft.fftfreq(self.n_points, d=dz)
        z.flags.writeable = False
        k.flags.writeable = False
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "k", k)

    @property
    def dz(self):
        return self.box_length / self.n_points

    @property
    def k_max(self):
        return np.pi / self.dz

    def mirror_index(self):
        """Index map i -> j with z[j] = -z[i] (periodically)."""
        return (self.n_points - np.arange(self.n_points)) % self.n_points


def build_grid(n_points, box_length):
    """Uniform periodic grid centred on z = 0.

    ``n_points`` must be a power of two and at least 256.
    """
    if isinstance(n_points, bool) or int(n_points) != n_points:
        raise ValueError(f"n_points must be an integer, got {n_points!r}")
    n_points = int(n_points)
    if not _is_power_of_two(n_points):
        raise ValueError(f"n_points must be a power of two, got {n_points}")
    if n_points < 256:
        raise ValueError(f"n_points must be >= 256, got {n_points}")
    if not box_length > 0:
        raise ValueError(f"box_length must be positive, got {box_length}")
    return Grid1D(n_points, float(box_length))


@dataclass
class Wavefunction:
    grid: Grid1D
    values: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != (self.grid.n_points,):
            raise ValueError("values do not match the grid")

    def copy(self):
        return Wavefunction(self.grid, self.values.copy(), self.time)

    def normalized(self):
        nrm = norm(self)
        if not nrm > 0:
            raise ValueError("cannot normalise a zero wavefunction")
        return Wavefunction(self.grid, self.values / np.sqrt(nrm), self.time)


def density(psi):
    v = psi.values
    return v.real**2 + v.imag**2


def norm(psi):
    """Integral of |psi|^2 dz."""
    return float(np.sum(density(psi)) * psi.grid.dz)


def phase_profile(psi):
    """Phase of psi unwrapped left to right."""
    return np.unwrap(np.angle(psi.values))


# --- operators ------------------------------------------------------------

def _as_sampler(potential):
    if callable(potential):
        return potential
    arr = np.asarray(potential, dtype=float)
    return lambda t: arr


def _zero_nonlinearity(n, t=0.0):
    return np.zeros_like(n)


_zero_nonlinearity.energy_density = lambda n, t=0.0: np.zeros_like(n)
_zero_nonlinearity.derivative = lambda n, t=0.0: np.zeros_like(n)


def _nonlinearity(g):
    return _zero_nonlinearity if g is None else g


def apply_kinetic(values, grid):
    return sfft.ifft(0.5 * grid.k**2 * sfft.fft(values))


def apply_hamiltonian(psi, potential, nonlinearity=None, t=None):
    """H psi with H = -(1/2) d^2/dz^2 + V + G(|psi|^2)."""
    t = psi.time if t is None else t
    G = _nonlinearity(nonlinearity)
    n = density(psi)
    V = _as_sampler(potential)(t)
    return apply_kinetic(psi.values, psi.grid) + (V + G(n, t)) * psi.values


def chemical_potential(psi, potential, nonlinearity=None, t=None):
    """<psi| T + V + G(|psi|^2) |psi> / <psi|psi>."""
    hpsi = apply_hamiltonian(psi, potential, nonlinearity, t)
    return float(np.vdot(psi.values, hpsi).real / np.vdot(psi.values, psi.values).real)


def residual(psi, potential, nonlinearity=None, t=None):
    """||H psi - mu psi|| / ||psi|| with mu the Rayleigh quotient."""
    hpsi = apply_hamiltonian(psi, potential, nonlinearity, t)
    nn = np.vdot(psi.values, psi.values).real
    mu = np.vdot(psi.values, hpsi).real / nn
    r = hpsi - mu * psi.values
    return float(np.sqrt(np.vdot(r, r).real / nn))


def kinetic_energy(psi):
    spec = sfft.fft(psi.values)
    return float(np.sum(0.5 * psi.grid.k**2 * np.abs(spec) ** 2) * psi.grid.dz / psi.grid.n_points)


def energy(psi, potential, nonlinearity=None, t=None):
    """Energy functional E = int |psi'|^2/2 + V n + F(n) dz, with F' = G."""
    t = psi.time if t is None else t
    G = _nonlinearity(nonlinearity)
    n = density(psi)
    V = _as_sampler(potential)(t)
    return kinetic_energy(psi) + float(np.sum(V * n + G.energy_density(n, t)) * psi.grid.dz)


def max_energy_scale(psi, potential, nonlinearity=None, t=None):
    """max over the grid of |V| + |G(|psi|^2)|, the quantity bounding dt."""
    t = psi.time if t is None else t
    G = _nonlinearity(nonlinearity)
    V = _as_sampler(potential)(t)
    return float(np.max(np.abs(V) + np.abs(G(density(psi), t))))


def stable_timestep(grid, e_max, phase_safety=PHASE_SAFETY, kinetic_phase=KINETIC_PHASE):
    """Largest dt satisfying both the potential and the kinetic phase bounds."""
    bounds = [kinetic_phase / (0.5 * grid.k_max**2)]
    if e_max > 0:
        bounds.append(phase_safety / e_max)
    return min(bounds)


# --- real time --------------------------------------------------------------

def evolve_real_time(psi, potential, nonlinearity, dt, n_steps, observer=None,
                     observe_every=1, check_every=200, phase_safety=PHASE_SAFETY):
    """Strang-split propagation over ``n_steps`` steps of size ``dt``.

    ``potential`` is an array or a callable ``V(t)``; a callable is sampled at
    the midpoint of each step. ``observer(psi, step)`` is called for the initial
    state and after every ``observe_every`` steps. Consecutive half kinetic
    steps are fused unless an observation or a health check needs the state.
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if n_steps < 0:
        raise ValueError("n_steps must be non-negative")
    grid = psi.grid
    G = _nonlinearity(nonlinearity)
    sampler = _as_sampler(potential)
    static = not callable(potential)
    V_static = sampler(psi.time) if static else None
    t0 = psi.time

    e_max = max_energy_scale(psi, potential, nonlinearity, t0)
    if dt * e_max > phase_safety * (1 + 1e-9):
        raise ValueError(
            f"dt={dt:.4g} violates dt*max(|V|+|G|) <= {phase_safety} "
            f"(max(|V|+|G|)={e_max:.4g})"
        )

    values = psi.values.astype(complex, copy=True)
    norm0 = float(np.sum(values.real**2 + values.imag**2) * grid.dz)
    half = np.exp(-0.25j * grid.k**2 * dt)
    full = half * half

    if observer is not None:
        observer(Wavefunction(grid, values.copy(), t0), 0)
    if n_steps == 0:
        return Wavefunction(grid, values, t0)

    spec = sfft.fft(values) * half
    for step in range(1, n_steps + 1):
        values = sfft.ifft(spec)
        t_mid = t0 + (step - 0.5) * dt
        n = values.real**2 + values.imag**2
        V = V_static if static else sampler(t_mid)
        values *= np.exp(-1j * dt * (V + G(n, t_mid)))
        spec = sfft.fft(values)

        observe = observer is not None and step % observe_every == 0
        last = step == n_steps
        if not (observe or last or step % check_every == 0):
            spec *= full
            continue
        spec *= half
        values = sfft.ifft(spec)
        _health_check(values, grid, norm0, step)
        if observe:
            observer(Wavefunction(grid, values.copy(), t0 + step * dt), step)
        if not last:
            spec *= half
    return Wavefunction(grid, values, t0 + n_steps * dt)


def _health_check(values, grid, norm0, step):
    if not np.all(np.isfinite(values)):
        raise NumericalError(f"non-finite wavefunction at step {step}")
    nrm = float(np.sum(values.real**2 + values.imag**2) * grid.dz)
    drift = abs(nrm - norm0) / norm0
    if drift > 1e-6:
        raise NumericalError(f"norm drift {drift:.3e} exceeds 1e-6 at step {step}")


# --- imaginary time ---------------------------------------------------------

def _default_guess(grid, V):
    # gaussian at the potential minimum, width an eighth of the box
    z = grid.z
    zc = z[np.argmin(V)] if np.ptp(V) > 0 else 0.0
    w = grid.box_length / 16
    return np.exp(-((z - zc) ** 2) / (2 * w**2)) + 0j


def ground_state_imaginary_time(grid, potential, nonlinearity=None, tol=1e-9,
                                initial_guess=None, dtau=None, energy_scale=1.0,
                                max_steps=400_000, check_every=200, polish=True):
    """Lowest stationary state by normalised imaginary-time split-step.

    Stepping stops once mu changes by less than ``tol * energy_scale`` between
    checks (``energy_scale`` is typically hbar*omega_z). The state is then
    polished by projected Newton iterations on the exact spectral Hamiltonian
    until ``||H psi - mu psi|| / ||psi|| < tol``; the split-step fixed point
    itself carries an O(dtau^2) bias.

    Returns ``(psi, mu)``.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    G = _nonlinearity(nonlinearity)
    V = np.asarray(_as_sampler(potential)(0.0), dtype=float)
    if not np.all(np.isfinite(V)):
        raise ValueError("potential must be finite on the grid")

    if initial_guess is None:
        values = _default_guess(grid, V)
    else:
        values = np.array(initial_guess.values, dtype=complex)
    values /= np.sqrt(np.sum(np.abs(values) ** 2) * grid.dz)
    psi = Wavefunction(grid, values)

    if dtau is None:
        e_max = max_energy_scale(psi, V, G, 0.0)
        dtau = 0.5 * stable_timestep(grid, e_max)
    half = np.exp(-0.25 * grid.k**2 * dtau)

    mu_prev = chemical_potential(psi, V, G, 0.0)
    coarse_tol = max(tol, 1e-7) if polish else tol
    converged = False
    for step in range(1, max_steps + 1):
        values = sfft.ifft(half * sfft.fft(values))
        n = values.real**2 + values.imag**2
        values *= np.exp(-dtau * (V + G(n, 0.0)))
        values = sfft.ifft(half * sfft.fft(values))
        values /= np.sqrt(np.sum(values.real**2 + values.imag**2) * grid.dz)
        if step % check_every:
            continue
        if not np.all(np.isfinite(values)):
            raise NumericalError(f"non-finite wavefunction in imaginary time at step {step}")
        psi = Wavefunction(grid, values)
        mu = chemical_potential(psi, V, G, 0.0)
        if abs(mu - mu_prev) < coarse_tol * energy_scale:
            if polish or residual(psi, V, G, 0.0) < tol:
                converged = True
                break
        mu_prev = mu
    psi = Wavefunction(grid, values)
    if not converged:
        res = residual(psi, V, G, 0.0)
        raise ConvergenceError(
            f"imaginary time did not converge in {max_steps} steps (residual {res:.3e})", res
        )
    if polish:
        psi = _newton_polish(psi, V, G, tol)
    mu = chemical_potential(psi, V, G, 0.0)
    return psi, mu


def _derivative(G, n, t):
    if hasattr(G, "derivative"):
        return G.derivative(n, t)
    h = 1e-7 * max(1.0, float(np.max(n)))
    return (G(n + h, t) - G(np.maximum(n - h, 0.0), t)) / (n + h - np.maximum(n - h, 0.0))


def _newton_polish(psi, V, G, tol, max_iter=30):
    """Projected Newton for a real, nodeless ground state."""
    grid = psi.grid
    dz = grid.dz
    # remove the global phase; the ground state is real up to that
    v = psi.values
    phase = np.angle(np.sum(v * np.abs(v)))
    x = (v * np.exp(-1j * phase)).real.copy()
    x /= np.sqrt(np.sum(x * x) * dz)
    kin = 0.5 * grid.k**2

    def T(u):
        return sfft.irfft(kin[: grid.n_points // 2 + 1] * sfft.rfft(u), n=grid.n_points)

    res = np.inf
    for it in range(max_iter):
        n = x * x
        gn = G(n, 0.0)
        hx = T(x) + (V + gn) * x
        mu = float(np.sum(x * hx) * dz)
        r = hx - mu * x
        res = float(np.sqrt(np.sum(r * r) * dz))
        if res < tol:
            return Wavefunction(grid, x + 0j)
        diag = V + gn + 2 * n * _derivative(G, n, 0.0) - mu
        alpha = max(float(np.sum((V + gn) * n) * dz), 1e-3)

        def proj(u, x=x):
            return u - x * (np.sum(x * u) * dz)

        def matvec(u, diag=diag):
            u = proj(np.ravel(u))
            return proj(T(u) + diag * u)

        def precond(u):
            u = proj(np.ravel(u))
            return proj(sfft.irfft(sfft.rfft(u) / (kin[: grid.n_points // 2 + 1] + alpha), n=grid.n_points))

        A = LinearOperator((grid.n_points,) * 2, matvec=matvec, dtype=float)
        M = LinearOperator((grid.n_points,) * 2, matvec=precond, dtype=float)
        with np.errstate(invalid="ignore", divide="ignore"):
            delta, _ = cg(A, -r, M=M, rtol=1e-6, maxiter=2000)
        if not np.all(np.isfinite(delta)):
            break  # residual already at round-off; no further progress possible
        x = x + delta
        x /= np.sqrt(np.sum(x * x) * dz)
    log.warning("Newton polish stopped at residual %.3e", res)
    raise ConvergenceError(f"Newton polish did not reach tol {tol:.1e} (residual {res:.3e})", res)
