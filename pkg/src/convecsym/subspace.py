"""The x-independent invariant component and its closed-form evolution.

States whose velocity, temperature and pressure do not depend on x form a
subspace that is closed under the full nonlinear dynamics: the transport terms
vanish there and the component evolves by plain 1-D diffusion.  This module
projects states onto that component and its zero-x-mean complement, evolves
profiles analytically, and provides the pipe-flow (parabolic profile) example
of the same decoupling mechanism.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import STREAM_TEMP, SpectralField


def _sample_profile(f, n_z: int) -> np.ndarray:
    """Sample a callable on the midpoint grid, or validate an array of samples."""
    z = (np.arange(n_z) + 0.5) / n_z
    vals = np.asarray(f(z) if callable(f) else f, dtype=float)
    if vals.shape != (n_z,):
        raise ValueError(f"profile samples must have length {n_z}")
    if not np.all(np.isfinite(vals)):
        raise ValueError("profile contains NaN or Inf samples")
    return vals


def _cos_coefficients(vals: np.ndarray, n_modes: int) -> np.ndarray:
    """Cosine-series coefficients a_n of sum a_n cos(pi n z) from midpoint samples."""
    n_z = len(vals)
    if n_z < 2 * n_modes + 2:
        raise ValueError("not enough samples for the requested truncation")
    z = (np.arange(n_z) + 0.5) / n_z
    n = np.arange(n_modes + 1)
    table = np.cos(np.pi * np.outer(n, z))
    w = np.where(n == 0, 1.0, 2.0) / n_z
    return (table @ vals) * w


def _sin_coefficients(vals: np.ndarray, n_modes: int) -> np.ndarray:
    n_z = len(vals)
    if n_z < 2 * n_modes + 2:
        raise ValueError("not enough samples for the requested truncation")
    z = (np.arange(n_z) + 0.5) / n_z
    n = np.arange(n_modes + 1)
    table = np.sin(np.pi * np.outer(n, z))
    out = (table @ vals) * (2.0 / n_z)
    out[0] = 0.0
    return out


@dataclass
class SProfiles:
    """x-independent component: velocity profile A(z) e1 and temperature T(z).

    ``a[n]`` are cosine coefficients of A (n = 0 carries the conserved mean
    flow), ``b[n]`` sine coefficients of T (b[0] unused).  Both decay
    diffusively: A modes as exp(-Pr n^2 pi^2 t), T modes as exp(-n^2 pi^2 t).
    """

    a: np.ndarray
    b: np.ndarray
    pr: float
    ra: float
    t: float = 0.0

    def __post_init__(self):
        self.a = np.asarray(self.a, dtype=float)
        self.b = np.asarray(self.b, dtype=float)
        if self.a.shape != self.b.shape:
            raise ValueError("a and b must share a truncation")
        self.b[0] = 0.0

    @property
    def n_modes(self) -> int:
        return len(self.a) - 1

    def copy(self) -> "SProfiles":
        return SProfiles(self.a.copy(), self.b.copy(), self.pr, self.ra, self.t)

    def decayed(self, dt: float) -> "SProfiles":
        """Profiles a time dt later (exact solution of the diffusion system)."""
        n2 = (np.pi * np.arange(self.n_modes + 1)) ** 2
        return SProfiles(self.a * np.exp(-self.pr * n2 * dt),
                         self.b * np.exp(-n2 * dt), self.pr, self.ra, self.t + dt)

    def velocity(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        n = np.arange(self.n_modes + 1)
        return np.cos(np.pi * np.outer(z, n)) @ self.a

    def temperature(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        n = np.arange(self.n_modes + 1)
        return np.sin(np.pi * np.outer(z, n)) @ self.b

    def pressure(self, z) -> np.ndarray:
        """Accompanying pressure profile, zero-mean gauge; G_zz = Ra T_z holds exactly."""
        z = np.asarray(z, dtype=float)
        n = np.arange(self.n_modes + 1)
        coef = np.zeros_like(self.b)
        coef[1:] = -self.ra * self.b[1:] / (np.pi * n[1:])
        return np.cos(np.pi * np.outer(z, n)) @ coef

    @property
    def pressure_gauge(self) -> float:
        """Constant G0 such that pressure(z) = G0 + series in (1 - cos(n pi z))."""
        n = np.arange(1, self.n_modes + 1)
        return float(-np.sum(self.ra * self.b[1:] / (np.pi * n)))

    def norms(self):
        """(||A||_2, ||T||_2) over (0, 1)."""
        wa = np.full(self.n_modes + 1, 0.5)
        wa[0] = 1.0
        return float(np.sqrt(np.sum(self.a**2 * wa))), float(np.sqrt(0.5 * np.sum(self.b[1:] ** 2)))


@dataclass
class SubspaceSplit:
    """Direct-sum decomposition of a state: x-independent part + zero-x-mean rest."""

    s_part: SProfiles
    f_part: "OBState"  # noqa: F821  (forward ref; dynamics imports this module)


def project_S(state) -> SProfiles:
    """x-independent component of a state.

    The velocity profile comes from -Phi_z of the m = 0 stream modes and the
    temperature profile from the m = 0 temperature modes; the conserved mean
    flow a_0 is zero because stream-function velocities have zero cell mean.
    """
    n_max = state.phi.n_max
    n = np.arange(n_max + 1)
    a = -np.pi * n * state.phi.coeff[0, 0, :]
    b = state.tau.coeff[0, 0, :].copy()
    return SProfiles(a, b, state.pr, state.ra, state.t)


def project_F(state):
    """Complement of project_S: same state with the m = 0 modes removed."""
    out = state.copy()
    out.phi.coeff[:, 0, :] = 0.0
    out.tau.coeff[:, 0, :] = 0.0
    return out


def decompose(state) -> SubspaceSplit:
    return SubspaceSplit(project_S(state), project_F(state))


def reconstruct(split: SubspaceSplit):
    """Inverse of decompose.  The mean-flow coefficient a_0 must vanish."""
    s, f = split.s_part, split.f_part
    if abs(s.a[0]) > 1e-13:
        raise ValueError("a nonzero mean flow cannot be represented by a stream function")
    out = f.copy()
    n = np.arange(out.phi.n_max + 1, dtype=float)
    n[0] = 1.0
    out.phi.coeff[0, 0, 1:] = -s.a[1:] / (np.pi * n[1:])
    out.tau.coeff[0, 0, :] = s.b
    return out


def evolve_S_analytic(f, g, t: float, pr: float, ra: float, n_modes: int,
                      n_samples: int | None = None) -> SProfiles:
    """Closed-form evolution of x-independent initial profiles.

    Args:
        f: initial velocity profile (callable on z in (0,1) or midpoint samples).
        g: initial temperature profile, same conventions.
        t: evaluation time, >= 0.
        pr, ra: Prandtl and Rayleigh numbers.
        n_modes: series truncation.
        n_samples: optional sample count for callables (defaults to a grid
            exact for band-limited data at this truncation).

    Returns:
        SProfiles at time t.  Velocity modes carry exp(-Pr n^2 pi^2 t), the
        mean of f persists as a time-constant term, temperature modes carry
        exp(-n^2 pi^2 t); the pressure profile follows from the temperature
        series with the zero-mean gauge.
    """
    if t < 0:
        raise ValueError("t must be non-negative")
    n_z = n_samples or max(2 * n_modes + 2, 64)
    fv = _sample_profile(f, n_z if not hasattr(f, "__len__") else len(f))
    gv = _sample_profile(g, n_z if not hasattr(g, "__len__") else len(g))
    a0 = _cos_coefficients(fv, n_modes)
    b0 = _sin_coefficients(gv, n_modes)
    return SProfiles(a0, b0, pr, ra, 0.0).decayed(t)


def mean_values(state, t: float, z=None):
    """x-averaged velocity and temperature profiles at time t.

    Valid to leading order in the zero-mean component's amplitude: its
    quadratic self-interaction feeds the x-averages through Reynolds stresses,
    so for finite-amplitude complements the returned profiles match the full
    solution's averages only up to that second-order correction.
    """
    prof = project_S(state).decayed(t)
    if z is None:
        n_z = 2 * prof.n_modes + 2
        z = (np.arange(n_z) + 0.5) / n_z
    return prof.velocity(z), prof.temperature(z)


def poiseuille_profile(c: float, mu: float, radius: float, r):
    """Steady parabolic pipe profile v(r) = C (R^2 - r^2) / (4 mu)."""
    if mu <= 0 or radius <= 0:
        raise ValueError("viscosity and radius must be positive")
    r = np.asarray(r, dtype=float)
    if np.any(r < 0) or np.any(r > radius):
        raise ValueError("radial coordinate outside the pipe")
    out = c * (radius**2 - r**2) / (4 * mu)
    return float(out) if out.ndim == 0 else out


def poiseuille_gradient_bound(c: float, mu: float, radius: float) -> float:
    """sup over the pipe of |v'(r)| = |C| R / (2 mu), the transport-control factor."""
    if mu <= 0 or radius <= 0:
        raise ValueError("viscosity and radius must be positive")
    return abs(c) * radius / (2 * mu)
