"""Annulus geometry, polar fields, even symmetry, and the steady-state solver.

The flow domain is the gap between horizontal coaxial cylinders, nondimensional
radii r_i = D/2 and r_o = 1 + D/2 where D = 2 R_i / (R_o - R_i).  Fields are
Fourier in the polar angle (measured from the horizontal, so the upward unit
vector is e3 = sin(phi) e_r + cos(phi) e_phi) and Chebyshev-collocated in
radius.  Velocities derive from a stream function, v^r = (1/r) d_phi psi,
v^phi = -d_r psi, which makes the polar divergence vanish identically.

The steady solver works inside the even-symmetric subspace (mirror symmetry
about the vertical diameter: v^r, tau even, v^phi odd) and iterates linear
solves with frozen transport: the advection operator v_old . grad is rebuilt
from the current iterate and solved implicitly together with the Stokes, heat,
buoyancy and conduction-coupling terms, damping the update whenever the
steady residual grows.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg as sla

from . import cheb

COS, SIN = 0, 1


class PicardDivergenceError(RuntimeError):
    """Frozen-transport iteration failed to converge (expected at large Ra)."""

    def __init__(self, residual: float, iterations: int):
        super().__init__(
            f"steady iteration stalled at residual {residual:.3e} after {iterations} iterations")
        self.residual = residual
        self.iterations = iterations


# ---------------------------------------------------------------------------
# parameters and exact geometry/conduction formulas
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AnnulusGeometry:
    """Gap parameter and derived geometry: b = log(1 + 2/d), r_o - r_i = 1."""

    d: float

    def __post_init__(self):
        if self.d <= 0:
            raise ValueError("gap parameter must be positive")

    @property
    def b(self) -> float:
        return float(np.log(1.0 + 2.0 / self.d))

    @property
    def eps(self) -> float:
        return 1.0 / self.b

    @property
    def r_i(self) -> float:
        return self.d / 2.0

    @property
    def r_o(self) -> float:
        return 1.0 + self.d / 2.0


def geometry(d: float) -> AnnulusGeometry:
    """Geometry derived from the gap parameter."""
    return AnnulusGeometry(d)


@dataclass(frozen=True)
class AnnulusParams:
    """Dimensionless parameters of the annulus problem."""

    pr: float
    ra: float
    d: float

    def __post_init__(self):
        if self.pr <= 0 or self.d <= 0:
            raise ValueError("Pr and the gap parameter must be positive")
        if self.ra < 0:
            raise ValueError("Ra must be non-negative")

    @property
    def geom(self) -> AnnulusGeometry:
        return AnnulusGeometry(self.d)

    @property
    def b(self) -> float:
        return self.geom.b


@dataclass(frozen=True)
class PhysicalParams:
    """Dimensional material/geometry data behind the dimensionless groups."""

    nu: float                  # kinematic viscosity, m^2/s
    thermal_diffusivity: float  # m^2/s
    alpha: float               # volume expansion, 1/K
    g: float                   # gravity, m/s^2
    d_theta: float             # inner minus outer wall temperature, K
    gap: float                 # R_o - R_i, m

    def __post_init__(self):
        if min(self.nu, self.thermal_diffusivity, self.alpha, self.g, self.gap) <= 0:
            raise ValueError("material parameters must be positive")


def nondimensionalize(p: PhysicalParams):
    """(Pr, Ra) = (nu/kappa, alpha g dTheta gap^3 / (nu kappa))."""
    pr = p.nu / p.thermal_diffusivity
    ra = p.alpha * p.g * p.d_theta * p.gap**3 / (p.nu * p.thermal_diffusivity)
    return pr, ra


def conduction_lift(r, theta_i: float, theta_o: float, r_i: float, r_o: float):
    """Pure-conduction temperature: theta_i + (theta_o - theta_i) log(r/r_i)/log(r_o/r_i)."""
    r = np.asarray(r, dtype=float)
    if np.any(r < r_i - 1e-12) or np.any(r > r_o + 1e-12):
        raise ValueError("radius outside the annulus")
    b = np.log(r_o / r_i)
    out = theta_i + (theta_o - theta_i) * (np.log(r) - np.log(r_i)) / b
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# azimuthal label algebra
# ---------------------------------------------------------------------------

def full_labels(k_max: int):
    out = [(0, COS)]
    for k in range(1, k_max + 1):
        out.append((k, COS))
        out.append((k, SIN))
    return out


def psi_labels_even(k_max: int):
    """Stream-function families of the even-symmetric velocity class."""
    return [(k, COS if k % 2 == 1 else SIN) for k in range(1, k_max + 1)]


def tau_labels_even(k_max: int):
    """Scalar families even under phi -> pi - phi."""
    return [(k, COS if k % 2 == 0 else SIN) for k in range(0, k_max + 1)]


def psi_labels_odd(k_max: int):
    return [(k, COS if k % 2 == 0 else SIN) for k in range(0, k_max + 1)]


def tau_labels_odd(k_max: int):
    return [(k, COS if k % 2 == 1 else SIN) for k in range(1, k_max + 1)]


def dphi_label(lab):
    k, t = lab
    if t == COS:
        return (k, SIN), -float(k)
    return (k, COS), float(k)


def mul_cos_label(lab):
    """cos(phi) * trig(k phi) as a list of (label, factor)."""
    k, t = lab
    if t == COS:
        if k == 0:
            return [((1, COS), 1.0)]
        return [((k + 1, COS), 0.5), ((k - 1, COS), 0.5)]
    out = [((k + 1, SIN), 0.5)]
    if k - 1 >= 1:
        out.append(((k - 1, SIN), 0.5))
    return out


def mul_sin_label(lab):
    """sin(phi) * trig(k phi) as a list of (label, factor)."""
    k, t = lab
    if t == COS:
        if k == 0:
            return [((1, SIN), 1.0)]
        out = [((k + 1, SIN), 0.5)]
        if k - 1 >= 1:
            out.append(((k - 1, SIN), -0.5))
        return out
    return [((max(k - 1, 0), COS), 0.5), ((k + 1, COS), -0.5)]


# ---------------------------------------------------------------------------
# grid and fields
# ---------------------------------------------------------------------------

class PolarGrid:
    """Fourier-in-phi x Chebyshev-Lobatto-in-r grid with exact mode transforms."""

    def __init__(self, geom: AnnulusGeometry, k_max: int, n_r: int):
        self.geom = geom
        self.k_max = k_max
        self.n_r = n_r
        self.r, self.d1 = cheb.lobatto(n_r, geom.r_i, geom.r_o)
        self.d2 = self.d1 @ self.d1
        self.labels = full_labels(k_max)
        self.index = {lab: i for i, lab in enumerate(self.labels)}
        self.n_lab = len(self.labels)
        # product projections up to k_max are exact for n_phi > 3 k_max
        self.n_phi = 4 * (k_max + 2)
        self.phi = 2 * np.pi * np.arange(self.n_phi) / self.n_phi
        self._E = np.zeros((self.n_phi, self.n_lab))
        self._P = np.zeros((self.n_lab, self.n_phi))
        for i, (k, t) in enumerate(self.labels):
            col = np.cos(k * self.phi) if t == COS else np.sin(k * self.phi)
            self._E[:, i] = col
            w = 1.0 / self.n_phi if (k == 0 and t == COS) else 2.0 / self.n_phi
            self._P[i, :] = w * col
        self._Dphi = np.zeros((self.n_lab, self.n_lab))
        for i, lab in enumerate(self.labels):
            out, f = dphi_label(lab)
            if out in self.index:
                self._Dphi[self.index[out], i] = f

    # batched coefficient ops; coefficient arrays are (..., n_lab, n_r)
    def to_grid(self, c: np.ndarray) -> np.ndarray:
        return np.einsum("pl,...ln->...pn", self._E, c)

    def to_modes(self, g: np.ndarray) -> np.ndarray:
        return np.einsum("lp,...pn->...ln", self._P, g)

    def dphi(self, c: np.ndarray) -> np.ndarray:
        return np.einsum("lm,...mn->...ln", self._Dphi, c)

    def dr(self, c: np.ndarray) -> np.ndarray:
        return c @ self.d1.T

    def lap_k(self, k: int) -> np.ndarray:
        """Radial part of the Laplacian for azimuthal wavenumber k."""
        r = self.r
        return self.d2 + np.diag(1 / r) @ self.d1 - k**2 * np.diag(1 / r**2)

    def velocity(self, psi: np.ndarray):
        """(v^r, v^phi) mode coefficients from stream-function coefficients."""
        vr = self.dphi(psi) / self.r[None, :]
        vphi = -self.dr(psi)
        return vr, vphi

    def pack(self, labels):
        """Row indices of a label subset."""
        return np.array([self.index[lab] for lab in labels], dtype=int)


def reflect_scalar(c: np.ndarray, grid: PolarGrid) -> np.ndarray:
    """Coefficients of s(r, pi - phi) from those of s(r, phi)."""
    out = np.empty_like(c)
    for i, (k, t) in enumerate(grid.labels):
        sign = (-1.0) ** k if t == COS else (-1.0) ** (k + 1)
        out[..., i, :] = sign * c[..., i, :]
    return out


@dataclass
class PolarField:
    """Velocity components and temperature on the annulus grid (mode space)."""

    grid: PolarGrid
    vr: np.ndarray
    vphi: np.ndarray
    tau: np.ndarray

    @classmethod
    def zeros(cls, grid: PolarGrid) -> "PolarField":
        z = np.zeros((grid.n_lab, grid.n_r))
        return cls(grid, z.copy(), z.copy(), z.copy())

    @classmethod
    def from_stream(cls, grid: PolarGrid, psi: np.ndarray, tau: np.ndarray | None = None) -> "PolarField":
        vr, vphi = grid.velocity(psi)
        return cls(grid, vr, vphi, np.zeros_like(vr) if tau is None else tau)

    def copy(self) -> "PolarField":
        return PolarField(self.grid, self.vr.copy(), self.vphi.copy(), self.tau.copy())

    def reflected(self) -> "PolarField":
        """Image under the mirror symmetry about the vertical diameter."""
        return PolarField(self.grid,
                          reflect_scalar(self.vr, self.grid),
                          -reflect_scalar(self.vphi, self.grid),
                          reflect_scalar(self.tau, self.grid))

    def on_grid(self):
        g = self.grid
        return g.to_grid(self.vr), g.to_grid(self.vphi), g.to_grid(self.tau)

    def divergence(self) -> np.ndarray:
        """(1/r) d_r(r v^r) + (1/r) d_phi v^phi on the grid."""
        g = self.grid
        r = g.r[None, :]
        term = g.dr(self.vr * r) / r + g.dphi(self.vphi) / r
        return g.to_grid(term)


def symmetry_residual(field: PolarField) -> float:
    """Max over the grid of the componentwise mirror-symmetry defect."""
    d = field.copy()
    refl = field.reflected()
    g = field.grid
    dvr = g.to_grid(d.vr - refl.vr)
    dvp = g.to_grid(d.vphi - refl.vphi)
    dta = g.to_grid(d.tau - refl.tau)
    return float(np.max(np.abs(dvr) + np.abs(dvp) + np.abs(dta)))


def symmetrize(field: PolarField) -> PolarField:
    """Average a field with its mirror image (projection onto the even class)."""
    refl = field.reflected()
    return PolarField(field.grid, 0.5 * (field.vr + refl.vr),
                      0.5 * (field.vphi + refl.vphi), 0.5 * (field.tau + refl.tau))


# ---------------------------------------------------------------------------
# steady equations: operators, residual, solver
# ---------------------------------------------------------------------------

class _SteadyProblem:
    """Assembled collocation operators for the symmetric steady problem."""

    def __init__(self, params: AnnulusParams, grid: PolarGrid):
        self.params = params
        self.grid = grid
        self.psi_l = psi_labels_even(grid.k_max)
        self.tau_l = tau_labels_even(grid.k_max)
        self.n_psi = len(self.psi_l)
        self.n_tau = len(self.tau_l)
        nr = grid.n_r
        self.n_unknowns = (self.n_psi + self.n_tau) * nr
        self.i_psi = {lab: i * nr for i, lab in enumerate(self.psi_l)}
        self.i_tau = {lab: (self.n_psi + j) * nr for j, lab in enumerate(self.tau_l)}
        self._assemble_linear()

    def _dx_block(self, lab_in, lab_out) -> np.ndarray | None:
        """Radial matrix of the horizontal derivative cos(phi) d_r - (sin(phi)/r) d_phi."""
        g = self.grid
        block = None
        for out, f in mul_cos_label(lab_in):
            if out == lab_out:
                block = (block if block is not None else 0) + f * g.d1
        dlab, df = dphi_label(lab_in)
        for out, f in mul_sin_label(dlab):
            if out == lab_out:
                block = (block if block is not None else 0) - f * df * np.diag(1 / g.r)
        return block

    def _assemble_linear(self):
        g = self.grid
        nr = g.n_r
        p = self.params
        a = np.zeros((self.n_unknowns, self.n_unknowns))
        for lab in self.psi_l:
            k, _ = lab
            i0 = self.i_psi[lab]
            lk = g.lap_k(k)
            a[i0:i0 + nr, i0:i0 + nr] += -(lk @ lk)
            for tlab in self.tau_l:
                blk = self._dx_block(tlab, lab)
                if blk is not None:
                    j0 = self.i_tau[tlab]
                    a[i0:i0 + nr, j0:j0 + nr] += p.ra * blk
        for lab in self.tau_l:
            k, _ = lab
            j0 = self.i_tau[lab]
            a[j0:j0 + nr, j0:j0 + nr] += g.lap_k(k)
            for plab in self.psi_l:
                out, f = dphi_label(plab)
                if out == lab:
                    i0 = self.i_psi[plab]
                    a[j0:j0 + nr, i0:i0 + nr] += f * np.diag(1 / (g.r**2 * p.b))
        self._set_bc_rows(a)
        self.a_lin = a
        self.forcing = np.zeros(self.n_unknowns)
        if (1, COS) in self.i_psi:
            i0 = self.i_psi[(1, COS)]
            self.forcing[i0:i0 + nr] = (p.ra / p.b) / g.r
        self._clear_bc_entries(self.forcing)

    def _set_bc_rows(self, a: np.ndarray):
        g = self.grid
        nr = g.n_r
        for lab in self.psi_l:
            i0 = self.i_psi[lab]
            for row in (i0, i0 + 1, i0 + nr - 2, i0 + nr - 1):
                a[row, :] = 0.0
            a[i0, i0] = 1.0
            a[i0 + nr - 1, i0 + nr - 1] = 1.0
            a[i0 + 1, i0:i0 + nr] = g.d1[0, :]
            a[i0 + nr - 2, i0:i0 + nr] = g.d1[-1, :]
        for lab in self.tau_l:
            j0 = self.i_tau[lab]
            a[j0, :] = 0.0
            a[j0 + nr - 1, :] = 0.0
            a[j0, j0] = 1.0
            a[j0 + nr - 1, j0 + nr - 1] = 1.0

    def _clear_bc_entries(self, vec: np.ndarray):
        nr = self.grid.n_r
        for lab in self.psi_l:
            i0 = self.i_psi[lab]
            vec[[i0, i0 + 1, i0 + nr - 2, i0 + nr - 1]] = 0.0
        for lab in self.tau_l:
            j0 = self.i_tau[lab]
            vec[[j0, j0 + nr - 1]] = 0.0

    @cached_property
    def _bc_mask(self) -> np.ndarray:
        mask = np.ones(self.n_unknowns, dtype=bool)
        nr = self.grid.n_r
        for lab in self.psi_l:
            i0 = self.i_psi[lab]
            mask[[i0, i0 + 1, i0 + nr - 2, i0 + nr - 1]] = False
        for lab in self.tau_l:
            j0 = self.i_tau[lab]
            mask[[j0, j0 + nr - 1]] = False
        return mask

    # ---- packing between solver vectors and full-label coefficient arrays
    def unpack(self, x: np.ndarray):
        nr = self.grid.n_r
        psi = np.zeros((x.shape[0], self.grid.n_lab, nr) if x.ndim == 2 else (self.grid.n_lab, nr))
        tau = np.zeros_like(psi)
        for i, lab in enumerate(self.psi_l):
            psi[..., self.grid.index[lab], :] = x[..., i * nr:(i + 1) * nr]
        off = self.n_psi * nr
        for j, lab in enumerate(self.tau_l):
            tau[..., self.grid.index[lab], :] = x[..., off + j * nr: off + (j + 1) * nr]
        return psi, tau

    def pack_rows(self, omega_rows: np.ndarray, tau_rows: np.ndarray) -> np.ndarray:
        """Gather full-label equation rows into the packed unknown ordering."""
        g = self.grid
        nr = g.n_r
        lead = omega_rows.shape[:-2]
        out = np.zeros(lead + (self.n_unknowns,))
        for i, lab in enumerate(self.psi_l):
            out[..., i * nr:(i + 1) * nr] = omega_rows[..., g.index[lab], :]
        off = self.n_psi * nr
        for j, lab in enumerate(self.tau_l):
            out[..., off + j * nr: off + (j + 1) * nr] = tau_rows[..., g.index[lab], :]
        return out

    # ---- nonlinear terms (batched over a leading axis)
    def transport(self, vr_o, vphi_o, psi_n, tau_n):
        """curl(v_old . grad v_new)/Pr and v_old . grad tau_new, full-label rows."""
        g = self.grid
        r = g.r[None, :]
        vr_n, vphi_n = g.velocity(psi_n)
        gr_vr = g.to_grid(vr_n)
        gr_vp = g.to_grid(vphi_n)
        adv_r = vr_o * g.to_grid(g.dr(vr_n)) + vphi_o / r * (g.to_grid(g.dphi(vr_n)) - gr_vp)
        adv_p = vr_o * g.to_grid(g.dr(vphi_n)) + vphi_o / r * (gr_vr + g.to_grid(g.dphi(vphi_n)))
        adv_r_m = g.to_modes(adv_r)
        adv_p_m = g.to_modes(adv_p)
        curl = (g.dr(adv_p_m * r) - g.dphi(adv_r_m)) / r
        adv_t = vr_o * g.to_grid(g.dr(tau_n)) + vphi_o / r * g.to_grid(g.dphi(tau_n))
        return curl / self.params.pr, g.to_modes(adv_t)

    def nonlinear_rows(self, psi, tau):
        g = self.grid
        vr, vphi = g.velocity(psi)
        return self.transport(g.to_grid(vr), g.to_grid(vphi), psi, tau)

    def transport_matrix(self, psi, tau) -> np.ndarray:
        """Matrix of the frozen-transport operator on packed unknowns."""
        g = self.grid
        nr = g.n_r
        vr, vphi = g.velocity(psi)
        vr_g, vphi_g = g.to_grid(vr)[None], g.to_grid(vphi)[None]
        basis = np.eye(self.n_unknowns)
        psi_b, tau_b = self.unpack(basis)
        curl, advt = self.transport(vr_g, vphi_g, psi_b, tau_b)
        t = self.pack_rows(curl, advt).T  # columns follow the basis ordering
        for lab in self.psi_l:
            i0 = self.i_psi[lab]
            t[[i0, i0 + 1, i0 + nr - 2, i0 + nr - 1], :] = 0.0
        for lab in self.tau_l:
            j0 = self.i_tau[lab]
            t[[j0, j0 + nr - 1], :] = 0.0
        return t

    def residual(self, x: np.ndarray) -> float:
        """Scaled max-norm of the steady equations at the interior nodes."""
        psi, tau = self.unpack(x)
        curl, advt = self.nonlinear_rows(psi, tau)
        nl = self.pack_rows(curl, advt)
        self._clear_bc_entries(nl)
        lin = self.a_lin @ x
        res = lin - self.forcing - nl
        scale = max(1.0, np.abs(lin[self._bc_mask]).max(initial=0.0),
                    np.abs(self.forcing).max(initial=0.0),
                    np.abs(nl).max(initial=0.0))
        return float(np.abs(res[self._bc_mask]).max() / scale)


def steady_residual(field: PolarField, psi: np.ndarray, tau: np.ndarray,
                    params: AnnulusParams):
    """Strong-form residual rows of the steady system for arbitrary fields.

    Operates on the full label space so that reflection-invariance of the
    equations can be checked on non-symmetric inputs.  ``field`` supplies the
    grid; ``psi``/``tau`` are full-label coefficient arrays.
    """
    g = field.grid
    r = g.r[None, :]
    vr, vphi = g.velocity(psi)
    vr_g, vphi_g = g.to_grid(vr), g.to_grid(vphi)
    adv_r = vr_g * g.to_grid(g.dr(vr)) + vphi_g / r * (g.to_grid(g.dphi(vr)) - vphi_g)
    adv_p = vr_g * g.to_grid(g.dr(vphi)) + vphi_g / r * (vr_g + g.to_grid(g.dphi(vphi)))
    curl = (g.dr(g.to_modes(adv_p) * r) - g.dphi(g.to_modes(adv_r))) / r
    adv_t = g.to_modes(vr_g * g.to_grid(g.dr(tau)) + vphi_g / r * g.to_grid(g.dphi(tau)))

    lap2_psi = np.zeros_like(psi)
    lap_tau = np.zeros_like(tau)
    dx_tau = np.zeros_like(psi)
    for i, lab in enumerate(g.labels):
        k, _ = lab
        lk = g.lap_k(k)
        lap2_psi[i] = lk @ (lk @ psi[i])
        lap_tau[i] = lk @ tau[i]
    # horizontal derivative of tau scattered over labels
    for i, lab in enumerate(g.labels):
        for out, f in mul_cos_label(lab):
            if out in g.index:
                dx_tau[g.index[out]] += f * (tau[i] @ g.d1.T)
        dlab, df = dphi_label(lab)
        for out, f in mul_sin_label(dlab):
            if out in g.index:
                dx_tau[g.index[out]] += -f * df * tau[i] / g.r[None, :]

    p = params
    forcing = np.zeros_like(psi)
    forcing[g.index[(1, COS)]] = (p.ra / p.b) / g.r
    r_omega = -lap2_psi + p.ra * dx_tau - forcing - curl / p.pr
    r_tau = lap_tau + g.dphi(psi) / (g.r[None, :] ** 2 * p.b) - adv_t
    return r_omega, r_tau


@dataclass
class BaseState:
    """Converged symmetric steady state with solver metadata."""

    grid: PolarGrid
    params: AnnulusParams
    psi: np.ndarray      # full-label stream-function coefficients
    tau: np.ndarray      # full-label temperature coefficients
    residual: float
    picard_iters: int

    @property
    def v0(self) -> PolarField:
        return PolarField.from_stream(self.grid, self.psi)

    @property
    def tau0(self) -> PolarField:
        z = np.zeros_like(self.tau)
        return PolarField(self.grid, z.copy(), z.copy(), self.tau.copy())

    @property
    def field(self) -> PolarField:
        return PolarField.from_stream(self.grid, self.psi, self.tau)

    def grad_v_norm(self) -> float:
        """||grad v0||_2 via the vorticity identity (v0 vanishes on the walls)."""
        g = self.grid
        om = np.zeros_like(self.psi)
        for i, lab in enumerate(g.labels):
            om[i] = -(g.lap_k(lab[0]) @ self.psi[i])
        w = cheb.clenshaw_curtis_weights(g.n_r, g.geom.r_i, g.geom.r_o)
        om_g = g.to_grid(om)
        return float(np.sqrt(np.sum(om_g**2 * (w * g.r)[None, :]) * 2 * np.pi / g.n_phi))

    def grad_tau_norm(self) -> float:
        g = self.grid
        t_r = g.to_grid(g.dr(self.tau))
        t_p = g.to_grid(g.dphi(self.tau)) / g.r[None, :]
        w = cheb.clenshaw_curtis_weights(g.n_r, g.geom.r_i, g.geom.r_o)
        return float(np.sqrt(np.sum((t_r**2 + t_p**2) * (w * g.r)[None, :]) * 2 * np.pi / g.n_phi))

    def to_json(self) -> str:
        g = self.grid
        coef_psi = cheb.fit_nodal(self.psi.T, g.r, g.geom.r_i, g.geom.r_o)
        coef_tau = cheb.fit_nodal(self.tau.T, g.r, g.geom.r_i, g.geom.r_o)
        return json.dumps({
            "pr": self.params.pr, "ra": self.params.ra, "d": self.params.d,
            "k_max": g.k_max, "n_r": g.n_r,
            "labels": [[k, t] for (k, t) in g.labels],
            "psi_cheb": coef_psi.T.tolist(),
            "tau_cheb": coef_tau.T.tolist(),
            "residual": self.residual, "picard_iters": self.picard_iters,
        }, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "BaseState":
        data = json.loads(text)
        params = AnnulusParams(data["pr"], data["ra"], data["d"])
        grid = PolarGrid(params.geom, data["k_max"], data["n_r"])
        coef_psi = np.asarray(data["psi_cheb"]).T
        coef_tau = np.asarray(data["tau_cheb"]).T
        xi = grid.r
        from numpy.polynomial import chebyshev as _ch
        t = (2 * xi - (grid.geom.r_i + grid.geom.r_o)) / (grid.geom.r_o - grid.geom.r_i)
        v = _ch.chebvander(t, coef_psi.shape[0] - 1)
        return cls(grid, params, (v @ coef_psi).T, (v @ coef_tau).T,
                   data["residual"], data["picard_iters"])


def steady_solve(params: AnnulusParams, k_max: int = 8, n_r: int = 32,
                 tol: float = 1e-10, max_iters: int = 60) -> BaseState:
    """Even-symmetric steady state by damped frozen-transport iteration.

    Each pass solves the linear system with the advection operator frozen at
    the current iterate (Stokes + heat + buoyancy + conduction coupling on the
    left); the update is halved whenever the steady residual grows.  Raises
    :class:`PicardDivergenceError` when the iteration stalls, which is the
    expected behaviour once Ra leaves the small-Ra uniqueness regime.
    """
    grid = PolarGrid(params.geom, k_max, n_r)
    prob = _SteadyProblem(params, grid)
    x = np.zeros(prob.n_unknowns)
    res_old = np.inf
    history = []
    for it in range(1, max_iters + 1):
        psi, tau = prob.unpack(x)
        t_mat = prob.transport_matrix(psi, tau)
        x_new = sla.solve(prob.a_lin - t_mat, prob.forcing)
        # damp toward the previous iterate while the residual grows
        step = x_new - x
        alpha = 1.0
        res = prob.residual(x + alpha * step)
        while (not np.isfinite(res) or res > res_old) and alpha > 1e-4:
            alpha *= 0.5
            res = prob.residual(x + alpha * step)
        x = x + alpha * step
        history.append(res)
        res_old = res
        if res < tol:
            psi, tau = prob.unpack(x)
            return BaseState(grid, params, psi, tau, res, it)
    raise PicardDivergenceError(res_old, max_iters)


def zero_base(params: AnnulusParams, k_max: int = 8, n_r: int = 32) -> BaseState:
    """Zero fields packaged as a BaseState (for motionless-base studies)."""
    grid = PolarGrid(params.geom, k_max, n_r)
    z = np.zeros((grid.n_lab, grid.n_r))
    return BaseState(grid, params, z.copy(), z.copy(), 0.0, 0)
