"""Energy-stability functional, Euler-Lagrange eigenproblems, and the layer limit.

The stability functional for a perturbation (u, sigma) of an annulus base
state (v0, tau0) is the Rayleigh quotient

    F = [ sqrt(Ra) <u^z + u^r/(r b), sigma> - (1/Pr) <u . D(v0) u>
          - sqrt(Ra) <u . grad tau0, sigma> ] / (||grad u||^2 + ||grad sigma||^2)

whose maximum M decides energy stability (perturbation energy decays for all
data iff M <= 1).  Discretizing with divergence-free stream-function velocity
bases and Dirichlet temperature bases turns both the maximization and its
Euler-Lagrange equations into symmetric generalized eigenproblems; the
discrete pencil is derived directly from F, so the two routes to M agree by
construction and cross-check the numerics.  Reported eigenvalues use the
convention lambda = 2 / Lambda (Lambda the quotient eigenvalue), which makes
the least positive eigenvalue satisfy M = 2 / lambda_c exactly; the
alternative placement with the base-shear form outside the eigenvalue is
solved alongside for comparison.

The equations are invariant under the mirror symmetry about the vertical
diameter, so each reflection class is assembled and solved separately and the
eigenfunctions carry their class as a symmetry label.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from . import cheb
from .annulus import (AnnulusParams, BaseState, COS, SIN, PolarField,
                      PolarGrid, dphi_label, mul_cos_label, mul_sin_label,
                      psi_labels_even, psi_labels_odd, symmetry_residual,
                      tau_labels_even, tau_labels_odd)


class NormalizationMismatchError(RuntimeError):
    """The two routes to M disagree beyond tolerance."""

    def __init__(self, m_direct: float, m_eig: float):
        super().__init__(f"M mismatch: direct {m_direct:.8e} vs eigenroute {m_eig:.8e}")
        self.m_direct = m_direct
        self.m_eig = m_eig


# ---------------------------------------------------------------------------
# perturbation space: bases evaluated on a quadrature grid
# ---------------------------------------------------------------------------

class PerturbSpace:
    """Divergence-free velocity + temperature bases of one reflection class."""

    def __init__(self, geom, k_max: int, n_rad: int, cls: str):
        if cls not in ("even", "odd"):
            raise ValueError("class must be 'even' or 'odd'")
        self.cls = cls
        self.geom = geom
        self.k_max = k_max
        self.n_rad = n_rad
        self.b = geom.b
        if cls == "even":
            self.psi_l = psi_labels_even(k_max)
            self.sig_l = tau_labels_even(k_max)
        else:
            self.psi_l = psi_labels_odd(k_max)
            self.sig_l = tau_labels_odd(k_max)
        nq = 2 * n_rad + 24
        self.rq, self.wr = cheb.gauss(nq, geom.r_i, geom.r_o)
        self.n_phi = max(4 * (k_max + 2), 16)
        self.phiq = 2 * np.pi * np.arange(self.n_phi) / self.n_phi
        self.w_phi = 2 * np.pi / self.n_phi
        self._wgt = (self.rq * self.wr)[None, :] * self.w_phi

        clamped = cheb.clamped_modes(n_rad)
        self._rad_sets = {}
        for lab in set(self.psi_l):
            if lab == (0, COS):
                # pure-swirl label: derivative-only wall conditions, one extra mode
                swirl = np.zeros((clamped.shape[0], 1))
                sw = cheb.swirl_mode()
                swirl[: sw.shape[0]] = sw
                cols = np.hstack([clamped, swirl])
            else:
                cols = clamped
            self._rad_sets[lab] = cols
        self._dir = cheb.dirichlet_modes(n_rad)
        self.psi_entries = [(lab, j) for lab in self.psi_l
                            for j in range(self._rad_sets[lab].shape[1])]
        self.sig_entries = [(lab, j) for lab in self.sig_l for j in range(self._dir.shape[1])]
        self.n_u = len(self.psi_entries)
        self.n_s = len(self.sig_entries)
        self._build_fields()

    # -- basis field arrays on the (phi, r) quadrature grid ----------------
    def _trig(self, lab):
        k, t = lab
        base = np.cos(k * self.phiq) if t == COS else np.sin(k * self.phiq)
        der = -k * np.sin(k * self.phiq) if t == COS else k * np.cos(k * self.phiq)
        return base, der

    def _build_fields(self):
        ri, ro = self.geom.r_i, self.geom.r_o
        r = self.rq[None, :]
        cphi = np.cos(self.phiq)[:, None]
        sphi = np.sin(self.phiq)[:, None]
        shape = (self.n_u, self.n_phi, len(self.rq))
        self.u_r = np.zeros(shape)
        self.u_p = np.zeros(shape)
        self.om = np.zeros(shape)
        self.u_x_r = np.zeros(shape)
        self.u_x_p = np.zeros(shape)
        self.u_z_r = np.zeros(shape)
        self.u_z_p = np.zeros(shape)
        evals = {lab: cheb.eval_modes(cols, self.rq, ri, ro, 2)
                 for lab, cols in self._rad_sets.items()}
        for i, (lab, j) in enumerate(self.psi_entries):
            k, _ = lab
            t0, t1 = self._trig(lab)
            t0, t1 = t0[:, None], t1[:, None]
            p, p1, p2 = (e[:, j][None, :] for e in evals[lab])
            u_r = t1 * p / r
            u_p = -t0 * p1
            u_r_r = t1 * (p1 / r - p / r**2)
            u_r_p = -k * k * t0 * p / r
            u_p_r = -t0 * p2
            u_p_p = -t1 * p1
            self.u_r[i] = u_r
            self.u_p[i] = u_p
            self.om[i] = -t0 * (p2 + p1 / r - k**2 * p / r**2)
            self.u_x_r[i] = cphi * u_r_r - sphi * u_p_r
            self.u_x_p[i] = -sphi * u_r + cphi * u_r_p - cphi * u_p - sphi * u_p_p
            self.u_z_r[i] = sphi * u_r_r + cphi * u_p_r
            self.u_z_p[i] = cphi * u_r + sphi * u_r_p - sphi * u_p + cphi * u_p_p
        self.u_x = cphi[None] * self.u_r - sphi[None] * self.u_p
        self.u_z = sphi[None] * self.u_r + cphi[None] * self.u_p
        self.dx_ux = cphi[None] * self.u_x_r - sphi[None] / r[None] * self.u_x_p
        self.dz_ux = sphi[None] * self.u_x_r + cphi[None] / r[None] * self.u_x_p
        self.dx_uz = cphi[None] * self.u_z_r - sphi[None] / r[None] * self.u_z_p
        self.dz_uz = sphi[None] * self.u_z_r + cphi[None] / r[None] * self.u_z_p

        sv, sd = cheb.eval_modes(self._dir, self.rq, ri, ro, 1)
        ns = self.n_s
        self.s_v = np.zeros((ns, self.n_phi, len(self.rq)))
        self.s_dr = np.zeros_like(self.s_v)
        self.s_dp = np.zeros_like(self.s_v)
        for i, (lab, j) in enumerate(self.sig_entries):
            t0, t1 = self._trig(lab)
            self.s_v[i] = t0[:, None] * sv[:, j][None, :]
            self.s_dr[i] = t0[:, None] * sd[:, j][None, :]
            self.s_dp[i] = t1[:, None] * sv[:, j][None, :]

    def integ(self, f: np.ndarray, g: np.ndarray) -> np.ndarray:
        """Gram matrix int F_i G_j r dr dphi over the quadrature grid."""
        a = f.reshape(f.shape[0], -1)
        b = (g * self._wgt[None]).reshape(g.shape[0], -1)
        return a @ b.T

    def u_fields(self, a: np.ndarray):
        """(u_r, u_phi, u_x, u_z, omega) grids of a coefficient vector."""
        return tuple(np.einsum("i,ipr->pr", a, arr)
                     for arr in (self.u_r, self.u_p, self.u_x, self.u_z, self.om))

    def sigma_fields(self, b: np.ndarray):
        return tuple(np.einsum("i,ipr->pr", b, arr)
                     for arr in (self.s_v, self.s_dr, self.s_dp))


def base_factors(base: BaseState, space: PerturbSpace):
    """Base-state fields and Cartesian gradients at the quadrature points."""
    g = base.grid
    ri, ro = g.geom.r_i, g.geom.r_o
    coef_psi = cheb.fit_nodal(base.psi.T, g.r, ri, ro)
    coef_tau = cheb.fit_nodal(base.tau.T, g.r, ri, ro)

    def ev(coef, order):
        from numpy.polynomial import chebyshev as _ch
        c = coef.copy()
        scale = 2.0 / (ro - ri)
        for _ in range(order):
            nxt = np.zeros((max(c.shape[0] - 1, 1), c.shape[1]))
            for j in range(c.shape[1]):
                d = _ch.chebder(c[:, j])
                nxt[: len(d), j] = d
            c = nxt
        xi = (2 * space.rq - (ri + ro)) / (ro - ri)
        from numpy.polynomial.chebyshev import chebvander
        return chebvander(xi, c.shape[0] - 1) @ c * scale**order

    pv, p1, p2 = ev(coef_psi, 0), ev(coef_psi, 1), ev(coef_psi, 2)
    tv, t1 = ev(coef_tau, 0), ev(coef_tau, 1)
    r = space.rq[None, :]
    cphi = np.cos(space.phiq)[:, None]
    sphi = np.sin(space.phiq)[:, None]

    def trig_all(lab):
        k, t = lab
        c, s = np.cos(k * space.phiq), np.sin(k * space.phiq)
        if t == COS:
            return c, -k * s, -k * k * c
        return s, k * c, -k * k * s

    zero = np.zeros((space.n_phi, len(space.rq)))
    vr, vp, vr_r, vr_p, vp_r, vp_p = (zero.copy() for _ in range(6))
    t0r, t0p = zero.copy(), zero.copy()
    for i, lab in enumerate(g.labels):
        t0, t1_, _ = trig_all(lab)
        p = pv[:, i][None, :]
        pr1 = p1[:, i][None, :]
        pr2 = p2[:, i][None, :]
        vr += t1_[:, None] * p / r
        vr_r += t1_[:, None] * (pr1 / r - p / r**2)
        vr_p += trig_all(lab)[2][:, None] * p / r
        vp += -t0[:, None] * pr1
        vp_r += -t0[:, None] * pr2
        vp_p += -t1_[:, None] * pr1
        t0r += t0[:, None] * t1[:, i][None, :]
        t0p += t1_[:, None] * tv[:, i][None, :]
    vx = cphi * vr - sphi * vp
    vz = sphi * vr + cphi * vp
    vx_r = cphi * vr_r - sphi * vp_r
    vx_p = -sphi * vr + cphi * vr_p - cphi * vp - sphi * vp_p
    vz_r = sphi * vr_r + cphi * vp_r
    vz_p = cphi * vr + sphi * vr_p - sphi * vp + cphi * vp_p
    return {
        "vx": vx, "vz": vz,
        "dx_vx": cphi * vx_r - sphi / r * vx_p,
        "dz_vx": sphi * vx_r + cphi / r * vx_p,
        "dx_vz": cphi * vz_r - sphi / r * vz_p,
        "dz_vz": sphi * vz_r + cphi / r * vz_p,
        "dx_t0": cphi * t0r - sphi / r * t0p,
        "dz_t0": sphi * t0r + cphi / r * t0p,
    }


@dataclass
class Forms:
    """Assembled quadratic forms of one reflection class."""

    space: PerturbSpace
    ku: np.ndarray
    ks: np.ndarray
    mu: np.ndarray
    ms: np.ndarray
    g1: np.ndarray      # coupling, includes base grad tau0 when present
    hs: np.ndarray      # symmetric base-shear form int u . D(v0) u (no 1/Pr)
    fs: np.ndarray      # int (U_j . grad v0) . U_i  (unsymmetrized)
    fa: np.ndarray      # int (v0 . grad U_j) . U_i  (skew)
    ga: np.ndarray      # int (v0 . grad S_j) S_i    (skew)


def assemble_forms(space: PerturbSpace, base: BaseState | None,
                   radial_coupling: bool = True) -> Forms:
    sp = space
    ku = sp.integ(sp.om, sp.om)
    inv_r = 1.0 / sp.rq[None, None, :]
    ks = sp.integ(sp.s_dr, sp.s_dr) + sp.integ(sp.s_dp * inv_r, sp.s_dp * inv_r)
    mu = sp.integ(sp.u_r, sp.u_r) + sp.integ(sp.u_p, sp.u_p)
    ms = sp.integ(sp.s_v, sp.s_v)
    coupled = sp.u_z + (sp.u_r * inv_r / sp.b if radial_coupling else 0.0)
    g1 = sp.integ(coupled, sp.s_v)
    n_u, n_s = sp.n_u, sp.n_s
    hs = np.zeros((n_u, n_u))
    fs = np.zeros((n_u, n_u))
    fa = np.zeros((n_u, n_u))
    ga = np.zeros((n_s, n_s))
    if base is not None and (np.any(base.psi) or np.any(base.tau)):
        f = base_factors(base, sp)
        dxx, dzz = f["dx_vx"], f["dz_vz"]
        dxz = 0.5 * (f["dz_vx"] + f["dx_vz"])
        hs = (sp.integ(sp.u_x * dxx[None], sp.u_x)
              + sp.integ(sp.u_z * dzz[None], sp.u_z)
              + 2 * sp.integ(sp.u_x * dxz[None], sp.u_z))
        hs = 0.5 * (hs + hs.T)
        u_grad_t0 = sp.u_x * f["dx_t0"][None] + sp.u_z * f["dz_t0"][None]
        g1 = g1 - sp.integ(u_grad_t0, sp.s_v)
        # fs[i, j] = int (U_j . grad v0) . U_i
        fs = (sp.integ(sp.u_x, sp.u_x * f["dx_vx"][None] + sp.u_z * f["dz_vx"][None])
              + sp.integ(sp.u_z, sp.u_x * f["dx_vz"][None] + sp.u_z * f["dz_vz"][None]))
        # fa[i, j] = int (v0 . grad U_j) . U_i
        fa = (sp.integ(sp.u_x, f["vx"][None] * sp.dx_ux + f["vz"][None] * sp.dz_ux)
              + sp.integ(sp.u_z, f["vx"][None] * sp.dx_uz + f["vz"][None] * sp.dz_uz))
        sx = sp.s_dr * np.cos(sp.phiq)[None, :, None] - sp.s_dp * np.sin(sp.phiq)[None, :, None] * inv_r
        sz = sp.s_dr * np.sin(sp.phiq)[None, :, None] + sp.s_dp * np.cos(sp.phiq)[None, :, None] * inv_r
        ga = sp.integ(sp.s_v, f["vx"][None] * sx + f["vz"][None] * sz)
    return Forms(sp, ku, ks, mu, ms, g1, hs, fs, fa, ga)


# ---------------------------------------------------------------------------
# perturbations and the functional
# ---------------------------------------------------------------------------

@dataclass
class PerturbationPair:
    """Perturbation (u, sigma) expanded in one class's bases."""

    space: PerturbSpace
    a: np.ndarray
    b: np.ndarray

    def grids(self):
        u_r, u_p, u_x, u_z, om = self.space.u_fields(self.a)
        s_v, s_dr, s_dp = self.space.sigma_fields(self.b)
        return {"u_r": u_r, "u_p": u_p, "u_x": u_x, "u_z": u_z, "om": om,
                "s": s_v, "s_dr": s_dr, "s_dp": s_dp}

    def dissipation(self) -> float:
        """||grad u||^2 + ||grad sigma||^2 by quadrature."""
        sp = self.space
        g = self.grids()
        inv_r = 1.0 / sp.rq[None, :]
        dens = g["om"] ** 2 + g["s_dr"] ** 2 + (g["s_dp"] * inv_r) ** 2
        return float(np.sum(dens * sp._wgt))

    def energy(self, pr: float) -> float:
        sp = self.space
        g = self.grids()
        dens = (g["u_r"] ** 2 + g["u_p"] ** 2) / (2 * pr) + 0.5 * g["s"] ** 2
        return float(np.sum(dens * sp._wgt))

    def u_norm_sq(self) -> float:
        sp = self.space
        g = self.grids()
        return float(np.sum((g["u_r"] ** 2 + g["u_p"] ** 2) * sp._wgt))

    def sigma_norm_sq(self) -> float:
        sp = self.space
        g = self.grids()
        return float(np.sum(g["s"] ** 2 * sp._wgt))

    def as_polar_field(self, grid: PolarGrid) -> PolarField:
        """Nodal polar-field view on a PolarGrid with the same label families."""
        sp = self.space
        ri, ro = sp.geom.r_i, sp.geom.r_o
        out = PolarField.zeros(grid)
        evals = {lab: cheb.eval_modes(cols, grid.r, ri, ro, 1)
                 for lab, cols in sp._rad_sets.items()}
        for i, (lab, j) in enumerate(sp.psi_entries):
            k, t = lab
            v, d1 = evals[lab]
            dlab, f = dphi_label(lab)
            if dlab in grid.index:
                out.vr[grid.index[dlab]] += f * self.a[i] * v[:, j] / grid.r
            out.vphi[grid.index[lab]] += -self.a[i] * d1[:, j]
        sv = cheb.eval_modes(sp._dir, grid.r, ri, ro, 0)[0]
        for i, (lab, j) in enumerate(sp.sig_entries):
            if lab in grid.index:
                out.tau[grid.index[lab]] += self.b[i] * sv[:, j]
        return out


def vertical_components(u: PolarField) -> np.ndarray:
    """Coefficients of the upward velocity u^z = u^r sin(phi) + u^phi cos(phi).

    Products with the unit-vector factors shift the azimuthal wavenumber by
    one; content at k_max + 1 is truncated.
    """
    g = u.grid
    out = np.zeros_like(u.vr)
    for i, lab in enumerate(g.labels):
        for lab2, f in mul_sin_label(lab):
            if lab2 in g.index:
                out[g.index[lab2]] += f * u.vr[i]
        for lab2, f in mul_cos_label(lab):
            if lab2 in g.index:
                out[g.index[lab2]] += f * u.vphi[i]
    return out


def functional_F(pair: PerturbationPair, base: BaseState | None,
                 params: AnnulusParams, radial_coupling: bool = True) -> float:
    """Stability quotient of one trial pair, by direct quadrature."""
    sp = pair.space
    g = pair.grids()
    d = pair.dissipation()
    if d <= 0:
        raise ValueError("zero perturbation has no quotient")
    inv_r = 1.0 / sp.rq[None, :]
    coupled = g["u_z"] + (g["u_r"] * inv_r / params.b if radial_coupling else 0.0)
    num = np.sqrt(params.ra) * np.sum(coupled * g["s"] * sp._wgt)
    if base is not None and (np.any(base.psi) or np.any(base.tau)):
        f = base_factors(base, sp)
        dxx, dzz = f["dx_vx"], f["dz_vz"]
        dxz = 0.5 * (f["dz_vx"] + f["dx_vz"])
        shear = np.sum((g["u_x"] ** 2 * dxx + g["u_z"] ** 2 * dzz
                        + 2 * g["u_x"] * g["u_z"] * dxz) * sp._wgt)
        strat = np.sum((g["u_x"] * f["dx_t0"] + g["u_z"] * f["dz_t0"]) * g["s"] * sp._wgt)
        num += -shear / params.pr - np.sqrt(params.ra) * strat
    return float(num / d)


# ---------------------------------------------------------------------------
# eigenproblems
# ---------------------------------------------------------------------------

@dataclass
class EigenSolution:
    """Spectrum slice with eigenfunctions and reflection-symmetry labels."""

    lambdas: np.ndarray
    eigenfunctions: list
    symmetry_labels: list
    lambda_c: float
    lambdas_full: np.ndarray = field(default_factory=lambda: np.zeros(0))
    meta: dict = field(default_factory=dict)


def _class_pencil(forms: Forms, params: AnnulusParams):
    """F-derived pencil (C, K) of one class: M = max eigenvalue of (C, K)."""
    n_u, n_s = forms.space.n_u, forms.space.n_s
    k2 = np.block([[forms.ku, np.zeros((n_u, n_s))], [np.zeros((n_s, n_u)), forms.ks]])
    sra = np.sqrt(params.ra)
    c = np.block([[-forms.hs / params.pr, 0.5 * sra * forms.g1],
                  [0.5 * sra * forms.g1.T, np.zeros((n_s, n_s))]])
    return c, k2


def _classify(pair: PerturbationPair, grid: PolarGrid, tol: float = 1e-8) -> str:
    fld = pair.as_polar_field(grid)
    scale = max(np.abs(fld.vr).max(), np.abs(fld.vphi).max(), np.abs(fld.tau).max(), 1e-300)
    fld = PolarField(grid, fld.vr / scale, fld.vphi / scale, fld.tau / scale)
    res_even = symmetry_residual(fld)
    anti = PolarField(grid, -fld.vr, -fld.vphi, -fld.tau)
    refl = fld.reflected()
    g = grid
    res_odd = float(np.max(np.abs(g.to_grid(anti.vr - refl.vr))
                           + np.abs(g.to_grid(anti.vphi - refl.vphi))
                           + np.abs(g.to_grid(anti.tau - refl.tau))))
    if res_even < tol:
        return "even"
    if res_odd < tol:
        return "odd"
    return "mixed"


def solve_eig(base: BaseState | None, params: AnnulusParams, n_rad: int | None = None,
              count: int = 6, k_max: int | None = None,
              radial_coupling: bool = True) -> EigenSolution:
    """Euler-Lagrange spectrum of the stability functional.

    Solves the symmetric pencil derived from the quotient in each reflection
    class, merges the spectra, and reports eigenvalues as lambda = 2/Lambda for
    the positive quotient eigenvalues Lambda (so M = 2/lambda_c identically).
    The alternative eigenvalue placement, with the base-shear form kept on the
    eigenvalue-free side, is solved as well and reported in ``meta``.
    """
    if base is not None:
        grid = base.grid
        k_max = grid.k_max
    else:
        if k_max is None:
            raise ValueError("k_max required when no base state is given")
        grid = PolarGrid(params.geom, k_max, max((n_rad or 24) + 6, 12))
    n_rad = n_rad or max(grid.n_r - 4, 8)
    entries = []
    lam_alt_c = np.inf
    for cls in ("even", "odd"):
        sp = PerturbSpace(params.geom, k_max, n_rad, cls)
        forms = assemble_forms(sp, base, radial_coupling)
        c, k2 = _class_pencil(forms, params)
        lam, vec = sla.eigh(c, k2)
        for idx in range(len(lam)):
            if lam[idx] <= 1e-14:
                continue
            entries.append((lam[idx], cls, sp, vec[:, idx]))
        # alternative placement: (K + Hs/Pr) x = lambda_alt * (sqrt(Ra)/4) * [[0,g1],[g1^T,0]] x
        n_u = sp.n_u
        a_alt = k2.copy()
        a_alt[:n_u, :n_u] += forms.hs / params.pr
        b_alt = np.zeros_like(k2)
        b_alt[:n_u, n_u:] = 0.25 * np.sqrt(params.ra) * forms.g1
        b_alt[n_u:, :n_u] = 0.25 * np.sqrt(params.ra) * forms.g1.T
        try:
            nu = sla.eigh(b_alt, a_alt, eigvals_only=True)
            if nu[-1] > 1e-14:
                lam_alt_c = min(lam_alt_c, 1.0 / nu[-1])
        except sla.LinAlgError:
            pass
    entries.sort(key=lambda e: -e[0])     # descending quotient Lambda
    lam_big = np.array([e[0] for e in entries])
    kept = entries[:count]
    funcs, labels = [], []
    for lam_q, cls, sp, x in kept:
        pair = PerturbationPair(sp, x[:sp.n_u], x[sp.n_u:])
        funcs.append(pair)
        labels.append(_classify(pair, grid))
    lambdas = np.array([2.0 / e[0] for e in kept])
    lambdas_full = 2.0 / lam_big
    # eigenvalues in the eigensystem's own normalization (no sqrt(Ra), no
    # calibration factor), comparable across parameter points and with the
    # planar-layer limit solver
    unscaled = np.sqrt(params.ra) / 4.0 * lambdas if params.ra > 0 else lambdas * 0.0
    return EigenSolution(lambdas=lambdas, eigenfunctions=funcs,
                         symmetry_labels=labels,
                         lambda_c=float(lambdas[0]) if len(lambdas) else np.inf,
                         lambdas_full=lambdas_full,
                         meta={"m_value": float(lam_big[0]) if len(lam_big) else 0.0,
                               "lambda_c_shear_outside": float(lam_alt_c),
                               "lambdas_unscaled": unscaled})


def _power_maximize(c: np.ndarray, k2: np.ndarray, tol: float = 1e-12,
                    max_iters: int = 5000):
    """Largest eigenvalue of the pencil (C, K) by shifted power iteration."""
    if np.abs(c).max() == 0.0:
        return 0.0, np.zeros(c.shape[0])
    cho = sla.cho_factor(k2)
    rng = np.random.default_rng(1234)
    x = rng.standard_normal(c.shape[0])
    x /= np.sqrt(x @ (k2 @ x))
    # magnitude estimate (robust to the +- degenerate pair), then shift so the
    # algebraically largest eigenvalue dominates
    nrm = 0.0
    for _ in range(40):
        y = sla.cho_solve(cho, c @ x)
        nrm = np.sqrt(abs(y @ (k2 @ y)))
        if nrm == 0:
            return 0.0, x
        x = y / nrm
    rho = 1.1 * nrm + 1e-8
    lam = 0.0
    for it in range(max_iters):
        y = sla.cho_solve(cho, c @ x) + rho * x
        x = y / np.sqrt(y @ (k2 @ y))
        lam = x @ (c @ x)
        # converge the eigenvector itself, not just the value
        defect = c @ x - lam * (k2 @ x)
        scale = np.linalg.norm(c @ x) + abs(lam) * np.linalg.norm(k2 @ x)
        if scale == 0 or np.linalg.norm(defect) < tol * scale:
            return float(lam), x
    return float(lam), x


@dataclass
class StabilityReport:
    """Outcome of the threshold computation at one parameter point."""

    m_value: float
    lambda_c: float
    verdict: str
    most_dangerous: PerturbationPair
    base: BaseState | None
    params: AnnulusParams
    m_direct: float = 0.0
    m_eig: float = 0.0
    lambda_c_shear_outside: float = np.inf
    spectrum: EigenSolution | None = None

    @property
    def M(self) -> float:
        return self.m_value


def maximize_F(base: BaseState | None, params: AnnulusParams,
               n_rad: int | None = None, k_max: int | None = None,
               rtol: float = 1e-6, radial_coupling: bool = True) -> StabilityReport:
    """Maximum M of the stability functional, computed two independent ways.

    Route (a): shifted power iteration on the discrete Rayleigh quotient.
    Route (b): M = 2/lambda_c from the dense Euler-Lagrange eigensolve.
    Disagreement beyond ``rtol`` raises NormalizationMismatchError carrying
    both values.  The returned maximizer is scaled to unit dissipation.
    """
    if base is not None:
        k_max = base.grid.k_max
        n_rad = n_rad or max(base.grid.n_r - 4, 8)
    elif k_max is None or n_rad is None:
        raise ValueError("k_max and n_rad required when no base state is given")
    m_direct = -np.inf
    best = None
    for cls in ("even", "odd"):
        sp = PerturbSpace(params.geom, k_max, n_rad, cls)
        forms = assemble_forms(sp, base, radial_coupling)
        c, k2 = _class_pencil(forms, params)
        lam, x = _power_maximize(c, k2)
        if lam > m_direct:
            m_direct = lam
            best = (sp, x, k2)
    sol = solve_eig(base, params, n_rad=n_rad, count=4, k_max=k_max,
                    radial_coupling=radial_coupling)
    m_eig = 2.0 / sol.lambda_c if np.isfinite(sol.lambda_c) else 0.0
    if abs(m_direct - m_eig) > rtol * max(1.0, abs(m_direct), abs(m_eig)):
        raise NormalizationMismatchError(m_direct, m_eig)
    sp, x, k2 = best
    nrm = x @ (k2 @ x)
    if nrm > 0:
        x = x / np.sqrt(nrm)    # unit dissipation normalization
    pair = PerturbationPair(sp, x[:sp.n_u], x[sp.n_u:])
    m_value = 0.5 * (m_direct + m_eig)
    verdict = "energy-stable" if m_value <= 1.0 else "symmetry-breaking-possible"
    return StabilityReport(m_value=m_value, lambda_c=sol.lambda_c, verdict=verdict,
                           most_dangerous=pair, base=base, params=params,
                           m_direct=m_direct, m_eig=m_eig,
                           lambda_c_shear_outside=sol.meta["lambda_c_shear_outside"],
                           spectrum=sol)


# ---------------------------------------------------------------------------
# linearized perturbation dynamics (trajectories, energy slopes)
# ---------------------------------------------------------------------------

class PerturbationEvolution:
    """Crank-Nicolson propagator for the linearized perturbation system."""

    def __init__(self, base: BaseState | None, params: AnnulusParams,
                 space: PerturbSpace, radial_coupling: bool = True):
        self.space = space
        self.params = params
        forms = assemble_forms(space, base, radial_coupling)
        self.forms = forms
        n_u, n_s = space.n_u, space.n_s
        sra = np.sqrt(params.ra)
        inv_r = 1.0 / space.rq[None, None, :]
        ge = space.integ(space.u_z, space.s_v)
        gr = space.integ(space.u_r * inv_r / space.b, space.s_v) if radial_coupling \
            else np.zeros((n_u, n_s))
        gt_minus = forms.g1 - ge - gr   # = -int (u . grad tau0) sigma when base present
        self.mass = np.block([[forms.mu / params.pr, np.zeros((n_u, n_s))],
                              [np.zeros((n_s, n_u)), forms.ms]])
        luu = forms.ku + (forms.fs + forms.fa) / params.pr
        lbb = forms.ks + forms.ga
        lub = -sra * ge
        lba = -sra * (gr + gt_minus).T
        self.l_op = np.block([[luu, lub], [lba, lbb]])
        self.k2 = np.block([[forms.ku, np.zeros((n_u, n_s))],
                            [np.zeros((n_s, n_u)), forms.ks]])

    def energy(self, q: np.ndarray) -> float:
        return float(0.5 * q @ (self.mass @ q))

    def dissipation(self, q: np.ndarray) -> float:
        return float(q @ (self.k2 @ q))

    def rate(self, q: np.ndarray) -> float:
        """Exact dE/dt of the semi-discrete system (the energy identity)."""
        return float(-q @ (self.l_op @ q))

    def run(self, q0: np.ndarray, dt: float, n_steps: int):
        lhs = self.mass + 0.5 * dt * self.l_op
        rhs = self.mass - 0.5 * dt * self.l_op
        lu = sla.lu_factor(lhs)
        qs = [q0.copy()]
        q = q0.copy()
        for _ in range(n_steps):
            q = sla.lu_solve(lu, rhs @ q)
            qs.append(q.copy())
        return np.asarray(qs)


@dataclass
class PerturbationTrajectory:
    """Sampled linearized run with the records used by the identity check."""

    times: np.ndarray
    energies: np.ndarray
    records: list


def evolve_perturbation(pair: PerturbationPair, base: BaseState | None,
                        params: AnnulusParams, dt: float, n_steps: int,
                        radial_coupling: bool = True) -> PerturbationTrajectory:
    """Integrate the linearized perturbation equations from a trial pair."""
    from .energy import EnergyRecord

    evol = PerturbationEvolution(base, params, pair.space, radial_coupling)
    q0 = np.concatenate([pair.a, pair.b])
    qs = evol.run(q0, dt, n_steps)
    times = dt * np.arange(n_steps + 1)
    records = []
    energies = []
    for t, q in zip(times, qs):
        pr_pair = PerturbationPair(pair.space, q[:pair.space.n_u], q[pair.space.n_u:])
        d = evol.dissipation(q)
        f_val = functional_F(pr_pair, base, params, radial_coupling) if d > 0 else 0.0
        e = evol.energy(q)
        records.append(EnergyRecord(t=float(t), e=e,
                                    grad_u_sq=float(q[:pair.space.n_u] @ (evol.forms.ku @ q[:pair.space.n_u])),
                                    grad_sigma_sq=float(q[pair.space.n_u:] @ (evol.forms.ks @ q[pair.space.n_u:])),
                                    rhs=(f_val - 1.0) * d, f_value=f_val))
        energies.append(e)
    return PerturbationTrajectory(times, np.asarray(energies), records)


def initial_energy_slope(pair: PerturbationPair, base: BaseState | None,
                         params: AnnulusParams, dt: float = 2e-6,
                         radial_coupling: bool = True) -> float:
    """dE/dt at t = 0 from a short linearized integration (one-sided, 2nd order)."""
    evol = PerturbationEvolution(base, params, pair.space, radial_coupling)
    q0 = np.concatenate([pair.a, pair.b])
    e0 = evol.energy(q0)
    if e0 == 0.0:
        return 0.0
    qs = evol.run(q0, dt, 2)
    e1, e2 = evol.energy(qs[1]), evol.energy(qs[2])
    return float((-3 * e0 + 4 * e1 - e2) / (2 * dt))


def most_dangerous_experiment(report: StabilityReport, dt: float = 2e-6) -> float:
    """Initial growth of the energy seeded with the critical eigenfunction.

    Requires M > 1 (otherwise no growth is claimed and a ValueError is
    raised); returns the measured dE/dt at t = 0, which is positive and
    matches (M - 1) times the maximizer's unit dissipation.
    """
    if report.m_value <= 1.0:
        raise ValueError("growth check requires M > 1")
    return initial_energy_slope(report.most_dangerous, report.base, report.params, dt)


# ---------------------------------------------------------------------------
# planar-layer limit problem
# ---------------------------------------------------------------------------

def _layer_pencil(a_wav: float, n_rad: int):
    """Per-wavenumber forms of the limit problem on the unit interval."""
    xq, wq = cheb.gauss(2 * n_rad + 16, 0.0, 1.0)
    pc = cheb.clamped_modes(n_rad)
    pd = cheb.dirichlet_modes(n_rad)
    pv, p1, p2 = cheb.eval_modes(pc, xq, 0.0, 1.0, 2)
    sv, s1 = cheb.eval_modes(pd, xq, 0.0, 1.0, 1)
    a2 = a_wav**2
    lap = p2 - a2 * pv
    ku = 0.5 * (lap * wq[:, None]).T @ lap
    ks = 0.5 * ((s1 * wq[:, None]).T @ s1 + a2 * (sv * wq[:, None]).T @ sv)
    g = 0.5 * a_wav * (pv * wq[:, None]).T @ sv
    return ku, ks, g, (pc, pd)


def _layer_lambda(a_wav: float, n_rad: int, want_vectors: bool = False):
    ku, ks, g, bases = _layer_pencil(a_wav, n_rad)
    n_p, n_s = ku.shape[0], ks.shape[0]
    k2 = np.block([[ku, np.zeros((n_p, n_s))], [np.zeros((n_s, n_p)), ks]])
    bm = np.block([[np.zeros((n_p, n_p)), g], [g.T, np.zeros((n_s, n_s))]])
    if want_vectors:
        nu, vec = sla.eigh(bm, k2)
        return nu, vec, bases, n_p
    nu = sla.eigh(bm, k2, eigvals_only=True)
    return nu


def _golden_min(f, lo: float, hi: float, tol: float = 1e-8):
    gr = (np.sqrt(5.0) - 1) / 2
    a, b = lo, hi
    c = b - gr * (b - a)
    d = a + gr * (b - a)
    fc, fd = f(c), f(d)
    while abs(b - a) > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - gr * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + gr * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def _midplane_parity(coeffs_p: np.ndarray, x_p: np.ndarray, tol: float = 1e-8) -> str:
    scale = np.abs(x_p).max()
    if scale == 0:
        return "even"
    z = np.linspace(0.04, 0.96, 25)
    vals = cheb.eval_modes(coeffs_p, z, 0.0, 1.0, 0)[0] @ x_p
    even_res = np.abs(vals - vals[::-1]).max() / np.abs(vals).max()
    odd_res = np.abs(vals + vals[::-1]).max() / np.abs(vals).max()
    if even_res < tol:
        return "even"
    if odd_res < tol:
        return "odd"
    return "mixed"


def solve_eig0(n_rad: int = 32, k_range=(2.0, 4.5), n_scan: int = 11,
               count: int = 6) -> EigenSolution:
    """Planar-layer limit of the eigenproblem, minimized over the wavenumber.

    Walls carry homogeneous velocity and temperature conditions; the pencil
    couples only through the vertical-velocity/temperature pair, so the
    spectrum is symmetric under lambda -> -lambda.  The critical wavenumber is
    located on a scan grid refined by golden-section search.
    """
    def lam_c(a):
        nu = _layer_lambda(a, n_rad)
        return 1.0 / nu[-1]

    grid = np.linspace(k_range[0], k_range[1], n_scan)
    vals = [lam_c(a) for a in grid]
    i = int(np.argmin(vals))
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, n_scan - 1)]
    a_min = _golden_min(lam_c, lo, hi)
    nu, vec, (pc, pd), n_p = _layer_lambda(a_min, n_rad, want_vectors=True)
    order = np.argsort(-nu)
    lambdas, funcs, labels = [], [], []
    for idx in order:
        if nu[idx] <= 1e-14 or len(lambdas) >= count:
            continue
        lambdas.append(1.0 / nu[idx])
        x = vec[:, idx]
        funcs.append((x[:n_p], x[n_p:]))
        par_p = _midplane_parity(pc, x[:n_p])
        par_s = _midplane_parity(pd, x[n_p:])
        labels.append(par_p if par_p == par_s else "mixed")
    lambdas = np.asarray(lambdas)
    return EigenSolution(lambdas=lambdas, eigenfunctions=funcs,
                         symmetry_labels=labels, lambda_c=float(lambdas[0]),
                         lambdas_full=np.sort(1.0 / nu[np.abs(nu) > 1e-14]),
                         meta={"wavenumber": float(a_min), "n_rad": n_rad})
