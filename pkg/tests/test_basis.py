"""Bases, transforms, operators, and the pressure solve."""

import numpy as np
import pytest

from convecsym import (GridSpec, ModeIndex, PRESSURE_LIKE, STREAM_TEMP,
                       SpectralField, d_dx, d_dz, divergence, eval_basis,
                       laplacian, solve_pressure_neumann, to_physical,
                       to_spectral, velocity_from_stream)
from convecsym.basis import InconsistentDataError, laplace_symbol


def random_field(kind, m_max, n_max, seed=0, scale=1.0):
    rng = np.random.default_rng(seed)
    f = SpectralField(kind, m_max, n_max, scale * rng.standard_normal((2, m_max + 1, n_max + 1)))
    return f


# ---------------------------------------------------------------------------
# mode index and single-element evaluation
# ---------------------------------------------------------------------------

def test_mode_index_validation():
    ModeIndex(2, 3, -1)
    with pytest.raises(ValueError):
        ModeIndex(0, 3, -1)
    with pytest.raises(ValueError):
        ModeIndex(-1, 0)
    with pytest.raises(ValueError):
        ModeIndex(1, 1, 2)


def test_eval_basis_examples():
    assert eval_basis(ModeIndex(0, 0, 1), PRESSURE_LIKE, 0.37, 0.73) == 1.0
    assert eval_basis(ModeIndex(1, 1, 1), PRESSURE_LIKE, 0.0, 0.0) == 1.0
    # sin(2 pi * 1 * 1/4) * cos(0) = 1
    val = eval_basis(ModeIndex(1, 0, -1), PRESSURE_LIKE, 0.25, 0.7)
    assert abs(val - 1.0) < 1e-15


def test_discrete_orthogonality():
    m_max = n_max = 4
    grid = GridSpec.for_truncation(m_max, n_max)
    for kind in (PRESSURE_LIKE, STREAM_TEMP):
        elems = []
        for m in range(m_max + 1):
            for n in range(n_max + 1):
                if kind == STREAM_TEMP and n == 0:
                    continue
                for parity in (1, -1):
                    if parity == -1 and m == 0:
                        continue
                    f = SpectralField(kind, m_max, n_max)
                    f.set(ModeIndex(m, n, parity), 1.0)
                    elems.append(to_physical(f, grid))
        for i in range(len(elems)):
            for j in range(i + 1, len(elems)):
                ip = np.mean(elems[i] * elems[j])
                assert abs(ip) < 1e-13


def test_roundtrip_and_quadrature_oracle():
    m_max, n_max = 5, 6
    grid = GridSpec.for_truncation(m_max, n_max)
    for kind in (PRESSURE_LIKE, STREAM_TEMP):
        f = random_field(kind, m_max, n_max, seed=3)
        back = to_spectral(to_physical(f, grid), kind, m_max, n_max)
        assert np.abs(back.coeff - f.coeff).max() < 1e-13
        # independent dense-quadrature inner products
        nx, nz = 64, 48
        x = np.arange(nx) / nx
        z = (np.arange(nz) + 0.5) / nz
        xx, zz = np.meshgrid(x, z, indexing="ij")
        vals = np.zeros_like(xx)
        for p, trig in ((0, np.cos), (1, np.sin)):
            for m in range(m_max + 1):
                for n in range(n_max + 1):
                    zpart = np.cos(np.pi * n * zz) if kind == PRESSURE_LIKE else np.sin(np.pi * n * zz)
                    vals += f.coeff[p, m, n] * trig(2 * np.pi * m * xx) * zpart
        for m in range(m_max + 1):
            for n in range(n_max + 1):
                if kind == STREAM_TEMP and n == 0:
                    continue
                zpart = np.cos(np.pi * n * zz) if kind == PRESSURE_LIKE else np.sin(np.pi * n * zz)
                wx = 1.0 if m == 0 else 2.0
                wz = 1.0 if (n == 0 and kind == PRESSURE_LIKE) else 2.0
                c = wx * wz * np.mean(vals * np.cos(2 * np.pi * m * xx) * zpart)
                assert abs(c - f.coeff[0, m, n]) < 1e-12


def test_constant_field_and_gauge():
    grid = GridSpec.for_truncation(3, 3)
    ones = np.ones((grid.n_x, grid.n_z))
    f = to_spectral(ones, PRESSURE_LIKE, 3, 3)
    expect = np.zeros_like(f.coeff)
    expect[0, 0, 0] = 1.0
    assert np.abs(f.coeff - expect).max() < 1e-14
    assert f.zero_mean_gauge().coeff[0, 0, 0] == 0.0


def test_resolution_rejected():
    with pytest.raises(ValueError):
        to_spectral(np.ones((4, 4)), PRESSURE_LIKE, 3, 3)


# ---------------------------------------------------------------------------
# operators
# ---------------------------------------------------------------------------

def test_operator_examples():
    f = SpectralField(STREAM_TEMP, 2, 2)
    f.set(ModeIndex(0, 1), 1.0)          # sin(pi z)
    lap = laplacian(f)
    assert abs(lap.get(ModeIndex(0, 1)) + np.pi**2) < 1e-14
    dz = d_dz(f)                          # pi cos(pi z)
    assert dz.kind == PRESSURE_LIKE
    assert abs(dz.get(ModeIndex(0, 1)) - np.pi) < 1e-14
    g = SpectralField(STREAM_TEMP, 2, 2)
    g.set(ModeIndex(1, 1), 1.0)           # cos(2 pi x) sin(pi z)
    assert abs(laplacian(g).get(ModeIndex(1, 1)) + 5 * np.pi**2) < 1e-13


def test_dx_parity_convention():
    # d/dx cos(2 pi m x) = -2 pi m sin(2 pi m x)
    f = SpectralField(PRESSURE_LIKE, 3, 2)
    f.set(ModeIndex(2, 1, 1), 1.0)
    d = d_dx(f)
    assert abs(d.get(ModeIndex(2, 1, -1)) + 4 * np.pi) < 1e-13
    assert d.get(ModeIndex(2, 1, 1)) == 0.0


def test_velocity_from_stream_examples():
    grid = GridSpec(32, 32)
    phi = SpectralField(STREAM_TEMP, 3, 3)
    phi.set(ModeIndex(1, 1), 1.0)          # cos(2 pi x) sin(pi z)
    v = velocity_from_stream(phi)
    x, z = np.meshgrid(grid.x, grid.z, indexing="ij")
    vx, vz = v.on_grid(grid)
    assert np.abs(vz + 2 * np.pi * np.sin(2 * np.pi * x) * np.sin(np.pi * z)).max() < 1e-12
    assert np.abs(vx + np.pi * np.cos(2 * np.pi * x) * np.cos(np.pi * z)).max() < 1e-12
    # profile mode: sin(2 pi z) -> vz = 0, vx = -2 pi cos(2 pi z)
    phi2 = SpectralField(STREAM_TEMP, 3, 3)
    phi2.set(ModeIndex(0, 2), 1.0)
    v2 = velocity_from_stream(phi2)
    vx2, vz2 = v2.on_grid(grid)
    assert np.abs(vz2).max() == 0.0
    assert np.abs(vx2 + 2 * np.pi * np.cos(2 * np.pi * z)).max() < 1e-12
    zero = velocity_from_stream(SpectralField(STREAM_TEMP, 3, 3))
    assert zero.norm_sq() == 0.0
    with pytest.raises(ValueError):
        velocity_from_stream(SpectralField(PRESSURE_LIKE, 3, 3))


def test_divergence_free_property():
    for seed in range(5):
        phi = random_field(STREAM_TEMP, 6, 6, seed=seed)
        v = velocity_from_stream(phi)
        div = divergence(v)
        assert np.abs(div.coeff).max() < 1e-12 * max(1.0, np.abs(phi.coeff).max())


def test_boundary_conditions_builtin():
    """tau = v^z = d_z v^x = d_z P = 0 at z in {0, 1} for any coefficients."""
    rng = np.random.default_rng(9)
    phi = random_field(STREAM_TEMP, 4, 4, seed=1)
    tau = random_field(STREAM_TEMP, 4, 4, seed=2)
    pres = random_field(PRESSURE_LIKE, 4, 4, seed=3)
    x = rng.uniform(0, 1, 13)
    for zb in (0.0, 1.0):
        for field, kind in ((tau, STREAM_TEMP), (pres, PRESSURE_LIKE)):
            probe = field if kind == STREAM_TEMP else d_dz(field)
            total = np.zeros_like(x)
            for m in range(5):
                for n in range(5):
                    for p, parity in ((0, 1), (1, -1)):
                        if parity == -1 and m == 0:
                            continue
                        total += probe.coeff[p, m, n] * eval_basis(
                            ModeIndex(m, n, parity), probe.kind, x, zb)
            assert np.abs(total).max() < 1e-12
        v = velocity_from_stream(phi)
        for probe in (v.vz, d_dz(v.vx)):
            total = np.zeros_like(x)
            for m in range(5):
                for n in range(5):
                    for p, parity in ((0, 1), (1, -1)):
                        if parity == -1 and m == 0:
                            continue
                        total += probe.coeff[p, m, n] * eval_basis(
                            ModeIndex(m, n, parity), probe.kind, x, zb)
            assert np.abs(total).max() < 1e-12


# ---------------------------------------------------------------------------
# pressure solve
# ---------------------------------------------------------------------------

def test_pressure_example_and_zero():
    m_max = n_max = 4
    tau = SpectralField(STREAM_TEMP, m_max, n_max)
    tau.set(ModeIndex(0, 1), 1.0)
    v0 = velocity_from_stream(SpectralField(STREAM_TEMP, m_max, n_max))
    p = solve_pressure_neumann(v0, tau, pr=1.0, ra=np.pi)
    expect = np.zeros_like(p.coeff)
    expect[0, 0, 1] = -1.0
    assert np.abs(p.coeff - expect).max() < 1e-14
    p0 = solve_pressure_neumann(v0, SpectralField(STREAM_TEMP, m_max, n_max), 1.0, 10.0)
    assert np.abs(p0.coeff).max() == 0.0
    assert p.coeff[0, 0, 0] == 0.0      # zero-mean gauge


def test_pressure_residual_oracle():
    """lap(P) reproduces the right-hand side, projections taken independently.

    The oracle evaluates the advection on a dense grid and forms the
    projection of its divergence by parts: <div F, phi_j> = -<F, grad phi_j>
    (the boundary terms vanish because F^z is zero on the walls).
    """
    m_max = n_max = 4
    pr, ra = 0.7, 300.0
    phi = random_field(STREAM_TEMP, m_max, n_max, seed=5, scale=0.3)
    tau = random_field(STREAM_TEMP, m_max, n_max, seed=6, scale=0.3)
    v = velocity_from_stream(phi)
    p = solve_pressure_neumann(v, tau, pr, ra)
    nx, nz = 64, 48
    x = np.arange(nx) / nx
    z = (np.arange(nz) + 0.5) / nz
    xx, zz = np.meshgrid(x, z, indexing="ij")

    def dense(field):
        vals = np.zeros_like(xx)
        for pi, trig in ((0, np.cos), (1, np.sin)):
            for m in range(m_max + 1):
                for n in range(n_max + 1):
                    zp = np.cos(np.pi * n * zz) if field.kind == PRESSURE_LIKE else np.sin(np.pi * n * zz)
                    vals += field.coeff[pi, m, n] * trig(2 * np.pi * m * xx) * zp
        return vals

    vx, vz = dense(v.vx), dense(v.vz)
    ax = vx * dense(d_dx(v.vx)) + vz * dense(d_dz(v.vx))
    az = vx * dense(d_dx(v.vz)) + vz * dense(d_dz(v.vz))
    tau_dense = dense(tau)
    mu = laplace_symbol(m_max, n_max)
    rhs = np.zeros((2, m_max + 1, n_max + 1))
    for pi, trig, dtrig, sgn in ((0, np.cos, np.sin, -1.0), (1, np.sin, np.cos, 1.0)):
        for m in range(m_max + 1):
            if pi == 1 and m == 0:
                continue
            wx = 1.0 if m == 0 else 2.0
            for n in range(n_max + 1):
                wz = 1.0 if n == 0 else 2.0
                xs = trig(2 * np.pi * m * xx)
                zc = np.cos(np.pi * n * zz)
                dphix = sgn * 2 * np.pi * m * dtrig(2 * np.pi * m * xx) * zc
                dphiz = -np.pi * n * xs * np.sin(np.pi * n * zz)
                div_proj = -wx * wz * np.mean(ax * dphix + az * dphiz)
                tz_proj = -wx * wz * np.mean(tau_dense * dphiz)
                rhs[pi, m, n] = -div_proj / pr + ra * tz_proj
    lap_p = -mu[None] * p.coeff
    rhs[0, 0, 0] = 0.0
    assert np.abs(lap_p - rhs).max() < 1e-12 * max(1.0, np.abs(rhs).max())


def test_pressure_inconsistent_rhs():
    """A hand-built velocity violating the wall conditions is rejected."""
    m_max = n_max = 3
    from convecsym.basis import VelocityField
    vx = SpectralField(PRESSURE_LIKE, m_max, n_max)
    vz_bad = SpectralField(PRESSURE_LIKE, m_max, n_max)   # cos-in-z vertical velocity
    vz_bad.set(ModeIndex(0, 1, 1), 1.0)
    vx.set(ModeIndex(1, 1, 1), 1.0)

    class Fake:
        def __init__(self):
            self.vx = vx
            self.vz = vz_bad

        def on_grid(self, grid):
            return to_physical(self.vx, grid), to_physical(self.vz, grid)

    tau = SpectralField(STREAM_TEMP, m_max, n_max)
    with pytest.raises(InconsistentDataError):
        solve_pressure_neumann(Fake(), tau, 1.0, 1.0)


def test_json_snapshot_roundtrip():
    f = random_field(STREAM_TEMP, 3, 3, seed=12)
    g = SpectralField.from_json(f.to_json())
    assert g.kind == f.kind
    assert np.abs(g.coeff - f.coeff).max() == 0.0
    obj = f.to_obj()
    keys = [(m, n, p) for m, n, p, _ in obj["coeffs"]]
    assert keys == sorted(keys)
