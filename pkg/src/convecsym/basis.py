"""Trigonometric bases, field representation, transforms and operators on the unit cell.

All fields live on the periodicity cell (x, z) in (0,1) x (0,1), periodic in x.
Two tensor-product families are used:

* pressure-like:      cos/sin(2 pi m x) * cos(pi n z)
* stream-or-temp-like: cos/sin(2 pi m x) * sin(pi n z)

The sin-in-z family builds the homogeneous wall values (temperature, vertical
velocity) into the representation; the cos-in-z family gives zero wall normal
derivative (pressure, horizontal velocity), so the stress-free wall conditions
hold identically for every reconstructed field.

Coefficients are stored densely as ``coeff[p, m, n]`` where ``p = 0`` selects
the cos(2 pi m x) part (parity +1) and ``p = 1`` the sin part (parity -1).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

PRESSURE_LIKE = "pressure-like"    # cos(pi n z) in z
STREAM_TEMP = "stream-temp-like"   # sin(pi n z) in z

_KINDS = (PRESSURE_LIKE, STREAM_TEMP)


class InconsistentDataError(ValueError):
    """Right-hand side of a Neumann solve is not solvable (nonzero mean)."""


@dataclass(frozen=True)
class ModeIndex:
    """Single basis-function index.

    ``parity`` selects cos (+1) or sin (-1) in x; sin requires m >= 1 because
    sin(2 pi 0 x) vanishes identically.
    """

    m: int
    n: int
    parity: int = 1

    def __post_init__(self):
        if self.m < 0 or self.n < 0:
            raise ValueError("mode numbers must be non-negative")
        if self.parity not in (1, -1):
            raise ValueError("parity must be +1 or -1")
        if self.parity == -1 and self.m == 0:
            raise ValueError("parity -1 requires m >= 1 (sin(0) is not a basis element)")

    @property
    def in_s_subspace(self) -> bool:
        """x-independent (m = 0) modes span the invariant subspace."""
        return self.m == 0


@dataclass(frozen=True)
class GridSpec:
    """Uniform-in-x, midpoint-in-z evaluation grid.

    Nodes are x_j = j/N_x and z_j = (j + 1/2)/N_z.  The midpoint z nodes make
    the cos(pi n z) and sin(pi n z) families discretely orthogonal without
    endpoint weights; resolution N_x >= 2 m_max + 2, N_z >= 2 n_max + 2 gives
    exact transforms on the truncated space.
    """

    n_x: int
    n_z: int

    def __post_init__(self):
        if self.n_x < 2 or self.n_z < 2:
            raise ValueError("grid needs at least 2 points per direction")

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.n_x) / self.n_x

    @property
    def z(self) -> np.ndarray:
        return (np.arange(self.n_z) + 0.5) / self.n_z

    def supports(self, m_max: int, n_max: int) -> bool:
        return self.n_x >= 2 * m_max + 2 and self.n_z >= 2 * n_max + 2

    @classmethod
    def for_truncation(cls, m_max: int, n_max: int) -> "GridSpec":
        return cls(2 * m_max + 2, 2 * n_max + 2)

    @classmethod
    def dealiased(cls, m_max: int, n_max: int) -> "GridSpec":
        """Grid on which quadratic products project exactly onto the truncation.

        Needs N_x > 3 m_max and 2 N_z > 3 n_max; the returned grid satisfies
        both together with the plain transform requirement.
        """
        return cls(3 * m_max + 2, 2 * n_max + 2)


@lru_cache(maxsize=32)
def _tables(n_x: int, n_z: int, m_max: int, n_max: int):
    x = np.arange(n_x) / n_x
    z = (np.arange(n_z) + 0.5) / n_z
    m = np.arange(m_max + 1)
    n = np.arange(n_max + 1)
    cx = np.cos(2 * np.pi * np.outer(m, x))
    sx = np.sin(2 * np.pi * np.outer(m, x))
    cz = np.cos(np.pi * np.outer(n, z))
    sz = np.sin(np.pi * np.outer(n, z))
    wx = np.where(m == 0, 1.0, 2.0) / n_x
    wzc = np.where(n == 0, 1.0, 2.0) / n_z
    wzs = np.full(n_max + 1, 2.0 / n_z)
    wzs[0] = 0.0
    return cx, sx, cz, sz, wx, wzc, wzs


@dataclass
class SpectralField:
    """Truncated coefficient representation of a scalar field.

    ``coeff`` has shape (2, m_max + 1, n_max + 1); row p = 1 (sin in x) is zero
    at m = 0, and the whole n = 0 column is zero for the sin-in-z kind.
    """

    kind: str
    m_max: int
    n_max: int
    coeff: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown kind {self.kind!r}")
        if self.coeff is None:
            self.coeff = np.zeros((2, self.m_max + 1, self.n_max + 1))
        self.coeff = np.asarray(self.coeff, dtype=float)
        if self.coeff.shape != (2, self.m_max + 1, self.n_max + 1):
            raise ValueError("coefficient array has wrong shape")
        if not np.all(np.isfinite(self.coeff)):
            raise ValueError("coefficients must be finite")
        self.coeff[1, 0, :] = 0.0
        if self.kind == STREAM_TEMP:
            self.coeff[:, :, 0] = 0.0

    # -- arithmetic -------------------------------------------------------
    def copy(self) -> "SpectralField":
        return SpectralField(self.kind, self.m_max, self.n_max, self.coeff.copy())

    def __add__(self, other: "SpectralField") -> "SpectralField":
        if self.kind != other.kind:
            raise ValueError("cannot add fields of different kinds")
        return SpectralField(self.kind, self.m_max, self.n_max, self.coeff + other.coeff)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        if self.kind != other.kind:
            raise ValueError("cannot subtract fields of different kinds")
        return SpectralField(self.kind, self.m_max, self.n_max, self.coeff - other.coeff)

    def __mul__(self, c: float) -> "SpectralField":
        return SpectralField(self.kind, self.m_max, self.n_max, self.coeff * float(c))

    __rmul__ = __mul__

    def get(self, idx: ModeIndex) -> float:
        p = 0 if idx.parity == 1 else 1
        return float(self.coeff[p, idx.m, idx.n])

    def set(self, idx: ModeIndex, value: float) -> None:
        p = 0 if idx.parity == 1 else 1
        self.coeff[p, idx.m, idx.n] = value

    def zero_mean_gauge(self) -> "SpectralField":
        """Return a copy with the constant (0,0) coefficient forced to zero."""
        out = self.copy()
        out.coeff[0, 0, 0] = 0.0
        return out

    @property
    def s_part_coeff(self) -> np.ndarray:
        """The m = 0 coefficient column (x-independent content)."""
        return self.coeff[0, 0, :]

    # -- norms (exact, by orthogonality of the basis) ----------------------
    def _mode_weights(self) -> np.ndarray:
        wm = np.where(np.arange(self.m_max + 1) == 0, 1.0, 0.5)[None, :, None]
        if self.kind == PRESSURE_LIKE:
            wn = np.where(np.arange(self.n_max + 1) == 0, 1.0, 0.5)[None, None, :]
        else:
            wn = np.full((1, 1, self.n_max + 1), 0.5)
            wn[..., 0] = 0.0
        return wm * wn

    def norm_sq(self) -> float:
        """L2 norm squared over the cell."""
        return float(np.sum(self.coeff**2 * self._mode_weights()))

    def grad_norm_sq(self) -> float:
        """H1 seminorm squared, sum over modes of mu * |c|^2."""
        return float(np.sum(self.coeff**2 * self._mode_weights() * laplace_symbol(self.m_max, self.n_max)))

    # -- JSON snapshot ------------------------------------------------------
    def to_obj(self) -> dict:
        entries = []
        for m in range(self.m_max + 1):
            for n in range(self.n_max + 1):
                if self.kind == STREAM_TEMP and n == 0:
                    continue
                entries.append([m, n, 1, self.coeff[0, m, n]])
                if m >= 1:
                    entries.append([m, n, -1, self.coeff[1, m, n]])
        entries.sort(key=lambda e: (e[0], e[1], e[2]))
        return {"kind": self.kind, "m_max": self.m_max, "n_max": self.n_max,
                "coeffs": entries}

    def to_json(self) -> str:
        return json.dumps(self.to_obj(), sort_keys=True)

    @classmethod
    def from_obj(cls, data: dict) -> "SpectralField":
        out = cls(data["kind"], data["m_max"], data["n_max"])
        for m, n, parity, value in data["coeffs"]:
            out.coeff[0 if parity == 1 else 1, m, n] = value
        return out

    @classmethod
    def from_json(cls, text: str) -> "SpectralField":
        return cls.from_obj(json.loads(text))


def laplace_symbol(m_max: int, n_max: int) -> np.ndarray:
    """mu[m, n] = 4 pi^2 m^2 + pi^2 n^2 (the negative Laplacian per mode)."""
    m = np.arange(m_max + 1)[:, None]
    n = np.arange(n_max + 1)[None, :]
    return 4 * np.pi**2 * m**2 + np.pi**2 * n**2


def eval_basis(idx: ModeIndex, kind: str, x, z):
    """Evaluate one basis element at (x, z).

    Pressure-like elements are cos/sin(2 pi m x) cos(pi n z); stream-or-temp
    ones carry sin(pi n z) instead.
    """
    if kind not in _KINDS:
        raise ValueError(f"unknown kind {kind!r}")
    fx = np.cos(2 * np.pi * idx.m * np.asarray(x)) if idx.parity == 1 else np.sin(2 * np.pi * idx.m * np.asarray(x))
    if kind == PRESSURE_LIKE:
        fz = np.cos(np.pi * idx.n * np.asarray(z))
    else:
        fz = np.sin(np.pi * idx.n * np.asarray(z))
    return fx * fz


def to_physical(f: SpectralField, grid: GridSpec) -> np.ndarray:
    """Evaluate the truncated series on the grid; shape (n_x, n_z)."""
    if not grid.supports(f.m_max, f.n_max):
        raise ValueError("grid resolution below truncation")
    cx, sx, cz, sz, _, _, _ = _tables(grid.n_x, grid.n_z, f.m_max, f.n_max)
    zt = cz if f.kind == PRESSURE_LIKE else sz
    return cx.T @ f.coeff[0] @ zt + sx.T @ f.coeff[1] @ zt


def to_spectral(values: np.ndarray, kind: str, m_max: int, n_max: int) -> SpectralField:
    """Project grid values onto the truncated basis (exact inverse of to_physical).

    The grid is inferred from the array shape and must satisfy the resolution
    invariant of :class:`GridSpec`.
    """
    values = np.asarray(values, dtype=float)
    n_x, n_z = values.shape
    grid = GridSpec(n_x, n_z)
    if not grid.supports(m_max, n_max):
        raise ValueError("grid resolution below truncation")
    cx, sx, cz, sz, wx, wzc, wzs = _tables(n_x, n_z, m_max, n_max)
    zt, wz = (cz, wzc) if kind == PRESSURE_LIKE else (sz, wzs)
    out = SpectralField(kind, m_max, n_max)
    out.coeff[0] = (cx @ values @ zt.T) * wx[:, None] * wz[None, :]
    out.coeff[1] = (sx @ values @ zt.T) * wx[:, None] * wz[None, :]
    out.coeff[1, 0, :] = 0.0
    return out


def d_dx(f: SpectralField) -> SpectralField:
    """x-derivative; swaps x-parity.  Convention: d/dx cos(2 pi m x) = -2 pi m sin(2 pi m x)."""
    m = 2 * np.pi * np.arange(f.m_max + 1)[None, :, None]
    out = SpectralField(f.kind, f.m_max, f.n_max)
    out.coeff[1] = -m[0] * f.coeff[0]
    out.coeff[0] = m[0] * f.coeff[1]
    out.coeff[1, 0, :] = 0.0
    return out


def d_dz(f: SpectralField) -> SpectralField:
    """z-derivative; maps between the cos-in-z and sin-in-z kinds."""
    n = np.pi * np.arange(f.n_max + 1)[None, None, :]
    if f.kind == STREAM_TEMP:
        # d/dz sin(pi n z) = pi n cos(pi n z)
        return SpectralField(PRESSURE_LIKE, f.m_max, f.n_max, f.coeff * n)
    # d/dz cos(pi n z) = -pi n sin(pi n z)
    return SpectralField(STREAM_TEMP, f.m_max, f.n_max, -f.coeff * n)


def laplacian(f: SpectralField) -> SpectralField:
    """Per-mode multiplication by -(4 pi^2 m^2 + pi^2 n^2)."""
    return SpectralField(f.kind, f.m_max, f.n_max, -laplace_symbol(f.m_max, f.n_max)[None] * f.coeff)


@dataclass
class VelocityField:
    """Divergence-free velocity built from a stream function.

    v^x = -Phi_z (cos-in-z kind), v^z = Phi_x (sin-in-z kind): the wall values
    v^z = 0 and the stress-free condition d_z v^x = 0 hold identically.
    """

    vx: SpectralField
    vz: SpectralField

    def on_grid(self, grid: GridSpec):
        return to_physical(self.vx, grid), to_physical(self.vz, grid)

    def norm_sq(self) -> float:
        return self.vx.norm_sq() + self.vz.norm_sq()


def velocity_from_stream(phi: SpectralField, grid: GridSpec | None = None) -> VelocityField:
    """Velocity associated with a stream function (Phi_x = v^z, Phi_z = -v^x)."""
    if phi.kind != STREAM_TEMP:
        raise ValueError("stream function must be of the sin-in-z kind")
    return VelocityField(vx=-1.0 * d_dz(phi), vz=d_dx(phi))


def divergence(v: VelocityField) -> SpectralField:
    return d_dx(v.vx) + d_dz(v.vz)


def advection_of_velocity(v: VelocityField, pad: GridSpec):
    """(v . grad) v evaluated pseudo-spectrally on a dealiased grid.

    Returns the two Cartesian components as grid arrays; exact projections of
    the quadratic products are recovered by `to_spectral` on the same grid.
    """
    vx, vz = v.on_grid(pad)
    vx_x = to_physical(d_dx(v.vx), pad)
    vx_z = to_physical(d_dz(v.vx), pad)
    vz_x = to_physical(d_dx(v.vz), pad)
    vz_z = to_physical(d_dz(v.vz), pad)
    return vx * vx_x + vz * vx_z, vx * vz_x + vz * vz_z


def solve_pressure_neumann(v: VelocityField, tau: SpectralField, pr: float, ra: float,
                           tol: float = 1e-10) -> SpectralField:
    """Pressure from the Neumann problem lap(P) = -(1/Pr) div(v.grad v) + Ra tau_z.

    The constant mode of the right-hand side must vanish (it does for fields
    satisfying the wall and periodicity conditions); the returned field carries
    the zero-mean gauge.
    """
    if tau.kind != STREAM_TEMP:
        raise ValueError("temperature must be of the sin-in-z kind")
    m_max, n_max = tau.m_max, tau.n_max
    # padded enough to capture the full quadratic z-content (modes to 2 n_max),
    # which the wall-flux consistency check below needs
    pad = GridSpec(3 * m_max + 2, 4 * n_max + 4)
    ax, az = advection_of_velocity(v, pad)
    # cell mean of the right-hand side = -(1/Pr) * net wall flux of F^z (the
    # x-periodic part integrates away and tau vanishes on the walls); it must
    # be zero for the Neumann problem to be solvable
    az_profile = to_spectral(az, PRESSURE_LIKE, 0, 2 * n_max).coeff[0, 0, :]
    sign = (-1.0) ** np.arange(2 * n_max + 1)
    mean_rhs = (-1.0 / pr) * float(az_profile @ sign - az_profile.sum())
    div = d_dx(to_spectral(ax, PRESSURE_LIKE, m_max, n_max)) + \
        d_dz(to_spectral(az, STREAM_TEMP, m_max, n_max))
    rhs = (-1.0 / pr) * div + ra * d_dz(tau)
    scale = max(1.0, np.abs(rhs.coeff).max(), np.abs(az).max())
    if max(abs(mean_rhs), abs(rhs.coeff[0, 0, 0])) > tol * scale:
        raise InconsistentDataError(
            f"mean of pressure right-hand side is {mean_rhs:.3e}, not solvable")
    mu = laplace_symbol(m_max, n_max)
    mu_safe = np.where(mu == 0, 1.0, mu)
    out = SpectralField(PRESSURE_LIKE, m_max, n_max, rhs.coeff / -mu_safe[None])
    out.coeff[0, 0, 0] = 0.0
    return out
