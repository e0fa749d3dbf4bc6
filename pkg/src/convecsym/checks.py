"""Acceptance checks: one callable per criterion, shared by pytest and the CLI.

Each check runs a self-contained experiment at pinned tolerances and returns a
CheckResult; `run_all` executes a selection and reports a table.  The checks
are deliberately oracle-driven: closed-form solutions, dense-quadrature brute
force, classical dispersion relations, or a second independent numerical route.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import annulus as ann
from . import dynamics as dyn
from . import energy as en
from . import stability as stab
from . import subspace as sub
from .basis import GridSpec, STREAM_TEMP, SpectralField


@dataclass
class CheckResult:
    check_id: int
    name: str
    passed: bool
    detail: str
    elapsed: float


def _s_state(m_max, n_max, pr, ra, f_coeffs, g_coeffs):
    """State with velocity profile sum f_n cos(n pi z) and temperature sum g_n sin."""
    st = dyn.OBState.zeros(m_max, n_max, pr, ra)
    for n, c in f_coeffs.items():
        st.phi.coeff[0, 0, n] = -c / (np.pi * n)
    for n, c in g_coeffs.items():
        st.tau.coeff[0, 0, n] = c
    return st


def check_s_invariance(quick: bool = False) -> CheckResult:
    """1: data in the x-independent subspace stays there to 1e-12."""
    t0 = time.time()
    m_max = n_max = 16
    params = dyn.OBParams(pr=1.0, ra=100.0, dt=1e-3, m_max=m_max, n_max=n_max, t_end=1.0)
    st = _s_state(m_max, n_max, 1.0, 100.0, {1: 1.0, 3: 0.5}, {1: 0.7, 2: -0.2})
    stepper = dyn.Integrator(params)
    leak = 0.0
    n_steps = int(round(params.t_end / params.dt))
    for _ in range(n_steps):
        st = stepper.step(st)
        p = np.abs(st.phi.coeff[:, 1:, :]).max()
        t = np.abs(st.tau.coeff[:, 1:, :]).max()
        leak = max(leak, p, t)
    ok = leak < 1e-12
    return CheckResult(1, "x-independent subspace invariance", ok,
                       f"max complement coefficient {leak:.2e} (tol 1e-12)",
                       time.time() - t0)


def check_s_evolution(quick: bool = False) -> CheckResult:
    """2: simulated profile evolution vs the closed form; error and dt-ratio."""
    t0 = time.time()
    pr = 0.7
    f = {1: 1.0, 2: 1.0}
    g = {1: 1.0}

    def run(dt):
        params = dyn.OBParams(pr=pr, ra=10.0, dt=dt, m_max=4, n_max=8, t_end=0.5)
        st = _s_state(4, 8, pr, 10.0, f, g)
        stepper = dyn.Integrator(params)
        n = np.arange(9)
        a0 = -np.pi * n * st.phi.coeff[0, 0, :]
        b0 = st.tau.coeff[0, 0, :].copy()
        worst = 0.0
        n_steps = int(round(params.t_end / dt))
        for i in range(1, n_steps + 1):
            st2 = stepper.step(st)
            st = st2
            t = i * dt
            a_ex = a0 * np.exp(-pr * np.pi**2 * n**2 * t)
            b_ex = b0 * np.exp(-np.pi**2 * n**2 * t)
            a_num = -np.pi * n * st.phi.coeff[0, 0, :]
            err = np.sqrt(0.5 * np.sum((a_num - a_ex) ** 2)
                          + 0.5 * np.sum((st.tau.coeff[0, 0, :] - b_ex) ** 2))
            worst = max(worst, err)
        return worst

    e1 = run(1e-3)
    e2 = run(5e-4)
    floor = 1e-10
    ratio = e1 / e2 if e2 > 0 else np.inf
    ratio_ok = (3.6 <= ratio <= 4.4) or (e1 < floor and e2 < floor)
    ok = e1 < 1e-6 and ratio_ok
    mode = "exact-to-roundoff" if (e1 < floor and e2 < floor) else f"ratio {ratio:.2f}"
    return CheckResult(2, "analytic vs numeric profile evolution", ok,
                       f"err(1e-3)={e1:.2e} err(5e-4)={e2:.2e}; {mode} "
                       f"(integrating factor is exact on this subspace)",
                       time.time() - t0)


def check_mean_values(quick: bool = False) -> CheckResult:
    """3: x-averaged profiles of a full run vs the analytic shortcut to 1e-6.

    The complement feeds the x-averages only through its quadratic
    self-interaction, so the shortcut is exact to second order in the
    complement amplitude; the seed amplitude 1e-2 keeps that correction well
    below the tolerance while remaining a genuine mixed state.
    """
    t0 = time.time()
    m_max = n_max = 16
    ra, pr = 500.0, 1.0
    params = dyn.OBParams(pr=pr, ra=ra, dt=1e-3, m_max=m_max, n_max=n_max, t_end=1.0)
    st = _s_state(m_max, n_max, pr, ra, {1: 1.0, 2: 0.4}, {1: 0.5, 3: 0.2})
    eps = 1e-2
    st.phi.coeff[0, 1, 1] += eps
    st.tau.coeff[1, 1, 1] += eps
    init = st.copy()
    stepper = dyn.Integrator(params)
    n = np.arange(n_max + 1)
    z = (np.arange(64) + 0.5) / 64
    worst = 0.0
    n_steps = int(round(params.t_end / params.dt))
    for i in range(1, n_steps + 1):
        st = stepper.step(st)
        if i % (n_steps // 10) == 0:
            vx_mean, tau_mean = sub.mean_values(init, i * params.dt, z)
            a_num = -np.pi * n * st.phi.coeff[0, 0, :]
            vx_num = np.cos(np.pi * np.outer(z, n)) @ a_num
            tau_num = np.sin(np.pi * np.outer(z, n)) @ st.tau.coeff[0, 0, :]
            worst = max(worst, np.abs(vx_num - vx_mean).max(),
                        np.abs(tau_num - tau_mean).max())
    ok = worst < 1e-6
    return CheckResult(3, "mean-value shortcut vs full run", ok,
                       f"max profile deviation {worst:.2e} at complement amplitude {eps:g} "
                       "(tol 1e-6)", time.time() - t0)


def check_apriori(quick: bool = False) -> CheckResult:
    """4: profile-derivative bounds for 1e4 random band-limited profiles."""
    t0 = time.time()
    rng = np.random.default_rng(42)
    n_samples = 10_000
    coeffs = rng.standard_normal((n_samples, 13))
    times = np.linspace(0.0, 0.5, 21)
    m1, m2 = en.apriori_margins(coeffs, times, pr=0.7)
    worst = min(m1.min(), m2.min())
    single = en.check_apriori_bounds(lambda z: np.cos(3 * np.pi * z), [0.0, 0.1], pr=0.7)
    eq = abs(single.margin_first)
    ok = worst >= -1e-10 and eq < 1e-12
    return CheckResult(4, "a-priori profile bounds", ok,
                       f"min margin {worst:.2e} over {n_samples} profiles; "
                       f"t=0 equality defect {eq:.2e}", time.time() - t0)


def _growth_rate(ra: float, t_end: float = 0.6, dt: float = 1e-3) -> float:
    params = dyn.OBParams(pr=1.0, ra=ra, dt=dt, m_max=4, n_max=4, t_end=t_end)
    st = dyn.OBState.zeros(4, 4, 1.0, ra)
    st.tau.coeff[1, 1, 1] = 1e-6
    stepper = dyn.Integrator(params)
    n_steps = int(round(t_end / dt))
    amps = np.empty(n_steps)
    for i in range(n_steps):
        st = stepper.step(st)
        amps[i] = np.hypot(st.tau.coeff[1, 1, 1], st.phi.coeff[0, 1, 1])
    t = dt * np.arange(1, n_steps + 1)
    i0 = n_steps // 2
    slope = np.polyfit(t[i0:], np.log(amps[i0:]), 1)[0]
    return float(slope)


def check_linear_threshold(quick: bool = False) -> CheckResult:
    """5: decay at Ra=3000, growth at Ra=3100, bisection near 125 pi^4 / 4."""
    t0 = time.time()
    ra_c = 125 * np.pi**4 / 4
    g_lo = _growth_rate(3000.0)
    g_hi = _growth_rate(3100.0)
    lo, hi = 3000.0, 3100.0
    for _ in range(8 if quick else 12):
        mid = 0.5 * (lo + hi)
        if _growth_rate(mid) > 0:
            hi = mid
        else:
            lo = mid
    est = 0.5 * (lo + hi)
    rel = abs(est - ra_c) / ra_c
    ok = g_lo < 0 and g_hi > 0 and rel < 0.01
    return CheckResult(5, "linear threshold bracket", ok,
                       f"rate(3000)={g_lo:.3f} rate(3100)={g_hi:.3f}; "
                       f"threshold {est:.1f} vs {ra_c:.2f} (rel {rel:.2e})",
                       time.time() - t0)


def _acceptance_base(ra: float = 500.0):
    return ann.steady_solve(ann.AnnulusParams(1.0, ra, 1.0), k_max=8, n_r=32)


def check_energy_identity(quick: bool = False) -> CheckResult:
    """6: identity residual decreases at order >= 2; small at dt = 5e-4.

    The maximum is taken past a fixed settle time so that stiff-mode startup
    of the trapezoidal stepper does not mask the asymptotic rate.
    """
    t0 = time.time()
    base = _acceptance_base()
    rep = stab.maximize_F(base, base.params)
    pair = rep.most_dangerous
    dts = (4e-3, 2e-3, 1e-3, 5e-4)
    maxima = []
    for dt in dts:
        tr = stab.evolve_perturbation(pair, base, base.params, dt, int(round(0.06 / dt)))
        res = en.energy_identity_residual(tr)
        mask = tr.times[2:-2] >= 0.02
        maxima.append(res[mask].max())
    slope = np.polyfit(np.log(dts), np.log(maxima), 1)[0]
    ok = slope >= 1.8 and maxima[-1] < 1e-5
    return CheckResult(6, "perturbation energy identity", ok,
                       f"residuals {['%.2e' % m for m in maxima]} -> order {slope:.2f}; "
                       f"residual(5e-4)={maxima[-1]:.2e} (tol 1e-5)", time.time() - t0)


def check_base_state(quick: bool = False) -> CheckResult:
    """7: steady solves at Ra in {1,10,100}: residuals, symmetry, gradient scaling."""
    t0 = time.time()
    details = []
    ratios = []
    ok = True
    for ra in (1.0, 10.0, 100.0):
        bs = ann.steady_solve(ann.AnnulusParams(1.0, ra, 1.0), k_max=8, n_r=32)
        sym = ann.symmetry_residual(bs.field)
        scaled = bs.grad_v_norm() * bs.params.b / ra
        ratios.append(scaled)
        ok = ok and bs.residual < 1e-10 and sym < 1e-10
        details.append(f"Ra={ra:g}: res={bs.residual:.1e} sym={sym:.1e} |gradv|B/Ra={scaled:.5f}")
    spread = max(ratios) / min(ratios)
    ok = ok and spread < 2.0
    return CheckResult(7, "annulus base state", ok,
                       "; ".join(details) + f"; scaling spread {spread:.4f} (< 2)",
                       time.time() - t0)


def check_variational(quick: bool = False) -> CheckResult:
    """8: both routes to M agree; maximizer normalized and solves the pencil."""
    t0 = time.time()
    base = _acceptance_base()
    rep = stab.maximize_F(base, base.params)
    rel = abs(rep.m_direct - rep.m_eig) / max(abs(rep.m_direct), abs(rep.m_eig))
    norm_defect = abs(rep.most_dangerous.dissipation() - 1.0)
    sp = rep.most_dangerous.space
    forms = stab.assemble_forms(sp, base)
    c, k2 = stab._class_pencil(forms, base.params)
    x = np.concatenate([rep.most_dangerous.a, rep.most_dangerous.b])
    num = np.linalg.norm(c @ x - rep.m_value * (k2 @ x))
    den = np.linalg.norm(c @ x) + abs(rep.m_value) * np.linalg.norm(k2 @ x)
    plug = num / den
    ok = rel < 1e-3 and norm_defect < 1e-10 and plug < 1e-8
    return CheckResult(8, "variational consistency", ok,
                       f"M={rep.m_value:.6f}; route mismatch {rel:.2e} (tol 1e-3); "
                       f"normalization defect {norm_defect:.2e}; pencil residual {plug:.2e}",
                       time.time() - t0)


def check_layer_limit(quick: bool = False) -> CheckResult:
    """9: real spectrum, spectral convergence in N_r, even critical mode."""
    t0 = time.time()
    import scipy.linalg as sla

    lams = {}
    for nr in (24, 36, 48):
        lams[nr] = stab.solve_eig0(n_rad=nr).lambda_c
    d1 = abs(lams[24] - lams[36])
    d2 = abs(lams[36] - lams[48])
    conv_ok = (d2 < 0.1 * d1) or (d1 < 1e-9 and d2 < 1e-9)
    sol = stab.solve_eig0(n_rad=32)
    # realness via the general (non-symmetric) solver on the same pencil
    ku, ks, g, _ = stab._layer_pencil(sol.meta["wavenumber"], 32)
    n_p, n_s = ku.shape[0], ks.shape[0]
    k2 = np.block([[ku, np.zeros((n_p, n_s))], [np.zeros((n_s, n_p)), ks]])
    bm = np.block([[np.zeros((n_p, n_p)), g], [g.T, np.zeros((n_s, n_s))]])
    ev = sla.eig(bm, k2, right=False)
    ev = ev[np.isfinite(ev)]
    big = np.abs(ev[np.abs(ev) > 1e-8])
    imag = (np.abs(ev.imag) / np.maximum(np.abs(ev), 1.0)).max()
    even = sol.symmetry_labels[0] == "even"
    ok = conv_ok and imag < 1e-10 and even
    return CheckResult(9, "layer limit problem", ok,
                       f"lambda_c={sol.lambda_c:.6f} at k={sol.meta['wavenumber']:.4f}; "
                       f"diffs {d1:.1e}/{d2:.1e}; max rel imag {imag:.1e}; "
                       f"critical mode {sol.symmetry_labels[0]}", time.time() - t0)


def check_verdict(quick: bool = False) -> CheckResult:
    """10: slopes negative for random seeds when M < 1, positive at M > 1."""
    t0 = time.time()
    base_lo = _acceptance_base(500.0)
    rep_lo = stab.maximize_F(base_lo, base_lo.params)
    rng = np.random.default_rng(7)
    slopes = []
    for _ in range(5):
        total = 0.0
        for cls in ("even", "odd"):
            sp = stab.PerturbSpace(base_lo.params.geom, 8, 28, cls)
            q = rng.standard_normal(sp.n_u + sp.n_s)
            pair = stab.PerturbationPair(sp, q[:sp.n_u], q[sp.n_u:])
            total += stab.initial_energy_slope(pair, base_lo, base_lo.params)
        slopes.append(total)
    lo_ok = rep_lo.m_value < 1.0 and all(s < 0 for s in slopes)
    base_hi = _acceptance_base(1500.0)
    rep_hi = stab.maximize_F(base_hi, base_hi.params)
    slope_hi = stab.most_dangerous_experiment(rep_hi)
    hi_ok = rep_hi.m_value > 1.0 and slope_hi > 0
    ok = lo_ok and hi_ok
    return CheckResult(10, "verdict soundness", ok,
                       f"M(Ra=500)={rep_lo.m_value:.4f}, random slopes all < 0: "
                       f"{all(s < 0 for s in slopes)}; M(Ra=1500)={rep_hi.m_value:.4f}, "
                       f"critical slope {slope_hi:.4f} > 0", time.time() - t0)


def _oracle_nonlinear(state: dyn.OBState):
    """Brute-force Galerkin projections of the transport terms by quadrature."""
    m_max, n_max = state.phi.m_max, state.phi.n_max
    nx, nz = 4 * m_max + 8, 4 * n_max + 8
    x = np.arange(nx) / nx
    z = (np.arange(nz) + 0.5) / nz
    xx, zz = np.meshgrid(x, z, indexing="ij")

    def assemble(coeff, fx, fz):
        out = np.zeros_like(xx)
        for p, trig in ((0, np.cos), (1, np.sin)):
            for m in range(m_max + 1):
                for n in range(n_max + 1):
                    c = coeff[p, m, n]
                    if c != 0.0:
                        out += c * fx(trig, p, m) * fz(n)
        return out

    def fx_plain(trig, p, m):
        return trig(2 * np.pi * m * xx)

    def fx_dx(trig, p, m):
        if p == 0:
            return -2 * np.pi * m * np.sin(2 * np.pi * m * xx)
        return 2 * np.pi * m * np.cos(2 * np.pi * m * xx)

    sin_z = lambda n: np.sin(np.pi * n * zz)
    cos_dz = lambda n: np.pi * n * np.cos(np.pi * n * zz)

    phi_c, tau_c = state.phi.coeff, state.tau.coeff
    mu = np.pi**2 * (4 * np.arange(m_max + 1)[:, None] ** 2 + np.arange(n_max + 1)[None, :] ** 2)
    om_c = -mu[None] * phi_c
    vx = -assemble(phi_c, fx_plain, cos_dz)
    vz = assemble(phi_c, fx_dx, sin_z)
    om_x = assemble(om_c, fx_dx, sin_z)
    om_z = assemble(om_c, fx_plain, cos_dz)
    ta_x = assemble(tau_c, fx_dx, sin_z)
    ta_z = assemble(tau_c, fx_plain, cos_dz)
    adv_om = vx * om_x + vz * om_z
    adv_ta = vx * ta_x + vz * ta_z

    adv_stream = np.zeros_like(phi_c)
    adv_temp = np.zeros_like(tau_c)
    for p, trig in ((0, np.cos), (1, np.sin)):
        for m in range(m_max + 1):
            if p == 1 and m == 0:
                continue
            wx = 1.0 if m == 0 else 2.0
            for n in range(1, n_max + 1):
                xi = trig(2 * np.pi * m * xx) * np.sin(np.pi * n * zz)
                w = 2.0 * wx
                adv_stream[p, m, n] = -w * np.mean(adv_om * xi) / mu[m, n]
                adv_temp[p, m, n] = w * np.mean(adv_ta * xi)
    return adv_stream, adv_temp


def check_nonlinear_oracle(quick: bool = False) -> CheckResult:
    """11: dealiased transport projections vs dense-quadrature brute force."""
    t0 = time.time()
    rng = np.random.default_rng(11)
    worst = 0.0
    n_states = 5 if quick else 20
    for _ in range(n_states):
        st = dyn.OBState.zeros(5, 5, 1.0, 10.0)
        st.phi.coeff[:] = 0.3 * rng.standard_normal(st.phi.coeff.shape)
        st.tau.coeff[:] = 0.3 * rng.standard_normal(st.tau.coeff.shape)
        st.phi.coeff[1, 0, :] = 0.0
        st.tau.coeff[1, 0, :] = 0.0
        st.phi.coeff[:, :, 0] = 0.0
        st.tau.coeff[:, :, 0] = 0.0
        a_s, a_t = dyn.nonlinear_term(st)
        o_s, o_t = _oracle_nonlinear(st)
        scale = max(np.abs(o_s).max(), np.abs(o_t).max(), 1.0)
        worst = max(worst, np.abs(a_s.coeff - o_s).max() / scale,
                    np.abs(a_t.coeff - o_t).max() / scale)
    ok = worst < 1e-12
    return CheckResult(11, "transport-term oracle", ok,
                       f"max deviation {worst:.2e} over {n_states} random states (tol 1e-12)",
                       time.time() - t0)


REGISTRY = [
    (1, check_s_invariance),
    (2, check_s_evolution),
    (3, check_mean_values),
    (4, check_apriori),
    (5, check_linear_threshold),
    (6, check_energy_identity),
    (7, check_base_state),
    (8, check_variational),
    (9, check_layer_limit),
    (10, check_verdict),
    (11, check_nonlinear_oracle),
]


def run_all(quick: bool = False, only=None):
    results = []
    for cid, func in REGISTRY:
        if only and cid not in only:
            continue
        results.append(func(quick=quick))
    return results
