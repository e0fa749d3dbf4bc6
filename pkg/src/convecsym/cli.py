"""Command-line driver: simulations, decompositions, annulus studies, repro.

Configuration files are plain text, one ``key = value`` per line with ``#``
comments.  Outputs are CSV (RFC-4180) and JSON (UTF-8, sorted keys); the
worker pool for parameter sweeps is capped by CONVEC_SYM_THREADS.

Exit codes: 0 success, 1 failed checks (repro), 2 usage/configuration error,
3 numerical divergence.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import annulus as ann
from . import checks as chk
from . import dynamics as dyn
from . import stability as stab
from . import subspace as sub
from .dynamics import BlowUpError
from .annulus import PicardDivergenceError

EXIT_OK = 0
EXIT_CHECK = 1
EXIT_CONFIG = 2
EXIT_DIVERGED = 3


class ConfigError(ValueError):
    pass


def parse_config(path: str) -> dict:
    """Read a key = value file; values become int/float/str/lists of such."""
    out = {}
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {path}")
    for lineno, raw in enumerate(p.read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key] = _convert(value)
    return out


def _convert(text: str):
    if "," in text:
        return [_convert(t.strip()) for t in text.split(",") if t.strip()]
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            continue
    return text


def _write_csv(path: Path, header, rows):
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([f"{v:.17g}" if isinstance(v, float) else v for v in row])


def _write_json(path: Path, obj):
    path.write_text(json.dumps(obj, sort_keys=True, indent=1))


# ---------------------------------------------------------------------------
# initial states
# ---------------------------------------------------------------------------

def _initial_state(cfg: dict) -> dyn.OBState:
    m_max, n_max = int(cfg["m_max"]), int(cfg["n_max"])
    pr, ra = float(cfg["pr"]), float(cfg["ra"])
    name = str(cfg.get("initial", "mixed"))
    amp = float(cfg.get("amplitude", 0.01))
    st = dyn.OBState.zeros(m_max, n_max, pr, ra)
    if name.endswith(".json"):
        st = dyn.OBState.from_obj(json.loads(Path(name).read_text()))
        if st.phi.m_max != m_max or st.phi.n_max != n_max:
            raise ConfigError("snapshot truncation does not match m_max/n_max")
        return st
    if name == "zero":
        return st
    if name in ("profiles", "mixed"):
        st.phi.coeff[0, 0, 1] = -1.0 / np.pi
        st.phi.coeff[0, 0, 2] = -0.25 / np.pi
        st.tau.coeff[0, 0, 1] = 0.5
    if name in ("roll", "mixed"):
        st.phi.coeff[0, 1, 1] += amp
        st.tau.coeff[1, 1, 1] += amp
    if name == "random":
        rng = np.random.default_rng(int(cfg.get("seed", 0)))
        st.phi.coeff[:] = amp * rng.standard_normal(st.phi.coeff.shape)
        st.tau.coeff[:] = amp * rng.standard_normal(st.tau.coeff.shape)
        st.phi.coeff[1, 0, :] = 0.0
        st.tau.coeff[1, 0, :] = 0.0
        st.phi.coeff[:, :, 0] = 0.0
        st.tau.coeff[:, :, 0] = 0.0
    elif name not in ("profiles", "mixed", "roll", "zero"):
        raise ConfigError(f"unknown initial preset {name!r}")
    return st


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_simulate(args) -> int:
    cfg = parse_config(args.config)
    for key in ("pr", "ra", "dt", "t_end", "m_max", "n_max"):
        if key not in cfg:
            raise ConfigError(f"missing config key {key!r}")
    params = dyn.OBParams(pr=float(cfg["pr"]), ra=float(cfg["ra"]), dt=float(cfg["dt"]),
                          m_max=int(cfg["m_max"]), n_max=int(cfg["n_max"]),
                          t_end=float(cfg["t_end"]))
    state = _initial_state(cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    traj = dyn.simulate(state, params, sample_every=int(cfg.get("sample_every", 10)))
    from .energy import energy_identity_residual
    energy_identity_residual(traj)
    split = traj.energy_split()
    rows = []
    snapdir = out / "snapshots"
    snapdir.mkdir(exist_ok=True)
    for i, (t, rec) in enumerate(zip(traj.times, traj.records)):
        rows.append([float(t), rec.e, rec.grad_u_sq, rec.grad_sigma_sq, rec.f_value,
                     rec.residual if rec.residual is not None else float("nan"),
                     split[i][0], split[i][1]])
        _write_json(snapdir / f"state_{i:04d}.json", traj.states[i].to_obj())
    _write_csv(out / "diagnostics.csv",
               ["t", "e", "grad_u_sq", "grad_sigma_sq", "f_value", "residual",
                "energy_s", "energy_f"], rows)
    print(f"simulate: {len(traj.times)} samples -> {out}")
    return EXIT_OK


def cmd_decompose(args) -> int:
    state = dyn.OBState.from_obj(json.loads(Path(args.snapshot).read_text()))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    split = sub.decompose(state)
    _write_json(out / "s_part.json", {
        "a": list(split.s_part.a), "b": list(split.s_part.b),
        "pr": split.s_part.pr, "ra": split.s_part.ra, "t": split.s_part.t})
    _write_json(out / "f_part.json", split.f_part.to_obj())
    times = [float(t) for t in (args.times.split(",") if args.times else
                                ["0", "0.05", "0.1", "0.2", "0.5", "1.0"])]
    n_z = 2 * state.phi.n_max + 2
    z = (np.arange(n_z) + 0.5) / n_z
    rows = []
    for t in times:
        vx, ta = sub.mean_values(state, t, z)
        for zz, v, tv in zip(z, vx, ta):
            rows.append([t, float(zz), float(v), float(tv)])
    _write_csv(out / "means.csv", ["t", "z", "mean_vx", "mean_tau"], rows)
    print(f"decompose: wrote s_part/f_part and {len(times)} mean profiles -> {out}")
    return EXIT_OK


def cmd_annulus_steady(args) -> int:
    ras = args.ra if isinstance(args.ra, list) else [args.ra]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for ra in ras:
        params = ann.AnnulusParams(args.pr, float(ra), args.d)
        bs = ann.steady_solve(params, k_max=args.k, n_r=args.nr)
        (out / f"basestate_ra{ra:g}.json").write_text(bs.to_json())
        rows.append([float(ra), bs.grad_v_norm(), bs.grad_tau_norm(),
                     bs.residual, bs.picard_iters])
        print(f"Ra={ra:g}: iters={bs.picard_iters} residual={bs.residual:.2e} "
              f"|grad v0|={bs.grad_v_norm():.4f}")
    _write_csv(out / "sweep.csv", ["ra", "grad_v", "grad_tau", "residual", "iters"], rows)
    return EXIT_OK


def cmd_annulus_stability(args) -> int:
    params = ann.AnnulusParams(args.pr, args.ra, args.d)
    base = ann.steady_solve(params, k_max=args.k, n_r=args.nr)
    rep = stab.maximize_F(base, params)
    sol = stab.solve_eig(base, params, count=args.modes)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "stability.json", {
        "pr": args.pr, "ra": args.ra, "d": args.d,
        "m": rep.m_value, "m_direct": rep.m_direct, "m_eig": rep.m_eig,
        "lambda_c": rep.lambda_c,
        "lambda_c_shear_outside": rep.lambda_c_shear_outside,
        "verdict": rep.verdict,
        "base_residual": base.residual, "picard_iters": base.picard_iters})
    rows = [[i, float(lam), lab] for i, (lam, lab) in
            enumerate(zip(sol.lambdas, sol.symmetry_labels))]
    _write_csv(out / "spectrum.csv", ["index", "lambda", "symmetry_label"], rows)
    print(f"M = {rep.m_value:.6f} ({rep.verdict}); lambda_c = {rep.lambda_c:.6f}")
    return EXIT_OK


def cmd_layer_eig0(args) -> int:
    sol = stab.solve_eig0(n_rad=args.nr, k_range=(args.kmin, args.kmax), count=args.count)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "layer_eig0.json", {
        "lambda_c": sol.lambda_c, "wavenumber": sol.meta["wavenumber"],
        "lambdas": list(map(float, sol.lambdas)),
        "symmetry_labels": sol.symmetry_labels})
    rows = [[i, float(lam), lab] for i, (lam, lab) in
            enumerate(zip(sol.lambdas, sol.symmetry_labels))]
    _write_csv(out / "spectrum.csv", ["index", "lambda", "symmetry_label"], rows)
    print(f"lambda_c = {sol.lambda_c:.8f} at wavenumber {sol.meta['wavenumber']:.6f} "
          f"({sol.symmetry_labels[0]})")
    return EXIT_OK


def _sweep_point(task):
    pr, ra, d, k, nr, out_dir = task
    params = ann.AnnulusParams(pr, ra, d)
    try:
        base = ann.steady_solve(params, k_max=k, n_r=nr)
        rep = stab.maximize_F(base, params)
        result = {"pr": pr, "ra": ra, "d": d, "m": rep.m_value,
                  "lambda_c": rep.lambda_c, "verdict": rep.verdict,
                  "residual": base.residual, "status": "ok"}
    except PicardDivergenceError as exc:
        result = {"pr": pr, "ra": ra, "d": d, "m": float("nan"),
                  "lambda_c": float("nan"), "verdict": "no-base-state",
                  "residual": exc.residual, "status": "diverged"}
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "stability.json", result)
    return result


def cmd_sweep(args) -> int:
    from concurrent.futures import ProcessPoolExecutor

    cfg = parse_config(args.config)
    def as_list(v):
        return v if isinstance(v, list) else [v]
    prs = [float(v) for v in as_list(cfg.get("pr", 1.0))]
    ras = [float(v) for v in as_list(cfg.get("ra", 100.0))]
    ds = [float(v) for v in as_list(cfg.get("d", 1.0))]
    k = int(cfg.get("k", 8))
    nr = int(cfg.get("nr", 32))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    tasks = []
    idx = 0
    for pr in prs:
        for ra in ras:
            for d in ds:
                tasks.append((pr, ra, d, k, nr, str(out / f"run_{idx:03d}")))
                idx += 1
    max_workers = int(os.environ.get("CONVEC_SYM_THREADS", os.cpu_count() or 1))
    max_workers = max(1, min(max_workers, len(tasks)))
    if max_workers == 1:
        results = [_sweep_point(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=max_workers) as pool:
            results = list(pool.map(_sweep_point, tasks))
    rows = [[r["pr"], r["ra"], r["d"], r["m"], r["lambda_c"], r["verdict"], r["status"]]
            for r in results]
    _write_csv(out / "summary.csv",
               ["pr", "ra", "d", "m", "lambda_c", "verdict", "status"], rows)
    print(f"sweep: {len(results)} points -> {out}")
    return EXIT_OK


def cmd_repro(args) -> int:
    only = set(int(v) for v in args.only.split(",")) if args.only else None
    results = chk.run_all(quick=args.quick, only=only)
    width = max(len(r.name) for r in results)
    print(f"{'id':>3}  {'check':<{width}}  status  time")
    all_ok = True
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        all_ok = all_ok and r.passed
        print(f"{r.check_id:>3}  {r.name:<{width}}  {status}    {r.elapsed:6.1f}s")
        print(f"     {r.detail}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        _write_csv(out / "repro.csv", ["id", "name", "passed", "detail", "seconds"],
                   [[r.check_id, r.name, int(r.passed), r.detail, r.elapsed]
                    for r in results])
    print("all checks passed" if all_ok else "CHECK FAILURES PRESENT")
    return EXIT_OK if all_ok else EXIT_CHECK


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="convecsym",
                                description="Spectral convection laboratory")
    sp = p.add_subparsers(dest="command", required=True)

    s = sp.add_parser("simulate", help="integrate the layer equations from a config")
    s.add_argument("--config", required=True)
    s.add_argument("--out", default="out_simulate")
    s.set_defaults(func=cmd_simulate)

    s = sp.add_parser("decompose", help="split a snapshot into profile and remainder parts")
    s.add_argument("snapshot")
    s.add_argument("--times", default=None, help="comma-separated evaluation times")
    s.add_argument("--out", default="out_decompose")
    s.set_defaults(func=cmd_decompose)

    an = sp.add_parser("annulus", help="annulus studies")
    asp = an.add_subparsers(dest="subcommand", required=True)
    s = asp.add_parser("steady", help="even-symmetric steady state(s)")
    s.add_argument("--pr", type=float, required=True)
    s.add_argument("--ra", type=_convert, required=True, help="value or comma list")
    s.add_argument("--d", type=float, required=True)
    s.add_argument("--k", type=int, default=8)
    s.add_argument("--nr", type=int, default=32)
    s.add_argument("--out", default="out_annulus")
    s.set_defaults(func=cmd_annulus_steady)
    s = asp.add_parser("stability", help="energy-stability threshold at one point")
    s.add_argument("--pr", type=float, required=True)
    s.add_argument("--ra", type=float, required=True)
    s.add_argument("--d", type=float, required=True)
    s.add_argument("--modes", type=int, default=6)
    s.add_argument("--k", type=int, default=8)
    s.add_argument("--nr", type=int, default=32)
    s.add_argument("--out", default="out_stability")
    s.set_defaults(func=cmd_annulus_stability)

    lay = sp.add_parser("layer", help="planar-layer limit problems")
    lsp = lay.add_subparsers(dest="subcommand", required=True)
    s = lsp.add_parser("eig0", help="limit eigenproblem over a wavenumber range")
    s.add_argument("--nr", type=int, default=32)
    s.add_argument("--kmin", type=float, default=2.0)
    s.add_argument("--kmax", type=float, default=4.5)
    s.add_argument("--count", type=int, default=6)
    s.add_argument("--out", default="out_layer")
    s.set_defaults(func=cmd_layer_eig0)

    s = sp.add_parser("sweep", help="parameter sweep of annulus stability")
    s.add_argument("--config", required=True)
    s.add_argument("--out", default="out_sweep")
    s.set_defaults(func=cmd_sweep)

    s = sp.add_parser("repro", help="run the acceptance suite")
    s.add_argument("--quick", action="store_true")
    s.add_argument("--only", default=None, help="comma-separated criterion ids")
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_repro)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0,) else 0
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (BlowUpError, PicardDivergenceError) as exc:
        print(f"numerical divergence: {exc}", file=sys.stderr)
        return EXIT_DIVERGED


if __name__ == "__main__":
    sys.exit(main())
