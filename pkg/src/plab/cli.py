"""Command-line front end.

Subcommands: solve, decay, besov, transfer, catalogue, selftest. Experiments
are described by a JSON config; a few scalar flags (--seed, --out, --jobs)
override config entries. Reports are CSV/JSON with 17-significant-digit
decimals plus rendered PNG figures; identical config and seed give
byte-identical delimited output, also with --jobs > 1.

Exit codes: 0 ok, 1 selftest failure, 2 solver failure, 3 config error,
4 too many decay chains below the resolution guard, 5 all parameter rows
skipped.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import besov as besov_mod
from . import decay as decay_mod
from . import experiments as xp
from . import orlicz, report
from .errors import ConfigError, ResolutionError, SolverFailure
from .field import (Ball, Grid2D, ScalarField, VectorField, dump_field, gradient,
                    load_field, oscillation)
from .solver import (DirichletProblem, SolverOptions, catalogue,
                     manufactured_forcing, solve_p_poisson)

log = logging.getLogger("plab")

EXIT_OK = 0
EXIT_SELFTEST = 1
EXIT_SOLVER = 2
EXIT_CONFIG = 3
EXIT_RESOLUTION = 4
EXIT_ALL_SKIPPED = 5


def _setup_logging():
    level = os.environ.get("PLAB_LOG", "warn").lower()
    levels = {"error": logging.ERROR, "warn": logging.WARNING,
              "info": logging.INFO, "debug": logging.DEBUG}
    if level not in levels:
        raise ConfigError(f"PLAB_LOG must be one of {sorted(levels)}, got {level!r}")
    logging.basicConfig(level=levels[level],
                        format="plab %(levelname)s: %(message)s")


def _need(cfg: dict, key: str, kind, where: str = "config"):
    if key not in cfg:
        raise ConfigError(f"missing required field '{key}' in {where}")
    val = cfg[key]
    if kind is float:
        if not isinstance(val, (int, float)) or isinstance(val, bool):
            raise ConfigError(f"field '{key}' in {where} must be a number")
        return float(val)
    if kind is int:
        if not isinstance(val, int) or isinstance(val, bool):
            raise ConfigError(f"field '{key}' in {where} must be an integer")
        return val
    if not isinstance(val, kind):
        raise ConfigError(f"field '{key}' in {where} has wrong type "
                          f"(expected {kind.__name__})")
    return val


def _grid_from_config(cfg: dict) -> Grid2D:
    g = _need(cfg, "grid", dict)
    if "n" in g:
        n = _need(g, "n", int, "grid")
        return Grid2D.unit_square(n, g.get("x0", 0.0), g.get("y0", 0.0),
                                  g.get("length", 1.0))
    return Grid2D(_need(g, "x0", float, "grid"), _need(g, "y0", float, "grid"),
                  _need(g, "h", float, "grid"), _need(g, "nx", int, "grid"),
                  _need(g, "ny", int, "grid"))


def _solver_options(cfg: dict) -> SolverOptions:
    s = cfg.get("solver", {})
    return SolverOptions(
        tol=s.get("tol", 1e-10), max_iter=s.get("max_iter", 200),
        newton_damping=s.get("newton_damping", 0.5),
        hessian_floor=s.get("hessian_floor", 1e-12),
        continuation=s.get("continuation", True))


def _build_problem(cfg: dict, opts: SolverOptions):
    """Produce (u, F-or-None, ctx, convergence-record-or-None) per config."""
    p = _need(cfg, "p", float)
    ctx = orlicz.ExponentCtx(p)
    grid = _grid_from_config(cfg)
    spec = _need(cfg, "problem", dict)
    kind = _need(spec, "kind", str, "problem")
    if kind == "load":
        u_path = _need(spec, "u_path", str, "problem")
        if not Path(u_path).with_suffix(".json").exists():
            raise ConfigError(f"field 'u_path' in problem does not resolve: {u_path}")
        u = load_field(u_path)
        F = None
        if "f_path" in spec:
            if not Path(spec["f_path"]).with_suffix(".json").exists():
                raise ConfigError(f"field 'f_path' in problem does not resolve: "
                                  f"{spec['f_path']}")
            F = load_field(spec["f_path"])
        return u, F, ctx, None
    if kind == "pharmonic_trig":
        poly = xp.TrigPoly.seeded(_need(spec, "seed", int, "problem"),
                                  spec.get("amplitude", 0.4), kmax=2,
                                  affine=spec.get("affine", (1.0, 0.3)))
        prob = DirichletProblem(ctx, grid, None, poly.scalar_field(grid).values)
        u, rec = solve_p_poisson(prob, opts)
        return u, None, ctx, rec
    if kind == "saddle":
        boundary = xp.saddle_boundary(grid, _need(spec, "seed", int, "problem"),
                                      spec.get("amplitude", 0.05))
        prob = DirichletProblem(ctx, grid, None, boundary)
        u, rec = solve_p_poisson(prob, opts)
        return u, None, ctx, rec
    if kind == "catalogue":
        entry = catalogue(_need(spec, "name", str, "problem"), ctx, grid,
                          a=tuple(spec.get("a", (3.0, -2.0))),
                          b=spec.get("b", 1.0))
        prob = DirichletProblem(ctx, grid, None, entry.u.values)
        u, rec = solve_p_poisson(prob, opts)
        return u, None, ctx, rec
    if kind == "manufactured":
        u_poly = xp.TrigPoly.seeded(_need(spec, "seed", int, "problem"),
                                    spec.get("u_amplitude", 0.5), kmax=2,
                                    affine=spec.get("u_affine", (0.9, -0.4)))
        psi = xp.TrigPoly.seeded(spec.get("psi_seed",
                                          _need(spec, "seed", int, "problem") + 7919),
                                 spec.get("psi_amplitude", 0.3), kmax=2)
        F = manufactured_forcing(u_poly.gradient_field(grid), ctx, psi)
        prob = DirichletProblem(ctx, grid, F, u_poly.scalar_field(grid).values)
        u, rec = solve_p_poisson(prob, opts)
        return u, F, ctx, rec
    raise ConfigError(f"unknown problem kind {kind!r}")


def _load_config(args) -> dict:
    if args.config is None:
        raise ConfigError("missing required field '--config PATH'")
    path = Path(args.config)
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist")
    try:
        cfg = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}")
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.out is not None:
        cfg["output_dir"] = args.out
    cfg.setdefault("output_dir", "plab_out")
    cfg["_jobs"] = args.jobs
    cfg["_plot_tables"] = args.plot_tables
    cfg["_plots"] = not args.no_plots
    return cfg


def _outdir(cfg) -> Path:
    out = Path(cfg["output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _pmap(fn, items, jobs: int):
    if jobs <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# solve
# ---------------------------------------------------------------------------

def cmd_solve(cfg: dict) -> int:
    opts = _solver_options(cfg)
    out = _outdir(cfg)
    try:
        u, F, ctx, rec = _build_problem(cfg, opts)
    except SolverFailure as exc:
        log.error("solver failure: %s", exc)
        return EXIT_SOLVER
    gu = gradient(u)
    dump_field(u, out / "u")
    dump_field(gu, out / "grad_u")
    dump_field(VectorField(u.grid, orlicz.a_map(ctx, gu.values)), out / "a_grad_u")
    dump_field(VectorField(u.grid, orlicz.v_map(ctx, gu.values)), out / "v_grad_u")
    if F is not None:
        dump_field(F, out / "forcing")
    payload = {"p": ctx.p, "seed": cfg.get("seed"),
               "converged": rec.converged if rec else None,
               "residual": rec.residual if rec else None}
    if rec is not None:
        payload.update(rec.to_json())
        if cfg.get("_plots", True):
            report.convergence_figure(out / "convergence.png", rec.to_json(),
                                      f"damped Newton, p={ctx.p:g}")
    report.write_json(out / "convergence.json", payload)
    return EXIT_OK


# ---------------------------------------------------------------------------
# decay
# ---------------------------------------------------------------------------

def _decay_chain(task):
    grid_spec, p, target_vals, grad_vals, dc, center = task
    grid = Grid2D(*grid_spec)
    ctx = orlicz.ExponentCtx(p)
    target = VectorField(grid, target_vals)
    gu = VectorField(grid, grad_vals)
    prof = decay_mod.decay_profile(target, center, dc.get("t0", 0.25),
                                   dc.get("theta", 0.5), dc.get("K", 5),
                                   dc.get("w", 1.0), dc.get("quantity", "A_grad"))
    fit = decay_mod.fit_beta(prof)
    cls = decay_mod.classify_ball(gu, Ball(center, dc.get("t0", 0.25)), ctx,
                                  dc.get("epsilon_dg", 1e-2))
    return prof, fit, cls


def cmd_decay(cfg: dict) -> int:
    out = _outdir(cfg)
    dc = cfg.get("decay", {})
    balls = _need(cfg, "balls", dict)
    seed = cfg.get("seed", balls.get("seed"))
    if "centers" in balls:
        centers = [tuple(c) for c in balls["centers"]]
    else:
        if seed is None:
            raise ConfigError("missing required field 'seed' (ball sampler needs one)")
        count = _need(balls, "count", int, "balls")
        t0 = dc.get("t0", 0.25)
        rng = xp.rng_from_seed(seed)
        grid = _grid_from_config(cfg)
        margin = t0 + 2 * grid.h
        lox, hix = grid.x0 + margin, grid.x1 - margin
        loy, hiy = grid.y0 + margin, grid.y1 - margin
        if hix <= lox or hiy <= loy:
            raise ConfigError("field 'decay.t0' too large for the grid")
        centers = [(lox + (hix - lox) * rng.random(),
                    loy + (hiy - loy) * rng.random()) for _ in range(count)]

    u, F, ctx, _ = _build_problem(cfg, _solver_options(cfg))
    quantity = dc.get("quantity", "A_grad")
    gu = gradient(u)
    if quantity == "A_grad":
        target = VectorField(u.grid, orlicz.a_map(ctx, gu.values))
    elif quantity == "V_grad":
        target = VectorField(u.grid, orlicz.v_map(ctx, gu.values))
    elif quantity == "grad":
        target = gu
    elif quantity == "F":
        if F is None:
            raise ConfigError("decay quantity 'F' needs a problem with forcing")
        target = F
    else:
        raise ConfigError(f"unknown decay quantity {quantity!r}")
    g = u.grid
    grid_spec = (g.x0, g.y0, g.h, g.nx, g.ny)
    tasks = [(grid_spec, ctx.p, target.values, gu.values, dc, c)
             for c in centers]
    results = _pmap(_decay_chain, tasks, cfg.get("_jobs", 1))

    rows, chains = [], []
    slopes, flags, classes = [], [], []
    failed_guard = 0
    for (prof, fit, cls) in sorted(results, key=lambda r: r[0].center):
        if len(prof.radii) < 4:
            failed_guard += 1
        for k, (t_k, osc_k) in enumerate(zip(prof.radii, prof.osc_values)):
            rows.append((prof.center[0], prof.center[1], dc.get("t0", 0.25),
                         dc.get("theta", 0.5), k, t_k, osc_k, prof.quantity,
                         prof.w))
        slopes.append(fit.beta)
        flags.append(fit.flag)
        classes.append(cls)
        chains.append({"center": list(prof.center), "beta": fit.beta,
                       "r2": fit.r2, "flag": fit.flag,
                       "radii": prof.radii.tolist(),
                       "osc": prof.osc_values.tolist()})

    header = [f"seed={seed}", f"p={cfg.get('p')}", f"quantity={dc.get('quantity', 'A_grad')}"]
    columns = ["center_x", "center_y", "t0", "theta", "k", "t_k", "osc",
               "quantity", "w"]
    report.write_csv(out / "decay.csv", header, columns, rows)
    if cfg.get("_plot_tables"):
        report.write_table(out / "decay.dat", header, columns, rows)

    ok_slopes = [b for b, f in zip(slopes, flags) if f == "ok"]
    hist = {}
    for c in classes:
        hist[c] = hist.get(c, 0) + 1
    if ok_slopes:
        median_beta = float(np.median(ok_slopes))
    else:
        # every chain decayed exactly (or saturated); keep the sentinel of fit_beta
        median_beta = math.inf if any(f == "exact_decay" for f in flags) else math.nan
    def _ratios(osc):
        a = np.asarray(osc, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            return [float(v) for v in np.where(a[:-1] > 0, a[1:] / a[:-1], np.nan)]
    rep = decay_mod.DecayReport(
        fitted_beta=median_beta,
        r2=[c["r2"] for c in chains],
        per_step_ratios=[_ratios(c["osc"]) for c in chains],
        inequality_residuals=[],
        epsilon_dg_used=dc.get("epsilon_dg", 1e-2),
        classification=classes,
        profiles=chains)
    summary = rep.to_json()
    summary.update({
        "seed": seed,
        "fitted_beta_all": ok_slopes,
        "flags": flags,
        "classification_histogram": hist,
        "calibrated_constants": {},
        "exact_decay_count": sum(1 for f in flags if f == "exact_decay"),
        "note": "V-oscillation decay exponents have no proven sharp lower bound; "
                "slopes are reported as measured",
    })
    report.write_json(out / "decay_summary.json", summary)
    if cfg.get("_plots", True):
        report.decay_figure(out / "decay.png", chains,
                            f"oscillation decay, p={cfg.get('p')}, "
                            f"{dc.get('quantity', 'A_grad')}")
    if failed_guard > 0.5 * len(centers):
        log.error("more than half of the chains fell below the resolution guard")
        return EXIT_RESOLUTION
    return EXIT_OK


# ---------------------------------------------------------------------------
# besov / transfer
# ---------------------------------------------------------------------------

def _smoothness_rows(cfg) -> list:
    rows = _need(cfg, "smoothness", list)
    if not rows:
        raise ConfigError("field 'smoothness' must list at least one row")
    return rows


def _parse_row(row, idx, default_w):
    where = f"smoothness[{idx}]"
    s = _need(row, "s", float, where)
    rho = row.get("rho", math.inf)
    q = row.get("q", math.inf)
    w = row.get("w", default_w)
    scale = row.get("scale", "besov")
    if scale not in ("besov", "triebel"):
        raise ConfigError(f"field 'scale' in {where} must be besov or triebel")
    return s, float(rho), float(q), float(w), scale


def cmd_besov(cfg: dict) -> int:
    out = _outdir(cfg)
    opts = _solver_options(cfg)
    u, F, ctx, _ = _build_problem(cfg, opts)
    ball_cfg = _need(cfg, "ball", dict)
    ball = Ball((_need(ball_cfg, "cx", float, "ball"),
                 _need(ball_cfg, "cy", float, "ball")),
                _need(ball_cfg, "r", float, "ball"))
    lad_cfg = cfg.get("ladder", {})
    ladder = besov_mod.DyadicLadder(lad_cfg.get("R", ball.radius),
                                    lad_cfg.get("J", 4))
    target_name = cfg.get("target", "flux")
    gu = gradient(u)
    targets = {"flux": VectorField(u.grid, orlicz.a_map(ctx, gu.values)),
               "gradient": gu, "u": u}
    if F is not None:
        targets["forcing"] = F
    if target_name not in targets:
        raise ConfigError(f"field 'target' must be one of {sorted(targets)}")
    g = targets[target_name]

    rows_out, skipped, csv_rows = [], [], []
    ladders = {}
    for idx, row in enumerate(_smoothness_rows(cfg)):
        s, rho, q, w, scale = _parse_row(row, idx, default_w=ctx.p_conj)
        try:
            params = besov_mod.SmoothnessParams(s, rho, q, w=w)
            if not besov_mod.embedding_check(params, ctx.p_conj,
                                             triebel=(scale == "triebel")):
                raise besov_mod.ParameterError(
                    "embedding into L^p' fails: 2(1/rho - 1/p')+ >= s")
            if w not in ladders:
                ladders[w] = besov_mod.oscillation_ladder(g, ball, w, ladder)
            osc = ladders[w]
            if scale == "triebel":
                value = besov_mod.triebel_from_ladder(osc, params, ladder.R)
                per_scale = []
            else:
                value = besov_mod.besov_from_ladder(osc, params, ladder.R)
                per_scale = list(besov_mod._node_norm(osc.values, rho)
                                 / osc.radii ** s)
        except (besov_mod.ParameterError, ResolutionError) as exc:
            skipped.append({"row": idx, "reason": str(exc)})
            continue
        rows_out.append({"row": idx, "s": s, "rho": rho, "q": q, "w": w,
                         "scale": scale, "value": value,
                         "per_scale": per_scale})
    if not rows_out:
        log.error("all smoothness rows were skipped")
        report.write_json(out / "besov_skipped.json", skipped)
        return EXIT_ALL_SKIPPED
    max_scales = max(len(r["per_scale"]) for r in rows_out)
    for r in rows_out:
        pad = [math.nan] * (max_scales - len(r["per_scale"]))
        csv_rows.append((r["s"], r["rho"], r["q"], r["w"], ladder.R, ladder.J,
                         r["value"], *(list(r["per_scale"]) + pad)))
    columns = (["s", "rho", "q", "w", "R", "J", "value"]
               + [f"a_{j}" for j in range(max_scales)])
    header = [f"seed={cfg.get('seed')}", f"p={ctx.p}", f"target={target_name}"]
    report.write_csv(out / "besov.csv", header, columns, csv_rows)
    if cfg.get("_plot_tables"):
        report.write_table(out / "besov.dat", header, columns, csv_rows)
    report.write_json(out / "besov_summary.json",
                      {"rows": [{k: v for k, v in r.items() if k != "per_scale"}
                                for r in rows_out],
                       "skipped": skipped, "seed": cfg.get("seed")})
    if cfg.get("_plots", True):
        report.seminorm_figure(out / "besov.png", rows_out,
                               f"seminorm ladders, p={ctx.p:g}, {target_name}")
    return EXIT_OK


def _transfer_case(task):
    cfg, k = task
    opts = _solver_options(cfg)
    case_cfg = dict(cfg)
    spec = dict(cfg["problem"])
    spec["seed"] = spec.get("seed", 0) + 31 * k
    case_cfg["problem"] = spec
    u, F, ctx, _ = _build_problem(case_cfg, opts)
    if F is None:
        raise ConfigError("transfer needs a problem kind with forcing "
                          "(manufactured or load with f_path)")
    ball_cfg = cfg.get("ball", {"cx": 0.5, "cy": 0.5, "r": 0.25})
    ball = Ball((ball_cfg.get("cx", 0.5), ball_cfg.get("cy", 0.5)),
                ball_cfg.get("r", 0.25))
    ladder = besov_mod.DyadicLadder(cfg.get("ladder", {}).get("R", ball.radius),
                                    cfg.get("ladder", {}).get("J", 4))
    out_rows, skipped = [], []
    for idx, row in enumerate(_smoothness_rows(cfg)):
        s, rho, q, w, scale = _parse_row(row, idx, default_w=ctx.p_conj)
        try:
            params = besov_mod.SmoothnessParams(s, rho, q, w=w)
            lhs, rhs = decay_mod.transfer_ratio(u, F, ball, params, ladder, ctx,
                                                triebel=(scale == "triebel"))
        except (besov_mod.ParameterError, ResolutionError) as exc:
            skipped.append({"case": k, "row": idx, "reason": str(exc)})
            continue
        out_rows.append((k, spec["seed"], idx, s, rho, q, w, lhs, rhs,
                         lhs / rhs if rhs > 0 else math.nan))
    return out_rows, skipped


def cmd_transfer(cfg: dict) -> int:
    out = _outdir(cfg)
    count = cfg.get("count", 1)
    results = _pmap(_transfer_case, [(cfg, k) for k in range(count)],
                    cfg.get("_jobs", 1))
    rows, skipped = [], []
    for r, s in results:
        rows.extend(r)
        skipped.extend(s)
    rows.sort(key=lambda r: (r[0], r[2]))
    if not rows:
        log.error("all transfer rows were skipped")
        report.write_json(out / "transfer_skipped.json", skipped)
        return EXIT_ALL_SKIPPED
    columns = ["case", "problem_seed", "row", "s", "rho", "q", "w", "lhs",
               "rhs", "ratio"]
    header = [f"seed={cfg.get('seed')}", f"p={cfg.get('p')}"]
    report.write_csv(out / "transfer.csv", header, columns, rows)
    if cfg.get("_plot_tables"):
        report.write_table(out / "transfer.dat", header, columns, rows)
    ratios = [r[-1] for r in rows if not math.isnan(r[-1])]
    report.write_json(out / "transfer_summary.json", {
        "seed": cfg.get("seed"), "max_ratio": max(ratios) if ratios else None,
        "n_rows": len(rows), "skipped": skipped})
    if cfg.get("_plots", True):
        report.transfer_figure(out / "transfer.png",
                               [{"ratio": r[-1]} for r in rows],
                               f"regularity transfer ratios, p={cfg.get('p')}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# catalogue
# ---------------------------------------------------------------------------

def cmd_catalogue(cfg: dict) -> int:
    out = _outdir(cfg)
    p = _need(cfg, "p", float)
    ctx = orlicz.ExponentCtx(p)
    grid = _grid_from_config(cfg)
    name = _need(cfg, "name", str)
    entry = catalogue(name, ctx, grid, a=tuple(cfg.get("a", (3.0, -2.0))),
                      b=cfg.get("b", 1.0))
    dump_field(entry.u, out / f"{name}_u")
    if entry.grad is not None:
        dump_field(entry.grad, out / f"{name}_grad")
    report.write_json(out / f"{name}_meta.json",
                      {"name": name, "p": p, "grid": {"nx": grid.nx,
                                                      "ny": grid.ny,
                                                      "h": grid.h}})
    return EXIT_OK


# ---------------------------------------------------------------------------
# selftest
# ---------------------------------------------------------------------------

def _invariant_checks():
    rng = xp.rng_from_seed(321)
    ctxs = [orlicz.ExponentCtx(p) for p in (1.5, 2.0, 3.0, 4.5)]

    def phi_examples():
        assert abs(orlicz.phi(ctxs[1], 2.0) - 2.0) < 1e-15
        assert abs(orlicz.phi_shifted(ctxs[2], 1.0, 2.0) - 17.0 / 6.0) < 1e-14
        assert abs(orlicz.phi_conj_shifted(ctxs[1], 0.0, 3.0) - 4.5) < 1e-14

    def monotonicity():
        for ctx in ctxs:
            P = rng.normal(size=(4000, 2))
            Q = rng.normal(size=(4000, 2))
            pair = np.sum((orlicz.a_map(ctx, P) - orlicz.a_map(ctx, Q))
                          * (P - Q), axis=-1)
            assert np.all(pair >= 0.0), "monotonicity pairing went negative"
            assert np.all(pair[np.linalg.norm(P - Q, axis=-1) > 1e-8] > 0.0)

    def amap_identities():
        for ctx in ctxs:
            Q = rng.normal(size=(4000, 2))
            nq = np.linalg.norm(Q, axis=-1)
            dot = np.sum(orlicz.a_map(ctx, Q) * Q, axis=-1)
            vsq = np.sum(orlicz.v_map(ctx, Q) ** 2, axis=-1)
            assert np.allclose(dot, nq ** ctx.p, rtol=1e-10)
            assert np.allclose(vsq, nq ** ctx.p, rtol=1e-10)

    def talpha_group():
        Q = rng.normal(size=(1000, 2))
        left = orlicz.t_alpha(0.35 * 1.7, Q)
        right = orlicz.t_alpha(0.35, orlicz.t_alpha(1.7, Q))
        assert np.allclose(left, right, atol=1e-12)
        assert np.allclose(orlicz.t_alpha(1.0 / 1.7, orlicz.t_alpha(1.7, Q)), Q,
                           rtol=1e-10, atol=1e-12)

    def legendre_conjugate():
        ctx = ctxs[2]
        for a, t in ((0.5, 1.2), (1.0, 0.3), (2.0, 2.5)):
            s = np.linspace(0.0, 8.0, 300001)
            brute = np.max(s * t - orlicz.phi_shifted(ctx, a, s))
            assert abs(orlicz.phi_conj_shifted(ctx, a, t) - brute) < 1e-5

    def da_eigenvalues():
        for ctx in ctxs:
            q = rng.normal(size=2)
            lam = np.linalg.eigvalsh(orlicz.da_matrix(ctx, q))
            n = np.linalg.norm(q)
            expect = sorted([n ** (ctx.p - 2.0), (ctx.p - 1.0) * n ** (ctx.p - 2.0)])
            assert np.allclose(sorted(lam), expect, rtol=1e-10)

    def hammer_zero():
        for ctx in ctxs:
            q = rng.normal(size=2)
            panel = orlicz.hammer_panel(ctx, q, q)
            assert all(abs(float(v)) < 1e-14 for v in panel)

    def iterative_lemma():
        for c0 in (0.5, 2.0):
            for beta in (0.3, 0.8):
                assert decay_mod.iterative_lemma_check(c0, beta, 200) <= 1.0

    def field_symmetry():
        grid = Grid2D.unit_square(81)
        f = ScalarField.from_function(grid, lambda X, Y: X - 0.5)
        ball = Ball((0.5, 0.5), 0.3)
        from .field import ball_average
        assert abs(ball_average(f, ball)) < 2 * grid.h
        o1 = oscillation(f, ball, 2.0)
        o2 = oscillation(f + 17.3, ball, 2.0)
        assert abs(o1 - o2) < 1e-12

    def gradient_affine():
        grid = Grid2D.unit_square(33)
        f = ScalarField.from_function(grid, lambda X, Y: 3 * X - 2 * Y + 1)
        g = gradient(f).values
        assert np.allclose(g[..., 0], 3.0, atol=1e-12)
        assert np.allclose(g[..., 1], -2.0, atol=1e-12)

    return [("phi_examples", phi_examples), ("monotonicity", monotonicity),
            ("amap_identities", amap_identities), ("talpha_group", talpha_group),
            ("legendre_conjugate", legendre_conjugate),
            ("da_eigenvalues", da_eigenvalues), ("hammer_zero", hammer_zero),
            ("iterative_lemma", iterative_lemma),
            ("field_symmetry", field_symmetry),
            ("gradient_affine", gradient_affine)]


def cmd_selftest() -> int:
    failures = []
    for name, fn in _invariant_checks():
        try:
            fn()
        except Exception as exc:
            failures.append((name, str(exc)))
            print(f"FAIL {name}: {exc}")
            continue
        print(f"ok   {name}")
    if failures:
        print(f"selftest: {len(failures)} invariant(s) failed: "
              + ", ".join(name for name, _ in failures))
        return EXIT_SELFTEST
    print("selftest: all invariants hold")
    return EXIT_OK


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="plab",
                                 description="p-Poisson regularity laboratory")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("solve", "decay", "besov", "transfer", "catalogue"):
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=False)
        sp.add_argument("--out", default=None)
        sp.add_argument("--jobs", type=int, default=1)
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--plot-tables", action="store_true")
        sp.add_argument("--no-plots", action="store_true",
                        help="skip PNG figure rendering")
    sub.add_parser("selftest")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        _setup_logging()
        if args.command == "selftest":
            return cmd_selftest()
        cfg = _load_config(args)
        handler = {"solve": cmd_solve, "decay": cmd_decay, "besov": cmd_besov,
                   "transfer": cmd_transfer, "catalogue": cmd_catalogue}
        return handler[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverFailure as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
