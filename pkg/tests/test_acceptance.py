"""Acceptance suite: every criterion at its stated tolerance and budget.

Run with `pytest tests/test_acceptance.py -v -s` to see one line per
criterion. Each test prints PASS/FAIL with the measured statistic and its
elapsed time, and asserts both the tolerance and the runtime budget.
"""

import json
import math
import time

import numpy as np
import pytest

from plab import besov, cli, decay, experiments as xp, orlicz
from plab.field import Ball, Grid2D, VectorField, gradient
from plab.solver import DirichletProblem, catalogue, solve_p_harmonic, solve_p_poisson

import oracles


def report(n, ok, detail, elapsed, budget):
    status = "PASS" if ok else "FAIL"
    print(f"\nACCEPTANCE {n:02d}: {status} [{elapsed:.1f}s / budget {budget:.0f}s] {detail}")


def test_criterion_01_exponent_formulas():
    t0 = time.time()
    ok = True
    detail = []
    ok &= abs(orlicz.alpha_exponent(2.0) - 1.0) < 1e-12
    ok &= abs(orlicz.eta_exponent(2.0) - 1.0) < 1e-12
    for p in (2.0, 2.5, 3.0, 5.0, 10.0):
        ok &= orlicz.alpha_exponent(p) >= 1.0 / (p - 1.0) - 1e-14
    tail = orlicz.alpha_exponent(1e6) * 1e6 / 2.0
    ok &= abs(tail - 0.6861) < 1e-3
    detail.append(f"alpha(2)={orlicz.alpha_exponent(2.0):.15f} "
                  f"eta(2)={orlicz.eta_exponent(2.0):.15f} "
                  f"limit={tail:.6f}")
    elapsed = time.time() - t0
    report(1, ok and elapsed < 1.0, "; ".join(detail), elapsed, 1)
    assert ok
    assert elapsed < 1.0


def test_criterion_02_orlicz_identities():
    t0 = time.time()
    worst_rel = 0.0
    for p in (1.5, 2.0, 3.0, 4.5):
        ctx = orlicz.ExponentCtx(p)
        rng = xp.rng_from_seed(1000 + int(10 * p))
        Q = rng.normal(size=(10000, 2)) * 3.0
        nq = np.linalg.norm(Q, axis=-1)
        dot = np.sum(orlicz.a_map(ctx, Q) * Q, axis=-1)
        vsq = np.sum(orlicz.v_map(ctx, Q) ** 2, axis=-1)
        ref = nq ** p
        worst_rel = max(worst_rel,
                        float(np.max(np.abs(dot - ref) / ref)),
                        float(np.max(np.abs(vsq - ref) / ref)))
    ok = worst_rel < 1e-10

    ctx = orlicz.ExponentCtx(3.0)
    worst_conj = 0.0
    for a in np.linspace(0.0, 3.0, 50):
        for t in np.linspace(0.0, 3.0, 50):
            if t == 0.0:
                continue
            brute = oracles.legendre_brute(
                lambda s: orlicz.phi_shifted(ctx, a, s), t, s_max=4.0)
            worst_conj = max(worst_conj,
                             abs(orlicz.phi_conj_shifted(ctx, a, t) - brute))
    ok &= worst_conj < 1e-6
    elapsed = time.time() - t0
    report(2, ok and elapsed < 10,
           f"identity rel err {worst_rel:.2e}; Legendre gap {worst_conj:.2e}",
           elapsed, 10)
    assert ok
    assert elapsed < 10.0


def test_criterion_03_iterative_lemma():
    t0 = time.time()
    worst = 0.0
    for c0 in (0.1, 0.5, 1.0, 3.0, 10.0):
        for beta in (0.1, 0.3, 0.5, 0.8, 0.95):
            worst = max(worst, decay.iterative_lemma_check(c0, beta, 500))
    ok = worst <= 1.0
    elapsed = time.time() - t0
    report(3, ok and elapsed < 1, f"max ratio {worst:.12f}", elapsed, 1)
    assert ok
    assert elapsed < 1.0


def test_criterion_04_solver_convergence():
    t0 = time.time()
    errs = {}
    for n in (64, 128):
        grid = Grid2D.unit_square(n + 1)
        X, Y = grid.meshgrid()
        ue = np.sin(np.pi * X) * np.sin(np.pi * Y)
        F = VectorField(grid, np.stack(
            [np.pi * np.cos(np.pi * X) * np.sin(np.pi * Y),
             np.pi * np.sin(np.pi * X) * np.cos(np.pi * Y)], axis=-1))
        u, _ = solve_p_poisson(DirichletProblem(orlicz.ExponentCtx(2.0), grid,
                                                F, ue))
        errs[n] = float(np.sqrt(np.mean((u.values - ue) ** 2))
                        / np.sqrt(np.mean(ue ** 2)))
    ratio = errs[64] / errs[128]
    ok = 3.5 <= ratio <= 4.5

    grid = Grid2D(1.0, 1.0, 1.0 / 256.0, 257, 257)
    ctx = orlicz.ExponentCtx(3.0)
    entry = catalogue("radial", ctx, grid)
    u, _ = solve_p_harmonic(ctx, grid, entry.u.values)
    ge = entry.grad.values
    rel = float(np.sqrt(np.sum((gradient(u).values - ge) ** 2)
                        / np.sum(ge ** 2)))
    ok &= rel < 0.02
    elapsed = time.time() - t0
    report(4, ok and elapsed < 300,
           f"p=2 refinement ratio {ratio:.3f}; p=3 radial grad err {rel:.2e}",
           elapsed, 300)
    assert 3.5 <= ratio <= 4.5
    assert rel < 0.02
    assert elapsed < 300.0


def test_criterion_05_flux_decay_measurement():
    t0 = time.time()
    medians = {}
    for p in (2.0, 3.0, 4.5):
        st = xp.pharmonic_decay_study(p, n=257, n_boundaries=5,
                                      chains_per_solve=2, t0=0.25, theta=0.5,
                                      K=5, w=1.0, seed=20240)
        assert len(st["slopes"]) == 10
        medians[p] = st["median_beta"]
    ok = all(m >= 0.8 for m in medians.values())
    ok &= abs(medians[2.0] - 1.0) <= 0.1
    elapsed = time.time() - t0
    report(5, ok and elapsed < 600,
           "medians " + ", ".join(f"p={p}: {m:.3f}" for p, m in medians.items()),
           elapsed, 600)
    assert medians[2.0] == pytest.approx(1.0, abs=0.1)
    for p, m in medians.items():
        assert m >= 0.8, f"median flux decay slope at p={p} is {m:.3f} < 0.8"
    assert elapsed < 600.0


def test_criterion_06_duality_asymmetry():
    t0 = time.time()
    st = xp.duality_study(p=1.5, n=257, seeds=(1, 2, 3), t0=0.25, theta=0.5,
                          K=5)
    cap = orlicz.eta_exponent(3.0) + 0.1
    ok = st["grad_beta_median"] >= 0.8
    ok &= st["flux_beta_median"] <= cap
    ok &= st["roundtrip_l1_max"] <= 0.05
    elapsed = time.time() - t0
    report(6, ok and elapsed < 300,
           f"grad slope {st['grad_beta_median']:.3f} >= 0.8; flux slope "
           f"{st['flux_beta_median']:.3f} <= {cap:.3f}; roundtrip "
           f"{st['roundtrip_l1_max']:.2e} <= 0.05", elapsed, 300)
    assert st["grad_beta_median"] >= 0.8
    assert st["flux_beta_median"] <= cap
    assert st["roundtrip_l1_max"] <= 0.05
    assert elapsed < 300.0


def test_criterion_07_reverse_hoelder_and_comparison():
    t0 = time.time()
    rh = xp.reverse_holder_suite(p=3.0, n=193, n_solves=2, balls_per=10,
                                 seed=515)
    nc = xp.nonlin_comparison_suite(p=3.0, n=193, count=4, balls_per=5,
                                    seed=616, psi_amplitude=0.5)
    assert len(rh["val_ratios"]) == 10 and len(nc["val_ratios"]) == 10
    ok = rh["pass_rate"] >= 0.95 and nc["pass_rate"] >= 0.95
    elapsed = time.time() - t0
    report(7, ok and elapsed < 600,
           f"reverse-Hoelder c={rh['calibrated_c']:.3f} pass={rh['pass_rate']:.2f}; "
           f"nonlinear comparison c={nc['calibrated_c']:.3f} "
           f"pass={nc['pass_rate']:.2f}", elapsed, 600)
    assert rh["pass_rate"] >= 0.95
    assert nc["pass_rate"] >= 0.95
    assert elapsed < 600.0


def test_criterion_08_oscillation_estimate_residual():
    t0 = time.time()
    st = xp.theorem31_suite(p=3.0, n=193, count=4, train_balls_per=5,
                            val_balls_per=10, seed=717, beta=0.95)
    assert len(st["residuals"]) == 40
    ok = st["pass_rate"] >= 0.95
    elapsed = time.time() - t0
    report(8, ok and elapsed < 600,
           f"theta0={st['theta0']} c={st['c_used']:.3f} "
           f"pass={st['pass_rate']:.3f} min residual {min(st['residuals']):.3g}",
           elapsed, 600)
    assert st["pass_rate"] >= 0.95
    assert elapsed < 600.0


def test_criterion_09_regularity_transfer():
    t0 = time.time()
    # the literal third row (s=0.5, rho=1, q=inf) fails the embedding
    # condition 2(1/rho - 1/p')+ < s at p' = 3/2 (2/3 >= 1/2), so the
    # admissibility gate must reject it (with the proof-choice inner exponent
    # w = p' it even fails the characterization condition and cannot be
    # instantiated); the stability statistic runs over the nearest admissible
    # variant (s=0.7) plus the two quasi-Banach rows
    with pytest.raises(besov.ParameterError):
        besov.SmoothnessParams(0.5, 1.0, math.inf, w=1.5)
    literal = besov.SmoothnessParams(0.5, 1.0, math.inf, w=1.0)
    assert not besov.embedding_check(literal, p_conj=1.5)
    rows = [besov.SmoothnessParams(0.5, 2.0, 2.0, w=1.5),
            besov.SmoothnessParams(0.9, 1.2, 1.2, w=1.5),
            besov.SmoothnessParams(0.7, 1.0, math.inf, w=1.5)]
    for params in rows:
        assert besov.embedding_check(params, p_conj=1.5)
    st = xp.transfer_suite(p=3.0, grids=(129, 257), count=10, seed=818,
                           rows=rows)
    m = st["max_ratio"]
    variation = abs(m[129] - m[257]) / m[257]
    ok = np.isfinite(m[129]) and np.isfinite(m[257]) and variation < 0.25
    elapsed = time.time() - t0
    report(9, ok and elapsed < 900,
           f"max ratio 128^2: {m[129]:.4f}, 256^2: {m[257]:.4f}, "
           f"variation {variation:.3%}", elapsed, 900)
    assert np.isfinite(m[129]) and np.isfinite(m[257])
    assert variation < 0.25
    assert elapsed < 900.0


def test_criterion_10_besov_dichotomy():
    t0 = time.time()
    results = {}
    for sigma in (0.3, 0.6):
        results[sigma] = xp.dichotomy_run(sigma, s_offsets=(-0.2, 0.2), n=321,
                                          ball_radius=0.4, J=4, w=1.0)
    detail = []
    ok = True
    for sigma, res in results.items():
        low = res["values"][f"{sigma - 0.2:.2f}"]
        high = res["values"][f"{sigma + 0.2:.2f}"]
        stable = abs(low["J+2"] - low["J"]) <= 0.05 * low["J"]
        grows = high["growth"] >= 1.5
        ok &= stable and grows
        detail.append(f"sigma={sigma}: stable change "
                      f"{abs(low['J+2'] - low['J']) / low['J']:.3%}, "
                      f"growth {high['growth']:.3f}")
    elapsed = time.time() - t0
    report(10, ok and elapsed < 60, "; ".join(detail), elapsed, 60)
    for sigma, res in results.items():
        low = res["values"][f"{sigma - 0.2:.2f}"]
        assert abs(low["J+2"] - low["J"]) <= 0.05 * low["J"]
    for sigma, res in results.items():
        high = res["values"][f"{sigma + 0.2:.2f}"]
        # NOTE: at sigma = 0.6 the dyadic estimator grows by at most
        # 2^(2*0.2) ~ 1.32 per two added scales (plus a few percent of
        # lattice inflation); the stated 1.5x rate is not attainable at the
        # requested offset, so this assertion fails honestly there. See the
        # decisions ledger.
        assert high["growth"] >= 1.5, \
            (f"estimator growth at sigma={sigma}, s=sigma+0.2 is "
             f"{high['growth']:.4f} < 1.5 (dyadic-rate cap "
             f"2^0.4 ~ 1.32 plus lattice inflation)")
    assert elapsed < 60.0


def test_criterion_11_power_transform():
    t0 = time.time()
    grid = Grid2D.unit_square(129)
    rng = xp.rng_from_seed(4)
    G = VectorField(grid, rng.normal(size=(grid.ny, grid.nx, 2)))
    params = besov.SmoothnessParams(0.5, 2.0, 2.0, w=1.0)
    lhs, rhs = besov.power_transform_ratio(G, Ball((0.5, 0.5), 0.25), params,
                                           besov.DyadicLadder(0.25, 4), 1.0)
    identity_gap = abs(lhs - rhs) / rhs
    ok = identity_gap < 1e-10

    s1 = xp.power_ratio_suite(p=3.0, n=129, count=20, seed=919)
    s2 = xp.power_ratio_suite(p=3.0, n=129, count=20, seed=5150)
    spread = abs(s1["max_ratio"] - s2["max_ratio"]) / s2["max_ratio"]
    ok &= spread <= 0.2
    elapsed = time.time() - t0
    report(11, ok and elapsed < 300,
           f"alpha=1 gap {identity_gap:.2e}; suite maxima "
           f"{s1['max_ratio']:.3f} vs {s2['max_ratio']:.3f} "
           f"(spread {spread:.2%})", elapsed, 300)
    assert identity_gap < 1e-10
    assert spread <= 0.2
    assert elapsed < 300.0


def test_criterion_12_cli_determinism(tmp_path):
    t0 = time.time()
    decay_cfg = tmp_path / "decay.json"
    decay_cfg.write_text(json.dumps({
        "p": 3.0, "grid": {"n": 129},
        "problem": {"kind": "pharmonic_trig", "seed": 5},
        "balls": {"count": 4},
        "decay": {"t0": 0.25, "theta": 0.5, "K": 4, "w": 1.0},
        "seed": 77}))
    transfer_cfg = tmp_path / "transfer.json"
    transfer_cfg.write_text(json.dumps({
        "p": 3.0, "grid": {"n": 129},
        "problem": {"kind": "manufactured", "seed": 21},
        "ball": {"cx": 0.5, "cy": 0.5, "r": 0.25},
        "ladder": {"R": 0.25, "J": 4},
        "count": 3,
        "smoothness": [{"s": 0.5, "rho": 2.0, "q": 2.0, "w": 1.5},
                       {"s": 0.9, "rho": 1.2, "q": 1.2, "w": 1.5}],
        "seed": 77}))
    pairs = []
    for name, cfg, outfile in (("decay", decay_cfg, "decay.csv"),
                               ("transfer", transfer_cfg, "transfer.csv")):
        outs = []
        for run, jobs in ((1, 1), (2, 4)):
            out = tmp_path / f"{name}_{run}"
            code = cli.main([name, "--config", str(cfg), "--out", str(out),
                             "--jobs", str(jobs)])
            assert code == 0
            outs.append(out)
        csv_same = (outs[0] / outfile).read_bytes() == \
            (outs[1] / outfile).read_bytes()
        json_name = ("decay_summary.json" if name == "decay"
                     else "transfer_summary.json")
        json_same = (outs[0] / json_name).read_bytes() == \
            (outs[1] / json_name).read_bytes()
        pairs.append((name, csv_same and json_same))
    ok = all(same for _, same in pairs)
    elapsed = time.time() - t0
    report(12, ok and elapsed < 300,
           "; ".join(f"{name}: byte-identical={same}" for name, same in pairs),
           elapsed, 300)
    assert ok
    assert elapsed < 300.0
