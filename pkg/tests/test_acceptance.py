"""Acceptance suite: one test and one printed PASS/FAIL line per criterion.

Monte Carlo criteria run pinned, reproducible configurations (seed below);
tolerances and caps are the stated ones.  Run directly with

    python3 tests/test_acceptance.py

or as part of pytest (use -s to see the lines while running).
"""

import json
import math
import os
import sys
import time

import numpy as np
import pytest
from scipy.integrate import quad

from singlering import cli, freeconv, linalg, locallaw, measure, models, ringlaw

SEED = 3
THREADS = 4  # 4-way parallel map; degrades gracefully on fewer cores


def verdict(num, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {num:2d}: {detail}"
    print(line, flush=True)
    assert ok, line


@pytest.fixture(scope="module")
def bernoulli():
    return measure.DiscreteMeasure(np.array([-1.0, 1.0]), np.array([0.5, 0.5]))


@pytest.fixture(scope="module")
def two_point():
    return measure.reference_measure("two_point", a=1.0, b=2.0, p=0.5)


@pytest.fixture(scope="module")
def quarter_circle():
    return measure.reference_measure("quarter_circle", 2000)


def test_criterion_01_golden_ratio_subordination(bernoulli):
    st = freeconv.solve_delta_conv(bernoulli, 1.0, 1j)
    err_w = abs(st.omega2 - 1.6180339887j)
    err_m = abs(st.m - 0.4472135955j)
    for _ in range(5):
        freeconv.solve_delta_conv(bernoulli, 1.0, 1j)
    times = []
    for _ in range(200):
        t0 = time.perf_counter()
        freeconv.solve_delta_conv(bernoulli, 1.0, 1j)
        times.append(time.perf_counter() - t0)
    ms = float(np.median(times)) * 1e3
    ok = err_w <= 1e-10 and err_m <= 1e-10 and ms < 1.0
    verdict(
        1,
        ok,
        f"golden ratio: |omega2 err| = {err_w:.2e}, |m err| = {err_m:.2e}, "
        f"median runtime {ms:.3f} ms (< 1 ms)",
    )


def test_criterion_02_arcsine_boundary_density(bernoulli):
    est = freeconv.boundary_density(
        bernoulli, bernoulli, 0.0, [0.1 * 0.5**k for k in range(6)]
    )
    err = abs(est.value - 1.0 / (2.0 * math.pi))
    ok = err <= 1e-6 and est.reliable
    verdict(2, ok, f"arcsine density at 0: {est.value:.9f}, err = {err:.2e} (<= 1e-6)")


def test_criterion_03_radii(two_point):
    r_minus, r_plus = measure.radii(two_point)
    e1 = abs(r_minus - math.sqrt(8.0 / 5.0))
    e2 = abs(r_plus - math.sqrt(2.5))
    ok = e1 <= 1e-12 and e2 <= 1e-12
    verdict(3, ok, f"radii errors ({e1:.2e}, {e2:.2e}) (<= 1e-12)")


def test_criterion_04_certificate(two_point):
    rep = freeconv.bulk_bound_certificate(measure.symmetrize(two_point), 1.4)
    targets = {
        "s_minus": (rep.s_minus, math.sqrt(2.5)),
        "sigma_minus": (rep.sigma_minus, math.sqrt(0.4)),
        "sigma_plus": (rep.sigma_plus, math.sqrt(2.5 / 0.54)),
        "a_minus": (rep.a_minus, 0.36),
        "omega_hat_abs": (rep.omega_hat_abs, 1.0),
        "b_minus": (rep.b_minus, 0.36 / 1.96),
    }
    worst = max(abs(got - want) for got, want in targets.values())
    zero_err = abs(rep.im_omega2_zero - math.sqrt(5.0 / 3.0))
    ok = (
        worst <= 1e-10
        and zero_err <= 1e-8
        and rep.im_omega2_zero > 0.8660254
        and rep.upper_ok
        and all(m >= -1e-12 for m in rep.upper_margins)
    )
    verdict(
        4,
        ok,
        f"certificate scalars worst err {worst:.2e} (<= 1e-10), "
        f"Im omega2(0) err {zero_err:.2e} (<= 1e-8), "
        f"> 0.8660254 and r^2/eta bound at all {len(rep.eta_grid)} grid points",
    )


def test_criterion_05_circular_law(quarter_circle):
    t0 = time.time()
    L = ringlaw.log_potential(quarter_circle, 0.5)
    rho = ringlaw.ring_density(quarter_circle, 0.5)
    mass = ringlaw.ring_mass(quarter_circle, tau=0.02)
    elapsed = time.time() - t0
    e_L = abs(L + 0.375)
    rel_rho = abs(rho - 1.0 / math.pi) * math.pi
    ok = (
        e_L <= 1e-3
        and rel_rho <= 0.02
        and 0.94 <= mass <= 1.001
        and elapsed < 120.0
    )
    verdict(
        5,
        ok,
        f"circular law: L(0.5) err {e_L:.2e} (<= 1e-3), rho(0.5) rel err "
        f"{rel_rho:.4f} (<= 2%), ring mass {mass:.4f} in [0.94, 1.001], "
        f"{elapsed:.0f} s (< 120 s)",
    )


def test_criterion_06_exact_identities(two_point):
    N, w, K = 64, 1.4, 100.0
    e = models.SingleRingEnsemble.from_measure(two_point, N, "unitary", seed=SEED)
    X = models.sample_X(e, linalg.child_rng(SEED, 0))
    spec = linalg.hermitian_eigensystem(models.hermitization(X, w))
    lam = spec.eigenvalues

    sym_err = float(np.max(np.abs(np.sort(lam) + np.sort(lam)[::-1])))
    lhs = float(np.mean(np.log(np.abs(lam))))
    term1 = float(np.mean(np.log(np.abs(lam - 1j * K))))
    integral, _ = quad(
        lambda eta: models.m_w(spec, eta).imag,
        0.0,
        K,
        epsabs=1e-13,
        epsrel=1e-13,
        limit=500,
        points=[models.smallest_sv(spec), 1.0, 10.0],
    )
    ksplit_err = abs(lhs - (term1 - integral))
    logdet_err = abs(linalg.log_abs_det(X - w * np.eye(N)) - N * lhs)

    be = models.BlockAdditiveEnsemble(
        e.sigma_diag, np.linspace(0.2, 1.0, N).astype(complex), N, "unitary", seed=SEED
    )
    H, _ = models.block_H(be, linalg.child_rng(SEED, 1))
    obs = models.resolvent_observables(H, 0.3 + 0.2j, be.xi_diag, 1.0j)
    tau_err = abs(obs.tau1 - obs.tau2)
    omega_err = abs(obs.omega_A_c + obs.omega_B_c - (0.3 + 0.2j) + 1.0 / obs.m_H)

    ok = (
        ksplit_err <= 1e-9
        and logdet_err <= 1e-9
        and sym_err <= 1e-10
        and tau_err <= 1e-10
        and omega_err <= 1e-10
    )
    verdict(
        6,
        ok,
        f"N=64 identities: K-split {ksplit_err:.2e} (<= 1e-9), log-det routes "
        f"{logdet_err:.2e} (<= 1e-9), +- symmetry {sym_err:.2e} (<= 1e-10), "
        f"tau1=tau2 {tau_err:.2e}, omega identity {omega_err:.2e} (<= 1e-10)",
    )


def test_criterion_07_local_law(two_point):
    t0 = time.time()
    ring = measure.RingGeometry.from_measure(
        two_point, tau=0.05 * (math.sqrt(2.5) - math.sqrt(1.6))
    )
    e = models.SingleRingEnsemble.from_measure(two_point, 512, "unitary", seed=SEED)
    grid = locallaw.ScanGrid(
        locallaw.dyadic_etas(512.0**-0.9, 1.0),
        np.array([1.4 + 0j]),
        (128, 256, 512),
        trials=20,
        ring=ring,
    )
    rep = locallaw.local_law_scan(e, grid, threads=THREADS)
    fit = locallaw.fit_domination(rep)
    max_dev = max(rep.per_N_max().values())
    elapsed = time.time() - t0
    ok = fit.slope <= 0.2 and max_dev <= 20.0 and elapsed < 600.0 and not rep.flagged()
    verdict(
        7,
        ok,
        f"local law: slope {fit.slope:+.3f} (<= 0.2), per-N max dev "
        f"{max_dev:.2f} (<= 20), {elapsed:.0f} s with {THREADS} threads (< 600 s)",
    )


def test_criterion_08_statistic_gap(two_point):
    e = models.SingleRingEnsemble.from_measure(two_point, 512, "unitary", seed=SEED)
    details = []
    ok = True
    for alpha, radius in ((0.0, 0.1), (0.25, 0.5)):
        recs = locallaw.linear_statistic_gap(
            e,
            1.4 + 0j,
            alpha,
            trials=10,
            f_spec=locallaw.FSpec(radius),
            threads=THREADS,
        )
        good = sum(r.gap_norm <= 10.0 for r in recs)
        worst = max(r.gap_norm for r in recs)
        ok &= good >= 9
        details.append(f"alpha={alpha}: {good}/10 within cap, worst {worst:.2f}")
    verdict(8, ok, "main-theorem gap, " + "; ".join(details))


def test_criterion_09_block_strong_law():
    e = models.BlockAdditiveEnsemble(
        np.ones(512), np.ones(512), 512, "unitary", seed=SEED
    )
    grid = locallaw.ScanGrid(
        locallaw.dyadic_etas(512.0**-0.9, 1.0),
        np.array([], dtype=complex),
        (128, 256, 512),
        trials=10,
    )
    rep = locallaw.block_local_law_scan(e, (0.0, 0.0), grid, threads=THREADS)

    # the scan's reference transform is the closed-form arcsine law
    mu_b = measure.symmetrize(e.sigma_measure())
    ref_err = 0.0
    for eta in grid.eta_values[:3]:
        solver = freeconv.solve_phi_system(mu_b, mu_b, 1j * eta).m
        closed = -1.0 / (np.sqrt(complex(1j * eta - 2)) * np.sqrt(complex(1j * eta + 2)))
        ref_err = max(ref_err, abs(solver - closed))

    fit = locallaw.fit_domination(rep)
    ok = fit.slope <= 0.2 and ref_err <= 1e-10
    verdict(
        9,
        ok,
        f"block strong law: slope {fit.slope:+.3f} (<= 0.2) against the arcsine "
        f"transform (solver vs closed form {ref_err:.1e})",
    )


def test_criterion_10_subordination_diagnostics():
    e = models.BlockAdditiveEnsemble(
        np.ones(512), np.ones(512), 512, "unitary", seed=SEED
    )
    recs = locallaw.green_subordination_scan(
        e, [0.1j], trials=10, bulk_window=(-0.5, 0.5), threads=THREADS
    )
    lam_max = max(r.lambda_d_scaled for r in recs)
    vec_max = max(r.eigvec_sup for r in recs)
    ok = lam_max <= 20.0 and vec_max <= 10.0
    verdict(
        10,
        ok,
        f"subordination diagnostics: sqrt(N eta) Lambda_d max {lam_max:.2f} (<= 20), "
        f"sqrt(N) eigenvector sup max {vec_max:.2f} (<= 10) over {len(recs)} trials",
    )


def test_criterion_11_smallest_sv_tail(two_point):
    e = models.SingleRingEnsemble.from_measure(two_point, 128, "unitary", seed=SEED)
    rep = locallaw.smallest_sv_tail(e, 1.4 + 0j, trials=500, threads=THREADS)
    ok = rep.monotone() and rep.slope > 0 and rep.slope_ci[0] > 0
    verdict(
        11,
        ok,
        f"ssv tail: monotone, slope {rep.slope:.2f}, bootstrap CI "
        f"({rep.slope_ci[0]:.2f}, {rep.slope_ci[1]:.2f}) excludes 0",
    )


def test_criterion_12_reproducibility(tmp_path):
    cfg = {
        "measure": {"kind": "two_point", "a": 1.0, "b": 2.0, "p": 0.5},
        "ensemble": {"N_values": [64], "symmetry": "unitary", "seed": SEED},
        "grid": {"eta_min": 0.05, "eta_max": 1.0, "w_abs": 1.4, "trials": 3},
    }
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(cfg))
    a, b, c = (str(tmp_path / d) for d in "abc")
    assert cli.run("local-law", str(cfg_path), a, threads=1) == 0
    assert cli.run("local-law", str(cfg_path), b, threads=THREADS) == 0
    echo = json.loads(open(os.path.join(a, "manifest.json")).read())["config"]
    echo_path = tmp_path / "echo.json"
    echo_path.write_text(json.dumps(echo))
    assert cli.run("local-law", str(echo_path), c) == 0

    def csv_bytes(d):
        return open(os.path.join(d, "locallaw.csv"), "rb").read()

    ok = csv_bytes(a) == csv_bytes(b) == csv_bytes(c)
    verdict(
        12,
        ok,
        "byte-identical CSVs across repeat runs, thread counts, and the "
        "manifest-echoed config",
    )


if __name__ == "__main__":
    sys.exit(pytest.main(["-s", "-v", __file__]))
