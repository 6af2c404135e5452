import math

import numpy as np
import pytest
from scipy.integrate import quad

from singlering import freeconv, linalg, locallaw, measure, models
from singlering.locallaw import (
    DevRecord,
    DominationReport,
    FSpec,
    QuadGrid2D,
    ScanGrid,
    block_local_law_scan,
    bump_laplacian,
    bump_value,
    delta_bump_l1,
    dyadic_etas,
    fit_domination,
    green_subordination_scan,
    linear_statistic_lhs,
    linear_statistic_rhs,
    local_law_scan,
    linear_statistic_gap,
    parallel_map,
    smallest_sv_tail,
)
from singlering.measure import DiscreteMeasure, RingGeometry


class TestBump:
    def test_laplacian_closed_form_vs_finite_differences(self):
        h = 1e-5
        for s in (0.1, 0.35, 0.6, 0.9):
            f = bump_value
            num = (f(s + h) - 2 * f(s) + f(s - h)) / h**2 + (f(s + h) - f(s - h)) / (
                2 * h * s
            )
            assert bump_laplacian(s) == pytest.approx(num, abs=1e-5)

    def test_vanishes_outside(self):
        assert bump_value(1.2) == 0.0
        assert bump_laplacian(1.2) == 0.0
        assert bump_laplacian(1.0) == 0.0

    def test_l1_norm_exact(self):
        # closed form: 12 pi * 8/27 = 32 pi / 9
        assert delta_bump_l1() == pytest.approx(32.0 * math.pi / 9.0, rel=1e-10)

    def test_laplacian_integrates_to_zero(self):
        val, _ = quad(lambda s: bump_laplacian(s) * 2 * math.pi * s, 0.0, 1.0)
        assert abs(val) < 1e-12


class TestGrids:
    def test_dyadic(self):
        etas = dyadic_etas(0.05, 1.0)
        assert etas[0] == 1.0
        assert np.all(etas > 0.05)
        assert np.allclose(etas[:-1] / etas[1:], 2.0)
        with pytest.raises(ValueError):
            dyadic_etas(1.0, 0.5)

    def test_quad_nodes_inside_disk(self):
        zeta, cell = QuadGrid2D(32).nodes()
        assert np.all(np.abs(zeta) < 1.0)
        assert cell == pytest.approx((2.0 / 32) ** 2)
        # node count close to the disk area fraction pi/4
        assert len(zeta) == pytest.approx(32 * 32 * math.pi / 4.0, rel=0.02)

    def test_scan_grid_validates_annulus(self, two_point):
        ring = RingGeometry.from_measure(two_point, tau=0.05)
        with pytest.raises(ValueError, match="annulus"):
            ScanGrid(np.array([0.5]), np.array([2.0 + 0j]), (32,), 1, ring)
        grid = ScanGrid(np.array([0.5, 0.25]), np.array([1.4 + 0j]), (32,), 2, ring)
        assert grid.trials == 2

    def test_scan_grid_rejects_bad_eta(self):
        with pytest.raises(ValueError):
            ScanGrid(np.array([0.25, 0.5]), np.array([]), (32,), 1)


class TestFitDomination:
    @staticmethod
    def synthetic_report(exponent, rng):
        rep = DominationReport()
        for N in (64, 128, 256, 512, 1024):
            for t in range(400):
                dev = N**exponent * math.exp(0.05 * rng.standard_normal())
                rep.records.append(DevRecord(N, t, 0j, 0.1, dev, True, 0))
        return rep

    def test_flat_signal(self):
        fit = fit_domination(self.synthetic_report(0.0, np.random.default_rng(0)))
        assert fit.slope == pytest.approx(0.0, abs=0.05)
        assert fit.passed

    def test_planted_growth(self):
        fit = fit_domination(self.synthetic_report(0.5, np.random.default_rng(1)))
        assert fit.slope == pytest.approx(0.5, abs=0.05)
        assert not fit.passed

    def test_needs_three_sizes(self):
        rep = DominationReport()
        rep.records = [DevRecord(64, 0, 0j, 0.1, 1.0, True, 0)]
        with pytest.raises(ValueError):
            fit_domination(rep)

    def test_merge_rejects_mixed_kinds(self):
        with pytest.raises(ValueError):
            DominationReport.merged(
                [DominationReport(kind="local-law"), DominationReport(kind="block-law")]
            )


class TestLinearStatistics:
    def test_lhs_matches_eigenvalue_sum_desk_scale(self):
        # 2x2 matrix with eigenvalues from the quadratic formula
        X = np.array([[0.52, 0.31], [0.12, 0.47]], dtype=complex)
        tr, det = np.trace(X), np.linalg.det(X)
        disc = np.sqrt(tr * tr - 4 * det)
        lam = np.array([(tr + disc) / 2, (tr - disc) / 2])
        w0 = 0.5 + 0.0j
        spec = FSpec(radius=0.6)
        direct = float(np.mean([bump_value(abs(l - w0) / spec.radius) for l in lam]))
        quadv = linear_statistic_lhs(X, w0, 0.0, spec, QuadGrid2D(192))
        assert quadv == pytest.approx(direct, abs=2e-3)

    def test_lhs_vanishes_off_spectrum(self):
        X = np.diag([0.2 + 0j, 0.3 + 0.1j])
        val = linear_statistic_lhs(X, 5.0 + 0j, 0.0, FSpec(0.5), QuadGrid2D(64))
        # the continuum integral vanishes exactly; what remains is midpoint
        # quadrature error, O(h^2)
        assert abs(val) < 1e-3

    def test_lhs_rejects_bad_alpha(self):
        with pytest.raises(ValueError):
            linear_statistic_lhs(np.eye(2, dtype=complex), 0.0, 0.6)

    @pytest.mark.slow
    def test_rhs_circular_law_macroscopic(self, quarter_circle_2000):
        # alpha = 0, bump of radius 0.3 at w0 = 0.5 inside the unit disk:
        # integral of f against the uniform law is R^2/4
        R = 0.3
        val = linear_statistic_rhs(
            quarter_circle_2000, 0.5 + 0j, 0.0, FSpec(R), QuadGrid2D(48), n=512,
            n_radial=33, quad_tol=1e-7,
        )
        assert val == pytest.approx(R * R / 4.0, abs=1e-3)
        assert val == pytest.approx(R * R / 4.0, rel=5e-3)

    @pytest.mark.slow
    def test_rhs_rescaling_consistency(self, quarter_circle_2000):
        # alpha > 0 concentrates the bump: both scales see density ~ 1/pi
        R = 0.3
        a0 = linear_statistic_rhs(
            quarter_circle_2000, 0.5 + 0j, 0.0, FSpec(R), QuadGrid2D(48), n=512,
            n_radial=33, quad_tol=1e-7,
        )
        a25 = linear_statistic_rhs(
            quarter_circle_2000, 0.5 + 0j, 0.25, FSpec(R), QuadGrid2D(48), n=512,
            n_radial=33, quad_tol=1e-7,
        )
        assert a25 == pytest.approx(a0, rel=1e-4)

    def test_rhs_rejects_origin_support(self, two_point):
        with pytest.raises(ValueError):
            linear_statistic_rhs(two_point, 0.05 + 0j, 0.0, FSpec(0.5), QuadGrid2D(16), n=8)

    def test_rhs_vanishes_off_ring(self, two_point):
        # outside the ring L(s) = log s is harmonic, so Delta f pairs to
        # zero in the quadrature limit; check the value and its refinement
        vals = [
            linear_statistic_rhs(
                two_point, 4.0 + 0j, 0.0, FSpec(0.5), QuadGrid2D(n), n=16,
                n_radial=17, quad_tol=1e-8,
            )
            for n in (32, 64)
        ]
        assert abs(vals[1]) < abs(vals[0])
        assert abs(vals[1]) < 1e-3


class TestLocalLawScan:
    def test_small_scan_structure(self, two_point, threads):
        ring = RingGeometry.from_measure(two_point, tau=0.02)
        e = models.SingleRingEnsemble.from_measure(two_point, 32, "unitary", seed=21)
        grid = ScanGrid(dyadic_etas(0.2, 1.0), np.array([1.4 + 0j]), (32, 48), 2, ring)
        rep = local_law_scan(e, grid, threads=threads)
        assert len(rep.records) == 2 * 2 * len(grid.eta_values)
        assert all(r.ok for r in rep.records)
        assert all(np.isfinite(r.dev) and r.dev < 50 for r in rep.records)
        assert rep.sizes() == [32, 48]
        assert len(rep.splits) == 2 * 2
        for s in rep.splits:
            assert s.lambda1 > 0
            assert s.small_eta_integral >= 0

    def test_thread_count_invariance(self, two_point):
        ring = RingGeometry.from_measure(two_point, tau=0.02)
        e = models.SingleRingEnsemble.from_measure(two_point, 24, "unitary", seed=22)
        grid = ScanGrid(np.array([0.5]), np.array([1.4 + 0j]), (24,), 3, ring)
        a = local_law_scan(e, grid, threads=1)
        b = local_law_scan(e, grid, threads=3)
        assert [(r.N, r.trial, r.eta, r.dev) for r in a.records] == [
            (r.N, r.trial, r.eta, r.dev) for r in b.records
        ]


class TestLinearStatisticGap:
    def test_gap_records(self, two_point, threads):
        e = models.SingleRingEnsemble.from_measure(two_point, 48, "unitary", seed=23)
        recs = linear_statistic_gap(
            e, 1.4 + 0j, 0.25, trials=2, f_spec=FSpec(0.5), quad2d=QuadGrid2D(24),
            threads=threads,
        )
        assert len(recs) == 2
        for r in recs:
            assert np.isfinite(r.gap_norm)
            assert r.rhs == recs[0].rhs  # deterministic side shared


class TestSmallestSvTail:
    def test_tail_shape(self, two_point, threads):
        e = models.SingleRingEnsemble.from_measure(two_point, 32, "unitary", seed=24)
        rep = smallest_sv_tail(e, 1.4 + 0j, trials=60, threads=threads, bootstrap=50)
        assert rep.monotone()
        assert np.all((rep.tail_probability >= 0) & (rep.tail_probability <= 1))
        assert np.mean(rep.lambda1 * 1.4 <= rep.t_grid[-1] * 10) == 1.0
        big_t = np.array([100.0])
        assert np.mean(rep.lambda1 * 1.4 <= big_t[0]) == 1.0

    def test_orthogonal_identity_rejected(self):
        e = models.SingleRingEnsemble(np.ones(8), 8, "orthogonal", seed=25)
        with pytest.raises(ValueError, match="identity"):
            smallest_sv_tail(e, 1.0, trials=2)


class TestBlockScan:
    def test_degenerate_xi_zero_is_exact(self):
        e = models.BlockAdditiveEnsemble(np.ones(24), np.zeros(24), 24, "unitary", seed=26)
        grid = ScanGrid(np.array([0.5, 0.25]), np.array([], dtype=complex), (24,), 2)
        rep = block_local_law_scan(e, (0.0, 0.0), grid, bulk_threshold=0.0)
        assert max(r.dev for r in rep.records) < 1e-10

    def test_arcsine_reference(self, threads):
        e = models.BlockAdditiveEnsemble(np.ones(48), np.ones(48), 48, "unitary", seed=27)
        grid = ScanGrid(dyadic_etas(0.1, 1.0), np.array([], dtype=complex), (48,), 3)
        rep = block_local_law_scan(e, (0.0, 0.0), grid, threads=threads)
        assert all(np.isfinite(r.dev) and r.dev < 50 for r in rep.records)

    def test_bulk_check_rejects_gap(self):
        e = models.BlockAdditiveEnsemble(np.ones(16), np.zeros(16), 16, "unitary", seed=28)
        grid = ScanGrid(np.array([0.5]), np.array([], dtype=complex), (16,), 1)
        with pytest.raises(ValueError, match="bulk"):
            block_local_law_scan(e, (0.0, 0.0), grid)


class TestGreenSubordination:
    def test_small_scan(self, threads):
        e = models.BlockAdditiveEnsemble(np.ones(48), np.ones(48), 48, "unitary", seed=29)
        recs = green_subordination_scan(
            e, [0.25j], trials=3, bulk_window=(-0.5, 0.5), threads=threads
        )
        assert len(recs) == 3
        for r in recs:
            assert np.isfinite(r.lambda_d_scaled)
            assert r.omegaB_gap >= 0 and r.omegaA_gap >= 0
            assert 0 < r.eigvec_sup < 10


def test_parallel_map_order():
    out = parallel_map(lambda x: x * x, range(7), threads=3)
    assert out == [x * x for x in range(7)]
