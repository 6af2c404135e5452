import math

import numpy as np
import pytest

from singlering import linalg, measure, models, ringlaw
from singlering.measure import DiscreteMeasure
from singlering.ringlaw import (
    RadialPotentialProfile,
    log_potential,
    radial_profile,
    ring_density,
    ring_mass,
)


@pytest.fixture(scope="module")
def unit_circle():
    # singular value profile of a Haar matrix: all singular values 1;
    # the ring degenerates to the unit circle and L(s) = log max(s, 1)
    return DiscreteMeasure(np.array([1.0]), np.array([1.0]))


class TestLogPotential:
    def test_unit_circle_profile(self, unit_circle):
        assert log_potential(unit_circle, 0.5) == pytest.approx(0.0, abs=1e-4)
        assert log_potential(unit_circle, 1.0) == pytest.approx(0.0, abs=1e-4)
        assert log_potential(unit_circle, 2.0) == pytest.approx(math.log(2.0), abs=1e-4)

    def test_quarter_circle_inside(self, quarter_circle_2000):
        # circular law potential (s^2 - 1)/2 inside the unit disk
        assert log_potential(quarter_circle_2000, 0.5) == pytest.approx(-0.375, abs=1e-3)

    def test_quarter_circle_outside(self, quarter_circle_2000):
        assert log_potential(quarter_circle_2000, 2.0) == pytest.approx(
            math.log(2.0), abs=1e-3
        )

    def test_outside_support_asymptotics(self, two_point):
        # outside the ring the radial potential of a probability measure is
        # exactly log s (mean value property); L stays increasing in s
        s_plus = 2.0
        Ls = [log_potential(two_point, c * s_plus) for c in (2, 4, 8)]
        for c, L in zip((2, 4, 8), Ls):
            assert L == pytest.approx(math.log(c * s_plus), abs=1e-4)
        assert Ls[0] < Ls[1] < Ls[2]

    def test_split_height_validation(self, two_point):
        with pytest.raises(ValueError):
            log_potential(two_point, 1.5, K=10.0)
        with pytest.raises(ValueError):
            log_potential(two_point, -0.5)


class TestRingDensity:
    def test_circular_law_density(self, quarter_circle_2000):
        rho = ring_density(quarter_circle_2000, 0.5, h=1e-2)
        assert rho == pytest.approx(1.0 / math.pi, rel=0.02)

    def test_outside_ring_is_zero(self, two_point):
        rho = ring_density(two_point, 2.5)
        assert abs(rho) < 1e-4

    def test_fd_step_refinement(self, two_point):
        # halving h changes the estimate at O(h^2)
        coarse = ring_density(two_point, 1.4, h=2e-2)
        fine = ring_density(two_point, 1.4, h=1e-2)
        assert abs(coarse - fine) < 1e-3

    def test_numerical_nonnegativity(self, two_point):
        for s in (1.35, 1.4, 1.45):
            assert ring_density(two_point, s) >= -5e-6

    def test_stencil_domain(self, two_point):
        with pytest.raises(ValueError):
            ring_density(two_point, 0.01, h=0.02)


class TestRingMass:
    def test_two_point_bulk_mass(self, two_point):
        # the narrow two-point ring piles mass onto its edges: the exact
        # annulus mass at tau = 0.01 is 0.9226 (cumulative-mass identity
        # M(s) = s L'(s), confirmed by Monte Carlo eigenvalue counts)
        mass = ring_mass(two_point, tau=0.01, n_radii=21)
        assert 0.90 <= mass <= 0.95

    def test_empty_annulus(self, two_point):
        assert ring_mass(two_point, tau=0.2) == 0.0

    def test_rejects_negative_tau(self, two_point):
        with pytest.raises(ValueError):
            ring_mass(two_point, tau=-0.1)


class TestRadialProfile:
    def test_profile_matches_pointwise(self, two_point):
        prof = radial_profile(two_point, [1.35, 1.4, 1.45])
        assert isinstance(prof, RadialPotentialProfile)
        for s, rho in zip(prof.s_grid, prof.rho_values):
            assert rho == pytest.approx(ring_density(two_point, s), abs=1e-10)
        rows = list(prof.rows())
        assert len(rows) == 3 and len(rows[0]) == 5

    def test_validation(self):
        with pytest.raises(ValueError):
            RadialPotentialProfile(
                np.array([1.0, 0.5]),
                np.zeros(2),
                np.zeros(2),
                np.zeros(2),
                np.zeros(2),
                K=100.0,
                m2_sigma=1.0,
                quad_tol=1e-9,
            )


@pytest.mark.slow
def test_monte_carlo_trace_consistency(quarter_circle_2000):
    # (1/2N) Tr log |H^w| from one N = 512 sample matches L(|w|) to O(N^-1/2)
    N, w = 512, 0.5 + 0.0j
    e = models.SingleRingEnsemble.from_measure(quarter_circle_2000, N, "unitary", seed=4)
    X = models.sample_X(e, linalg.child_rng(4, 0))
    lam = linalg.hermitian_eigensystem(models.hermitization(X, w)).eigenvalues
    trace_log = float(np.mean(np.log(np.abs(lam))))
    L = log_potential(e.empirical_measure(), abs(w))
    assert abs(trace_log - L) <= 5.0 / math.sqrt(N)
