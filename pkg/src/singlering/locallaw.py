"""Monte Carlo verification engine for the bulk local laws.

Every experiment is a deterministic map from (configuration, 64-bit seed)
to records: task (N-index, trial) gets its own child generator, tasks are
an order-independent parallel map, and failed solves are recorded with a
flag instead of being retried with fresh randomness.

Stochastic domination is operationalized by slope fits: a family of scaled
deviations obeys the claimed bound when its high quantiles do not grow as a
power of N, i.e. when the fitted log-log slope stays below a small
threshold (default 0.2).
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy.integrate import quad

from . import freeconv, linalg, measure, models, ringlaw
from .freeconv import ConvergenceError
from .measure import DiscreteMeasure, RingGeometry

__all__ = [
    "FSpec",
    "QuadGrid2D",
    "ScanGrid",
    "DevRecord",
    "DominationReport",
    "bump_value",
    "bump_laplacian",
    "delta_bump_l1",
    "dyadic_etas",
    "parallel_map",
    "local_law_scan",
    "linear_statistic_lhs",
    "linear_statistic_rhs",
    "linear_statistic_gap",
    "smallest_sv_tail",
    "block_local_law_scan",
    "green_subordination_scan",
    "fit_domination",
]

DEFAULT_GAMMA = 0.1
DEFAULT_SPLIT_EXPONENT = 1.5  # eta* = N^(-L1) threshold for the integral-split diagnostics


def parallel_map(fn, items, threads: int = 1):
    """Order-preserving map; results are independent of the thread count."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))


def dyadic_etas(eta_min: float, eta_max: float) -> np.ndarray:
    """Decreasing dyadic grid eta_max, eta_max/2, ... inside (eta_min, eta_max]."""
    if not 0 < eta_min < eta_max:
        raise ValueError("need 0 < eta_min < eta_max")
    k = int(math.floor(math.log2(eta_max / eta_min))) + 1
    etas = eta_max * 0.5 ** np.arange(k)
    return etas[etas > eta_min]


# ---------------------------------------------------------------------------
# the standard bump and 2D quadrature
# ---------------------------------------------------------------------------


def bump_value(s):
    """Radial profile of the C^2 bump f(zeta) = (1 - |zeta|^2)^3 on |zeta| <= 1."""
    s = np.asarray(s, dtype=float)
    v = np.where(s < 1.0, (1.0 - s * s) ** 3, 0.0)
    return v if v.ndim else float(v)


def bump_laplacian(s):
    """Laplacian of the bump: -12(1-s^2)^2 + 24 s^2 (1-s^2) on |zeta| <= 1."""
    s = np.asarray(s, dtype=float)
    s2 = s * s
    v = np.where(s < 1.0, -12.0 * (1.0 - s2) ** 2 + 24.0 * s2 * (1.0 - s2), 0.0)
    return v if v.ndim else float(v)


@lru_cache(maxsize=1)
def delta_bump_l1() -> float:
    """|| Delta f ||_{L^1} of the standard bump, by radial quadrature (= 32 pi/9)."""
    val, _ = quad(lambda s: abs(bump_laplacian(s)) * 2.0 * math.pi * s, 0.0, 1.0, limit=100)
    return float(val)


@dataclass(frozen=True)
class FSpec:
    """Test function spec: the standard bump scaled to a support radius.

    f_R(zeta) = f(zeta/R) keeps ||Delta f_R||_{L^1} invariant under R.
    """

    radius: float = 1.0

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("support radius must be positive")


@dataclass(frozen=True)
class QuadGrid2D:
    """Midpoint rule on an n x n grid of the square [-1, 1]^2.

    Nodes with |zeta| >= 1 carry Delta f = 0 exactly and are dropped.
    """

    n: int = 64

    def __post_init__(self):
        if self.n < 4:
            raise ValueError("2D quadrature grid needs n >= 4")

    def nodes(self):
        step = 2.0 / self.n
        centers = -1.0 + step * (np.arange(self.n) + 0.5)
        xx, yy = np.meshgrid(centers, centers)
        zeta = (xx + 1j * yy).ravel()
        keep = np.abs(zeta) < 1.0
        return zeta[keep], step * step


# ---------------------------------------------------------------------------
# scan grids and domination reports
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScanGrid:
    """Spectral-resolution and annulus grid for a multi-size scan.

    Every w must satisfy |w| in [r_- + tau, r_+ - tau] of the supplied ring;
    an offending point is a constructor error, never a silent clamp.
    """

    eta_values: np.ndarray
    w_values: np.ndarray
    N_values: tuple
    trials: int
    ring: Optional[RingGeometry] = None

    def __post_init__(self):
        etas = np.asarray(self.eta_values, dtype=float)
        if len(etas) == 0 or np.any(etas <= 0) or np.any(np.diff(etas) >= 0):
            raise ValueError("eta_values must be positive and strictly decreasing")
        ws = np.asarray(self.w_values, dtype=np.complex128)
        if self.ring is not None:
            for w in ws:
                if not self.ring.contains(w):
                    ann = self.ring.annulus()
                    raise ValueError(
                        f"|w| = {abs(w):.6g} outside the shrunk annulus {ann}"
                    )
        if self.trials < 1:
            raise ValueError("trials must be positive")
        if len(self.N_values) == 0 or any(n < 2 for n in self.N_values):
            raise ValueError("N_values must be nonempty sizes >= 2")
        object.__setattr__(self, "eta_values", etas)
        object.__setattr__(self, "w_values", ws)
        object.__setattr__(self, "N_values", tuple(int(n) for n in self.N_values))


@dataclass(frozen=True)
class DevRecord:
    N: int
    trial: int
    w: complex
    eta: float
    dev: float
    ok: bool
    seed: int


@dataclass
class SplitRecord:
    """Integral-split diagnostic: eta* = N^(-L1), the small-eta mass of
    Im m^w, and the smallest hermitization eigenvalue controlling it."""

    N: int
    trial: int
    w: complex
    eta_star: float
    small_eta_integral: float
    lambda1: float


@dataclass
class DominationReport:
    """Scaled-deviation records with per-N aggregation for slope fits."""

    records: list = field(default_factory=list)
    splits: list = field(default_factory=list)
    kind: str = "local-law"

    def sizes(self):
        return sorted({r.N for r in self.records})

    def _per_N(self, fn):
        out = {}
        for n in self.sizes():
            vals = [r.dev for r in self.records if r.N == n and r.ok and np.isfinite(r.dev)]
            out[n] = fn(np.array(vals)) if vals else math.nan
        return out

    def per_N_max(self):
        return self._per_N(np.max)

    def per_N_quantile(self, q=0.95):
        return self._per_N(lambda v: float(np.quantile(v, q)))

    def flagged(self):
        return [r for r in self.records if not r.ok]

    @classmethod
    def merged(cls, reports):
        reports = list(reports)
        kinds = {r.kind for r in reports}
        if len(kinds) > 1:
            raise ValueError(f"cannot merge reports of mixed kinds {sorted(kinds)}")
        out = cls(kind=reports[0].kind if reports else "local-law")
        for r in reports:
            out.records.extend(r.records)
            out.splits.extend(r.splits)
        return out


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    passed: bool
    quantiles: dict


def fit_domination(report: DominationReport, eps_pass: float = 0.2, q: float = 0.95) -> FitResult:
    """Least squares of log q-quantile deviation against log N.

    Passing (slope <= eps_pass) certifies the absence of power-law growth in
    N, the finite-size surrogate of stochastic domination by a constant.
    """
    quantiles = report.per_N_quantile(q)
    ns = sorted(n for n, v in quantiles.items() if np.isfinite(v) and v > 0)
    if len(ns) < 3:
        raise ValueError("fit_domination needs deviations at >= 3 sizes N")
    x = np.log(np.array(ns, dtype=float))
    y = np.log(np.array([quantiles[n] for n in ns]))
    slope, intercept = np.polyfit(x, y, 1)
    return FitResult(float(slope), float(intercept), bool(slope <= eps_pass), quantiles)


# ---------------------------------------------------------------------------
# local law for the hermitized single ring model
# ---------------------------------------------------------------------------


def _reference_axis_transforms(mu_sym, w_values, eta_values):
    """m_{Sigma,|w|}(i eta) for every (w, eta); deterministic, shared by trials."""
    ref = {}
    for iw, w in enumerate(w_values):
        for ie, eta in enumerate(eta_values):
            ref[(iw, ie)] = freeconv.solve_delta_conv(mu_sym, abs(w), 1j * eta).m
    return ref


def local_law_scan(
    e: models.SingleRingEnsemble,
    grid: ScanGrid,
    seed: Optional[int] = None,
    threads: int = 1,
    split_exponent: float = DEFAULT_SPLIT_EXPONENT,
) -> DominationReport:
    """Deviations N eta |m^w(i eta) - m_{Sigma,|w|}(i eta)| over the grid."""
    base_seed = e.seed if seed is None else int(seed)
    report = DominationReport(kind="local-law")

    for ni, N in enumerate(grid.N_values):
        ens = e if N == e.N else e.resized(N)
        mu_sym = measure.symmetrize(ens.empirical_measure())
        ref = _reference_axis_transforms(mu_sym, grid.w_values, grid.eta_values)
        eta_star = float(N) ** (-split_exponent)

        def one_trial(trial, ens=ens, ref=ref, ni=ni, N=N, eta_star=eta_star):
            task_seed = base_seed
            rng = linalg.child_rng(base_seed, ni, trial)
            X = models.sample_X(ens, rng)
            recs, splits = [], []
            for iw, w in enumerate(grid.w_values):
                spec = linalg.hermitian_eigensystem(models.hermitization(X, w))
                lam = spec.eigenvalues
                small = float(np.mean(0.5 * np.log1p(eta_star**2 / lam**2)))
                splits.append(
                    SplitRecord(N, trial, complex(w), eta_star, small, models.smallest_sv(spec))
                )
                for ie, eta in enumerate(grid.eta_values):
                    try:
                        dev = N * eta * abs(models.m_w(spec, eta) - ref[(iw, ie)])
                        recs.append(DevRecord(N, trial, complex(w), eta, dev, True, task_seed))
                    except (ConvergenceError, FloatingPointError) as exc:  # pragma: no cover
                        warnings.warn(f"scan node failed: {exc}", RuntimeWarning)
                        recs.append(
                            DevRecord(N, trial, complex(w), eta, math.nan, False, task_seed)
                        )
            return recs, splits

        for recs, splits in parallel_map(one_trial, range(grid.trials), threads):
            report.records.extend(recs)
            report.splits.extend(splits)
    return report


# ---------------------------------------------------------------------------
# linear eigenvalue statistics via the log-potential pairing
# ---------------------------------------------------------------------------


def _statistic_nodes(w0: complex, alpha: float, f_spec: FSpec, quad2d: QuadGrid2D, n: int):
    zeta, cell = quad2d.nodes()
    lap = bump_laplacian(np.abs(zeta))
    scale = float(n) ** (-alpha) * f_spec.radius
    w_nodes = w0 + scale * zeta
    prefactor = float(n) ** (2.0 * alpha) * cell / (2.0 * math.pi)
    return zeta, lap, w_nodes, prefactor, cell


def linear_statistic_lhs(
    X: np.ndarray,
    w0: complex,
    alpha: float,
    f_spec: FSpec = FSpec(),
    quad2d: QuadGrid2D = QuadGrid2D(),
) -> float:
    """Quadrature of (1/2pi) N^{2a} Delta f(zeta) (1/2N) Tr log|H^{w(zeta)}|.

    Equals the eigenvalue statistic (1/N) sum_i f_{w0}(lambda_i(X)) in the
    quadrature limit.  The per-node value (1/2N) Tr log |H^w| is
    (1/N) log |det(X - w)|, evaluated for the whole node batch from one
    Hessenberg reduction of X.  A node that lands on a singular shift is
    re-jittered by half a cell and flagged.
    """
    X = np.asarray(X, dtype=np.complex128)
    n = X.shape[0]
    if not 0.0 <= alpha < 0.5:
        raise ValueError("alpha must lie in [0, 1/2)")
    zeta, lap, w_nodes, prefactor, cell = _statistic_nodes(w0, alpha, f_spec, quad2d, n)

    hess = linalg.hessenberg_form(X)
    logdet = linalg.shifted_log_abs_det(hess, w_nodes)
    bad = ~np.isfinite(logdet)
    if np.any(bad):
        warnings.warn(
            f"{int(bad.sum())} singular quadrature node(s) re-jittered by half a cell",
            RuntimeWarning,
        )
        jitter = 0.5 * math.sqrt(cell) * (1.0 + 1.0j) / math.sqrt(2.0)
        scale = float(n) ** (-alpha) * f_spec.radius
        logdet[bad] = linalg.shifted_log_abs_det(hess, w_nodes[bad] + scale * jitter)
        if not np.all(np.isfinite(logdet)):
            raise ConvergenceError("singular shift persisted after re-jittering")
    g = logdet / n
    # Delta f pairs any constant to zero in the continuum, but its midpoint
    # sum is only O(h^2); centering removes that error times N^{2a} g0
    g0 = float(np.median(g))
    return float(prefactor * np.sum(lap * (g - g0)))


def linear_statistic_rhs(
    mu_sigma: DiscreteMeasure,
    w0: complex,
    alpha: float,
    f_spec: FSpec = FSpec(),
    quad2d: QuadGrid2D = QuadGrid2D(),
    n: int = 1,
    n_radial: int = 65,
    K: Optional[float] = None,
    quad_tol: float = 1e-9,
) -> float:
    """Deterministic side of the statistic: Delta f paired with L(|w|).

    L is radial, so it is evaluated on a radius table spanning the node
    radii and interpolated by a cubic spline; both statistics share the
    same zeta grid, which cancels quadrature-grid bias in their difference.
    """
    from scipy.interpolate import CubicSpline

    zeta, lap, w_nodes, prefactor, _cell = _statistic_nodes(w0, alpha, f_spec, quad2d, n)
    if abs(w0) <= float(n) ** (-alpha) * f_spec.radius:
        raise ValueError("test function support touches w = 0, excluded from the ring law")
    radii_nodes = np.abs(w_nodes)
    lo, hi = float(np.min(radii_nodes)), float(np.max(radii_nodes))
    if hi > lo:
        table = np.linspace(lo, hi, n_radial)
        Lvals = [ringlaw.log_potential(mu_sigma, s, K=K, quad_tol=quad_tol) for s in table]
        L = CubicSpline(table, Lvals)(radii_nodes)
    else:
        L = np.full_like(radii_nodes, ringlaw.log_potential(mu_sigma, lo, K=K, quad_tol=quad_tol))
    L0 = float(np.median(L))  # same centering as the eigenvalue side
    return float(prefactor * np.sum(lap * (L - L0)))


@dataclass(frozen=True)
class GapRecord:
    N: int
    trial: int
    alpha: float
    w0: complex
    lhs: float
    rhs: float
    gap_norm: float
    seed: int


def linear_statistic_gap(
    e: models.SingleRingEnsemble,
    w0: complex,
    alpha: float,
    trials: int,
    seed: Optional[int] = None,
    f_spec: FSpec = FSpec(),
    quad2d: QuadGrid2D = QuadGrid2D(),
    threads: int = 1,
    rhs_quad_tol: float = 1e-9,
) -> list:
    """Per-trial |lhs - rhs| scaled by N^{1-2a}/||Delta f||_1.

    The deterministic side is computed once and shared across trials.
    """
    base_seed = e.seed if seed is None else int(seed)
    mu = e.empirical_measure()
    rhs = linear_statistic_rhs(
        mu, w0, alpha, f_spec, quad2d, n=e.N, quad_tol=rhs_quad_tol
    )
    norm = delta_bump_l1()
    scale = float(e.N) ** (1.0 - 2.0 * alpha) / norm

    def one_trial(trial):
        rng = linalg.child_rng(base_seed, trial)
        X = models.sample_X(e, rng)
        lhs = linear_statistic_lhs(X, w0, alpha, f_spec, quad2d)
        return GapRecord(
            e.N, trial, alpha, complex(w0), lhs, rhs, abs(lhs - rhs) * scale, base_seed
        )

    return parallel_map(one_trial, range(trials), threads)


# ---------------------------------------------------------------------------
# smallest singular value tail
# ---------------------------------------------------------------------------


@dataclass
class SsvTailReport:
    N: int
    w_abs: float
    lambda1: np.ndarray
    t_grid: np.ndarray
    tail_probability: np.ndarray
    slope: float
    slope_ci: tuple
    seed: int

    def monotone(self) -> bool:
        return bool(np.all(np.diff(self.tail_probability) >= 0))


def _tail_slope(lam_scaled: np.ndarray, t_grid: np.ndarray) -> float:
    probs = np.array([np.mean(lam_scaled <= t) for t in t_grid])
    keep = (probs > 0) & (probs < 1)
    if np.sum(keep) < 2:
        return math.nan
    return float(np.polyfit(np.log(t_grid[keep]), np.log(probs[keep]), 1)[0])


def smallest_sv_tail(
    e: models.SingleRingEnsemble,
    w: complex,
    t_grid=None,
    trials: int = 500,
    seed: Optional[int] = None,
    threads: int = 1,
    bootstrap: int = 200,
) -> SsvTailReport:
    """Empirical tail P(lambda_1^w <= t/|w|) with a log-log slope fit.

    For the orthogonal symmetry class the tail statement degenerates at the
    identity profile, so such ensembles are rejected outright.
    """
    if e.symmetry == "orthogonal":
        ident = DiscreteMeasure(np.array([1.0]), np.array([1.0]))
        if measure.levy_distance(e.empirical_measure(), ident) <= 1e-6:
            raise ValueError(
                "orthogonal-class tail runs need a singular value profile "
                "away from the identity"
            )
    base_seed = e.seed if seed is None else int(seed)

    def one_trial(trial):
        rng = linalg.child_rng(base_seed, trial)
        X = models.sample_X(e, rng)
        spec = linalg.hermitian_eigensystem(models.hermitization(X, w))
        return models.smallest_sv(spec)

    lam = np.array(parallel_map(one_trial, range(trials), threads))
    lam_scaled = lam * abs(w)
    if t_grid is None:
        t_grid = np.quantile(lam_scaled, [0.02, 0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 0.9])
    t_grid = np.asarray(t_grid, dtype=float)
    probs = np.array([np.mean(lam_scaled <= t) for t in t_grid])
    slope = _tail_slope(lam_scaled, t_grid)

    boot_rng = linalg.child_rng(base_seed, 10**6)
    slopes = []
    for _ in range(bootstrap):
        resample = boot_rng.choice(lam_scaled, size=len(lam_scaled), replace=True)
        s = _tail_slope(resample, t_grid)
        if np.isfinite(s):
            slopes.append(s)
    ci = (
        (float(np.percentile(slopes, 2.5)), float(np.percentile(slopes, 97.5)))
        if slopes
        else (math.nan, math.nan)
    )
    return SsvTailReport(e.N, abs(w), lam, t_grid, probs, slope, ci, base_seed)


# ---------------------------------------------------------------------------
# block additive model scans
# ---------------------------------------------------------------------------


def _block_reference(e: models.BlockAdditiveEnsemble):
    mu_b = measure.symmetrize(e.sigma_measure())
    mu_a = measure.symmetrize(e.xi_measure())
    return mu_a, mu_b


def _conv_transform(mu_a, mu_b, z):
    """m of mu_a [+] mu_b, with point masses handled as exact shifts."""
    if len(mu_a) == 1:
        return measure.stieltjes(mu_b, z - mu_a.atoms[0])
    if len(mu_b) == 1:
        return measure.stieltjes(mu_a, z - mu_b.atoms[0])
    return freeconv.solve_phi_system(mu_a, mu_b, z).m


def block_local_law_scan(
    e: models.BlockAdditiveEnsemble,
    interval,
    grid: ScanGrid,
    seed: Optional[int] = None,
    threads: int = 1,
    n_energies: int = 1,
    bulk_threshold: float = 1e-2,
) -> DominationReport:
    """Deviations N eta (1+eta) |m_H(z) - m_ref(z)| on the energy interval.

    m_ref is the transform of the free convolution of the symmetrized
    empirical diagonal profiles; the interval must lie in its bulk.
    """
    lo, hi = float(interval[0]), float(interval[1])
    if hi < lo:
        raise ValueError("empty energy interval")
    mu_a, mu_b = _block_reference(e)
    E_values = np.linspace(lo, hi, n_energies) if n_energies > 1 else np.array([(lo + hi) / 2.0])

    for E in E_values:
        density = _conv_transform(mu_a, mu_b, complex(E, 1e-4)).imag / math.pi
        if density < bulk_threshold:
            raise ValueError(
                f"interval [{lo}, {hi}] leaves the bulk: density {density:.3g} at "
                f"E = {E:.6g} below threshold {bulk_threshold:g}"
            )

    base_seed = e.seed if seed is None else int(seed)
    report = DominationReport(kind="block-law")
    for ni, N in enumerate(grid.N_values):
        ens = e if N == e.N else e.resized(N)
        mu_a_N, mu_b_N = _block_reference(ens)
        ref = {}
        for iE, E in enumerate(E_values):
            for ie, eta in enumerate(grid.eta_values):
                ref[(iE, ie)] = _conv_transform(mu_a_N, mu_b_N, complex(E, eta))

        def one_trial(trial, ens=ens, ref=ref, ni=ni, N=N):
            rng = linalg.child_rng(base_seed, ni, trial)
            H, _ = models.block_H(ens, rng)
            lam = linalg.hermitian_eigensystem(H).eigenvalues
            recs = []
            for iE, E in enumerate(E_values):
                for ie, eta in enumerate(grid.eta_values):
                    z = complex(E, eta)
                    m_H = complex(np.mean(1.0 / (lam - z)))
                    dev = N * eta * (1.0 + eta) * abs(m_H - ref[(iE, ie)])
                    recs.append(DevRecord(N, trial, z, eta, dev, True, base_seed))
            return recs

        for recs in parallel_map(one_trial, range(grid.trials), threads):
            report.records.extend(recs)
    return report


@dataclass(frozen=True)
class SubDiagRecord:
    N: int
    trial: int
    z: complex
    lambda_d_scaled: float
    omegaB_gap: float
    omegaA_gap: float
    eigvec_sup: float
    seed: int


def green_subordination_scan(
    e: models.BlockAdditiveEnsemble,
    z_grid,
    seed: Optional[int] = None,
    trials: int = 10,
    bulk_window=None,
    threads: int = 1,
) -> list:
    """Entrywise Green function subordination diagnostics on a z grid.

    Records sqrt(N eta) Lambda_d, the scaled gaps N eta |omega^c - omega| for
    both approximate subordination functions, and the bulk eigenvector
    sup-norm statistic sqrt(N) max_k ||u_k||_inf.
    """
    z_grid = [complex(z) for z in z_grid]
    mu_a, mu_b = _block_reference(e)
    base_seed = e.seed if seed is None else int(seed)
    refs = {z: freeconv.solve_phi_system(mu_a, mu_b, z) for z in z_grid}

    def one_trial(trial):
        rng = linalg.child_rng(base_seed, trial)
        H, _ = models.block_H(e, rng)
        spec = linalg.hermitian_eigensystem(H, want_vectors=True)
        out = []
        for z in z_grid:
            st = refs[z]
            obs = models.resolvent_observables(
                H, z, e.xi_diag, st.omega2, bulk_window=bulk_window, spec=spec
            )
            eta = z.imag
            out.append(
                SubDiagRecord(
                    e.N,
                    trial,
                    z,
                    math.sqrt(e.N * eta) * obs.Lambda_d,
                    e.N * eta * abs(obs.omega_B_c - st.omega2),
                    e.N * eta * abs(obs.omega_A_c - st.omega1),
                    obs.eigvec_sup,
                    base_seed,
                )
            )
        return out

    records = []
    for chunk in parallel_map(one_trial, range(trials), threads):
        records.extend(chunk)
    return records
