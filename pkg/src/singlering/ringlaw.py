"""Radial log-potential and limiting density of the single ring.

The limiting spectral density of X = U S V* at radius s is

    rho(s) = (1/2 pi) * (L''(s) + L'(s)/s),
    L(s)   = int log|u| d(mu_Sigma^sym [+] delta_s^sym)(u),

evaluated through the split, for any height K,

    int log|u| dnu = int log|u - iK| dnu - int_0^K Im m_nu(i eta) deta.

The first term has the expansion log K + m2(nu)/(2 K^2) + O(K^-4) for a
symmetric nu with second moment m2; under free convolution of centered
measures second moments add, so m2 = m2(mu^sym) + s^2 in closed form.  The
eta integral is done adaptively up to eta0 ~ 10x the support radius and by
the two-term asymptotic tail 1/eta - m2/eta^3 beyond, so a moderate K
suffices where the exact identity would want an astronomically large one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad, simpson

from .freeconv import solve_delta_conv
from .measure import DiscreteMeasure, radii, support_stats, symmetrize

__all__ = [
    "RadialPotentialProfile",
    "default_split_height",
    "log_potential",
    "ring_density",
    "ring_mass",
    "radial_profile",
]


def default_split_height(s_plus: float, s: float = 0.0) -> float:
    return max(100.0, 20.0 * s_plus, 20.0 * s)


def _density_on_axis(mu_sym: DiscreteMeasure, s: float, eta: float) -> float:
    """Im m of mu^sym [+] delta_s^sym at i eta; 0 at eta = 0 off the ring."""
    if eta == 0.0:
        try:
            return solve_delta_conv(mu_sym, s, 0.0).m.imag
        except ValueError:
            return 0.0  # boundary value outside the open ring: zero density at 0
    return solve_delta_conv(mu_sym, s, 1j * eta).m.imag


def log_potential(
    mu_sigma: DiscreteMeasure,
    s: float,
    K: float | None = None,
    quad_tol: float = 1e-9,
) -> float:
    """Radial log-potential L(s) of the ring law for mu_sigma at radius s > 0."""
    if s <= 0:
        raise ValueError("log_potential needs s > 0")
    s_plus, _ = support_stats(mu_sigma)
    if K is None:
        K = default_split_height(s_plus, s)
    if K < 10.0 * max(s_plus, s):
        raise ValueError(f"split height K = {K} below 10*max(s_plus, s)")

    mu_sym = symmetrize(mu_sigma)
    m2 = mu_sym.second_moment() + s * s
    eta0 = min(10.0 * (s_plus + s), K)

    body, _err = quad(
        lambda eta: _density_on_axis(mu_sym, s, eta),
        0.0,
        eta0,
        epsabs=quad_tol / 2.0,
        epsrel=1e-12,
        limit=200,
    )
    tail = math.log(K / eta0) + m2 / (2.0 * K * K) - m2 / (2.0 * eta0 * eta0) if eta0 < K else 0.0
    t1 = math.log(K) + m2 / (2.0 * K * K)
    return t1 - (body + tail)


def ring_density(
    mu_sigma: DiscreteMeasure,
    s: float,
    h: float | None = None,
    K: float | None = None,
    quad_tol: float = 1e-9,
) -> float:
    """rho(s) = (L'' + L'/s)/(2 pi) with 5-point central differences of step h.

    Meaningful inside the open ring at distance > 2h from its edges;
    evaluates to ~0 (within differentiation error) outside the ring.
    """
    r_minus, r_plus = radii(mu_sigma)
    if h is None:
        h = 1e-2 * (r_plus - r_minus)
    if h <= 0 or s - 2.0 * h <= 0:
        raise ValueError("need h > 0 and s - 2h > 0")
    L = [log_potential(mu_sigma, s + k * h, K=K, quad_tol=quad_tol) for k in (-2, -1, 0, 1, 2)]
    dL = (L[0] - 8.0 * L[1] + 8.0 * L[3] - L[4]) / (12.0 * h)
    d2L = (-L[0] + 16.0 * L[1] - 30.0 * L[2] + 16.0 * L[3] - L[4]) / (12.0 * h * h)
    return (d2L + dL / s) / (2.0 * math.pi)


def ring_mass(
    mu_sigma: DiscreteMeasure,
    tau: float,
    n_radii: int = 33,
    h: float | None = None,
    K: float | None = None,
    quad_tol: float = 1e-9,
) -> float:
    """int rho(s) 2 pi s ds over the tau-shrunk annulus, composite Simpson."""
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    r_minus, r_plus = radii(mu_sigma)
    lo, hi = r_minus + tau, r_plus - tau
    if lo >= hi:
        return 0.0
    if n_radii < 3:
        raise ValueError("n_radii must be at least 3")
    s_nodes = np.linspace(lo, hi, n_radii)
    vals = np.array(
        [2.0 * math.pi * s * ring_density(mu_sigma, s, h=h, K=K, quad_tol=quad_tol) for s in s_nodes]
    )
    return float(simpson(vals, x=s_nodes))


@dataclass(frozen=True)
class RadialPotentialProfile:
    """Log-potential and density samples along a radius grid."""

    s_grid: np.ndarray
    L_values: np.ndarray
    dL_values: np.ndarray
    d2L_values: np.ndarray
    rho_values: np.ndarray
    K: float
    m2_sigma: float
    quad_tol: float

    def __post_init__(self):
        s = np.asarray(self.s_grid, dtype=float)
        if np.any(np.diff(s) <= 0):
            raise ValueError("s_grid must be increasing")
        for name in ("L_values", "dL_values", "d2L_values", "rho_values"):
            v = np.asarray(getattr(self, name), dtype=float)
            if v.shape != s.shape or not np.all(np.isfinite(v)):
                raise ValueError(f"{name} must be finite and match s_grid")
            object.__setattr__(self, name, v)
        object.__setattr__(self, "s_grid", s)

    def rows(self):
        return zip(self.s_grid, self.L_values, self.dL_values, self.d2L_values, self.rho_values)


def radial_profile(
    mu_sigma: DiscreteMeasure,
    s_values,
    h: float | None = None,
    K: float | None = None,
    quad_tol: float = 1e-9,
) -> RadialPotentialProfile:
    """Evaluate (L, L', L'', rho) on a radius grid with a shared stencil step."""
    r_minus, r_plus = radii(mu_sigma)
    s_plus, _ = support_stats(mu_sigma)
    if h is None:
        h = 1e-2 * (r_plus - r_minus)
    if K is None:
        K = default_split_height(s_plus)
    s_values = np.asarray(list(s_values), dtype=float)
    L, dL, d2L, rho = [], [], [], []
    for s in s_values:
        Ls = [log_potential(mu_sigma, s + k * h, K=K, quad_tol=quad_tol) for k in (-2, -1, 0, 1, 2)]
        L.append(Ls[2])
        dv = (Ls[0] - 8.0 * Ls[1] + 8.0 * Ls[3] - Ls[4]) / (12.0 * h)
        d2v = (-Ls[0] + 16.0 * Ls[1] - 30.0 * Ls[2] + 16.0 * Ls[3] - Ls[4]) / (12.0 * h * h)
        dL.append(dv)
        d2L.append(d2v)
        rho.append((d2v + dv / s) / (2.0 * math.pi))
    return RadialPotentialProfile(
        s_values,
        np.array(L),
        np.array(dL),
        np.array(d2L),
        np.array(rho),
        K=float(K),
        m2_sigma=symmetrize(mu_sigma).second_moment(),
        quad_tol=quad_tol,
    )
