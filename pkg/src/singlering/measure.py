"""Atomic probability measures on the real line.

Everything in this package that is measure-valued is a finite weighted sum
of point masses.  Continuous reference laws (quarter circle, uniform) enter
only through quantile discretizations, so a single representation serves
both empirical singular-value profiles and their limits.

Conventions:
  * ``DiscreteMeasure`` is a probability measure (weights sum to 1).
  * ``AtomicMeasure`` is a finite nonnegative atomic measure of arbitrary
    total mass; it carries the representing measures produced by
    :func:`nevanlinna_rep`.

All value types are immutable and every operation is a pure function, so
unrestricted concurrent use is safe.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "MeasureError",
    "DiscreteMeasure",
    "AtomicMeasure",
    "RingGeometry",
    "symmetrize",
    "stieltjes",
    "neg_recip_stieltjes",
    "radii",
    "levy_distance",
    "support_stats",
    "nevanlinna_rep",
    "reference_measure",
]

WEIGHT_SUM_TOL = 1e-12
MERGE_TOL = 1e-12
SYMMETRY_TOL = 1e-12


class MeasureError(ValueError):
    """Structurally invalid measure or unusable measure argument."""


def _as_array(x, name):
    a = np.asarray(x, dtype=float)
    if a.ndim != 1:
        raise MeasureError(f"{name} must be one-dimensional")
    if not np.all(np.isfinite(a)):
        raise MeasureError(f"{name} must be finite")
    return a


def _merge_sorted(atoms, weights, tol=MERGE_TOL):
    """Merge coincident atoms (within tol) of a sorted atom list."""
    if len(atoms) == 0:
        return atoms, weights
    out_a = [atoms[0]]
    out_w = [weights[0]]
    for a, w in zip(atoms[1:], weights[1:]):
        if a - out_a[-1] <= tol:
            out_w[-1] += w
        else:
            out_a.append(a)
            out_w.append(w)
    return np.array(out_a), np.array(out_w)


@dataclass(frozen=True)
class DiscreteMeasure:
    """Probability measure sum_i w_i delta_{x_i} with strictly increasing x_i."""

    atoms: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        atoms = _as_array(self.atoms, "atoms")
        weights = _as_array(self.weights, "weights")
        if atoms.shape != weights.shape:
            raise MeasureError("atoms and weights must have equal length")
        if len(atoms) == 0:
            raise MeasureError("measure needs at least one atom")
        if np.any(np.diff(atoms) <= 0):
            raise MeasureError("atoms must be strictly increasing")
        if np.any(weights <= 0):
            raise MeasureError("weights must be strictly positive")
        if abs(weights.sum() - 1.0) > WEIGHT_SUM_TOL:
            raise MeasureError(
                f"weights must sum to 1 within {WEIGHT_SUM_TOL:g}; got {weights.sum()!r}"
            )
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "weights", weights)
        atoms.setflags(write=False)
        weights.setflags(write=False)

    @classmethod
    def from_points(cls, atoms, weights, merge_tol=MERGE_TOL):
        """Build a measure from unsorted points, merging coincident atoms."""
        atoms = _as_array(atoms, "atoms")
        weights = _as_array(weights, "weights")
        order = np.argsort(atoms, kind="stable")
        a, w = _merge_sorted(atoms[order], weights[order], merge_tol)
        return cls(a, w)

    def __len__(self):
        return len(self.atoms)

    def is_symmetric(self, tol=SYMMETRY_TOL) -> bool:
        """True iff the atom set is closed under negation with equal weights."""
        a, w = self.atoms, self.weights
        ra, rw = -a[::-1], w[::-1]
        return bool(
            np.all(np.abs(a - ra) <= tol * np.maximum(1.0, np.abs(a)))
            and np.all(np.abs(w - rw) <= tol)
        )

    def cdf(self, x):
        """Right-continuous distribution function, vectorized in x."""
        idx = np.searchsorted(self.atoms, np.asarray(x, dtype=float), side="right")
        cum = np.concatenate(([0.0], np.cumsum(self.weights)))
        return cum[idx]

    def quantile(self, q):
        """Generalized inverse CDF, vectorized in q in (0, 1]."""
        cum = np.cumsum(self.weights)
        idx = np.searchsorted(cum, np.asarray(q, dtype=float) - 1e-15, side="left")
        return self.atoms[np.minimum(idx, len(self.atoms) - 1)]

    def second_moment(self) -> float:
        return float(np.dot(self.weights, self.atoms**2))

    def to_json(self) -> str:
        return json.dumps({"atoms": self.atoms.tolist(), "weights": self.weights.tolist()})

    @classmethod
    def from_json(cls, text_or_obj):
        obj = json.loads(text_or_obj) if isinstance(text_or_obj, str) else text_or_obj
        if not isinstance(obj, dict) or "atoms" not in obj or "weights" not in obj:
            raise MeasureError('measure JSON must carry "atoms" and "weights"')
        return cls(np.asarray(obj["atoms"], dtype=float), np.asarray(obj["weights"], dtype=float))


@dataclass(frozen=True)
class AtomicMeasure:
    """Finite nonnegative atomic measure; total mass unconstrained, may be empty."""

    atoms: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        atoms = np.asarray(self.atoms, dtype=float).reshape(-1)
        weights = np.asarray(self.weights, dtype=float).reshape(-1)
        if atoms.shape != weights.shape:
            raise MeasureError("atoms and weights must have equal length")
        if len(atoms) and (np.any(np.diff(atoms) <= 0) or not np.all(np.isfinite(atoms))):
            raise MeasureError("atoms must be finite and strictly increasing")
        if np.any(weights < 0) or not np.all(np.isfinite(weights)):
            raise MeasureError("weights must be finite and nonnegative")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "weights", weights)

    def __len__(self):
        return len(self.atoms)

    def total_mass(self) -> float:
        return float(self.weights.sum())

    def stieltjes(self, z: complex) -> complex:
        return complex(np.sum(self.weights / (self.atoms - z))) if len(self) else 0.0


@dataclass(frozen=True)
class RingGeometry:
    """Inner/outer ring radii with the support bound and annulus shrink tau."""

    r_minus: float
    r_plus: float
    s_plus: float
    tau: float = 0.0

    def __post_init__(self):
        if not (0.0 <= self.r_minus < self.r_plus <= self.s_plus):
            raise MeasureError(
                f"need 0 <= r_minus < r_plus <= s_plus; got "
                f"({self.r_minus}, {self.r_plus}, {self.s_plus})"
            )
        if self.tau < 0:
            raise MeasureError("tau must be nonnegative")

    @classmethod
    def from_measure(cls, mu: DiscreteMeasure, tau: float = 0.0) -> "RingGeometry":
        r_minus, r_plus = radii(mu)
        s_plus, _ = support_stats(mu)
        return cls(r_minus, r_plus, s_plus, tau)

    def annulus(self):
        """Closed shrunk annulus [r_minus + tau, r_plus - tau]; None if empty."""
        lo, hi = self.r_minus + self.tau, self.r_plus - self.tau
        return (lo, hi) if lo <= hi else None

    def contains(self, w: complex) -> bool:
        ann = self.annulus()
        if ann is None:
            return False
        return ann[0] <= abs(w) <= ann[1]


# ---------------------------------------------------------------------------
# transforms and operations
# ---------------------------------------------------------------------------


def symmetrize(mu: DiscreteMeasure) -> DiscreteMeasure:
    """Even part of mu: A maps to (mu(A) + mu(-A)) / 2.

    An atom sitting exactly at 0 is a fixed point of the reflection and keeps
    its full weight; all other atoms split in half between +/-x.
    """
    atoms = np.concatenate((mu.atoms, -mu.atoms))
    weights = np.concatenate((mu.weights, mu.weights)) / 2.0
    return DiscreteMeasure.from_points(atoms, weights)


def stieltjes(mu: DiscreteMeasure, z: complex) -> complex:
    """m_mu(z) = sum_i w_i / (x_i - z) for Im z > 0."""
    z = complex(z)
    if z.imag <= 0:
        raise ValueError(f"stieltjes transform needs Im z > 0; got z = {z}")
    return complex(np.sum(mu.weights / (mu.atoms - z)))


def _stieltjes_imag_axis(mu: DiscreteMeasure, y: float) -> float:
    """Im m_mu(iy) for y > 0; valid for any mu, exact for symmetric ones."""
    return float(y * np.sum(mu.weights / (mu.atoms**2 + y * y)))


def neg_recip_stieltjes(mu: DiscreteMeasure, z: complex) -> complex:
    """F_mu(z) = -1 / m_mu(z); maps the upper half-plane into itself."""
    return -1.0 / stieltjes(mu, z)


def radii(mu: DiscreteMeasure):
    """Inner and outer ring radii of a measure supported on [0, inf).

    r_minus = (int x^-2 dmu)^(-1/2), or 0 when an atom sits at the origin;
    r_plus = (int x^2 dmu)^(1/2).  A single-atom input collapses the ring
    (r_minus == r_plus); that violates the more-than-one-point assumption the
    ring geometry rests on, so it is flagged with a warning.
    """
    if np.any(mu.atoms < 0):
        raise ValueError("radii expects a measure supported on nonnegative reals")
    if mu.atoms[0] == 0.0:
        r_minus = 0.0
    else:
        r_minus = float(np.sum(mu.weights / mu.atoms**2) ** -0.5)
    r_plus = float(np.sqrt(mu.second_moment()))
    if len(mu) < 2:
        warnings.warn(
            "measure supported at a single point: r_minus == r_plus, "
            "the ring is degenerate",
            stacklevel=2,
        )
    return r_minus, r_plus


def support_stats(mu: DiscreteMeasure):
    """(s_plus, second moment) with s_plus = max |atom|."""
    return float(np.max(np.abs(mu.atoms))), mu.second_moment()


def _levy_feasible(mu: DiscreteMeasure, nu: DiscreteMeasure, eps: float) -> bool:
    # Both one-sided conditions are sups of right-continuous step functions,
    # so checking every jump point of either step suffices.  Each sup is
    # parametrized so its own measure's CDF is evaluated exactly at its
    # atoms; rounding in the shifted CDF can then only overestimate the sup,
    # never hide a violation.
    slack = 1e-15
    xs = np.concatenate((nu.atoms, mu.atoms - eps))
    if np.max(nu.cdf(xs) - mu.cdf(xs + eps)) > eps + slack:
        return False
    ts = np.concatenate((mu.atoms, nu.atoms - eps))
    if np.max(mu.cdf(ts) - nu.cdf(ts + eps)) > eps + slack:
        return False
    return True


def levy_distance(mu: DiscreteMeasure, nu: DiscreteMeasure, tol: float = 1e-12) -> float:
    """Levy distance: the least eps such that the eps-inflated CDF band of mu
    contains the CDF of nu.  Computed by bisection on eps over the merged atom
    grid; always <= 1."""
    lo, hi = 0.0, 1.0
    if _levy_feasible(mu, nu, lo):
        return 0.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _levy_feasible(mu, nu, mid):
            hi = mid
        else:
            lo = mid
    return hi


def _positive_gap_zeros(mu: DiscreteMeasure, pos_tol: float = 1e-13):
    """Zeros of m_mu in each open gap between consecutive positive atoms,
    and in (0, first positive atom) when mu has an atom at 0.

    m_mu is strictly increasing from -inf to +inf on every gap, so plain
    bisection is safe; pos_tol is the absolute position tolerance.
    """
    atoms, weights = mu.atoms, mu.weights
    pos = atoms > 0
    pa = atoms[pos]

    def m_real(x):
        return float(np.sum(weights / (atoms - x)))

    gaps = [(pa[j], pa[j + 1]) for j in range(len(pa) - 1)]
    if np.any(atoms == 0.0):
        gaps.insert(0, (0.0, pa[0]))

    zeros = []
    for lo_atom, hi_atom in gaps:
        width = hi_atom - lo_atom
        eps = 1e-6 * width
        lo, hi = lo_atom + eps, hi_atom - eps
        # shrink toward the poles until the sign change is bracketed
        while m_real(lo) >= 0 and eps > 1e-300:
            eps *= 0.5
            lo = lo_atom + eps
        eps = 1e-6 * width
        while m_real(hi) <= 0 and eps > 1e-300:
            eps *= 0.5
            hi = hi_atom - eps
        for _ in range(200):
            if hi - lo <= pos_tol:
                break
            mid = 0.5 * (lo + hi)
            if m_real(mid) < 0:
                lo = mid
            else:
                hi = mid
        zeros.append(0.5 * (lo + hi))
    return np.array(zeros)


def nevanlinna_rep(mu_sym: DiscreteMeasure):
    """Representing measure of F_mu - id for a symmetric atomic measure.

    Returns ``(mu_hat, mu_tilde, r_minus_sq)`` where

        F_mu(w) - w = int d(mu_hat)(x) / (x - w),

    mu_hat has an atom of mass r_minus^2 = (int x^-2 dmu)^(-1) at 0 (zero if
    mu itself charges 0) and one atom at each zero of m_mu between
    consecutive same-sign atoms, with weight 1/m_mu'(zero);
    mu_tilde = mu_hat - r_minus^2 delta_0.  Total mass of mu_hat equals the
    second moment of mu.
    """
    if len(mu_sym) < 2:
        raise MeasureError("nevanlinna_rep needs a measure with at least 2 atoms")
    if not mu_sym.is_symmetric():
        raise MeasureError("nevanlinna_rep needs a symmetric measure")

    atoms, weights = mu_sym.atoms, mu_sym.weights
    has_zero_atom = bool(np.any(atoms == 0.0))

    def m_prime(x):
        return float(np.sum(weights / (atoms - x) ** 2))

    pos_zeros = _positive_gap_zeros(mu_sym)
    pos_w = np.array([1.0 / m_prime(x0) for x0 in pos_zeros])

    if has_zero_atom:
        r_minus_sq = 0.0
        hat_atoms = np.concatenate((-pos_zeros[::-1], pos_zeros))
        hat_weights = np.concatenate((pos_w[::-1], pos_w))
    else:
        # symmetry puts one zero of m exactly at the origin
        r_minus_sq = 1.0 / m_prime(0.0)
        hat_atoms = np.concatenate((-pos_zeros[::-1], [0.0], pos_zeros))
        hat_weights = np.concatenate((pos_w[::-1], [r_minus_sq], pos_w))

    mu_hat = AtomicMeasure(hat_atoms, hat_weights)
    keep = hat_atoms != 0.0
    mu_tilde = AtomicMeasure(hat_atoms[keep], hat_weights[keep])
    return mu_hat, mu_tilde, r_minus_sq


# ---------------------------------------------------------------------------
# reference measures
# ---------------------------------------------------------------------------


def _quarter_circle_cdf(x):
    x = np.clip(x, 0.0, 2.0)
    return (x * np.sqrt(4.0 - x * x) / 2.0 + 2.0 * np.arcsin(x / 2.0)) / np.pi


def _quarter_circle_quantile(q: float) -> float:
    from scipy.optimize import brentq

    return brentq(lambda x: _quarter_circle_cdf(x) - q, 0.0, 2.0, xtol=1e-14)


def reference_measure(name: str, n_atoms: int = 2, **params) -> DiscreteMeasure:
    """Quantile discretization of a named reference law.

    ``quarter_circle``      density (1/pi) sqrt(4 - x^2) on [0, 2]
    ``two_point``           p delta_a + (1-p) delta_b  (n_atoms ignored)
    ``uniform``             uniform on [a, b]

    Atom i sits at the (i - 1/2)/n quantile with weight 1/n.
    """
    if name == "two_point":
        a, b = float(params["a"]), float(params["b"])
        p = float(params.get("p", 0.5))
        if not 0.0 < p < 1.0:
            raise MeasureError("two_point weight p must lie in (0,1)")
        return DiscreteMeasure.from_points([a, b], [p, 1.0 - p])
    if n_atoms < 2:
        raise MeasureError("quantile discretization needs n_atoms >= 2")
    q = (np.arange(n_atoms) + 0.5) / n_atoms
    if name == "quarter_circle":
        atoms = np.array([_quarter_circle_quantile(qi) for qi in q])
    elif name == "uniform":
        a, b = float(params.get("a", 0.0)), float(params.get("b", 1.0))
        if not b > a:
            raise MeasureError("uniform needs b > a")
        atoms = a + (b - a) * q
    else:
        raise MeasureError(f"unknown reference measure {name!r}")
    return DiscreteMeasure.from_points(atoms, np.full(n_atoms, 1.0 / n_atoms))
