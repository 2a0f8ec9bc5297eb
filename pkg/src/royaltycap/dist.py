"""Distribution families for bidder types and conditional asset incomes.

Two kinds of objects live here:

* ``TypeDist`` -- the distribution F of a bidder's type (his expected income
  from the asset), on a bounded interval.  Exposes cdf/pdf/ppf and the
  inverse hazard rate (1 - F)/f.

* ``IncomeFamily`` -- the conditional law G(. | theta) of realized income
  given the type, with a support [supp_lo(theta), supp_hi(theta)] that may
  shift with the type.  Families are normalized so that E[pi | theta] = theta
  and are strictly ordered by first-order stochastic dominance in theta
  (the partial derivative of G in theta is negative on the interior).

All objects are immutable after construction and safe to share across
threads; samplers take an explicit numpy ``Generator`` so concurrent callers
never share mutable state.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import stats
from scipy.integrate import quad
from scipy.interpolate import PchipInterpolator

from .errors import ConstructionError, DomainError

# Tolerance for "mean zero" / "integrates to one" construction checks.
_MEAN_TOL = 1e-8
# Relative nudge used when a one-sided limit at a support endpoint is needed.
_EDGE_NUDGE = 1e-9


# ---------------------------------------------------------------------------
# Scalar distribution backends (shared by type and error distributions)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _Univariate:
    """Bounded continuous distribution with vectorized cdf/pdf/ppf."""

    lo: float
    hi: float
    cdf: Callable
    pdf: Callable
    ppf: Callable
    mean: float


class _TableCdf:
    """Monotone-cubic interpolant of a tabulated CDF.

    The pdf is the analytic derivative of the interpolant; the ppf inverts a
    dense precomputed table (PCHIP preserves monotonicity, so the inverse is
    well defined).
    """

    def __init__(self, grid, values):
        grid = np.asarray(grid, dtype=float)
        values = np.asarray(values, dtype=float)
        if grid.ndim != 1 or grid.size < 2 or values.shape != grid.shape:
            raise ConstructionError("table needs matching 1-d grids with >= 2 points")
        if np.any(np.diff(grid) <= 0):
            raise ConstructionError("table grid must be strictly increasing")
        if np.any(np.diff(values) <= 0):
            raise ConstructionError("table CDF must be strictly increasing (density > 0)")
        if abs(values[0]) > _MEAN_TOL or abs(values[-1] - 1.0) > _MEAN_TOL:
            raise ConstructionError("table CDF must run from 0 to 1")
        values = values.copy()
        values[0], values[-1] = 0.0, 1.0
        self.lo, self.hi = float(grid[0]), float(grid[-1])
        self._cdf = PchipInterpolator(grid, values, extrapolate=False)
        self._pdf = self._cdf.derivative()
        dense = np.linspace(self.lo, self.hi, 8193)
        fd = np.asarray(self._cdf(dense))
        keep = np.concatenate(([True], np.diff(fd) > 0))
        self._inv_f, self._inv_x = fd[keep], dense[keep]

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        out = self._cdf(np.clip(x, self.lo, self.hi))
        return out if out.ndim else float(out)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x >= self.lo) & (x <= self.hi)
        out = np.where(inside, self._pdf(np.clip(x, self.lo, self.hi)), 0.0)
        return out if out.ndim else float(out)

    def ppf(self, u):
        out = np.interp(u, self._inv_f, self._inv_x)
        return out if np.ndim(u) else float(out)


def _build_univariate(family: str, params: dict) -> _Univariate:
    if family == "uniform":
        lo, hi = float(params["lo"]), float(params["hi"])
        if not lo < hi:
            raise ConstructionError(f"uniform bounds must satisfy lo < hi, got [{lo}, {hi}]")
        d = stats.uniform(loc=lo, scale=hi - lo)
        return _Univariate(lo, hi, d.cdf, d.pdf, d.ppf, 0.5 * (lo + hi))
    if family == "triangular":
        lo, hi = float(params["lo"]), float(params["hi"])
        mode = float(params.get("mode", hi))
        if not lo < hi:
            raise ConstructionError(f"triangular bounds must satisfy lo < hi, got [{lo}, {hi}]")
        if not lo <= mode <= hi:
            raise ConstructionError(f"triangular mode {mode} outside [{lo}, {hi}]")
        d = stats.triang(c=(mode - lo) / (hi - lo), loc=lo, scale=hi - lo)
        return _Univariate(lo, hi, d.cdf, d.pdf, d.ppf, (lo + mode + hi) / 3.0)
    if family == "table":
        t = _TableCdf(params["grid"], params["cdf"])
        m = t.lo + quad(lambda x: 1.0 - t.cdf(x), t.lo, t.hi, epsabs=1e-12, epsrel=1e-10)[0]
        return _Univariate(t.lo, t.hi, t.cdf, t.pdf, t.ppf, m)
    raise ConstructionError(f"unknown distribution family {family!r}")


# ---------------------------------------------------------------------------
# Type distributions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TypeDist:
    """Bidder type distribution F on [lo, hi] with strictly positive density
    on the open support (the density may vanish at an endpoint)."""

    family: str
    params: dict = field(repr=False)
    lo: float
    hi: float
    _backend: _Univariate = field(repr=False)

    def cdf(self, theta):
        return self._backend.cdf(theta)

    def pdf(self, theta):
        return self._backend.pdf(theta)

    def ppf(self, u):
        return self._backend.ppf(u)

    def hazard(self, theta):
        """f / (1 - F); +inf at the top of the support."""
        theta = np.asarray(theta, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(theta >= self.hi, np.inf,
                           self.pdf(theta) / (1.0 - self.cdf(theta)))
        return out if out.ndim else float(out)

    def _check_domain(self, theta):
        theta = np.asarray(theta, dtype=float)
        if np.any(theta < self.lo - 1e-12) or np.any(theta > self.hi + 1e-12):
            raise DomainError(f"type {theta} outside support [{self.lo}, {self.hi}]")


def make_type_dist(family: str, params: dict) -> TypeDist:
    """Build a type distribution from a family tag and parameters.

    Families: ``uniform`` (lo, hi), ``triangular`` (lo, hi, optional mode,
    default mode = hi), ``table`` (grid, cdf values; monotone-cubic
    interpolated).
    """
    backend = _build_univariate(family, params)
    return TypeDist(family, dict(params), backend.lo, backend.hi, backend)


def inverse_hazard(d: TypeDist, theta):
    """(1 - F(theta)) / f(theta); zero at the top type.

    At a lower endpoint where the density vanishes the value is +inf, which
    propagates correctly through comparisons (such a type never wins).
    """
    d._check_domain(theta)
    theta = np.asarray(theta, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(theta >= d.hi, 0.0, (1.0 - d.cdf(theta)) / d.pdf(theta))
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# Conditional income families
# ---------------------------------------------------------------------------


class IncomeFamily:
    """Conditional income law G(. | theta), FOSD-increasing in theta.

    Subclasses implement:

    * ``supp_lo(theta)``, ``supp_hi(theta)`` -- support endpoints;
    * ``cdf(pi, theta)``, ``pdf(pi, theta)`` -- conditional CDF/density;
    * ``dcdf_dtheta(pi, theta)`` -- partial derivative of G in theta
      (zero outside the support);
    * ``g2_over_g(pi, theta)`` -- the ratio dcdf_dtheta / pdf in its
      family closed form, which extends continuously beyond the support
      edge (one-sided limits at the boundary);
    * ``ppf(u, theta)`` -- conditional quantile, used for inverse-transform
      sampling.

    All methods accept scalars or broadcastable arrays.
    """

    family: str = "abstract"

    def __init__(self, params: dict):
        self.params = dict(params)

    # -- subclass surface ---------------------------------------------------

    def supp_lo(self, theta):
        raise NotImplementedError

    def supp_hi(self, theta):
        raise NotImplementedError

    def cdf(self, pi, theta):
        raise NotImplementedError

    def pdf(self, pi, theta):
        raise NotImplementedError

    def dcdf_dtheta(self, pi, theta):
        raise NotImplementedError

    def g2_over_g(self, pi, theta):
        raise NotImplementedError

    def ppf(self, u, theta):
        raise NotImplementedError


class AdditiveErrorFamily(IncomeFamily):
    """Income = type + mean-zero error: pi = theta + eps.

    G(pi | theta) = H(pi - theta), so dG/dtheta = -h and the ratio
    dG/dtheta / g is identically -1.
    """

    family = "additive_error"

    def __init__(self, error: _Univariate, params: dict):
        super().__init__(params)
        self._err = error

    def supp_lo(self, theta):
        return np.asarray(theta, dtype=float) + self._err.lo

    def supp_hi(self, theta):
        return np.asarray(theta, dtype=float) + self._err.hi

    def cdf(self, pi, theta):
        return self._err.cdf(np.asarray(pi, dtype=float) - theta)

    def pdf(self, pi, theta):
        return self._err.pdf(np.asarray(pi, dtype=float) - theta)

    def dcdf_dtheta(self, pi, theta):
        return -self._err.pdf(np.asarray(pi, dtype=float) - theta)

    def g2_over_g(self, pi, theta):
        shape = np.broadcast_shapes(np.shape(pi), np.shape(theta))
        return np.full(shape, -1.0) if shape else -1.0

    def ppf(self, u, theta):
        return np.asarray(theta, dtype=float) + self._err.ppf(u)


class ScaledErrorFamily(IncomeFamily):
    """Income = type + (1 - type) * error: pi = theta + (1 - theta) eps.

    The support shrinks as the type approaches 1.  The ratio
    dG/dtheta / g = (pi - 1) / (1 - theta) does not depend on the error
    distribution's shape.  Requires the type support to lie in [0, 1].
    """

    family = "scaled_error"

    def __init__(self, error: _Univariate, params: dict):
        super().__init__(params)
        self._err = error

    def _scale(self, theta):
        return 1.0 - np.asarray(theta, dtype=float)

    def supp_lo(self, theta):
        theta = np.asarray(theta, dtype=float)
        return theta + self._scale(theta) * self._err.lo

    def supp_hi(self, theta):
        theta = np.asarray(theta, dtype=float)
        return theta + self._scale(theta) * self._err.hi

    def cdf(self, pi, theta):
        pi = np.asarray(pi, dtype=float)
        theta = np.asarray(theta, dtype=float)
        s = 1.0 - theta
        z = (pi - theta) / np.where(s > 0, s, 1.0)
        # degenerate top type (s == 0): income is deterministic at theta
        out = np.where(s > 0, self._err.cdf(z), (pi >= theta).astype(float))
        return out if np.ndim(out) else float(out)

    def pdf(self, pi, theta):
        pi = np.asarray(pi, dtype=float)
        theta = np.asarray(theta, dtype=float)
        s = 1.0 - theta
        safe = np.where(s > 0, s, 1.0)
        out = np.where(s > 0, self._err.pdf((pi - theta) / safe) / safe, 0.0)
        return out if np.ndim(out) else float(out)

    def dcdf_dtheta(self, pi, theta):
        pi = np.asarray(pi, dtype=float)
        theta = np.asarray(theta, dtype=float)
        s = 1.0 - theta
        safe = np.where(s > 0, s, 1.0)
        out = np.where(s > 0,
                       self._err.pdf((pi - theta) / safe) * (pi - 1.0) / (safe * safe),
                       0.0)
        return out if np.ndim(out) else float(out)

    def g2_over_g(self, pi, theta):
        pi = np.asarray(pi, dtype=float)
        s = self._scale(theta)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = (pi - 1.0) / s
        return out if np.ndim(out) else float(out)

    def ppf(self, u, theta):
        theta = np.asarray(theta, dtype=float)
        return theta + self._scale(theta) * self._err.ppf(u)


class TableIncomeFamily(IncomeFamily):
    """Tabulated conditional CDFs: monotone-cubic in income, linear in type.

    ``theta_grid`` gives the type knots; ``rows`` holds one (pi_grid, cdf)
    table per knot.  Between knots the conditional law is the mixture of the
    two neighboring rows, which preserves the FOSD ordering and the mean
    normalization exactly and makes dG/dtheta piecewise constant in type.
    The support between knots is accordingly the union of the neighboring
    rows' supports (a step function of the type).
    """

    family = "table"

    def __init__(self, theta_grid, rows, params: dict):
        super().__init__(params)
        self._tg = np.asarray(theta_grid, dtype=float)
        if self._tg.ndim != 1 or self._tg.size < 2 or np.any(np.diff(self._tg) <= 0):
            raise ConstructionError("income table theta grid must be strictly increasing")
        if len(rows) != self._tg.size:
            raise ConstructionError("income table needs one row per theta knot")
        self._rows = [_TableCdf(g, v) for g, v in rows]
        los = np.array([r.lo for r in self._rows])
        his = np.array([r.hi for r in self._rows])
        if np.any(los < -1e-12) or np.any(his <= los):
            raise ConstructionError("income table rows must have ordered nonnegative supports")
        # FOSD across knots, checked on the union of row grids
        probe = np.linspace(los.min(), his.max(), 257)
        vals = np.array([self._row_cdf(j, probe) for j in range(len(self._rows))])
        if np.any(np.diff(vals, axis=0) > 1e-9):
            raise ConstructionError("income table rows must be FOSD-ordered in theta")
        # mean normalization per knot: E[pi | theta_j] = theta_j
        for j, r in enumerate(self._rows):
            m = r.lo + quad(lambda x: 1.0 - r.cdf(x), r.lo, r.hi,
                            epsabs=1e-12, epsrel=1e-10, limit=200)[0]
            if abs(m - self._tg[j]) > 1e-6:
                raise ConstructionError(
                    f"income table row {j} has mean {m:.8g}, expected {self._tg[j]:.8g}")
        self._los, self._his = los, his

    def _row_cdf(self, j, pi):
        r = self._rows[j]
        pi = np.asarray(pi, dtype=float)
        return np.where(pi <= r.lo, 0.0, np.where(pi >= r.hi, 1.0, r.cdf(pi)))

    def _locate(self, theta):
        theta = np.asarray(theta, dtype=float)
        j = np.clip(np.searchsorted(self._tg, theta, side="right") - 1, 0, self._tg.size - 2)
        w = (theta - self._tg[j]) / (self._tg[j + 1] - self._tg[j])
        return j, np.clip(w, 0.0, 1.0)

    def supp_lo(self, theta):
        j, w = self._locate(np.asarray(theta, dtype=float))
        out = np.where(w <= 0, self._los[j],
                       np.where(w >= 1, self._los[j + 1],
                                np.minimum(self._los[j], self._los[j + 1])))
        return out if np.ndim(theta) else float(out)

    def supp_hi(self, theta):
        j, w = self._locate(np.asarray(theta, dtype=float))
        out = np.where(w <= 0, self._his[j],
                       np.where(w >= 1, self._his[j + 1],
                                np.maximum(self._his[j], self._his[j + 1])))
        return out if np.ndim(theta) else float(out)

    def cdf(self, pi, theta):
        pi, theta = np.broadcast_arrays(np.asarray(pi, dtype=float),
                                        np.asarray(theta, dtype=float))
        j, w = self._locate(theta)
        out = np.empty(pi.shape)
        for jj in np.unique(j):
            m = j == jj
            out[m] = ((1.0 - w[m]) * self._row_cdf(jj, pi[m])
                      + w[m] * self._row_cdf(jj + 1, pi[m]))
        return out if out.ndim else float(out)

    def pdf(self, pi, theta):
        pi, theta = np.broadcast_arrays(np.asarray(pi, dtype=float),
                                        np.asarray(theta, dtype=float))
        j, w = self._locate(theta)
        out = np.empty(pi.shape)
        for jj in np.unique(j):
            m = j == jj
            out[m] = ((1.0 - w[m]) * self._rows[jj].pdf(pi[m])
                      + w[m] * self._rows[jj + 1].pdf(pi[m]))
        return out if out.ndim else float(out)

    def dcdf_dtheta(self, pi, theta):
        pi, theta = np.broadcast_arrays(np.asarray(pi, dtype=float),
                                        np.asarray(theta, dtype=float))
        j, _ = self._locate(theta)
        out = np.empty(pi.shape)
        for jj in np.unique(j):
            m = j == jj
            dt = self._tg[jj + 1] - self._tg[jj]
            out[m] = (self._row_cdf(jj + 1, pi[m]) - self._row_cdf(jj, pi[m])) / dt
        return out if out.ndim else float(out)

    def g2_over_g(self, pi, theta):
        num = self.dcdf_dtheta(pi, theta)
        den = self.pdf(pi, theta)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = num / np.where(den > 0, den, np.nan)
        out = np.where(np.isnan(out), 0.0, out)
        return out if np.ndim(out) else float(out)

    def ppf(self, u, theta):
        u, theta = np.broadcast_arrays(np.asarray(u, dtype=float),
                                       np.asarray(theta, dtype=float))
        flat_u, flat_t = u.ravel(), theta.ravel()
        out = np.empty(flat_u.shape)
        for k in range(flat_u.size):
            out[k] = self._ppf_scalar(flat_u[k], flat_t[k])
        out = out.reshape(u.shape)
        return out if out.ndim else float(out)

    def _ppf_scalar(self, u, theta):
        lo = float(self.supp_lo(theta))
        hi = float(self.supp_hi(theta))
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if self.cdf(mid, theta) < u:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)


def make_income_family(family: str, params: dict) -> IncomeFamily:
    """Build a conditional income family.

    Families: ``additive_error`` and ``scaled_error`` take an ``error``
    sub-distribution (uniform / triangular / table) that must have mean zero
    and straddle zero; ``table`` takes explicit conditional CDF rows.
    """
    if family in ("additive_error", "scaled_error"):
        err_spec = params.get("error")
        if not isinstance(err_spec, dict) or "family" not in err_spec:
            raise ConstructionError("error distribution spec required (family + params)")
        err = _build_univariate(err_spec["family"], err_spec)
        if abs(err.mean) > _MEAN_TOL:
            raise ConstructionError(f"error distribution must have mean zero, got {err.mean:.3g}")
        if not (err.lo < 0.0 < err.hi):
            raise ConstructionError("error support must straddle zero")
        cls = AdditiveErrorFamily if family == "additive_error" else ScaledErrorFamily
        return cls(err, dict(params))
    if family == "table":
        return TableIncomeFamily(params["theta_grid"], params["rows"], dict(params))
    raise ConstructionError(f"unknown income family {family!r}")


def sample_income(fam: IncomeFamily, theta, rng: np.random.Generator):
    """Draw a realized income from G(. | theta) by inverse transform."""
    u = rng.random(np.shape(theta)) if np.ndim(theta) else rng.random()
    return fam.ppf(u, theta)


def project_to_support(fam: IncomeFamily, theta_report, pi_true):
    """Closest point of [supp_lo(theta_report), supp_hi(theta_report)] to pi_true.

    This is the on-path income report of a winner whose realized income is
    not feasible under his reported type ("as truthfully as possible").
    """
    lo = fam.supp_lo(theta_report)
    hi = fam.supp_hi(theta_report)
    out = np.minimum(np.maximum(pi_true, lo), hi)
    return out if np.ndim(out) else float(out)


# ---------------------------------------------------------------------------
# Agent bundle
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AgentSpec:
    """One bidder: type distribution, income family, audit cost c >= 0 and
    maximal penalty sensitivity phi in [0, 1]."""

    types: TypeDist
    income: IncomeFamily
    audit_cost: float
    sensitivity: float

    def __post_init__(self):
        c, phi = self.audit_cost, self.sensitivity
        if not (isinstance(c, (int, float)) and np.isfinite(c) and c >= 0):
            raise ConstructionError(f"audit_cost must be >= 0, got {c!r}")
        if not (isinstance(phi, (int, float)) and 0.0 <= phi <= 1.0):
            raise ConstructionError(f"sensitivity must lie in [0, 1], got {phi!r}")
        lo, hi = self.types.lo, self.types.hi
        if isinstance(self.income, ScaledErrorFamily) and hi > 1.0 + 1e-12:
            raise ConstructionError(
                f"scaled-error incomes need type support within [0, 1], got hi={hi}")
        # incomes must be nonnegative; support endpoints ordered on the interior
        probe = np.linspace(lo, hi, 33)
        s_lo = np.asarray(self.income.supp_lo(probe), dtype=float)
        s_hi = np.asarray(self.income.supp_hi(probe), dtype=float)
        if np.any(s_lo < -1e-9):
            raise ConstructionError(
                "income support dips below zero (error lower bound < -type lower bound)")
        interior = (probe > lo) & (probe < hi)
        if np.any(s_hi[interior] - s_lo[interior] <= 0):
            raise ConstructionError("income support must be nondegenerate on the interior")
