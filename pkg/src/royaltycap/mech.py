"""Closed-form objects of the optimal royalty-cap auction.

The mechanism sells an income-generating asset to one of N bidders and may
charge income-contingent payments afterwards, subject to auditing the
winner's privately observed income at a per-agent cost c, with penalty
sensitivity capped at phi.  The central quantities:

* ``mu(theta, pi) = -G_2/g * (1 - F)/f`` -- the marginal information rent
  recovered by auditing at income level pi; auditing pays iff mu*phi >= c.
* ``psi(theta) = theta - (1-F)/f + E[(mu*phi - c)_+ | theta]`` -- the
  virtual value; the asset goes to the bidder with the highest positive
  virtual value.
* ``pi_star(theta)`` -- the audit threshold: reports below it are audited,
  reports above pay the royalty cap ``pi_star * phi`` and are not audited.
* ``Phi(theta) = phi * integral of -G_2 over [0, pi_star]`` -- the share of
  marginal information rent recovered through royalties, in [0, phi].
* Upfront transfers make the winner's rent equal the integral of
  ``q(z) (1 - Phi(z))`` below his type, so truthful reporting is a dominant
  strategy.

Everything here evaluates by adaptive quadrature and bisection against the
distribution objects from :mod:`royaltycap.dist`; ``MechanismTables`` caches
dense grids of the same quantities for the simulator.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .dist import AgentSpec, AdditiveErrorFamily, inverse_hazard
from .errors import (
    ConstructionError,
    RegularityError,
    ReportRejectedError,
    UnsupportedInstanceError,
)

_QUAD_OPTS = dict(epsabs=1e-12, epsrel=1e-10, limit=200)
# relative nudge for one-sided limits at support endpoints
_NU = 1e-9
_GL64 = np.polynomial.legendre.leggauss(64)
_GL32 = np.polynomial.legendre.leggauss(32)
_GL4 = np.polynomial.legendre.leggauss(4)


# ---------------------------------------------------------------------------
# Instance and outcome records
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AuctionInstance:
    """An auction: an ordered tuple of agents (N >= 1)."""

    agents: tuple

    def __post_init__(self):
        if len(self.agents) < 1:
            raise ConstructionError("instance needs at least one agent")
        for a in self.agents:
            if not isinstance(a, AgentSpec):
                raise ConstructionError(f"expected AgentSpec, got {type(a).__name__}")

    @property
    def n_agents(self) -> int:
        return len(self.agents)


@dataclass(frozen=True)
class MenuContract:
    """One item of a posted menu: a lump-sum purchase or a linear-royalty
    contract with certain auditing."""

    kind: str  # "lump_sum" | "linear_royalty"
    upfront_price: float
    royalty_rate: float
    audited: bool

    def __post_init__(self):
        if self.kind == "lump_sum" and (self.royalty_rate != 0.0 or self.audited):
            raise ConstructionError("lump-sum contracts carry no royalties or audits")
        if self.kind == "linear_royalty" and not self.audited:
            raise ConstructionError("linear-royalty contracts are always audited")


@dataclass(frozen=True)
class Outcome:
    """Realized outcome of one auction round."""

    winner: Optional[int]
    transfers: tuple
    royalty: float
    audited: bool
    penalty: float
    audit_cost_paid: float


# ---------------------------------------------------------------------------
# Pointwise mechanism quantities
# ---------------------------------------------------------------------------


def mu(agent: AgentSpec, theta, pi):
    """Marginal information rent -G_2/g * (1 - F)/f.

    Strictly positive on the interior of the support.  The density ratio is
    evaluated in its family closed form, which extends continuously to
    income levels outside [supp_lo, supp_hi]; type arguments outside the
    type support raise ``DomainError``.
    """
    agent.types._check_domain(theta)
    out = -np.asarray(agent.income.g2_over_g(pi, theta)) * inverse_hazard(agent.types, theta)
    return out if np.ndim(out) else float(out)


def myerson_virtual(agent: AgentSpec, theta):
    """Cash-auction virtual value theta - (1 - F)/f."""
    agent.types._check_domain(theta)
    out = np.asarray(theta, dtype=float) - inverse_hazard(agent.types, theta)
    return out if np.ndim(out) else float(out)


def _audit_surplus_grid(agent: AgentSpec, theta: float, pis):
    """mu * phi - c at fixed theta for an array of incomes."""
    ih = inverse_hazard(agent.types, theta)
    ratio = -np.asarray(agent.income.g2_over_g(pis, theta), dtype=float)
    return ratio * (ih * agent.sensitivity) - agent.audit_cost


def _income_bounds(agent: AgentSpec, theta):
    fam = agent.income
    lo = np.asarray(fam.supp_lo(theta), dtype=float)
    hi = np.asarray(fam.supp_hi(theta), dtype=float)
    # unbounded upper supports are truncated at the 1 - 1e-10 quantile
    if np.any(np.isinf(hi)):
        hi = np.where(np.isinf(hi), fam.ppf(1.0 - 1e-10, theta), hi)
    return lo, hi


def audit_threshold(agent: AgentSpec, theta) -> float:
    """Audit threshold pi_star: the largest income at which auditing still
    pays (mu * phi >= c), or 0 when it never pays.

    Requires mu*phi - c to be single-crossing from above in income; a
    violation detected on the scan grid raises ``RegularityError``.
    Bisection resolves the crossing to absolute tolerance below 1e-10.
    """
    agent.types._check_domain(theta)
    theta = float(theta)
    lo, hi = (float(x) for x in _income_bounds(agent, theta))
    phi, c = agent.sensitivity, agent.audit_cost
    ih = inverse_hazard(agent.types, theta)
    if phi * ih == 0.0:  # covers phi == 0 and the top type
        return hi if c == 0.0 else 0.0
    width = hi - lo
    probe = np.linspace(lo + _NU * width, hi - _NU * width, 65)
    s = _audit_surplus_grid(agent, theta, probe)
    if np.any(s < 0):
        k = int(np.argmax(s < 0))
        if np.any(s[k:] > 0):
            raise RegularityError(
                f"mu*phi - c is not single-crossing in income at theta={theta}")
    if s[0] < 0:
        return 0.0
    if s[-1] >= 0:
        return hi
    a, b = lo, hi
    for _ in range(60):
        m = 0.5 * (a + b)
        if _audit_surplus_grid(agent, theta, np.array([m]))[0] >= 0:
            a = m
        else:
            b = m
    return 0.5 * (a + b)


def _audit_gain(agent: AgentSpec, theta: float) -> float:
    """E[(mu*phi - c)_+ | theta], the expected net benefit of auditing."""
    phi, c = agent.sensitivity, agent.audit_cost
    if phi == 0.0:
        return 0.0
    lo, hi = (float(x) for x in _income_bounds(agent, theta))
    pstar = audit_threshold(agent, theta)
    b = min(pstar, hi)
    if b <= lo:
        return 0.0

    def f(x):
        return (_audit_surplus_grid(agent, theta, np.array([x]))[0]
                * agent.income.pdf(x, theta))

    val, _ = quad(f, lo, b, **_QUAD_OPTS)
    return val


def virtual_value(agent: AgentSpec, theta):
    """Virtual value psi = Myerson virtual value + expected audit gain."""
    if np.ndim(theta):
        return np.array([virtual_value(agent, float(t)) for t in np.asarray(theta)])
    agent.types._check_domain(theta)
    return myerson_virtual(agent, theta) + _audit_gain(agent, float(theta))


def phi_cap(agent: AgentSpec, theta) -> float:
    """Royalty recovery share Phi(theta) = phi * int_0^{pi_star} (-G_2) dpi.

    Lies in [0, phi]: equals phi when the whole income support is audited
    and 0 when auditing never pays.  (The integrand vanishes below the
    income support, so integration starts at supp_lo.)
    """
    agent.types._check_domain(theta)
    theta = float(theta)
    phi = agent.sensitivity
    if phi == 0.0:
        return 0.0
    lo, hi = (float(x) for x in _income_bounds(agent, theta))
    pstar = audit_threshold(agent, theta)
    b = min(pstar, hi)
    if b <= lo:
        return 0.0
    val, _ = quad(lambda x: -agent.income.dcdf_dtheta(x, theta), lo, b, **_QUAD_OPTS)
    return float(min(max(val * phi, 0.0), phi))


def allocation(inst: AuctionInstance, theta_profile) -> list:
    """Winner indicator: 1 for the agent whose virtual value strictly exceeds
    both zero and every rival's positive part; exact ties leave the asset
    unallocated."""
    psis = [virtual_value(a, float(t)) for a, t in zip(inst.agents, theta_profile)]
    out = [0] * inst.n_agents
    w = int(np.argmax(psis))
    rival = max([0.0] + [p for j, p in enumerate(psis) if j != w])
    if psis[w] > rival:
        out[w] = 1
    return out


def _check_report(agent: AgentSpec, theta_report: float, pi_report: float):
    agent.types._check_domain(theta_report)
    lo, hi = (float(x) for x in _income_bounds(agent, theta_report))
    tol = 1e-9 * max(1.0, abs(hi))
    if pi_report < lo - tol or pi_report > hi + tol:
        raise ReportRejectedError(
            f"income report {pi_report} outside [{lo}, {hi}] for type report {theta_report}")


def royalty(agent: AgentSpec, theta_report: float, pi_report: float) -> float:
    """Royalty min(pi_report, pi_star(theta_report)) * phi, capped at the
    royalty cap pi_star * phi.  Reports outside the reported type's income
    support are rejected."""
    _check_report(agent, theta_report, pi_report)
    return min(pi_report, audit_threshold(agent, theta_report)) * agent.sensitivity


def _audit_mask(pi_report, cap, supp_hi):
    """Audit indicator: report strictly below the threshold, or equal to it
    when the threshold coincides with the top of the reported support.

    The boundary case matters with shifting supports: when the whole
    reported support is worth auditing, the cap equals the support's upper
    endpoint and the only report at or above the cap is that endpoint.
    Leaving it unaudited would let a winner under-report his type and then
    park his income report at the cap, evading the penalty; auditing it
    restores exact deviation indifference (it is also the case the
    dominant-strategy envelope argument prices at the dampened slope).
    On path the event has measure zero, so payments are unchanged.
    """
    tol = 1e-6 * np.maximum(1.0, np.abs(supp_hi))
    at_top = cap >= supp_hi - tol
    return (pi_report < cap) | (at_top & (pi_report >= supp_hi - tol))


def audit_rule(agent: AgentSpec, theta_report: float, pi_report: float) -> int:
    """Audit indicator: 1 iff the report is strictly below the audit
    threshold (with the threshold-at-support-top boundary report audited as
    well; see ``_audit_mask``)."""
    _check_report(agent, theta_report, pi_report)
    cap = audit_threshold(agent, theta_report)
    hi = float(np.asarray(agent.income.supp_hi(theta_report)))
    return int(bool(_audit_mask(pi_report, cap, hi)))


def penalty(agent: AgentSpec, theta_report: float, pi_report: float, pi_true: float) -> float:
    """Post-audit penalty (pi_true - pi_report) * phi.

    Negative values are refunds of overpaid royalties.  The same linear
    formula applies off path, for true incomes outside the reported type's
    support.
    """
    return (pi_true - pi_report) * agent.sensitivity


# ---------------------------------------------------------------------------
# Transfers
# ---------------------------------------------------------------------------


_KINK_CACHE: dict = {}


def _threshold_kinks(agent: AgentSpec) -> list:
    """Types at which the audit region changes regime (the threshold leaves
    a support endpoint).  Used as quadrature breakpoints."""
    hit = _KINK_CACHE.get(id(agent))
    if hit is not None and hit[0] is agent:
        return hit[1]
    lo, hi = agent.types.lo, agent.types.hi
    w = hi - lo
    grid = np.linspace(lo + 1e-7 * w, hi, 513)

    def edge_surplus(edge_of):
        def f(t):
            plo, phi_ = (float(x) for x in _income_bounds(agent, t))
            width = phi_ - plo
            p = plo + _NU * width if edge_of == "lo" else phi_ - _NU * width
            ih = inverse_hazard(agent.types, t)
            if not np.isfinite(ih):
                return 1e30
            return float(_audit_surplus_grid(agent, t, np.array([p]))[0])
        return f

    kinks = []
    for which in ("lo", "hi"):
        f = edge_surplus(which)
        vals = np.array([f(t) for t in grid])
        sign = np.sign(vals)
        for k in np.nonzero(np.diff(sign))[0]:
            try:
                kinks.append(brentq(f, grid[k], grid[k + 1], xtol=1e-13))
            except ValueError:
                pass
    out = sorted({k for k in kinks if lo < k < hi})
    _KINK_CACHE[id(agent)] = (agent, out)
    return out


def expected_income_net_royalty(agent: AgentSpec, theta: float) -> float:
    """E[pi - royalty | theta] = theta - phi * E[min(pi, pi_star(theta))]."""
    agent.types._check_domain(theta)
    theta = float(theta)
    phi = agent.sensitivity
    if phi == 0.0:
        return theta
    lo, hi = (float(x) for x in _income_bounds(agent, theta))
    a = min(audit_threshold(agent, theta), hi)
    if a >= hi:
        return theta * (1.0 - phi)
    if a <= lo:
        return theta - phi * a
    head, _ = quad(lambda x: x * agent.income.pdf(x, theta), lo, a, **_QUAD_OPTS)
    e_min = head + a * (1.0 - float(agent.income.cdf(a, theta)))
    return theta - phi * e_min


def _psi_floor(agent: AgentSpec) -> float:
    """Lowest type at which psi evaluates finitely: the support end itself
    unless the density vanishes there (then the inverse hazard diverges and
    the grid is nudged just inside)."""
    lo, hi = agent.types.lo, agent.types.hi
    if np.isfinite(inverse_hazard(agent.types, lo)):
        return lo
    return lo + _NU * (hi - lo)


def _win_threshold(agent: AgentSpec, rival: float) -> float:
    """Lowest type that beats a rival virtual value (rival >= 0); the top of
    the support when no type does."""
    lo_n = _psi_floor(agent)
    hi = agent.types.hi
    if virtual_value(agent, lo_n) > rival:
        return agent.types.lo
    if virtual_value(agent, hi) <= rival:
        return hi
    return brentq(lambda t: virtual_value(agent, t) - rival, lo_n, hi, xtol=1e-13)


def transfer(inst: AuctionInstance, i: int, theta_profile) -> float:
    """Upfront transfer of agent i at the reported profile.

    Zero unless i wins; a winner pays his expected income net of royalties
    minus the information rent integral of (1 - Phi) over the types below
    his report that still win against the same rivals.
    """
    for a, t in zip(inst.agents, theta_profile):
        a.types._check_domain(t)
    agent = inst.agents[i]
    theta_i = float(theta_profile[i])
    psis = [virtual_value(a, float(t)) for a, t in zip(inst.agents, theta_profile)]
    rival = max([0.0] + [p for j, p in enumerate(psis) if j != i])
    if not psis[i] > rival:
        return 0.0
    zstar = _win_threshold(agent, rival)
    e_net = expected_income_net_royalty(agent, theta_i)
    pts = [k for k in _threshold_kinks(agent) if zstar < k < theta_i] or None
    rent, _ = quad(lambda z: 1.0 - phi_cap(agent, z), zstar, theta_i,
                   points=pts, **_QUAD_OPTS)
    return e_net - rent


# ---------------------------------------------------------------------------
# Binary menu (single agent, additive errors)
# ---------------------------------------------------------------------------


def menu_cutoffs(agent: AgentSpec) -> tuple:
    """Cutoff types of the posted menu.

    theta_star bounds the region where auditing pays ((1-F)/f * phi >= c);
    theta_0 is the lowest type with positive virtual value.  Both found by
    bisection.
    """
    lo, hi = agent.types.lo, agent.types.hi
    lo_n = _psi_floor(agent)
    phi, c = agent.sensitivity, agent.audit_cost

    def audit_pays(t):
        return inverse_hazard(agent.types, t) * phi - c >= 0

    if not audit_pays(lo_n):
        theta_star = lo
    elif audit_pays(hi):
        theta_star = hi
    else:
        a, b = lo_n, hi
        for _ in range(100):
            m = 0.5 * (a + b)
            if audit_pays(m):
                a = m
            else:
                b = m
        theta_star = 0.5 * (a + b)

    if virtual_value(agent, lo_n) > 0:
        theta_0 = lo
    elif virtual_value(agent, hi) <= 0:
        theta_0 = hi
    else:
        theta_0 = brentq(lambda t: virtual_value(agent, t), lo_n, hi, xtol=1e-13)
    return theta_star, theta_0


def binary_menu(agent: AgentSpec) -> list:
    """Menu implementation of the single-agent mechanism under additive
    errors: at most a lump-sum contract and a linear-royalty contract.

    If theta_0 >= theta_star the menu is a single lump-sum at price theta_0;
    otherwise a lump-sum at (1-phi) theta_0 + phi theta_star plus a royalty
    contract (rate phi, certain auditing) at (1-phi) theta_0.
    """
    if not isinstance(agent.income, AdditiveErrorFamily):
        raise UnsupportedInstanceError("menus require the additive-errors income family")
    theta_star, theta_0 = menu_cutoffs(agent)
    phi = agent.sensitivity
    if theta_0 >= theta_star:
        return [MenuContract("lump_sum", float(theta_0), 0.0, False)]
    return [
        MenuContract("lump_sum", float((1.0 - phi) * theta_0 + phi * theta_star), 0.0, False),
        MenuContract("linear_royalty", float((1.0 - phi) * theta_0), phi, True),
    ]


# ---------------------------------------------------------------------------
# Payoff bound and benchmarks
# ---------------------------------------------------------------------------


def endogenous_virtual(inst: AuctionInstance, i: int, theta_profile,
                       audit_rule_fn: Callable) -> float:
    """Profile-dependent virtual value under an arbitrary auditing rule:
    Myerson virtual value plus E[a(theta, pi) (mu*phi - c)].

    Maximized pointwise by auditing exactly when mu*phi >= c, where it
    equals ``virtual_value``.
    """
    agent = inst.agents[i]
    theta_i = float(theta_profile[i])
    agent.types._check_domain(theta_i)
    lo, hi = (float(x) for x in _income_bounds(agent, theta_i))

    def f(x):
        a = audit_rule_fn(theta_profile, x)
        s = _audit_surplus_grid(agent, theta_i, np.array([x]))[0]
        return a * s * agent.income.pdf(x, theta_i)

    pts = [p for p in [audit_threshold(agent, theta_i)] if lo < p < hi] or None
    term, _ = quad(f, lo, hi, points=pts, **_QUAD_OPTS)
    return myerson_virtual(agent, theta_i) + term


def _psi_sampler(agent: AgentSpec, kind: str, n: int = 4097):
    """Dense monotone sample of psi (or the Myerson virtual value) over the
    type support, anchored at the audit-regime kinks."""
    lo, hi = agent.types.lo, agent.types.hi
    base = np.linspace(_psi_floor(agent), hi, n)
    ts = np.unique(np.concatenate([base, _threshold_kinks(agent)]))
    if kind == "psi_m":
        vals = np.asarray(myerson_virtual(agent, ts), dtype=float)
    else:
        vals = _mech_curves(agent, ts)[1]
    return ts, vals


def _expected_max_plus(inst: AuctionInstance, kind: str) -> float:
    """E[max_i V_i(theta_i)_+] for independent types and strictly increasing
    per-agent value functions, via the survival-function integral
    int_0^{vmax} (1 - prod_i P(V_i <= s)) ds."""
    samplers = []
    for agent in inst.agents:
        ts, vals = _psi_sampler(agent, kind)
        if np.any(np.diff(vals) <= 0):
            raise RegularityError("value function is not strictly increasing; "
                                  "ironing is not supported")
        samplers.append((agent, ts, vals))
    vmax = max(float(v[-1]) for _, _, v in samplers)
    if vmax <= 0:
        return 0.0

    def survive(s):
        p = 1.0
        for agent, ts, vals in samplers:
            p *= float(agent.types.cdf(np.interp(s, vals, ts)))
        return 1.0 - p

    pts = sorted({float(x) for _, _, v in samplers for x in (v[0], v[-1])
                  if 0.0 < x < vmax}) or None
    val, _ = quad(survive, 0.0, vmax, points=pts, **_QUAD_OPTS)
    return val


def payoff_bound(inst: AuctionInstance) -> float:
    """Upper bound on expected revenue net audit costs: E[max_i psi_i(theta_i)_+].

    Attained by the optimal mechanism, so this doubles as its exact expected
    revenue.  Evaluated by deterministic quadrature for any N (survival-
    function form for N >= 2)."""
    if inst.n_agents == 1:
        agent = inst.agents[0]
        theta_r = _win_threshold(agent, 0.0)
        if theta_r >= agent.types.hi:
            return 0.0
        pts = [k for k in _threshold_kinks(agent) if theta_r < k < agent.types.hi] or None
        val, _ = quad(lambda t: virtual_value(agent, t) * agent.types.pdf(t),
                      theta_r, agent.types.hi, points=pts, **_QUAD_OPTS)
        return val
    return _expected_max_plus(inst, "psi")


def myerson_cash_revenue(inst: AuctionInstance) -> float:
    """Expected revenue of the optimal cash-only auction, E[max_i psiM_i_+].

    Requires every Myerson virtual value to be strictly increasing."""
    for agent in inst.agents:
        probe = np.linspace(_psi_floor(agent), agent.types.hi, 257)
        vals = myerson_virtual(agent, probe)
        if np.any(np.diff(vals) <= 0):
            raise RegularityError("Myerson virtual value is not strictly increasing; "
                                  "ironing is not supported")
    if inst.n_agents == 1:
        agent = inst.agents[0]
        lo_n, hi = _psi_floor(agent), agent.types.hi
        if myerson_virtual(agent, hi) <= 0:
            return 0.0
        if myerson_virtual(agent, lo_n) > 0:
            theta_r = agent.types.lo
        else:
            theta_r = brentq(lambda t: myerson_virtual(agent, t), lo_n, hi, xtol=1e-13)
        val, _ = quad(lambda t: myerson_virtual(agent, t) * agent.types.pdf(t),
                      theta_r, hi, **_QUAD_OPTS)
        return val
    return _expected_max_plus(inst, "psi_m")


def full_extraction_revenue(inst: AuctionInstance) -> float:
    """Full surplus E[max(0, theta_1, ..., theta_N)]: the revenue of the
    modified first-price auction with unrestricted income-contingent
    penalties (free auditing, unit sensitivity)."""
    hi = max(a.types.hi for a in inst.agents)
    if hi <= 0:
        return 0.0

    def survive(s):
        p = 1.0
        for a in inst.agents:
            p *= float(a.types.cdf(s))
        return 1.0 - p

    pts = sorted({float(a.types.lo) for a in inst.agents if 0 < a.types.lo < hi}) or None
    val, _ = quad(survive, 0.0, hi, points=pts, **_QUAD_OPTS)
    return val


# ---------------------------------------------------------------------------
# Dense evaluation tables for the simulator
# ---------------------------------------------------------------------------


def _gl_segments(a, b, rule=_GL64):
    """Gauss-Legendre nodes/weights for per-row segments [a_i, b_i]
    (rows with b <= a contribute nothing)."""
    x, w = rule
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    half = 0.5 * np.maximum(b - a, 0.0)
    mid = 0.5 * (a + np.maximum(b, a))
    nodes = mid[:, None] + half[:, None] * x[None, :]
    weights = half[:, None] * w[None, :]
    return nodes, weights


def _pi_star_vec(agent: AgentSpec, thetas: np.ndarray) -> np.ndarray:
    """Vectorized audit threshold (no single-crossing scan)."""
    thetas = np.asarray(thetas, dtype=float)
    lo, hi = _income_bounds(agent, thetas)
    phi, c = agent.sensitivity, agent.audit_cost
    ih = np.asarray(inverse_hazard(agent.types, thetas), dtype=float)
    out = np.zeros_like(thetas)
    trivial = (phi * np.where(np.isfinite(ih), ih, 1.0)) == 0.0
    out[trivial] = hi[trivial] if c == 0.0 else 0.0
    rest = ~trivial
    if not np.any(rest):
        return out
    idx = np.nonzero(rest)[0]
    t, l, h = thetas[idx], lo[idx], hi[idx]
    ihx = ih[idx] * phi
    width = h - l

    def s_at(p):
        ratio = -np.asarray(agent.income.g2_over_g(p, t), dtype=float)
        return ratio * ihx - c

    s_lo = s_at(l + _NU * width)
    s_hi = s_at(h - _NU * width)
    res = np.where(s_lo < 0, 0.0, np.where(s_hi >= 0, h, np.nan))
    solve = np.isnan(res)
    if np.any(solve):
        a = l[solve].copy()
        b = h[solve].copy()
        tt = t[solve]
        for _ in range(64):
            m = 0.5 * (a + b)
            ratio = -np.asarray(agent.income.g2_over_g(m, tt), dtype=float)
            ok = ratio * ihx[solve] - c >= 0
            a = np.where(ok, m, a)
            b = np.where(ok, b, m)
        res[solve] = 0.5 * (a + b)
    out[idx] = res
    return out


@dataclass(frozen=True)
class AgentTables:
    theta: np.ndarray = field(repr=False)
    psi_m: np.ndarray = field(repr=False)
    psi: np.ndarray = field(repr=False)
    pi_star: np.ndarray = field(repr=False)
    phi_cap: np.ndarray = field(repr=False)
    income_net_royalty: np.ndarray = field(repr=False)
    rent_cum: np.ndarray = field(repr=False)


def _mech_curves(agent: AgentSpec, ts: np.ndarray):
    """psi_m, psi, pi_star, Phi and E[pi - royalty] on a type grid.

    Fixed-order Gauss-Legendre on [supp_lo, pi_star] per grid point; exact
    to near machine precision for smooth income families because the
    integrands are smooth inside the audit region."""
    ts = np.asarray(ts, dtype=float)
    phi, c = agent.sensitivity, agent.audit_cost
    ih = np.asarray(inverse_hazard(agent.types, ts), dtype=float)
    psi_m = ts - ih
    pstar = _pi_star_vec(agent, ts)
    plo, phi_sup = _income_bounds(agent, ts)
    b = np.minimum(pstar, phi_sup)

    nodes, wts = _gl_segments(plo, b)
    tcol = np.broadcast_to(ts[:, None], nodes.shape)
    with np.errstate(invalid="ignore"):
        ratio = -np.asarray(agent.income.g2_over_g(nodes, tcol), dtype=float)
        dens = np.asarray(agent.income.pdf(nodes, tcol), dtype=float)
        mu_gain = (ratio * (ih * phi)[:, None] - c) * dens
        negg2 = -np.asarray(agent.income.dcdf_dtheta(nodes, tcol), dtype=float)
    # zero-width segments (empty audit region, degenerate top-type support)
    # may evaluate 0/0 ratios at their collapsed nodes; their weight is zero
    mu_gain = np.where(wts > 0, mu_gain, 0.0)
    negg2 = np.where(wts > 0, negg2, 0.0)
    gain = np.sum(mu_gain * wts, axis=1)
    psi = psi_m + gain

    cap = np.clip(phi * np.sum(negg2 * wts, axis=1), 0.0, phi)

    # E[min(pi, pi_star)] reduces to pi_star when the whole support is above it
    e_min = np.sum(np.where(wts > 0, nodes * dens, 0.0) * wts, axis=1) + b * (
        1.0 - np.asarray(agent.income.cdf(b, ts), dtype=float))
    e_net = ts - phi * e_min
    return psi_m, psi, pstar, cap, e_net


def _cap_vec(agent: AgentSpec, ts: np.ndarray, rule=_GL32) -> np.ndarray:
    """Vectorized royalty recovery share Phi on a type grid."""
    phi = agent.sensitivity
    if phi == 0.0:
        return np.zeros_like(np.asarray(ts, dtype=float))
    pstar = _pi_star_vec(agent, ts)
    plo, phi_sup = _income_bounds(agent, ts)
    nodes, wts = _gl_segments(plo, np.minimum(pstar, phi_sup), rule=rule)
    tcol = np.broadcast_to(np.asarray(ts, dtype=float)[:, None], nodes.shape)
    with np.errstate(invalid="ignore"):
        negg2 = -np.asarray(agent.income.dcdf_dtheta(nodes, tcol), dtype=float)
    negg2 = np.where(wts > 0, negg2, 0.0)
    return np.clip(phi * np.sum(negg2 * wts, axis=1), 0.0, phi)


def _build_agent_tables(agent: AgentSpec, n: int) -> AgentTables:
    lo, hi = agent.types.lo, agent.types.hi
    w = hi - lo
    floor = _psi_floor(agent)
    base = np.linspace(floor, hi, n)
    kinks = _threshold_kinks(agent)
    extra = []
    for k in kinks:
        # bracket each regime change tightly so linear interpolation cannot
        # smear a jump in pi_star or Phi across a full grid cell
        extra.extend([k - 1e-12 * w, k, k + 1e-12 * w])
    ts = np.unique(np.clip(np.concatenate([base, extra]), floor, hi))

    psi_m, psi, pstar, cap, e_net = _mech_curves(agent, ts)

    # cumulative information-rent factor: int (1 - Phi) dz from the bottom
    n4, w4 = _gl_segments(ts[:-1], ts[1:], rule=_GL4)
    cap4 = _cap_vec(agent, n4.ravel())
    seg_vals = np.sum((1.0 - cap4).reshape(n4.shape) * w4, axis=1)
    rent_cum = np.concatenate([[0.0], np.cumsum(seg_vals)])

    if np.any(np.diff(psi) < -1e-9):
        raise RegularityError("virtual value is not increasing on the table grid")
    psi = np.maximum.accumulate(psi)  # wash out sub-1e-9 quadrature jitter

    return AgentTables(ts, psi_m, psi, pstar, cap, e_net, rent_cum)


@dataclass(frozen=True)
class MechanismTables:
    """Dense per-agent grids of the mechanism quantities, for fast
    vectorized evaluation and inversion inside the simulator.

    Immutable after construction; all evaluation methods are pure."""

    agents: tuple

    @staticmethod
    def build(inst: AuctionInstance, n: int = 8193) -> "MechanismTables":
        return MechanismTables(tuple(_build_agent_tables(a, n) for a in inst.agents))

    def psi(self, i: int, theta):
        t = self.agents[i]
        return np.interp(theta, t.theta, t.psi)

    def psi_m(self, i: int, theta):
        t = self.agents[i]
        return np.interp(theta, t.theta, t.psi_m)

    def pi_star(self, i: int, theta):
        t = self.agents[i]
        return np.interp(theta, t.theta, t.pi_star)

    def phi_cap(self, i: int, theta):
        t = self.agents[i]
        return np.interp(theta, t.theta, t.phi_cap)

    def income_net_royalty(self, i: int, theta):
        t = self.agents[i]
        return np.interp(theta, t.theta, t.income_net_royalty)

    def rent_below(self, i: int, theta):
        t = self.agents[i]
        return np.interp(theta, t.theta, t.rent_cum)

    def threshold_type(self, i: int, rival_value):
        """Inverse virtual value: lowest type beating ``rival_value``."""
        t = self.agents[i]
        return np.interp(rival_value, t.psi, t.theta)

    def transfer_win(self, i: int, theta, rival_value):
        """Winner's transfer at type report ``theta`` against the best rival
        positive virtual value."""
        z = self.threshold_type(i, rival_value)
        return (self.income_net_royalty(i, theta)
                - (self.rent_below(i, theta) - self.rent_below(i, z)))


_TABLE_CACHE: dict = {}


def tables_for(inst: AuctionInstance, n: int = 8193) -> MechanismTables:
    """Build-once cache of ``MechanismTables`` keyed by instance identity.

    The cache pins the keyed instance so a recycled ``id()`` can never alias
    a stale entry."""
    key = (id(inst), n)
    hit = _TABLE_CACHE.get(key)
    if hit is None or hit[0] is not inst:
        hit = (inst, MechanismTables.build(inst, n))
        _TABLE_CACHE[key] = hit
    return hit[1]
