"""Shipped example instances.

These four instances exercise every code path and carry the golden values
used throughout the test suite:

* ``uniform_additive`` -- types U[1,2], additive U[-1,1] income errors,
  phi = 0.5, c = 0.2.  The audit surplus is constant in income, so the
  audit threshold is all-or-nothing and the menu has two contracts.
* ``scaled_uniform`` -- types U[1/2, 1], scaled errors
  pi = theta + (1-theta) eps with eps ~ U[-1,1], phi = 1, c = 0.5.  Here
  mu(theta, pi) = 1 - pi and the income support shifts and shrinks with
  the type.
* ``scaled_triangular`` -- same income family with triangular types
  (density 8 (theta - 1/2) on [1/2, 1]); the audit threshold
  1 - c (2 theta - 1) / (phi theta) is interior, which makes it the
  natural instance for payment-crossing checks.
* ``mixed_pair`` -- a two-agent auction combining the first two.
"""

from __future__ import annotations

from .dist import AgentSpec, make_income_family, make_type_dist
from .mech import AuctionInstance

_UNIT_ERR = {"error": {"family": "uniform", "lo": -1.0, "hi": 1.0}}


def uniform_additive_agent(audit_cost: float = 0.2, sensitivity: float = 0.5) -> AgentSpec:
    return AgentSpec(
        types=make_type_dist("uniform", {"lo": 1.0, "hi": 2.0}),
        income=make_income_family("additive_error", _UNIT_ERR),
        audit_cost=audit_cost,
        sensitivity=sensitivity,
    )


def scaled_uniform_agent(audit_cost: float = 0.5, sensitivity: float = 1.0) -> AgentSpec:
    return AgentSpec(
        types=make_type_dist("uniform", {"lo": 0.5, "hi": 1.0}),
        income=make_income_family("scaled_error", _UNIT_ERR),
        audit_cost=audit_cost,
        sensitivity=sensitivity,
    )


def scaled_triangular_agent(audit_cost: float = 0.5, sensitivity: float = 1.0) -> AgentSpec:
    return AgentSpec(
        types=make_type_dist("triangular", {"lo": 0.5, "hi": 1.0}),
        income=make_income_family("scaled_error", _UNIT_ERR),
        audit_cost=audit_cost,
        sensitivity=sensitivity,
    )


def uniform_additive() -> AuctionInstance:
    return AuctionInstance((uniform_additive_agent(),))


def scaled_uniform() -> AuctionInstance:
    return AuctionInstance((scaled_uniform_agent(),))


def scaled_triangular() -> AuctionInstance:
    return AuctionInstance((scaled_triangular_agent(),))


def mixed_pair() -> AuctionInstance:
    return AuctionInstance((uniform_additive_agent(), scaled_uniform_agent()))


SHIPPED_INSTANCES = {
    "uniform_additive": uniform_additive,
    "scaled_uniform": scaled_uniform,
    "scaled_triangular": scaled_triangular,
    "mixed_pair": mixed_pair,
}
