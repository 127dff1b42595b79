"""Renyi-DP accounting for the subsampled Gaussian mechanism.

Per-order RDP values compose additively over steps; conversion to
(epsilon, delta) minimizes over a fixed order grid. Fixed-size batches
are accounted with the Poisson-subsampling bound at rate q = s, the
ubiquitous DP-SGD approximation. The closed forms of the source analysis
(third-party and server-side budgets) are computed alongside as
clearly-labeled asymptotic reference numbers, never as tight guarantees.
"""
from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np
from scipy.special import gammaln, logsumexp

from .blocks import ConfigurationError


def _default_grid() -> tuple[float, ...]:
    return tuple([1.25, 1.5, 1.75] + list(range(2, 65)) + [128.0, 256.0, 512.0])


DEFAULT_ORDER_GRID = _default_grid()


@dataclass(frozen=True)
class Budget:
    epsilon: float
    delta: float

    def __post_init__(self):
        if not (math.isfinite(self.epsilon) and self.epsilon >= 0):
            raise ConfigurationError("epsilon must be finite and >= 0")
        if not (0 < self.delta < 1):
            raise ConfigurationError("delta must lie in (0, 1)")


@dataclass
class PrivacyLedger:
    """Sequence of (noise multiplier, sampling rate, step count) events."""

    events: list[tuple[float, float, int]] = field(default_factory=list)
    order_grid: tuple[float, ...] = DEFAULT_ORDER_GRID

    def add_event(self, sigma: float, q: float, steps: int) -> None:
        if sigma <= 0:
            raise ConfigurationError("accounted events need sigma > 0")
        if not (0 < q <= 1):
            raise ConfigurationError("sampling rate must be in (0, 1]")
        if steps < 0:
            raise ConfigurationError("steps must be >= 0")
        if steps:
            self.events.append((float(sigma), float(q), int(steps)))


def gaussian_rdp(order: float, sigma: float) -> float:
    """RDP of the Gaussian mechanism with sensitivity 1: order / (2 sigma^2)."""
    if order <= 1:
        raise ConfigurationError("RDP order must be > 1")
    if sigma <= 0:
        raise ConfigurationError("sigma must be > 0")
    return order / (2.0 * sigma * sigma)


def subsampled_gaussian_rdp(order: int, sigma: float, q: float) -> float:
    """Upper bound on the RDP of the Poisson-subsampled Gaussian.

    Integer orders only; binomial expansion
    (1/(a-1)) * log sum_j C(a,j) (1-q)^(a-j) q^j exp(j(j-1)/(2 sigma^2)).
    At q = 1 this is exactly the full-batch Gaussian value.
    """
    if not (0 < q <= 1):
        raise ConfigurationError("q must be in (0, 1]")
    if sigma <= 0:
        raise ConfigurationError("sigma must be > 0")
    order = int(order)
    if order < 2:
        raise ConfigurationError("integer order must be >= 2")
    if q == 1.0:
        return gaussian_rdp(order, sigma)
    j = np.arange(order + 1)
    log_terms = (gammaln(order + 1) - gammaln(j + 1) - gammaln(order - j + 1)
                 + (order - j) * math.log1p(-q) + j * math.log(q)
                 + j * (j - 1) / (2.0 * sigma * sigma))
    return float(logsumexp(log_terms) / (order - 1))


def _event_rdp(order: float, sigma: float, q: float) -> float:
    if q == 1.0:
        return gaussian_rdp(order, sigma)
    # Non-integer orders: evaluate the bound at the next integer order.
    # RDP curves are non-decreasing in the order, so this stays a bound.
    return subsampled_gaussian_rdp(max(2, math.ceil(order)), sigma, q)


def compose_and_convert(ledger: PrivacyLedger, delta: float) -> Budget:
    """Compose the ledger in RDP and convert to an (epsilon, delta) budget.

    Events with equal (sigma, q) are merged by summing their integer step
    counts before scaling, so composition is exactly additive.
    """
    if not (0 < delta < 1):
        raise ConfigurationError("delta must lie in (0, 1)")
    if not ledger.events:
        return Budget(0.0, delta)
    merged: dict[tuple[float, float], int] = {}
    for sigma, q, steps in ledger.events:
        merged[(sigma, q)] = merged.get((sigma, q), 0) + steps
    best = math.inf
    for order in ledger.order_grid:
        total = sum(steps * _event_rdp(order, sigma, q)
                    for (sigma, q), steps in merged.items())
        best = min(best, total + math.log(1.0 / delta) / (order - 1))
    return Budget(best, delta)


def third_party_epsilon(s: float, rounds: int, local_steps: int,
                        delta: float, sigma: float) -> float:
    """Closed-form third-party budget, asymptotic constant taken as 1.

    epsilon = s * sqrt(T K log(2/delta) log(2T/delta)) / sigma. Reported
    as a reference number only; the composed RDP bound is authoritative.
    """
    if sigma <= 0:
        raise ConfigurationError("sigma must be > 0")
    if not (0 < delta < 1):
        raise ConfigurationError("delta must lie in (0, 1)")
    tk = rounds * local_steps
    if tk == 0:
        return 0.0
    return (s * math.sqrt(tk * math.log(2.0 / delta)
                          * math.log(2.0 * rounds / delta)) / sigma)


def server_budget(epsilon: float, delta: float, num_clients: int,
                  participation: float) -> Budget:
    """Accumulative server-side budget (eps*sqrt(N/l), (delta/2)(1/l + 1))."""
    if not (0 < participation <= 1):
        raise ConfigurationError("participation rate must be in (0, 1]")
    eps_s = epsilon * math.sqrt(num_clients / participation)
    delta_s = (delta / 2.0) * (1.0 / participation + 1.0)
    return Budget(eps_s, delta_s)
