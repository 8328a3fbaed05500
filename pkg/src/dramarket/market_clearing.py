"""Two-seller clearing, transaction payoffs and regulatory caps.

Two sellers with linear bids serve a buyer's demand ``l_C``.  The market
clears where both bid prices are equal and the quantities add up to the
demand.  If that interior point asks one seller for a negative quantity, the
other seller serves the whole demand at its own bid price.  A regulator may
then cap the price and each seller's quantity; capped values are used
directly, without re-clearing the residual demand.

Transmission losses are ignored, so the power a seller sends equals the
power the buyer receives.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from dramarket.cost_model import AggregatorCostModel, BidCurve
from dramarket.errors import ClearingError, DomainError


@dataclass(frozen=True)
class SellerState:
    bid: BidCurve
    cost: AggregatorCostModel
    p_g: float
    p_max: float

    def __post_init__(self) -> None:
        if not 0 <= self.p_g <= self.p_max:
            raise DomainError(f"need 0 <= p_g <= p_max, got p_g={self.p_g}, p_max={self.p_max}")


@dataclass(frozen=True)
class MarketOutcome:
    p_A: float
    p_B: float
    phi_T: float
    l_C: float
    price_capped: bool = False
    qty_capped_A: bool = False
    qty_capped_B: bool = False

    @property
    def capped(self) -> bool:
        return self.price_capped or self.qty_capped_A or self.qty_capped_B


@dataclass(frozen=True)
class RegulatoryCaps:
    phi_max: float | None = None
    p_max_A: float | None = None
    p_max_B: float | None = None

    def __post_init__(self) -> None:
        for name in ("phi_max", "p_max_A", "p_max_B"):
            value = getattr(self, name)
            if value is not None and not value > 0:
                raise DomainError(f"cap {name} must be positive, got {value}")

    @property
    def any(self) -> bool:
        return any(v is not None for v in (self.phi_max, self.p_max_A, self.p_max_B))


@dataclass(frozen=True)
class PayoffPair:
    delta: float  # seller
    omega: float  # buyer


NO_TRADE = PayoffPair(0.0, 0.0)


def clear_two_sellers(bid_A: BidCurve, bid_B: BidCurve, l_C: float) -> MarketOutcome:
    """Equalize both bid prices subject to ``p_A + p_B == l_C``.

    Raises:
        ClearingError: for non-positive demand or a singular system.
    """
    if not l_C > 0:
        raise ClearingError(f"buyer demand must be positive, got {l_C}")
    slope_sum = bid_A.slope_m + bid_B.slope_m
    if slope_sum <= 0:
        raise ClearingError("both bid slopes are zero; clearing system is singular")
    p_A = (bid_B.lambda0 - bid_A.lambda0 + bid_B.slope_m * l_C) / slope_sum
    if p_A <= 0:
        return MarketOutcome(p_A=0.0, p_B=l_C, phi_T=bid_B.price(l_C), l_C=l_C)
    if p_A >= l_C:
        return MarketOutcome(p_A=l_C, p_B=0.0, phi_T=bid_A.price(l_C), l_C=l_C)
    return MarketOutcome(p_A=p_A, p_B=l_C - p_A, phi_T=bid_A.price(p_A), l_C=l_C)


def apply_caps(outcome: MarketOutcome, caps: RegulatoryCaps) -> MarketOutcome:
    """Replace each value exceeding its cap by the cap."""
    changes = {}
    if caps.phi_max is not None and outcome.phi_T > caps.phi_max:
        changes.update(phi_T=caps.phi_max, price_capped=True)
    if caps.p_max_A is not None and outcome.p_A > caps.p_max_A:
        changes.update(p_A=caps.p_max_A, qty_capped_A=True)
    if caps.p_max_B is not None and outcome.p_B > caps.p_max_B:
        changes.update(p_B=caps.p_max_B, qty_capped_B=True)
    return replace(outcome, **changes) if changes else outcome


def seller_payoff(cost: AggregatorCostModel, p_g: float, t: float, phi: float) -> float:
    """Revenue ``phi * t`` minus the extra discharge cost of selling ``t``."""
    if t < 0:
        raise DomainError(f"sold power must be non-negative, got {t}")
    return phi * t - (cost.cost(p_g + t) - cost.cost(p_g))


def buyer_payoff(cost: AggregatorCostModel, p_g: float, t: float, phi: float) -> float:
    """Discharge cost avoided by buying ``t`` minus the purchase cost."""
    if t < 0 or t > p_g:
        raise DomainError(f"purchased power must lie in [0, p_g={p_g}], got {t}")
    return -phi * t - (cost.cost(p_g - t) - cost.cost(p_g))


def validate_bargain(pair: PayoffPair) -> bool:
    """A trade is acceptable only if it strictly benefits both sides."""
    return pair.delta > 0 and pair.omega > 0
