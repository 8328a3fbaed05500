"""Battery and aggregator discharge costs, marginal cost and linear bids.

A single house discharging ``dE`` kWh from its battery pays a logarithmic
barrier cost ``-a * log(1 - dE / B)``.  Its second-order expansion
``a*dE/B + a*dE**2/B**2`` is quadratic, so an aggregator of many houses has a
quadratic cost ``C(P) = v*P + u*P**2`` in the power ``P`` it discharges over a
15-minute slot.  Bids are straight lines whose slope is a multiple of ``u``.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass

import numpy as np

from dramarket.errors import CalibrationError, DomainError

SLOT_HOURS = 0.25  # one 15-minute slot, converts kW to kWh


@dataclass(frozen=True)
class CostParams:
    """Per-house battery coefficients.

    Attributes:
        a: Pricing coefficient (normalized currency).
        B: Energy scale in kWh; also the largest typical discharge.
    """

    a: float
    B: float

    def __post_init__(self) -> None:
        if not (self.a > 0 and math.isfinite(self.a)):
            raise DomainError(f"pricing coefficient a must be positive, got {self.a}")
        if not (self.B > 0 and math.isfinite(self.B)):
            raise DomainError(f"energy scale B must be positive, got {self.B}")


@dataclass(frozen=True)
class AggregatorCostModel:
    """Quadratic aggregator cost ``C(P) = v*P + u*P**2``.

    Build it with :func:`aggregate_cost` or :meth:`from_mean`; the
    coefficients are derived from the mean pricing coefficient ``a_g``.
    """

    v: float
    u: float
    a_g: float
    B: float
    n_houses: int = 1

    def __post_init__(self) -> None:
        if self.u <= 0 or self.v <= 0:
            raise DomainError("aggregator cost coefficients must be positive")
        if self.n_houses < 1:
            raise DomainError(f"n_houses must be >= 1, got {self.n_houses}")

    @classmethod
    def from_mean(cls, a_g: float, B: float, n_houses: int = 1) -> AggregatorCostModel:
        CostParams(a_g, B)  # validates
        v = SLOT_HOURS * a_g / B
        u = a_g * SLOT_HOURS**2 / B**2
        return cls(v=v, u=u, a_g=a_g, B=B, n_houses=n_houses)

    def cost(self, p: float) -> float:
        return self.v * p + self.u * p * p


@dataclass(frozen=True)
class BidCurve:
    """Linear sale offer ``price(t) = lambda0 + slope_m * t``.

    ``t`` is the power sold on top of the baseline local feed ``p0``.  The
    seller can sell at most ``p_max - p0``.
    """

    lambda0: float
    slope_m: float
    p0: float
    p_max: float

    def __post_init__(self) -> None:
        if self.slope_m <= 0:
            raise DomainError(f"bid slope must be positive, got {self.slope_m}")
        if not 0 <= self.p0 <= self.p_max:
            raise DomainError(f"need 0 <= p0 <= p_max, got p0={self.p0}, p_max={self.p_max}")

    @property
    def max_sale(self) -> float:
        return self.p_max - self.p0

    def price(self, t: float) -> float:
        return self.lambda0 + self.slope_m * t


def battery_cost_log(params: CostParams, delta_e: float) -> float:
    """Logarithmic barrier cost of discharging ``delta_e`` kWh.

    Raises:
        DomainError: if ``delta_e`` is negative or reaches the barrier ``B``.
    """
    if delta_e < 0:
        raise DomainError(f"delta_e must be non-negative, got {delta_e}")
    if delta_e >= params.B:
        raise DomainError(f"delta_e={delta_e} reaches the barrier B={params.B}")
    return -params.a * math.log1p(-delta_e / params.B)


def battery_cost_quadratic(params: CostParams, delta_e: float) -> float:
    """Second-order truncation of :func:`battery_cost_log`."""
    x = delta_e / params.B
    if abs(x) >= 1:
        raise DomainError(f"|delta_e|/B must be < 1, got {x}")
    return params.a * x + params.a * x * x


def battery_cost_power(params: CostParams, delta_p: float) -> float:
    """Quadratic battery cost of discharging ``delta_p`` kW for one slot."""
    energy = SLOT_HOURS * delta_p
    if energy >= params.B:
        raise DomainError(f"0.25*delta_p={energy} must be below B={params.B}")
    return battery_cost_quadratic(params, energy)


def _sum_samples(*sample_sets: Iterable[tuple[float, float]]) -> tuple[np.ndarray, np.ndarray]:
    totals: dict[float, float] = {}
    keys: list[set[float]] = []
    for samples in sample_sets:
        seen = set()
        for power, cost in samples:
            power = float(power)
            totals[power] = totals.get(power, 0.0) + float(cost)
            seen.add(power)
        keys.append(seen)
    if any(k != keys[0] for k in keys[1:]):
        raise CalibrationError("grid and capital/maintenance samples must share power points")
    powers = np.array(sorted(totals))
    return powers, np.array([totals[p] for p in powers])


def calibrate_params(
    grid_cost_samples: Sequence[tuple[float, float]],
    cm_cost_samples: Sequence[tuple[float, float]],
) -> tuple[CostParams, float]:
    """Fit ``(a, B)`` to the total of grid and capital/maintenance costs.

    The quarter-hour quadratic cost is linear in ``a/B`` and ``a/B**2``, so
    the fit is an ordinary least-squares problem in those two unknowns.

    Returns:
        The fitted parameters and the root-mean-square residual.

    Raises:
        CalibrationError: on empty, mismatched or degenerate samples.
    """
    powers, totals = _sum_samples(grid_cost_samples, cm_cost_samples)
    energy = SLOT_HOURS * powers
    if np.count_nonzero(np.unique(energy)) < 2:
        raise CalibrationError("need at least two distinct non-zero power samples")
    design = np.column_stack([energy, energy**2])
    (alpha, beta), *_ = np.linalg.lstsq(design, totals, rcond=None)
    if alpha <= 0 or beta <= 0:
        raise CalibrationError(f"samples imply non-positive coefficients ({alpha}, {beta})")
    B = alpha / beta
    a = alpha * B
    residual = float(np.sqrt(np.mean((design @ [alpha, beta] - totals) ** 2)))
    return CostParams(a=float(a), B=float(B)), residual


def aggregate_cost(house_params: Sequence[CostParams], shared_B: float) -> AggregatorCostModel:
    """Aggregate houses sharing one energy scale into a quadratic cost."""
    if not house_params:
        raise DomainError("cannot aggregate an empty set of houses")
    mixed = [p.B for p in house_params if not math.isclose(p.B, shared_B, rel_tol=1e-12)]
    if mixed:
        raise DomainError(f"houses must share B={shared_B}; found {sorted(set(mixed))}")
    a_g = math.fsum(p.a for p in house_params) / len(house_params)
    return AggregatorCostModel.from_mean(a_g, shared_B, n_houses=len(house_params))


def marginal_cost(model: AggregatorCostModel, p: float) -> float:
    if p < 0:
        raise DomainError(f"power must be non-negative, got {p}")
    return model.v + 2.0 * model.u * p


def make_bid(model: AggregatorCostModel, p0: float, p_max: float, epsilon: float) -> BidCurve:
    """Bid with slope ``epsilon * u`` starting at the marginal cost at ``p0``.

    ``epsilon == 2`` bids exactly at marginal cost; smaller values bid below
    it and larger values above it.
    """
    if epsilon <= 0:
        raise DomainError(f"strategy multiplier must be positive, got {epsilon}")
    if not 0 <= p0 <= p_max:
        raise DomainError(f"need 0 <= p0 <= p_max, got p0={p0}, p_max={p_max}")
    return BidCurve(
        lambda0=marginal_cost(model, p0),
        slope_m=epsilon * model.u,
        p0=p0,
        p_max=p_max,
    )
