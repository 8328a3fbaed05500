"""Dynamic-programming water-heater schedules over a day of 15-minute slots.

The tank follows a linear first-order update::

    T[t] = T[t-1] + heat_rate * on[t] - loss_rate - draw_drop * draw[t]

so the temperature after slot ``t`` depends only on ``t`` and on how many
slots have been ``on`` so far.  The dynamic program therefore runs over the
exact state ``(slot, on_count)``; no temperature grid is needed and every
returned schedule re-simulates inside the band.

Two objectives are provided:

* welfare: track the middle of the comfort band as closely as possible,
  ignoring electricity prices;
* price-sensitive: minimise ``sum(price[t] * on[t])`` inside the band.

Both break ties toward fewer on-slots, then toward the lexicographically
smallest schedule (off as early as possible).
"""

from __future__ import annotations

import csv
import io
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from dramarket.errors import DomainError, InfeasibleScheduleError

SLOTS_PER_DAY = 96
_TOL = 1e-9


def _check_series(name: str, values: Sequence[float], length: int | None) -> tuple[float, ...]:
    values = tuple(float(v) for v in values)
    if length is not None and len(values) != length:
        raise DomainError(f"{name} must have {length} values, got {len(values)}")
    bad = [i for i, v in enumerate(values) if not (0.0 <= v <= 1.0)]
    if bad:
        raise DomainError(f"{name} values must lie in [0, 1]; slot {bad[0]} is {values[bad[0]]}")
    return values


@dataclass(frozen=True)
class PriceProfile:
    """Normalized electricity price per slot."""

    values: tuple[float, ...]
    length: int | None = SLOTS_PER_DAY

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", _check_series("price profile", self.values, self.length))
        if max(self.values, default=0.0) <= 0:
            raise DomainError("price profile must have a positive maximum")

    def __len__(self) -> int:
        return len(self.values)

    def expensive_mask(self, threshold_fraction: float = 0.5) -> np.ndarray:
        """Slots priced strictly above ``threshold_fraction`` of the maximum."""
        v = np.asarray(self.values)
        return v > threshold_fraction * v.max()


@dataclass(frozen=True)
class WaterDrawProfile:
    """Normalized hot-water draw intensity per slot."""

    values: tuple[float, ...]
    length: int | None = SLOTS_PER_DAY

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", _check_series("draw profile", self.values, self.length))

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class TankModel:
    """Linear tank thermal model; temperatures in degrees Fahrenheit."""

    temp_min: float = 110.0
    temp_max: float = 130.0
    heat_rate: float = 5.0
    loss_rate: float = 0.5
    draw_drop: float = 5.0
    initial_temp: float = 120.0

    def __post_init__(self) -> None:
        if not self.temp_min < self.temp_max:
            raise DomainError("temp_min must be below temp_max")
        if self.heat_rate <= 0:
            raise DomainError("heat_rate must be positive")
        if self.loss_rate < 0 or self.draw_drop < 0:
            raise DomainError("loss_rate and draw_drop must be non-negative")
        if not self.temp_min <= self.initial_temp <= self.temp_max:
            raise DomainError("initial_temp must lie inside the comfort band")

    @property
    def setpoint(self) -> float:
        return 0.5 * (self.temp_min + self.temp_max)


@dataclass(frozen=True)
class WHSchedule:
    on: tuple[bool, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "on", tuple(bool(x) for x in self.on))

    def __len__(self) -> int:
        return len(self.on)

    @property
    def on_count(self) -> int:
        return sum(self.on)


@dataclass(frozen=True)
class OnOffStats:
    p_on: float
    p_off: float
    p_on_given_exp: float
    p_off_given_exp: float
    p_on_given_cheap: float
    p_off_given_cheap: float


def simulate_tank(tank: TankModel, schedule: WHSchedule, draws: WaterDrawProfile) -> np.ndarray:
    """Temperature after each slot under ``schedule``; no clamping."""
    if len(schedule) != len(draws):
        raise DomainError("schedule and draw profile lengths differ")
    on = np.asarray(schedule.on, dtype=float)
    step = tank.heat_rate * on - tank.loss_rate - tank.draw_drop * np.asarray(draws.values)
    return tank.initial_temp + np.cumsum(step)


def within_band(tank: TankModel, trajectory: np.ndarray) -> bool:
    return bool(np.all(trajectory >= tank.temp_min - _TOL) and np.all(trajectory <= tank.temp_max + _TOL))


# temperature after slot t with k on-slots so far: base[t] + heat_rate * k
def _base_temps(tank: TankModel, draws: WaterDrawProfile) -> np.ndarray:
    n = len(draws)
    cum_draw = np.cumsum(np.asarray(draws.values))
    return tank.initial_temp - tank.loss_rate * np.arange(1, n + 1) - tank.draw_drop * cum_draw


def _first_infeasible_slot(tank: TankModel, base: np.ndarray) -> int | None:
    reachable = {0}
    for t, b in enumerate(base):
        nxt = set()
        for k in reachable:
            for a in (0, 1):
                temp = b + tank.heat_rate * (k + a)
                if tank.temp_min - _TOL <= temp <= tank.temp_max + _TOL:
                    nxt.add(k + a)
        if not nxt:
            return t
        reachable = nxt
    return None


def _solve(
    tank: TankModel,
    draws: WaterDrawProfile,
    stage_cost: Callable[[int, np.ndarray, int], np.ndarray],
) -> WHSchedule:
    """Backward DP over (slot, on_count) minimising ``sum stage_cost(t, T, a)``.

    ``stage_cost`` receives the vector of post-slot temperatures for every
    on-count.  Values are compared as ``(cost, on_count)``; ties within a
    relative 1e-9 prefer ``off`` so the reconstructed schedule is the
    lexicographically smallest optimum.
    """
    n = len(draws)
    base = _base_temps(tank, draws)
    bad_slot = _first_infeasible_slot(tank, base)
    if bad_slot is not None:
        raise InfeasibleScheduleError(
            f"no schedule keeps the tank within [{tank.temp_min}, {tank.temp_max}] F "
            f"at slot {bad_slot}",
            slot=bad_slot,
        )

    ks = np.arange(n + 1)
    # cost/count of the best suffix, indexed by on-count; index n+1 is a sentinel
    cost = np.zeros(n + 2)
    count = np.zeros(n + 2)
    cost[n + 1] = np.inf
    choice = np.zeros((n, n + 1), dtype=bool)
    for t in range(n - 1, -1, -1):
        costs, counts = [], []
        for a in (0, 1):
            nxt = ks + a
            temp = base[t] + tank.heat_rate * nxt
            ok = (temp >= tank.temp_min - _TOL) & (temp <= tank.temp_max + _TOL)
            with np.errstate(invalid="ignore"):
                costs.append(np.where(ok, stage_cost(t, temp, a) + cost[nxt], np.inf))
            counts.append(count[nxt] + a)
        c0, c1 = costs
        finite = np.isfinite(c0) & np.isfinite(c1)
        scale = np.maximum(1.0, np.abs(np.where(finite, c0, 0.0)))
        tie = finite & (np.abs(c1 - np.where(finite, c0, 0.0)) <= _TOL * scale)
        take_on = np.where(tie, counts[1] < counts[0], c1 < c0)
        choice[t] = take_on
        cost = np.append(np.where(take_on, c1, c0), np.inf)
        count = np.append(np.where(take_on, counts[1], counts[0]), 0)

    if not np.isfinite(cost[0]):  # pragma: no cover - excluded by the reachability pass
        raise InfeasibleScheduleError("no feasible schedule", slot=0)
    on = []
    k = 0
    for t in range(n):
        a = bool(choice[t, k])
        on.append(a)
        k += a
    return WHSchedule(tuple(on))


def schedule_welfare(tank: TankModel, draws: WaterDrawProfile) -> WHSchedule:
    """Price-blind schedule that keeps the tank near the middle of its band.

    The cost is the total absolute deviation of the temperature from
    :attr:`TankModel.setpoint`, subject to the comfort band.

    Raises:
        InfeasibleScheduleError: when the band cannot be held.
    """
    setpoint = tank.setpoint
    return _solve(tank, draws, lambda t, temp, a: np.abs(temp - setpoint))


def schedule_price_sensitive(
    tank: TankModel, draws: WaterDrawProfile, prices: PriceProfile
) -> WHSchedule:
    """Cheapest schedule (``sum price * on``) that keeps the comfort band."""
    if len(prices) != len(draws):
        raise DomainError("price and draw profiles differ in length")
    price = prices.values
    return _solve(tank, draws, lambda t, temp, a: price[t] * a)


def on_off_stats(
    schedule: WHSchedule, prices: PriceProfile, threshold_fraction: float = 0.5
) -> OnOffStats:
    """Marginal and price-conditional on/off frequencies of a schedule.

    A conditional over an empty set of slots (e.g. no cheap slots) is
    reported as ``p_off = 1``.
    """
    if len(schedule) != len(prices):
        raise DomainError("schedule and price profile differ in length")
    on = np.asarray(schedule.on, dtype=bool)
    exp = prices.expensive_mask(threshold_fraction)

    def frac(mask: np.ndarray) -> float:
        total = int(mask.sum())
        return float(on[mask].sum()) / total if total else 0.0

    p_on = float(on.mean())
    on_exp = frac(exp)
    on_cheap = frac(~exp)
    return OnOffStats(
        p_on=p_on,
        p_off=1.0 - p_on,
        p_on_given_exp=on_exp,
        p_off_given_exp=1.0 - on_exp,
        p_on_given_cheap=on_cheap,
        p_off_given_cheap=1.0 - on_cheap,
    )


def curtailment_ratio(baseline: WHSchedule, scheduled: WHSchedule) -> float:
    """Relative drop in on-slots from ``baseline`` to ``scheduled``."""
    if len(baseline) != len(scheduled):
        raise DomainError("schedules differ in length")
    if baseline.on_count == 0:
        raise DomainError("curtailment is undefined for a baseline with no on-slots")
    return (baseline.on_count - scheduled.on_count) / baseline.on_count


# --- profile CSV files: header ``slot,value``, one row per slot ---------------


def read_profile_values(path: str | Path, length: int = SLOTS_PER_DAY) -> tuple[float, ...]:
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["slot", "value"]:
            raise DomainError(f"{path}: header must be 'slot,value'")
        values = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise DomainError(f"{path}:{lineno}: expected 2 columns")
            try:
                slot, value = int(row[0]), float(row[1])
            except ValueError as exc:
                raise DomainError(f"{path}:{lineno}: {exc}") from None
            if slot != len(values):
                raise DomainError(f"{path}:{lineno}: expected slot {len(values)}, got {slot}")
            values.append(value)
    if len(values) != length:
        raise DomainError(f"{path}: expected {length} data rows, got {len(values)}")
    return tuple(values)


def read_price_profile(path: str | Path) -> PriceProfile:
    return PriceProfile(read_profile_values(path))


def read_draw_profile(path: str | Path) -> WaterDrawProfile:
    return WaterDrawProfile(read_profile_values(path))


def format_profile(values: Sequence[float]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["slot", "value"])
    for i, v in enumerate(values):
        writer.writerow([i, f"{v:.4f}"])
    return buf.getvalue()


def write_profile(path: str | Path, values: Sequence[float]) -> None:
    Path(path).write_text(format_profile(values), newline="")
