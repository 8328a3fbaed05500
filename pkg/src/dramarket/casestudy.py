"""Bundled three-aggregator case study and its synthetic daily profiles.

The measured price and hot-water profiles behind the published case study are
not available, so the bundled CSV files are synthetic 96-slot series built by
:func:`build_price_profile` and :func:`build_draw_profile`.  They are shaped
to reproduce the published statistics:

* 68 of 96 slots are priced above half of the daily maximum;
* with :data:`BUNDLED_TANK`, the price-blind schedule runs 18 slots and the
  price-sensitive schedule runs 16 slots (10 expensive, 6 cheap).

:func:`tank_calibration_candidates` is the coarse grid search that found the
bundled tank coefficients; ``python -m dramarket.casestudy`` regenerates the
data files.
"""

from __future__ import annotations

import itertools
from collections.abc import Iterable
from importlib import resources
from pathlib import Path

import numpy as np

from dramarket import wh_scheduler as wh

DATA_DIR = Path(str(resources.files("dramarket") / "data"))
CONFIG_PATH = DATA_DIR / "casestudy.yaml"
PRICE_PATH = DATA_DIR / "price_profile.csv"
DRAW_PATH = DATA_DIR / "water_draw_profile.csv"

BUNDLED_TANK = wh.TankModel(
    temp_min=110.0,
    temp_max=130.0,
    heat_rate=6.25,
    loss_rate=0.15,
    draw_drop=3.5,
    initial_temp=120.0,
)

TARGET_WELFARE_ON = 18
TARGET_SCHEDULED_ON = 16
TARGET_SCHEDULED_EXPENSIVE_ON = 10

_HOURS = np.arange(wh.SLOTS_PER_DAY) / 4.0


def _bump(center: float, width: float) -> np.ndarray:
    return np.exp(-0.5 * ((_HOURS - center) / width) ** 2)


def build_price_profile() -> tuple[float, ...]:
    """Normalized price: cheap 00:00-04:00 and 11:00-14:00, evening peak."""
    day = 0.62 + 0.38 * _bump(19.0, 2.2) + 0.12 * _bump(7.5, 1.5)
    night = 0.30 + 0.08 * np.cos(np.pi * (_HOURS - 2.0) / 4.0) ** 2
    midday = 0.34 + 0.06 * np.abs(_HOURS - 12.5) / 1.5
    v = np.where(_HOURS < 4, night, np.where((_HOURS >= 11) & (_HOURS < 14), midday, day))
    v = v / v.max()
    return tuple(float(x) for x in np.round(v, 4))


def build_draw_profile() -> tuple[float, ...]:
    """Normalized hot-water draw with morning and evening peaks."""
    v = 0.05 + 0.9 * _bump(7.0, 1.0) + 0.75 * _bump(20.0, 1.3) + 0.25 * _bump(13.0, 1.2)
    v = np.where(_HOURS < 5, 0.02, v)
    v = v / v.max()
    return tuple(float(x) for x in np.round(v, 4))


def bundled_profiles() -> tuple[wh.PriceProfile, wh.WaterDrawProfile]:
    return wh.read_price_profile(PRICE_PATH), wh.read_draw_profile(DRAW_PATH)


def meets_targets(tank: wh.TankModel, prices: wh.PriceProfile, draws: wh.WaterDrawProfile) -> bool:
    try:
        welfare = wh.schedule_welfare(tank, draws)
        scheduled = wh.schedule_price_sensitive(tank, draws, prices)
    except wh.InfeasibleScheduleError:
        return False
    if welfare.on_count != TARGET_WELFARE_ON or scheduled.on_count != TARGET_SCHEDULED_ON:
        return False
    expensive_on = int(np.sum(np.asarray(scheduled.on) & prices.expensive_mask()))
    return expensive_on == TARGET_SCHEDULED_EXPENSIVE_ON


def tank_calibration_candidates(
    prices: wh.PriceProfile,
    draws: wh.WaterDrawProfile,
    heat_rates: Iterable[float] = np.arange(5.0, 7.01, 0.25),
    loss_rates: Iterable[float] = np.arange(0.0, 1.01, 0.05),
    draw_drops: Iterable[float] = np.arange(0.5, 5.01, 0.25),
    initial_temps: Iterable[float] = (115.0, 117.5, 120.0, 122.5, 125.0),
) -> list[wh.TankModel]:
    """Every grid point whose schedules hit the published on-slot counts.

    The full default grid takes a few minutes; the bundled tank is the hit
    whose initial temperature sits at the band midpoint.
    """
    hits = []
    for h, loss, d, t0 in itertools.product(heat_rates, loss_rates, draw_drops, initial_temps):
        tank = wh.TankModel(
            heat_rate=round(float(h), 4),
            loss_rate=round(float(loss), 4),
            draw_drop=round(float(d), 4),
            initial_temp=float(t0),
        )
        if meets_targets(tank, prices, draws):
            hits.append(tank)
    return hits


def write_bundled_profiles(directory: Path = DATA_DIR) -> None:
    wh.write_profile(directory / PRICE_PATH.name, build_price_profile())
    wh.write_profile(directory / DRAW_PATH.name, build_draw_profile())


if __name__ == "__main__":
    write_bundled_profiles()
    print(f"wrote {PRICE_PATH} and {DRAW_PATH}")
