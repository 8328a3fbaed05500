import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dramarket import wh_scheduler as wh
from dramarket.errors import DomainError, InfeasibleScheduleError
from oracles import brute_force_schedule

# every temperature stays on a 0.5 degF grid inside [110, 119.5]: 20 states
half_steps = st.integers(min_value=0, max_value=10).map(lambda k: 0.5 * k)


@st.composite
def small_instances(draw):
    n = draw(st.integers(min_value=1, max_value=12))
    tank = wh.TankModel(
        temp_min=110.0,
        temp_max=119.5,
        heat_rate=draw(st.integers(min_value=1, max_value=8).map(lambda k: 0.5 * k)),
        loss_rate=draw(st.integers(min_value=0, max_value=3).map(lambda k: 0.5 * k)),
        draw_drop=draw(half_steps),
        initial_temp=draw(st.integers(min_value=0, max_value=19).map(lambda k: 110.0 + 0.5 * k)),
    )
    draws = draw(st.lists(st.sampled_from([0.0, 1.0]), min_size=n, max_size=n))
    prices = draw(st.lists(st.sampled_from([0.25, 0.5, 0.75, 1.0]), min_size=n, max_size=n))
    return tank, tuple(draws), tuple(prices)


def _first_dead_slot(tank, draws):
    """Latest first-violation slot over every on/off sequence."""
    n = len(draws)
    on = np.array(list(itertools.product((0, 1), repeat=n)), dtype=float)
    temps = tank.initial_temp + np.cumsum(
        tank.heat_rate * on - tank.loss_rate - tank.draw_drop * np.asarray(draws), axis=1
    )
    bad = (temps < tank.temp_min - 1e-9) | (temps > tank.temp_max + 1e-9)
    first = np.where(bad.any(axis=1), bad.argmax(axis=1), n)
    return int(first.max())


class TestDynamicProgramVsEnumeration:
    @settings(max_examples=150, deadline=None)
    @given(small_instances())
    def test_welfare_matches_enumeration(self, inst):
        tank, draws, _ = inst
        mid = tank.setpoint
        oracle = brute_force_schedule(tank, draws, lambda temps, on: float(np.abs(temps - mid).sum()))
        profile = wh.WaterDrawProfile(draws, length=None)
        if oracle is None:
            with pytest.raises(InfeasibleScheduleError) as err:
                wh.schedule_welfare(tank, profile)
            assert err.value.slot == _first_dead_slot(tank, draws)
            return
        sched = wh.schedule_welfare(tank, profile)
        assert tuple(int(x) for x in sched.on) == oracle[2]

    @settings(max_examples=150, deadline=None)
    @given(small_instances())
    def test_price_sensitive_matches_enumeration(self, inst):
        tank, draws, prices = inst
        oracle = brute_force_schedule(tank, draws, lambda temps, on: float(np.dot(prices, on)))
        profile = wh.WaterDrawProfile(draws, length=None)
        price = wh.PriceProfile(prices, length=None)
        if oracle is None:
            with pytest.raises(InfeasibleScheduleError) as err:
                wh.schedule_price_sensitive(tank, profile, price)
            assert err.value.slot == _first_dead_slot(tank, draws)
            return
        sched = wh.schedule_price_sensitive(tank, profile, price)
        assert tuple(int(x) for x in sched.on) == oracle[2]


class TestSchedules:
    def test_zero_draw_loss_free_tank_stays_off(self):
        tank = wh.TankModel(loss_rate=0.0, initial_temp=120.0)
        draws = wh.WaterDrawProfile((0.0,) * 96)
        prices = wh.PriceProfile((0.5,) * 96)
        assert wh.schedule_welfare(tank, draws).on_count == 0
        assert wh.schedule_price_sensitive(tank, draws, prices).on_count == 0

    def test_constant_price_minimises_on_slots(self, profiles):
        # with a flat price the cheapest schedule is the one with fewest on-slots
        from dramarket.casestudy import BUNDLED_TANK

        _, draws = profiles
        flat = wh.PriceProfile((1.0,) * 96)
        sched = wh.schedule_price_sensitive(BUNDLED_TANK, draws, flat)
        base = BUNDLED_TANK.initial_temp - np.cumsum(
            BUNDLED_TANK.loss_rate + BUNDLED_TANK.draw_drop * np.asarray(draws.values)
        )
        # the running count must lift every slot above the floor
        need = int(np.ceil(np.max((BUNDLED_TANK.temp_min - base) / BUNDLED_TANK.heat_rate) - 1e-9))
        assert sched.on_count == max(need, 0)

    def test_infeasible_reports_first_slot(self):
        tank = wh.TankModel(heat_rate=1.0, loss_rate=0.0, draw_drop=8.0, initial_temp=120.0)
        draws = wh.WaterDrawProfile((0.0, 1.0, 1.0, 0.0), length=None)
        with pytest.raises(InfeasibleScheduleError) as err:
            wh.schedule_welfare(tank, draws)
        # always on: 121, 114, 107 -> the band breaks at slot 2
        assert err.value.slot == 2
        assert err.value.slot == _first_dead_slot(tank, draws.values)

    def test_schedule_re_simulates_inside_band(self, profiles):
        from dramarket.casestudy import BUNDLED_TANK

        prices, draws = profiles
        for sched in (
            wh.schedule_welfare(BUNDLED_TANK, draws),
            wh.schedule_price_sensitive(BUNDLED_TANK, draws, prices),
        ):
            assert wh.within_band(BUNDLED_TANK, wh.simulate_tank(BUNDLED_TANK, sched, draws))

    def test_price_mode_never_costs_more_than_welfare(self, profiles):
        from dramarket.casestudy import BUNDLED_TANK

        prices, draws = profiles
        p = np.asarray(prices.values)
        welfare = np.asarray(wh.schedule_welfare(BUNDLED_TANK, draws).on)
        priced = np.asarray(wh.schedule_price_sensitive(BUNDLED_TANK, draws, prices).on)
        assert np.dot(p, priced) <= np.dot(p, welfare) + 1e-12

    def test_length_mismatch(self):
        with pytest.raises(DomainError):
            wh.schedule_price_sensitive(
                wh.TankModel(), wh.WaterDrawProfile((0.0,) * 3, length=None), wh.PriceProfile((1.0,) * 4, length=None)
            )


class TestTankModel:
    @pytest.mark.parametrize(
        "kwargs",
        [
            {"temp_min": 130.0, "temp_max": 110.0},
            {"heat_rate": 0.0},
            {"loss_rate": -1.0},
            {"draw_drop": -0.5},
            {"initial_temp": 105.0},
        ],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(DomainError):
            wh.TankModel(**kwargs)

    def test_setpoint(self):
        assert wh.TankModel().setpoint == 120.0


class TestStatistics:
    def test_on_off_stats_hand_example(self):
        prices = wh.PriceProfile((1.0, 1.0, 0.2, 0.2), length=None)
        sched = wh.WHSchedule((True, False, True, True))
        stats = wh.on_off_stats(sched, prices)
        assert stats.p_on == 0.75
        assert stats.p_on_given_exp == 0.5
        assert stats.p_on_given_cheap == 1.0
        assert stats.p_off_given_cheap == 0.0

    def test_empty_conditional_set_counts_as_off(self):
        prices = wh.PriceProfile((1.0,) * 4, length=None)
        stats = wh.on_off_stats(wh.WHSchedule((True,) * 4), prices)
        assert stats.p_on_given_cheap == 0.0
        assert stats.p_off_given_cheap == 1.0

    def test_expensive_threshold_is_strict(self):
        prices = wh.PriceProfile((1.0, 0.5, 0.50001, 0.2), length=None)
        assert prices.expensive_mask(0.5).tolist() == [True, False, True, False]

    def test_curtailment_ratio(self):
        base = wh.WHSchedule((True,) * 18 + (False,) * 78)
        new = wh.WHSchedule((True,) * 16 + (False,) * 80)
        assert wh.curtailment_ratio(base, new) == pytest.approx(2 / 18, abs=1e-15)

    def test_curtailment_undefined_for_idle_baseline(self):
        idle = wh.WHSchedule((False,) * 4)
        with pytest.raises(DomainError):
            wh.curtailment_ratio(idle, idle)


class TestProfileFiles:
    def test_round_trip(self, tmp_path):
        values = tuple(round(i / 95, 4) for i in range(96))
        path = tmp_path / "p.csv"
        wh.write_profile(path, values)
        assert wh.read_profile_values(path) == values
        assert b"\r" not in path.read_bytes()

    @pytest.mark.parametrize(
        "text,msg",
        [
            ("time,value\n0,0.5\n", "header"),
            ("slot,value\n0,0.5\n", "96 data rows"),
            ("slot,value\n1,0.5\n", "expected slot 0"),
            ("slot,value\n0,abc\n", "could not convert"),
            ("slot,value\n0,0.5,1\n", "2 columns"),
        ],
    )
    def test_malformed(self, tmp_path, text, msg):
        path = tmp_path / "bad.csv"
        path.write_text(text)
        with pytest.raises(DomainError, match=msg):
            wh.read_profile_values(path)

    def test_out_of_range_value(self, tmp_path):
        path = tmp_path / "p.csv"
        wh.write_profile(path, [0.5] * 95 + [1.5])
        with pytest.raises(DomainError, match="slot 95"):
            wh.read_price_profile(path)

    def test_all_zero_price_rejected(self):
        with pytest.raises(DomainError, match="positive maximum"):
            wh.PriceProfile((0.0,) * 96)
