"""Bayesian game between two selling aggregators.

Each seller has a private cost type and picks a bid-slope multiplier per
type.  For every type pair the market is cleared for every strategy pair,
giving conditional payoff matrices ``H``.  Weighting them by each player's
belief about the opponent's type gives expected payoff matrices ``EP``:

* ``EP_A[m]`` has one row per A strategy and one column per type-contingent
  strategy of B, i.e. per tuple ``(j_1, ..., j_N)`` where B plays ``j_n``
  when it is of type ``n``.  Columns are in lexicographic order, so with
  three strategies and two B types column 7 is ``(3, 1)`` and column 9 is
  ``(3, 3)`` (1-based).
* ``EP_B[n]`` is laid out the same way against A's type-contingent
  strategies.

A pure Bayesian Nash equilibrium is a pair of type-contingent strategies in
which every type of each player best-responds to the other player's
strategy.  The search enumerates all pairs.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from dramarket import bayesian_types as bt
from dramarket import wh_scheduler as wh
from dramarket.cost_model import AggregatorCostModel, BidCurve, CostParams, make_bid
from dramarket.errors import ClearingError, ConfigError, DomainError
from dramarket.market_clearing import (
    MarketOutcome,
    PayoffPair,
    RegulatoryCaps,
    apply_caps,
    buyer_payoff,
    clear_two_sellers,
    seller_payoff,
    validate_bargain,
)

_BR_TOL = 1e-12


class MarketKind(str, enum.Enum):
    NON_COOPERATIVE = "non_cooperative"
    STACKELBERG = "stackelberg"


@dataclass(frozen=True)
class Variant:
    market: MarketKind = MarketKind.NON_COOPERATIVE
    dr_scheduled: bool = False

    @property
    def name(self) -> str:
        dr = "dr_scheduled" if self.dr_scheduled else "unscheduled"
        return f"{self.market.value}+{dr}"


@dataclass(frozen=True)
class StrategySet:
    """Bid-slope multipliers; 2 bids exactly at marginal cost."""

    epsilons: tuple[float, ...] = (1.6, 2.0, 2.4)

    def __post_init__(self) -> None:
        eps = tuple(float(e) for e in self.epsilons)
        if not eps:
            raise DomainError("strategy set is empty")
        if any(e <= 0 for e in eps):
            raise DomainError(f"strategy multipliers must be positive: {eps}")
        if any(b <= a for a, b in zip(eps, eps[1:])):
            raise DomainError(f"strategy multipliers must be strictly increasing: {eps}")
        object.__setattr__(self, "epsilons", eps)

    def __len__(self) -> int:
        return len(self.epsilons)

    def label(self, i: int) -> str:
        e = self.epsilons[i]
        if math.isclose(e, 2.0):
            return "marginal"
        return "low" if e < 2.0 else "high"


@dataclass(frozen=True)
class SellerSpec:
    """A selling aggregator: its possible cost types and operating point.

    ``p0`` is the baseline local feed where the bid starts, ``p_g`` the local
    load fed from storage before trading, ``p_max`` the stored power.
    """

    name: str
    types: tuple[CostParams, ...]
    n_houses: int
    p0: float
    p_g: float
    p_max: float

    def __post_init__(self) -> None:
        if not self.types:
            raise DomainError(f"seller {self.name} has no types")
        if not 0 <= self.p0 <= self.p_max or not 0 <= self.p_g <= self.p_max:
            raise DomainError(f"seller {self.name}: need 0 <= p0, p_g <= p_max")

    def cost_model(self, m: int) -> AggregatorCostModel:
        t = self.types[m]
        return AggregatorCostModel.from_mean(t.a, t.B, n_houses=self.n_houses)


@dataclass(frozen=True)
class BuyerSpec:
    name: str
    params: CostParams
    n_houses: int
    p_g: float
    demand: float  # power purchased, kW

    def cost_model(self) -> AggregatorCostModel:
        return AggregatorCostModel.from_mean(self.params.a, self.params.B, n_houses=self.n_houses)


@dataclass(frozen=True)
class DemandInputs:
    """Inputs of the aggregate demand figure reported per aggregator."""

    houses: int
    wh_kw: float
    wh_share: float
    gen_kw: float


@dataclass(frozen=True)
class GameConfig:
    variant: Variant
    seller_a: SellerSpec
    seller_b: SellerSpec
    buyer: BuyerSpec
    psi_A: bt.TypePrior
    psi_B: bt.TypePrior
    flags: bt.ParticipationFlags
    strategies: StrategySet = StrategySet()
    caps: RegulatoryCaps = RegulatoryCaps()
    price_profile: Path | None = None
    draw_profile: Path | None = None
    tank: wh.TankModel = wh.TankModel()
    threshold_fraction: float = 0.5
    dr_sellers: tuple[str, ...] = ("A",)
    demands: tuple[tuple[str, DemandInputs], ...] = ()

    def __post_init__(self) -> None:
        if self.psi_A.n_types != len(self.seller_a.types):
            raise ConfigError("prior length does not match the number of A types", "psi_A")
        if self.psi_B.n_types != len(self.seller_b.types):
            raise ConfigError("prior length does not match the number of B types", "psi_B")
        if self.variant.market is MarketKind.STACKELBERG and not self.caps.any:
            raise ConfigError("a stackelberg game needs at least one cap", "caps")
        if self.variant.dr_scheduled and self.price_profile is None:
            raise ConfigError("DR scheduling needs a price profile", "profiles.price")
        unknown = set(self.dr_sellers) - {"A", "B"}
        if unknown:
            raise ConfigError(f"unknown sellers {sorted(unknown)}", "dr_sellers")
        if not 0 < self.threshold_fraction < 1:
            raise ConfigError("must lie in (0, 1)", "threshold_fraction")

    @property
    def type_counts(self) -> tuple[int, int]:
        return len(self.seller_a.types), len(self.seller_b.types)


@dataclass(frozen=True)
class ConditionalPayoffs:
    """Payoff tables for one type pair: rows A's strategy, columns B's."""

    h_A: np.ndarray
    h_B: np.ndarray
    outcomes: tuple[tuple[MarketOutcome, ...], ...]


@dataclass(frozen=True)
class DominanceReport:
    """``dominates[r, i]``: row r weakly dominates row i with one strict column."""

    dominant: int | None
    dominates: np.ndarray


@dataclass(frozen=True)
class EquilibriumResult:
    strategy_A: tuple[int, ...] | None
    strategy_B: tuple[int, ...] | None
    payoff_A: tuple[float, ...] | None
    payoff_B: tuple[float, ...] | None
    equilibria: tuple[tuple[tuple[int, ...], tuple[int, ...]], ...]
    dominance_A: tuple[DominanceReport, ...]
    dominance_B: tuple[DominanceReport, ...]

    @property
    def found(self) -> bool:
        return self.strategy_A is not None

    @property
    def tie(self) -> bool:
        return len(self.equilibria) > 1


# --- step 4: conditional payoffs ----------------------------------------------


def effective_sellers(config: GameConfig, curtailment: float = 0.0) -> tuple[SellerSpec, SellerSpec]:
    """Sellers after DR curtailment shrinks their local storage feed."""
    if not config.variant.dr_scheduled or curtailment == 0.0:
        return config.seller_a, config.seller_b
    if not 0.0 <= curtailment < 1.0:
        raise DomainError(f"curtailment must lie in [0, 1), got {curtailment}")
    scale = 1.0 - curtailment

    def adjust(spec: SellerSpec, key: str) -> SellerSpec:
        if key not in config.dr_sellers:
            return spec
        return SellerSpec(
            name=spec.name,
            types=spec.types,
            n_houses=spec.n_houses,
            p0=spec.p0 * scale,
            p_g=spec.p_g * scale,
            p_max=spec.p_max,
        )

    return adjust(config.seller_a, "A"), adjust(config.seller_b, "B")


def make_bids(seller: SellerSpec, strategies: StrategySet) -> list[list[BidCurve]]:
    """``bids[type][strategy]`` for one seller."""
    return [
        [make_bid(seller.cost_model(m), seller.p0, seller.p_max, eps) for eps in strategies.epsilons]
        for m in range(len(seller.types))
    ]


def _trade_payoff(cost: AggregatorCostModel, p_g: float, t: float, phi: float, omega: float) -> float:
    delta = seller_payoff(cost, p_g, t, phi)
    return delta if validate_bargain(PayoffPair(delta, omega)) else 0.0


def conditional_payoffs(
    config: GameConfig, m: int, n: int, curtailment: float = 0.0
) -> ConditionalPayoffs:
    """Clear the market for every strategy pair of A type ``m`` and B type ``n``.

    A seller whose trade fails the bargaining check (non-positive payoff for
    either side) is recorded at the no-trade payoff 0.
    """
    seller_a, seller_b = effective_sellers(config, curtailment)
    bids_a = make_bids(seller_a, config.strategies)[m]
    bids_b = make_bids(seller_b, config.strategies)[n]
    cost_a, cost_b = seller_a.cost_model(m), seller_b.cost_model(n)
    buyer = config.buyer
    cost_c = buyer.cost_model()
    stackelberg = config.variant.market is MarketKind.STACKELBERG
    S = len(config.strategies)
    h_A = np.zeros((S, S))
    h_B = np.zeros((S, S))
    outcomes = []
    for i, j in itertools.product(range(S), range(S)):
        try:
            out = clear_two_sellers(bids_a[i], bids_b[j], buyer.demand)
            if stackelberg:
                out = apply_caps(out, config.caps)
            for label, q, bid in (("A", out.p_A, bids_a[i]), ("B", out.p_B, bids_b[j])):
                if q > bid.max_sale + 1e-9:
                    raise ClearingError(
                        f"seller {label} cleared {q:.6g} kW above its headroom {bid.max_sale:.6g} kW"
                    )
            omega = buyer_payoff(cost_c, buyer.p_g, out.p_A + out.p_B, out.phi_T)
            h_A[i, j] = _trade_payoff(cost_a, seller_a.p_g, out.p_A, out.phi_T, omega)
            h_B[i, j] = _trade_payoff(cost_b, seller_b.p_g, out.p_B, out.phi_T, omega)
        except (ClearingError, DomainError) as exc:
            raise type(exc)(f"types (m={m + 1}, n={n + 1}), strategies ({i + 1}, {j + 1}): {exc}") from exc
        outcomes.append(out)
    grid = tuple(tuple(outcomes[i * S : (i + 1) * S]) for i in range(S))
    return ConditionalPayoffs(h_A=h_A, h_B=h_B, outcomes=grid)


def all_conditional_payoffs(
    config: GameConfig, curtailment: float = 0.0
) -> tuple[np.ndarray, np.ndarray, dict[tuple[int, int], ConditionalPayoffs]]:
    """Stack tables into arrays indexed ``[m, n, i, j]``."""
    M, N = config.type_counts
    S = len(config.strategies)
    h_A = np.zeros((M, N, S, S))
    h_B = np.zeros((M, N, S, S))
    tables = {}
    for m, n in itertools.product(range(M), range(N)):
        cp = conditional_payoffs(config, m, n, curtailment)
        h_A[m, n], h_B[m, n] = cp.h_A, cp.h_B
        tables[m, n] = cp
    return h_A, h_B, tables


# --- step 5: expected payoffs --------------------------------------------------


def contingent_strategies(n_strategies: int, n_types: int) -> list[tuple[int, ...]]:
    """All type-contingent strategies, in the column order of ``EP``."""
    return list(itertools.product(range(n_strategies), repeat=n_types))


def column_index(strategy: tuple[int, ...], n_strategies: int) -> int:
    return int(np.ravel_multi_index(strategy, (n_strategies,) * len(strategy)))


def expected_payoffs(
    h_A: np.ndarray, h_B: np.ndarray, eta: bt.ConditionalTypeDistributions
) -> tuple[np.ndarray, np.ndarray]:
    """Expected payoff matrices ``EP_A[m]`` (S x S**N) and ``EP_B[n]`` (S x S**M).

    ``h_A[m, n, i, j]`` and ``h_B[m, n, i, j]`` are A's and B's payoffs when
    A (type m) plays i and B (type n) plays j.
    """
    h_A = np.asarray(h_A, dtype=float)
    h_B = np.asarray(h_B, dtype=float)
    if h_A.shape != h_B.shape or h_A.ndim != 4 or h_A.shape[2] != h_A.shape[3]:
        raise DomainError(f"payoff arrays must share shape (M, N, S, S); got {h_A.shape}, {h_B.shape}")
    M, N, S, _ = h_A.shape
    if eta.eta_A.shape != (M, N) or eta.eta_B.shape != (N, M):
        raise DomainError("belief dimensions do not match the payoff arrays")
    cols_B = contingent_strategies(S, N)
    cols_A = contingent_strategies(S, M)
    ep_A = np.zeros((M, S, len(cols_B)))
    ep_B = np.zeros((N, S, len(cols_A)))
    for m in range(M):
        for c, kappa in enumerate(cols_B):
            # B of type n plays kappa[n]
            ep_A[m, :, c] = sum(eta.eta_A[m, n] * h_A[m, n, :, kappa[n]] for n in range(N))
    for n in range(N):
        for c, kappa in enumerate(cols_A):
            ep_B[n, :, c] = sum(eta.eta_B[n, m] * h_B[m, n, kappa[m], :] for m in range(M))
    return ep_A, ep_B


# --- step 6: dominance and equilibrium -----------------------------------------


def find_dominant_row(ep: np.ndarray) -> DominanceReport:
    """Row that is at least as good as every other row in every column and
    strictly better than each of them somewhere, if one exists."""
    ep = np.asarray(ep, dtype=float)
    S = ep.shape[0]
    dominates = np.zeros((S, S), dtype=bool)
    for r, i in itertools.product(range(S), range(S)):
        if r != i:
            dominates[r, i] = bool(np.all(ep[r] >= ep[i]) and np.any(ep[r] > ep[i]))
    dominant = None
    for r in range(S):
        if all(dominates[r, i] for i in range(S) if i != r):
            dominant = r
            break
    return DominanceReport(dominant=dominant, dominates=dominates)


def _is_best(column: np.ndarray, choice: int) -> bool:
    best = column.max()
    return column[choice] >= best - _BR_TOL * max(1.0, abs(best))


def bayesian_nash(ep_A: np.ndarray, ep_B: np.ndarray) -> EquilibriumResult:
    """All pure type-contingent equilibria, lexicographically ordered.

    The first equilibrium found is reported as the primary one; if none
    exists the result has ``found == False``.
    """
    ep_A = np.asarray(ep_A, dtype=float)
    ep_B = np.asarray(ep_B, dtype=float)
    M, S, cols_b = ep_A.shape
    N, S_b, cols_a = ep_B.shape
    if S != S_b or cols_b != S**N or cols_a != S**M:
        raise DomainError(f"inconsistent expected payoff shapes {ep_A.shape} and {ep_B.shape}")

    # best-response tables: ok_A[m][c] = set of A rows optimal for type m at column c
    ok_A = [[{i for i in range(S) if _is_best(ep_A[m, :, c], i)} for c in range(cols_b)] for m in range(M)]
    ok_B = [[{j for j in range(S) if _is_best(ep_B[n, :, c], j)} for c in range(cols_a)] for n in range(N)]

    found = []
    for s_A in contingent_strategies(S, M):
        col_a = column_index(s_A, S)
        for s_B in contingent_strategies(S, N):
            col_b = column_index(s_B, S)
            if all(s_A[m] in ok_A[m][col_b] for m in range(M)) and all(
                s_B[n] in ok_B[n][col_a] for n in range(N)
            ):
                found.append((s_A, s_B))

    dom_A = tuple(find_dominant_row(ep_A[m]) for m in range(M))
    dom_B = tuple(find_dominant_row(ep_B[n]) for n in range(N))
    if not found:
        return EquilibriumResult(None, None, None, None, (), dom_A, dom_B)
    s_A, s_B = found[0]
    col_a, col_b = column_index(s_A, S), column_index(s_B, S)
    return EquilibriumResult(
        strategy_A=s_A,
        strategy_B=s_B,
        payoff_A=tuple(float(ep_A[m, s_A[m], col_b]) for m in range(M)),
        payoff_B=tuple(float(ep_B[n, s_B[n], col_a]) for n in range(N)),
        equilibria=tuple(found),
        dominance_A=dom_A,
        dominance_B=dom_B,
    )


# --- the whole pipeline -------------------------------------------------------


@dataclass(frozen=True)
class SchedulingSummary:
    p_exp: float
    welfare: wh.WHSchedule
    welfare_stats: wh.OnOffStats
    scheduled: wh.WHSchedule | None
    scheduled_stats: wh.OnOffStats | None
    curtailment: float


@dataclass(frozen=True)
class GameReport:
    config: GameConfig
    scheduling: SchedulingSummary
    scenario_probs: bt.ScenarioProbabilities
    pi: bt.JointTypeDistribution
    eta: bt.ConditionalTypeDistributions
    bids_A: list[list[BidCurve]]
    bids_B: list[list[BidCurve]]
    h_A: np.ndarray
    h_B: np.ndarray
    ep_A: np.ndarray
    ep_B: np.ndarray
    equilibrium: EquilibriumResult
    outcomes: dict[tuple[int, int], MarketOutcome] = field(default_factory=dict)
    ex_ante_A: float | None = None
    ex_ante_B: float | None = None
    demands: dict[str, float] = field(default_factory=dict)
    capped_cells: int = 0


def demand_arithmetic(houses: int, wh_kw: float, wh_share: float, gen_kw: float, curtail: float = 0.0) -> float:
    """Aggregate demand: heater load scaled up to the whole load, plus generation."""
    if houses <= 0 or wh_kw <= 0:
        raise DomainError("houses and heater power must be positive")
    if not 0 < wh_share <= 1:
        raise DomainError(f"heater share must lie in (0, 1], got {wh_share}")
    if not 0 <= curtail < 1:
        raise DomainError(f"curtailment must lie in [0, 1), got {curtail}")
    return (1.0 - curtail) * houses * wh_kw / wh_share + gen_kw


def load_profiles(config: GameConfig) -> tuple[wh.PriceProfile, wh.WaterDrawProfile]:
    if config.price_profile is None or config.draw_profile is None:
        raise ConfigError("price and draw profiles are required", "profiles")
    try:
        return wh.read_price_profile(config.price_profile), wh.read_draw_profile(config.draw_profile)
    except FileNotFoundError as exc:
        raise ConfigError(f"profile file not found: {exc.filename}", "profiles") from None
    except DomainError as exc:
        raise ConfigError(str(exc), "profiles") from None


def run_scheduler(
    config: GameConfig, prices: wh.PriceProfile, draws: wh.WaterDrawProfile
) -> SchedulingSummary:
    """Step 1 inputs: expensive-price frequency and heater on/off statistics."""
    p_exp = bt.price_expensive_prob(prices, config.threshold_fraction)
    try:
        welfare = wh.schedule_welfare(config.tank, draws)
        scheduled = None
        if config.variant.dr_scheduled:
            scheduled = wh.schedule_price_sensitive(config.tank, draws, prices)
    except wh.InfeasibleScheduleError as exc:
        raise ConfigError(f"tank calibration is infeasible: {exc}", "tank") from exc
    welfare_stats = wh.on_off_stats(welfare, prices, config.threshold_fraction)
    if scheduled is None:
        return SchedulingSummary(p_exp, welfare, welfare_stats, None, None, 0.0)
    return SchedulingSummary(
        p_exp,
        welfare,
        welfare_stats,
        scheduled,
        wh.on_off_stats(scheduled, prices, config.threshold_fraction),
        max(0.0, wh.curtailment_ratio(welfare, scheduled)),
    )


def play_game(
    config: GameConfig,
    profiles: tuple[wh.PriceProfile, wh.WaterDrawProfile] | None = None,
) -> GameReport:
    """Run every step from heater statistics to the equilibrium.

    ``profiles`` overrides the profile files named in the config.
    """
    prices, draws = profiles if profiles is not None else load_profiles(config)

    # 1. scenario probabilities from the heater schedule
    sched = run_scheduler(config, prices, draws)
    if config.variant.dr_scheduled:
        sp = bt.scenario_probs_conditional(sched.p_exp, sched.scheduled_stats)
    else:
        sp = bt.scenario_probs_independent(sched.p_exp, sched.welfare_stats)

    # 2. joint and conditional type distributions
    pi = bt.joint_type_distribution(sp, config.flags, config.psi_A, config.psi_B)
    if not np.any(pi.pi > 0):
        raise ConfigError("participation flags exclude every scenario; nobody trades", "flags")
    eta = bt.conditional_type_distributions(pi)

    # 3. bids per type and strategy
    seller_a, seller_b = effective_sellers(config, sched.curtailment)
    bids_A = make_bids(seller_a, config.strategies)
    bids_B = make_bids(seller_b, config.strategies)

    # 4-5. conditional and expected payoffs
    h_A, h_B, tables = all_conditional_payoffs(config, sched.curtailment)
    ep_A, ep_B = expected_payoffs(h_A, h_B, eta)

    # 6. equilibrium
    eq = bayesian_nash(ep_A, ep_B)

    outcomes = {}
    ex_A = ex_B = None
    if eq.found:
        for (m, n), cp in tables.items():
            outcomes[m, n] = cp.outcomes[eq.strategy_A[m]][eq.strategy_B[n]]
        marg_A, marg_B = bt.marginal_type_probs(pi)
        ex_A = float(np.dot(marg_A, eq.payoff_A))
        ex_B = float(np.dot(marg_B, eq.payoff_B))
    capped = sum(o.capped for cp in tables.values() for row in cp.outcomes for o in row)

    demands = {}
    for name, d in config.demands:
        curtail = sched.curtailment if config.variant.dr_scheduled and name in config.dr_sellers else 0.0
        demands[name] = demand_arithmetic(d.houses, d.wh_kw, d.wh_share, d.gen_kw, curtail)

    return GameReport(
        config=config,
        scheduling=sched,
        scenario_probs=sp,
        pi=pi,
        eta=eta,
        bids_A=bids_A,
        bids_B=bids_B,
        h_A=h_A,
        h_B=h_B,
        ep_A=ep_A,
        ep_B=ep_B,
        equilibrium=eq,
        outcomes=outcomes,
        ex_ante_A=ex_A,
        ex_ante_B=ex_B,
        demands=demands,
        capped_cells=capped,
    )
