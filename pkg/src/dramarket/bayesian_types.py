"""Scenarios, type priors and the players' beliefs about each other's type.

An aggregator's situation in a slot is one of four scenarios combining the
price level (expensive or cheap) with the water-heater state (off or on).
Scenario probabilities weight per-scenario type priors into a joint type
distribution ``pi[m, n]`` (A has type ``m``, B has type ``n``), from which
each player's conditional belief about the opponent's type follows.
"""

from __future__ import annotations

import enum
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from dramarket.errors import DomainError
from dramarket.wh_scheduler import OnOffStats, PriceProfile

_SUM_TOL = 1e-9


class Scenario(enum.IntEnum):
    EXP_OFF = 0
    EXP_ON = 1
    CHEAP_OFF = 2
    CHEAP_ON = 3

    @property
    def price_state(self) -> str:
        return "expensive" if self in (Scenario.EXP_OFF, Scenario.EXP_ON) else "cheap"

    @property
    def wh_state(self) -> str:
        return "on" if self in (Scenario.EXP_ON, Scenario.CHEAP_ON) else "off"


@dataclass(frozen=True)
class ScenarioProbabilities:
    p: tuple[float, float, float, float]

    def __post_init__(self) -> None:
        p = tuple(float(x) for x in self.p)
        if len(p) != 4:
            raise DomainError(f"need 4 scenario probabilities, got {len(p)}")
        if any(not 0.0 <= x <= 1.0 for x in p):
            raise DomainError(f"scenario probabilities must lie in [0, 1]: {p}")
        if abs(sum(p) - 1.0) > _SUM_TOL:
            raise DomainError(f"scenario probabilities sum to {sum(p)}, not 1")
        object.__setattr__(self, "p", p)

    def __getitem__(self, scenario: int) -> float:
        return self.p[scenario]


@dataclass(frozen=True)
class ParticipationFlags:
    """Whether sellers offer energy in each scenario (1) or not (0)."""

    g: tuple[int, int, int, int]

    def __post_init__(self) -> None:
        g = tuple(self.g)
        if len(g) != 4 or any(x not in (0, 1) for x in g):
            raise DomainError(f"participation flags must be four 0/1 values, got {self.g}")
        object.__setattr__(self, "g", tuple(int(x) for x in g))


# preset matching the published joint probabilities: only scenario 1 counts
CASE_STUDY_FLAGS = ParticipationFlags((1, 0, 0, 0))
# preset following the verbal description: all but (expensive, on)
DESCRIBED_FLAGS = ParticipationFlags((1, 0, 1, 1))


@dataclass(frozen=True)
class TypePrior:
    """One probability vector over a player's types for each scenario."""

    per_scenario: tuple[tuple[float, ...], ...]

    def __post_init__(self) -> None:
        rows = tuple(tuple(float(x) for x in row) for row in self.per_scenario)
        if len(rows) != 4:
            raise DomainError(f"type prior needs 4 scenario vectors, got {len(rows)}")
        width = len(rows[0])
        if width == 0 or any(len(r) != width for r in rows):
            raise DomainError("type prior vectors must share a positive length")
        for f, row in enumerate(rows):
            if any(not 0.0 <= x <= 1.0 for x in row):
                raise DomainError(f"scenario {f + 1} prior has entries outside [0, 1]")
            if abs(sum(row) - 1.0) > _SUM_TOL:
                raise DomainError(f"scenario {f + 1} prior sums to {sum(row)}, not 1")
        object.__setattr__(self, "per_scenario", rows)

    @property
    def n_types(self) -> int:
        return len(self.per_scenario[0])

    def as_array(self) -> np.ndarray:
        return np.array(self.per_scenario)


@dataclass(frozen=True)
class JointTypeDistribution:
    """Unnormalized joint weight of (A type, B type) pairs."""

    pi: np.ndarray

    def __post_init__(self) -> None:
        pi = np.array(self.pi, dtype=float)
        if pi.ndim != 2 or 0 in pi.shape:
            raise DomainError("pi must be a non-empty matrix")
        if np.any(pi < 0):
            raise DomainError("pi entries must be non-negative")
        pi.setflags(write=False)
        object.__setattr__(self, "pi", pi)

    @property
    def shape(self) -> tuple[int, int]:
        return self.pi.shape


@dataclass(frozen=True)
class ConditionalTypeDistributions:
    """``eta_A[m]`` is A's belief over B's types when A is of type ``m``."""

    eta_A: np.ndarray
    eta_B: np.ndarray


def price_expensive_prob(prices: PriceProfile, threshold_fraction: float = 0.5) -> float:
    return float(prices.expensive_mask(threshold_fraction).mean())


def scenario_probs_independent(p_exp: float, stats: OnOffStats) -> ScenarioProbabilities:
    """Scenario probabilities when heater state does not depend on price."""
    _check_prob(p_exp)
    p_cheap = 1.0 - p_exp
    return ScenarioProbabilities(
        (
            p_exp * stats.p_off,
            p_exp * stats.p_on,
            p_cheap * stats.p_off,
            p_cheap * stats.p_on,
        )
    )


def scenario_probs_conditional(p_exp: float, stats: OnOffStats) -> ScenarioProbabilities:
    """Scenario probabilities when the heater schedule reacts to price."""
    _check_prob(p_exp)
    p_cheap = 1.0 - p_exp
    return ScenarioProbabilities(
        (
            p_exp * stats.p_off_given_exp,
            p_exp * stats.p_on_given_exp,
            p_cheap * stats.p_off_given_cheap,
            p_cheap * stats.p_on_given_cheap,
        )
    )


def _check_prob(p: float) -> None:
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"probability must lie in [0, 1], got {p}")


def joint_type_distribution(
    sp: ScenarioProbabilities,
    flags: ParticipationFlags,
    psi_A: TypePrior,
    psi_B: TypePrior,
) -> JointTypeDistribution:
    """``pi[m, n] = sum_f P(f) * g(f) * psi_A[f][m] * psi_B[f][n]``."""
    weights = np.asarray(sp.p) * np.asarray(flags.g)
    pi = np.einsum("f,fm,fn->mn", weights, psi_A.as_array(), psi_B.as_array())
    return JointTypeDistribution(pi)


def conditional_type_distributions(pi: JointTypeDistribution) -> ConditionalTypeDistributions:
    """Row- and column-normalize ``pi`` into each player's beliefs.

    Raises:
        DomainError: if some type never occurs (zero row or column), naming it.
    """
    p = pi.pi
    rows = p.sum(axis=1)
    cols = p.sum(axis=0)
    for m, s in enumerate(rows):
        if s <= 0:
            raise DomainError(f"A type {m + 1} has zero probability; beliefs undefined")
    for n, s in enumerate(cols):
        if s <= 0:
            raise DomainError(f"B type {n + 1} has zero probability; beliefs undefined")
    return ConditionalTypeDistributions(eta_A=p / rows[:, None], eta_B=(p / cols[None, :]).T)


def marginal_type_probs(pi: JointTypeDistribution) -> tuple[np.ndarray, np.ndarray]:
    """Normalized marginal type probabilities of A and B."""
    total = pi.pi.sum()
    if total <= 0:
        raise DomainError("pi is identically zero; no market participation")
    return pi.pi.sum(axis=1) / total, pi.pi.sum(axis=0) / total


def type_prior_from_rows(rows: Sequence[Sequence[float]]) -> TypePrior:
    return TypePrior(tuple(tuple(r) for r in rows))
