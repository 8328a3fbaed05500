"""Competition between demand-response aggregators selling stored battery energy.

The package is organised bottom-up:

* :mod:`dramarket.cost_model` - battery and aggregator cost curves, bids
* :mod:`dramarket.wh_scheduler` - dynamic-programming water-heater schedules
* :mod:`dramarket.bayesian_types` - scenarios, type priors and beliefs
* :mod:`dramarket.market_clearing` - two-seller clearing, payoffs, caps
* :mod:`dramarket.game_engine` - payoff matrices and Bayesian Nash search
* :mod:`dramarket.config` / :mod:`dramarket.cli` - configuration and CLI
"""

from dramarket.errors import (
    CalibrationError,
    ClearingError,
    ConfigError,
    DomainError,
    DRMarketError,
    InfeasibleScheduleError,
)

__version__ = "0.1.0"

__all__ = [
    "CalibrationError",
    "ClearingError",
    "ConfigError",
    "DomainError",
    "DRMarketError",
    "InfeasibleScheduleError",
    "__version__",
]
