"""YAML game configuration: loading, validation and serialization.

Schema (all sections required unless marked optional)::

    variant:
      market: non_cooperative | stackelberg
      dr_scheduled: bool
    profiles:            # paths relative to the config file
      price: PATH
      draws: PATH
    threshold_fraction: float        # optional, default 0.5
    tank: {temp_min, temp_max, heat_rate, loss_rate, draw_drop, initial_temp}
                                     # optional, defaults to the bundled tank
    strategies: [float, ...]         # optional, default [1.6, 2.0, 2.4]
    participation_flags: [0|1] * 4
    sellers:
      A: &seller
        n_houses: int
        p0: float                    # kW
        p_g: float                   # kW
        p_max: float                 # kW
        types: [{a: float, B: float}, ...]
        prior: [[float, ...]] * 4    # one type distribution per scenario
      B: *seller
    buyer: {name: str, n_houses: int, a: float, B: float, p_g: float, demand: float}
    caps: {phi_max: float|null, p_max_A: float|null, p_max_B: float|null}  # optional
    dr_sellers: [A|B, ...]           # optional, default [A]
    demands:                         # optional, report only
      NAME: {houses: int, wh_kw: float, wh_share: float, gen_kw: float}
"""

from __future__ import annotations

from collections.abc import Mapping
from pathlib import Path
from typing import Any

import yaml

from dramarket import bayesian_types as bt
from dramarket import wh_scheduler as wh
from dramarket.cost_model import CostParams
from dramarket.errors import ConfigError, DRMarketError
from dramarket.game_engine import (
    BuyerSpec,
    DemandInputs,
    GameConfig,
    MarketKind,
    SellerSpec,
    StrategySet,
    Variant,
)
from dramarket.market_clearing import RegulatoryCaps

_MISSING = object()


def _get(d: Mapping, key: str, path: str, default: Any = _MISSING) -> Any:
    if not isinstance(d, Mapping):
        raise ConfigError("expected a mapping", path or None)
    if key not in d or d[key] is None and default is not _MISSING:
        if default is _MISSING:
            raise ConfigError("missing required field", _join(path, key))
        return default
    return d[key]


def _join(path: str, key: str | int) -> str:
    if isinstance(key, int):
        return f"{path}[{key}]"
    return f"{path}.{key}" if path else key


def _num(value: Any, path: str, *, integer: bool = False) -> float | int:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"expected a number, got {value!r}", path)
    if integer:
        if int(value) != value:
            raise ConfigError(f"expected an integer, got {value!r}", path)
        return int(value)
    return float(value)


def _num_list(value: Any, path: str) -> list[float]:
    if not isinstance(value, list):
        raise ConfigError("expected a list", path)
    return [_num(v, _join(path, i)) for i, v in enumerate(value)]


def _build(factory, path: str, **kwargs):
    try:
        return factory(**kwargs)
    except ConfigError:
        raise
    except (DRMarketError, ValueError, TypeError) as exc:
        raise ConfigError(str(exc), path) from None


def _seller(name: str, raw: Any) -> tuple[SellerSpec, bt.TypePrior]:
    path = f"sellers.{name}"
    types_raw = _get(raw, "types", path)
    if not isinstance(types_raw, list) or not types_raw:
        raise ConfigError("expected a non-empty list", f"{path}.types")
    types = []
    for i, t in enumerate(types_raw):
        tp = _join(f"{path}.types", i)
        types.append(
            _build(CostParams, tp, a=_num(_get(t, "a", tp), f"{tp}.a"), B=_num(_get(t, "B", tp), f"{tp}.B"))
        )
    spec = _build(
        SellerSpec,
        path,
        name=name,
        types=tuple(types),
        n_houses=_num(_get(raw, "n_houses", path), f"{path}.n_houses", integer=True),
        p0=_num(_get(raw, "p0", path), f"{path}.p0"),
        p_g=_num(_get(raw, "p_g", path), f"{path}.p_g"),
        p_max=_num(_get(raw, "p_max", path), f"{path}.p_max"),
    )
    prior_raw = _get(raw, "prior", path)
    if not isinstance(prior_raw, list):
        raise ConfigError("expected four per-scenario lists", f"{path}.prior")
    rows = tuple(tuple(_num_list(r, _join(f"{path}.prior", i))) for i, r in enumerate(prior_raw))
    prior = _build(bt.TypePrior, f"{path}.prior", per_scenario=rows)
    return spec, prior


def config_from_dict(raw: Any, base_dir: Path) -> GameConfig:
    """Validate a parsed YAML document; relative paths resolve against ``base_dir``."""
    if not isinstance(raw, Mapping):
        raise ConfigError("top level must be a mapping")

    v = _get(raw, "variant", "")
    market = _get(v, "market", "variant")
    try:
        market = MarketKind(market)
    except ValueError:
        raise ConfigError(f"unknown market {market!r}", "variant.market") from None
    dr = _get(v, "dr_scheduled", "variant", False)
    if not isinstance(dr, bool):
        raise ConfigError("expected true or false", "variant.dr_scheduled")

    profiles = _get(raw, "profiles", "")
    paths = {}
    for key in ("price", "draws"):
        p = _get(profiles, key, "profiles")
        if not isinstance(p, str):
            raise ConfigError("expected a path", f"profiles.{key}")
        p = Path(p)
        paths[key] = (p if p.is_absolute() else base_dir / p).resolve()
        if not paths[key].is_file():
            raise ConfigError(f"profile file not found: {paths[key]}", f"profiles.{key}")

    tank_raw = raw.get("tank")
    if tank_raw is None:
        from dramarket.casestudy import BUNDLED_TANK

        tank = BUNDLED_TANK
    else:
        fields = ("temp_min", "temp_max", "heat_rate", "loss_rate", "draw_drop", "initial_temp")
        tank = _build(
            wh.TankModel, "tank", **{f: _num(_get(tank_raw, f, "tank"), f"tank.{f}") for f in fields}
        )

    strategies = _build(
        StrategySet,
        "strategies",
        epsilons=tuple(_num_list(raw.get("strategies", [1.6, 2.0, 2.4]), "strategies")),
    )
    flags_raw = _get(raw, "participation_flags", "")
    if not isinstance(flags_raw, list):
        raise ConfigError("expected four 0/1 values", "participation_flags")
    flags = _build(bt.ParticipationFlags, "participation_flags", g=tuple(flags_raw))

    sellers = _get(raw, "sellers", "")
    seller_a, psi_A = _seller("A", _get(sellers, "A", "sellers"))
    seller_b, psi_B = _seller("B", _get(sellers, "B", "sellers"))

    b = _get(raw, "buyer", "")
    buyer_params = _build(
        CostParams, "buyer", a=_num(_get(b, "a", "buyer"), "buyer.a"), B=_num(_get(b, "B", "buyer"), "buyer.B")
    )
    buyer = _build(
        BuyerSpec,
        "buyer",
        name=str(_get(b, "name", "buyer", "C")),
        params=buyer_params,
        n_houses=_num(_get(b, "n_houses", "buyer"), "buyer.n_houses", integer=True),
        p_g=_num(_get(b, "p_g", "buyer"), "buyer.p_g"),
        demand=_num(_get(b, "demand", "buyer"), "buyer.demand"),
    )

    caps_raw = raw.get("caps") or {}
    caps = _build(
        RegulatoryCaps,
        "caps",
        **{
            k: None if caps_raw.get(k) is None else _num(caps_raw[k], f"caps.{k}")
            for k in ("phi_max", "p_max_A", "p_max_B")
        },
    )

    dr_sellers = raw.get("dr_sellers", ["A"])
    if not isinstance(dr_sellers, list):
        raise ConfigError("expected a list of seller names", "dr_sellers")

    demands = []
    for name, d in (raw.get("demands") or {}).items():
        dp = f"demands.{name}"
        demands.append(
            (
                str(name),
                DemandInputs(
                    houses=_num(_get(d, "houses", dp), f"{dp}.houses", integer=True),
                    wh_kw=_num(_get(d, "wh_kw", dp), f"{dp}.wh_kw"),
                    wh_share=_num(_get(d, "wh_share", dp), f"{dp}.wh_share"),
                    gen_kw=_num(_get(d, "gen_kw", dp), f"{dp}.gen_kw"),
                ),
            )
        )

    threshold = _num(raw.get("threshold_fraction", 0.5), "threshold_fraction")
    return _build(
        GameConfig,
        "",
        variant=Variant(market, dr),
        seller_a=seller_a,
        seller_b=seller_b,
        buyer=buyer,
        psi_A=psi_A,
        psi_B=psi_B,
        flags=flags,
        strategies=strategies,
        caps=caps,
        price_profile=paths["price"],
        draw_profile=paths["draws"],
        tank=tank,
        threshold_fraction=threshold,
        dr_sellers=tuple(str(s) for s in dr_sellers),
        demands=tuple(demands),
    )


def load_config(path: str | Path) -> GameConfig:
    """Read and validate a YAML configuration file.

    Raises:
        ConfigError: on a missing file, YAML syntax error or schema violation.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return loads_config(text, path.parent)


def loads_config(text: str, base_dir: str | Path = ".") -> GameConfig:
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"YAML parse error: {exc}") from None
    return config_from_dict(raw, Path(base_dir).resolve())


def config_to_dict(config: GameConfig) -> dict:
    def seller(spec: SellerSpec, prior: bt.TypePrior) -> dict:
        return {
            "n_houses": spec.n_houses,
            "p0": spec.p0,
            "p_g": spec.p_g,
            "p_max": spec.p_max,
            "types": [{"a": t.a, "B": t.B} for t in spec.types],
            "prior": [list(r) for r in prior.per_scenario],
        }

    t = config.tank
    return {
        "variant": {"market": config.variant.market.value, "dr_scheduled": config.variant.dr_scheduled},
        "profiles": {"price": str(config.price_profile), "draws": str(config.draw_profile)},
        "threshold_fraction": config.threshold_fraction,
        "tank": {
            "temp_min": t.temp_min,
            "temp_max": t.temp_max,
            "heat_rate": t.heat_rate,
            "loss_rate": t.loss_rate,
            "draw_drop": t.draw_drop,
            "initial_temp": t.initial_temp,
        },
        "strategies": list(config.strategies.epsilons),
        "participation_flags": list(config.flags.g),
        "sellers": {
            "A": seller(config.seller_a, config.psi_A),
            "B": seller(config.seller_b, config.psi_B),
        },
        "buyer": {
            "name": config.buyer.name,
            "n_houses": config.buyer.n_houses,
            "a": config.buyer.params.a,
            "B": config.buyer.params.B,
            "p_g": config.buyer.p_g,
            "demand": config.buyer.demand,
        },
        "caps": {
            "phi_max": config.caps.phi_max,
            "p_max_A": config.caps.p_max_A,
            "p_max_B": config.caps.p_max_B,
        },
        "dr_sellers": list(config.dr_sellers),
        "demands": {
            name: {"houses": d.houses, "wh_kw": d.wh_kw, "wh_share": d.wh_share, "gen_kw": d.gen_kw}
            for name, d in config.demands
        },
    }


def serialize_config(config: GameConfig) -> str:
    """YAML text that :func:`loads_config` maps back to an equal config."""
    return yaml.safe_dump(config_to_dict(config), sort_keys=False)
