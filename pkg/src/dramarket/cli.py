"""Command-line entry points.

Commands:

* ``run``       full game, writes every report artifact and ``summary.txt``
* ``matrices``  only the conditional and expected payoff matrices
* ``schedule``  standalone water-heater schedule (``schedule.csv``, ``stats.csv``)
* ``clear``     one market clearing for chosen types and strategies

Every command writes ``manifest.json`` with SHA-256 digests of the config,
the profiles and the emitted files.  Nothing is written unless the command
succeeds.

Exit codes: 0 success, 1 invalid input or configuration, 2 runtime failure
(infeasible schedule, singular clearing, output I/O).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from collections.abc import Sequence
from pathlib import Path

from dramarket import __version__
from dramarket import wh_scheduler as wh
from dramarket.casestudy import BUNDLED_TANK, CONFIG_PATH
from dramarket.config import load_config
from dramarket.errors import ClearingError, ConfigError, DRMarketError, InfeasibleScheduleError
from dramarket.game_engine import (
    GameConfig,
    MarketKind,
    Variant,
    effective_sellers,
    load_profiles,
    make_bids,
    play_game,
    run_scheduler,
)
from dramarket.market_clearing import apply_caps, buyer_payoff, clear_two_sellers, seller_payoff
from dramarket.report import csv_text, matrix_files, report_files, sha256_file, sha256_text, summary_text

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_RUNTIME = 2

_VARIANTS = {"non-coop": MarketKind.NON_COOPERATIVE, "stackelberg": MarketKind.STACKELBERG}


class _Parser(argparse.ArgumentParser):
    # usage errors are invalid input, not runtime failures
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _game_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, default=CONFIG_PATH, help="YAML config (default: bundled case study)")
    p.add_argument("--variant", choices=sorted(_VARIANTS), help="market variant (default: from config)")
    p.add_argument(
        "--dr",
        action=argparse.BooleanOptionalAction,
        default=None,
        help="price-sensitive heater scheduling (default: from config)",
    )
    p.add_argument("--price-cap", type=float, help="transaction price cap for the stackelberg variant")
    p.add_argument("--out", type=Path, required=True, help="output directory")
    p.add_argument("--seed", type=int, help="accepted for compatibility; the pipeline is deterministic")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dramarket", description="Bayesian game between demand-response aggregators.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("run", help="play the game and write the full report")
    _game_args(p)
    p = sub.add_parser("matrices", help="write only the H and EP matrices")
    _game_args(p)

    p = sub.add_parser("clear", help="clear the market once")
    _game_args(p)
    for who in ("a", "b"):
        p.add_argument(f"--{who}-type", type=int, default=1, help=f"seller {who.upper()} type, 1-based")
        p.add_argument(f"--{who}-strategy", type=int, default=2, help=f"seller {who.upper()} strategy, 1-based")

    p = sub.add_parser("schedule", help="schedule one water heater")
    p.add_argument("--mode", choices=("welfare", "price"), default="welfare")
    p.add_argument("--config", type=Path, default=None, help="take tank and profiles from this config")
    p.add_argument("--prices", type=Path, help="price profile CSV (overrides the config)")
    p.add_argument("--draws", type=Path, help="water-draw profile CSV (overrides the config)")
    p.add_argument("--threshold", type=float, default=None, help="expensive-price threshold fraction")
    p.add_argument("--out", type=Path, required=True, help="output directory")
    p.add_argument("--seed", type=int, help="accepted for compatibility; the pipeline is deterministic")
    return parser


def _apply_overrides(config: GameConfig, args: argparse.Namespace) -> GameConfig:
    market = _VARIANTS[args.variant] if args.variant else config.variant.market
    dr = config.variant.dr_scheduled if args.dr is None else args.dr
    caps = config.caps
    if args.price_cap is not None:
        if market is not MarketKind.STACKELBERG:
            raise ConfigError("a price cap only applies to --variant stackelberg", "--price-cap")
        try:
            caps = dataclasses.replace(caps, phi_max=args.price_cap)
        except ValueError as exc:
            raise ConfigError(str(exc), "--price-cap") from None
    return dataclasses.replace(config, variant=Variant(market, dr), caps=caps)


def _profile_digests(config: GameConfig) -> dict[str, dict[str, str]]:
    out = {}
    for key, path in (("price", config.price_profile), ("draws", config.draw_profile)):
        if path is None:
            continue
        try:
            out[key] = {"path": str(path), "sha256": sha256_file(path)}
        except OSError as exc:
            raise ConfigError(f"cannot read profile {path}: {exc.strerror}", f"profiles.{key}") from None
    return out


def _manifest(command: str, args: argparse.Namespace, variant: str | None, inputs: dict, files: dict) -> str:
    body = {
        "command": command,
        "config": str(args.config) if getattr(args, "config", None) else None,
        "variant": variant,
        "output_dir": str(args.out),
        "inputs": inputs,
        "files": {name: sha256_text(text) for name, text in sorted(files.items())},
        "version": __version__,
    }
    return json.dumps(body, indent=2, sort_keys=True) + "\n"


def _load(args: argparse.Namespace) -> tuple[GameConfig, dict]:
    config = _apply_overrides(load_config(args.config), args)
    # digests are taken before any computation
    inputs = {"config_sha256": sha256_file(args.config), "profiles": _profile_digests(config)}
    return config, inputs


def cmd_run(args: argparse.Namespace) -> dict[str, str]:
    config, inputs = _load(args)
    report = play_game(config)
    files = report_files(report)
    sys.stdout.write(summary_text(report))
    files["manifest.json"] = _manifest("run", args, config.variant.name, inputs, files)
    return files


def cmd_matrices(args: argparse.Namespace) -> dict[str, str]:
    config, inputs = _load(args)
    files = matrix_files(play_game(config))
    files["manifest.json"] = _manifest("matrices", args, config.variant.name, inputs, files)
    return files


def cmd_clear(args: argparse.Namespace) -> dict[str, str]:
    config, inputs = _load(args)
    M, N = config.type_counts
    S = len(config.strategies)
    m, n, i, j = args.a_type - 1, args.b_type - 1, args.a_strategy - 1, args.b_strategy - 1
    for flag, idx, bound in (("--a-type", m, M), ("--b-type", n, N), ("--a-strategy", i, S), ("--b-strategy", j, S)):
        if not 0 <= idx < bound:
            raise ConfigError(f"must lie in 1..{bound}, got {idx + 1}", flag)
    curtailment = 0.0
    if config.variant.dr_scheduled:
        curtailment = run_scheduler(config, *load_profiles(config)).curtailment
    seller_a, seller_b = effective_sellers(config, curtailment)
    bid_a = make_bids(seller_a, config.strategies)[m][i]
    bid_b = make_bids(seller_b, config.strategies)[n][j]
    out = clear_two_sellers(bid_a, bid_b, config.buyer.demand)
    if config.variant.market is MarketKind.STACKELBERG:
        out = apply_caps(out, config.caps)
    buyer = config.buyer
    delta_A = seller_payoff(seller_a.cost_model(m), seller_a.p_g, out.p_A, out.phi_T)
    delta_B = seller_payoff(seller_b.cost_model(n), seller_b.p_g, out.p_B, out.phi_T)
    omega = buyer_payoff(buyer.cost_model(), buyer.p_g, out.p_A + out.p_B, out.phi_T)
    header = ["p_A", "p_B", "phi_T", "price_capped", "qty_capped_A", "qty_capped_B", "payoff_A", "payoff_B", "payoff_C"]
    row = [out.p_A, out.p_B, out.phi_T, out.price_capped, out.qty_capped_A, out.qty_capped_B, delta_A, delta_B, omega]
    files = {"clearing.csv": csv_text(header, [row])}
    sys.stdout.write(files["clearing.csv"])
    files["manifest.json"] = _manifest("clear", args, config.variant.name, inputs, files)
    return files


def cmd_schedule(args: argparse.Namespace) -> dict[str, str]:
    tank, price_path, draw_path, threshold = BUNDLED_TANK, None, None, 0.5
    inputs: dict = {}
    if args.config is not None:
        config = load_config(args.config)
        inputs["config_sha256"] = sha256_file(args.config)
        tank, price_path, draw_path = config.tank, config.price_profile, config.draw_profile
        threshold = config.threshold_fraction
    elif args.prices is None or args.draws is None:
        from dramarket.casestudy import DRAW_PATH, PRICE_PATH

        price_path, draw_path = PRICE_PATH, DRAW_PATH
    price_path = args.prices or price_path
    draw_path = args.draws or draw_path
    if args.threshold is not None:
        threshold = args.threshold
    if not 0 < threshold < 1:
        raise ConfigError("must lie in (0, 1)", "--threshold")

    profiles = {}
    for key, path in (("price", price_path), ("draws", draw_path)):
        try:
            profiles[key] = {"path": str(path), "sha256": sha256_file(path)}
        except OSError as exc:
            raise ConfigError(f"cannot read {path}: {exc.strerror}", f"profiles.{key}") from None
    inputs["profiles"] = profiles
    try:
        prices, draws = wh.read_price_profile(price_path), wh.read_draw_profile(draw_path)
    except DRMarketError as exc:
        raise ConfigError(str(exc), "profiles") from None

    if args.mode == "welfare":
        sched = wh.schedule_welfare(tank, draws)
    else:
        sched = wh.schedule_price_sensitive(tank, draws, prices)
    stats = wh.on_off_stats(sched, prices, threshold)
    files = {
        "schedule.csv": csv_text(["slot", "on"], ((t, int(x)) for t, x in enumerate(sched.on))),
        "stats.csv": csv_text(
            ["on_slots", *(f.name for f in dataclasses.fields(stats))],
            [[sched.on_count, *dataclasses.astuple(stats)]],
        ),
    }
    sys.stdout.write(f"{args.mode} schedule: {sched.on_count} on-slots\n")
    files["manifest.json"] = _manifest("schedule", args, args.mode, inputs, files)
    return files


_COMMANDS = {"run": cmd_run, "matrices": cmd_matrices, "clear": cmd_clear, "schedule": cmd_schedule}


def exit_code_for(exc: BaseException) -> int:
    """Map an error to 1 (invalid input) or 2 (runtime failure)."""
    cause: BaseException | None = exc
    while cause is not None:
        if isinstance(cause, (InfeasibleScheduleError, ClearingError)):
            return EXIT_RUNTIME
        cause = cause.__cause__
    if isinstance(exc, ValueError):
        return EXIT_INVALID
    return EXIT_RUNTIME


def _describe(exc: BaseException) -> str:
    cause: BaseException | None = exc
    while cause is not None:
        if isinstance(cause, InfeasibleScheduleError):
            return f"{exc} (first infeasible slot {cause.slot})"
        cause = cause.__cause__
    return str(exc)


def write_outputs(out: Path, files: dict[str, str]) -> None:
    """Write all files or, on failure, remove the ones already written."""
    created_dir = not out.exists()
    written = []
    try:
        out.mkdir(parents=True, exist_ok=True)
        for name, text in files.items():
            path = out / name
            with open(path, "w", newline="\n", encoding="utf-8") as fh:
                written.append(path)
                fh.write(text)
    except OSError:
        for path in written:
            path.unlink(missing_ok=True)
        if created_dir and out.is_dir() and not any(out.iterdir()):
            out.rmdir()
        raise


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        files = _COMMANDS[args.command](args)
        write_outputs(args.out, files)
    except (DRMarketError, OSError) as exc:
        print(f"dramarket: error: {_describe(exc)}", file=sys.stderr)
        return exit_code_for(exc)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
