"""Serialize a :class:`~dramarket.game_engine.GameReport` to CSV and text.

Every number is printed with 6 significant digits, CSV files use ``,`` as
separator, ``.`` as decimal point and LF line endings.  Indices of types,
strategies and expected-payoff columns are 1-based in all files.

Files produced by :func:`report_files`:

``scenario_probs.csv``   ``scenario,price,wh,probability``
``pi.csv``               ``a_type,b_type,pi``
``eta.csv``              ``player,own_type,opponent_type,probability``
``bids.csv``             ``seller,type,strategy,epsilon,lambda0,slope``
``h_A_m<m>_n<n>.csv``    A's conditional payoffs, rows A strategy, columns B strategy
``h_B_m<m>_n<n>.csv``    B's conditional payoffs, same layout
``ep_A_m<k>.csv``        ``strategy,k11,k12,...``; column ``k<j1><j2>..`` is B playing j_n as type n
``ep_B_n<k>.csv``        same layout against A's type-contingent strategies
``equilibrium.csv``      ``player,type,strategy,epsilon,label,expected_payoff``
``outcomes.csv``         cleared market at the equilibrium, one row per type pair
``scheduling.csv``       ``schedule,on_slots,p_on,p_on_given_exp,p_on_given_cheap``
``demands.csv``          ``aggregator,demand_kw``
``summary.txt``          plain-English summary
"""

from __future__ import annotations

import csv
import hashlib
import io
import itertools
from collections.abc import Iterable, Sequence
from pathlib import Path

import numpy as np

from dramarket.bayesian_types import Scenario
from dramarket.game_engine import GameReport, MarketKind, StrategySet, contingent_strategies


def fmt(x: float) -> str:
    """Six significant digits, without a negative zero."""
    s = f"{float(x):.6g}"
    return "0" if s == "-0" else s


def _cell(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return fmt(x)
    return str(x)


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(x) for x in row])
    return buf.getvalue()


def sha256_file(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def kappa_label(strategy: tuple[int, ...]) -> str:
    return "k" + "".join(str(j + 1) for j in strategy)


def _matrix_text(row_name: str, col_labels: Sequence[str], mat: np.ndarray) -> str:
    rows = ([i + 1, *mat[i]] for i in range(mat.shape[0]))
    return csv_text([row_name, *col_labels], rows)


def matrix_files(report: GameReport) -> dict[str, str]:
    """Conditional and expected payoff matrices, keyed by file name."""
    files = {}
    M, N, S, _ = report.h_A.shape
    cols = [f"b{j + 1}" for j in range(S)]
    for m, n in itertools.product(range(M), range(N)):
        files[f"h_A_m{m + 1}_n{n + 1}.csv"] = _matrix_text("a_strategy", cols, report.h_A[m, n])
        files[f"h_B_m{m + 1}_n{n + 1}.csv"] = _matrix_text("a_strategy", cols, report.h_B[m, n])
    kappa_B = [kappa_label(k) for k in contingent_strategies(S, N)]
    kappa_A = [kappa_label(k) for k in contingent_strategies(S, M)]
    for m in range(M):
        files[f"ep_A_m{m + 1}.csv"] = _matrix_text("strategy", kappa_B, report.ep_A[m])
    for n in range(N):
        files[f"ep_B_n{n + 1}.csv"] = _matrix_text("strategy", kappa_A, report.ep_B[n])
    return files


def strategy_labels(strategies: StrategySet, choice: Sequence[int]) -> str:
    return "(" + ", ".join(strategies.label(i) for i in choice) + ")"


def summary_text(report: GameReport) -> str:
    cfg = report.config
    eq = report.equilibrium
    sched = report.scheduling
    S = len(cfg.strategies)
    lines = [f"variant: {cfg.variant.name}"]
    lines.append(f"expensive-price share: {fmt(sched.p_exp)}")
    lines.append(f"welfare schedule: {sched.welfare.on_count} on-slots")
    if sched.scheduled is not None:
        n_exp = sched.p_exp * len(sched.scheduled)
        expensive = round(sched.scheduled_stats.p_on_given_exp * n_exp)
        cheap = sched.scheduled.on_count - expensive
        lines.append(
            f"price-sensitive schedule: {sched.scheduled.on_count} on-slots "
            f"({expensive} expensive, {cheap} cheap), curtailment {fmt(sched.curtailment)}"
        )
    lines.append("scenario probabilities: " + ", ".join(fmt(p) for p in report.scenario_probs.p))
    if eq.found:
        lines.append(
            f"equilibrium: A plays {strategy_labels(cfg.strategies, eq.strategy_A)}; "
            f"B plays {strategy_labels(cfg.strategies, eq.strategy_B)}"
        )
        lines.append(
            f"equilibrium columns: EP_A column {_col(eq.strategy_B, S)}, EP_B column {_col(eq.strategy_A, S)}"
        )
        lines.append("A expected payoff by type: " + ", ".join(fmt(p) for p in eq.payoff_A))
        lines.append("B expected payoff by type: " + ", ".join(fmt(p) for p in eq.payoff_B))
        lines.append(f"ex-ante expected payoff: A {fmt(report.ex_ante_A)}, B {fmt(report.ex_ante_B)}")
        if eq.tie:
            lines.append(f"{len(eq.equilibria)} equilibria found; reporting the lexicographically first")
    else:
        lines.append("equilibrium: no pure Bayesian Nash equilibrium")
    if cfg.variant.market is MarketKind.STACKELBERG:
        caps = cfg.caps
        total = report.h_A.size
        if caps.phi_max is not None:
            lines.append(f"price cap {fmt(caps.phi_max)} applied")
        if caps.p_max_A is not None:
            lines.append(f"quantity cap A {fmt(caps.p_max_A)} kW applied")
        if caps.p_max_B is not None:
            lines.append(f"quantity cap B {fmt(caps.p_max_B)} kW applied")
        lines.append(f"caps binding in {report.capped_cells} of {total} cleared cells")
    for name, kw in report.demands.items():
        lines.append(f"demand {name}: {fmt(kw)} kW")
    return "\n".join(lines) + "\n"


def _col(strategy: tuple[int, ...], S: int) -> int:
    return int(np.ravel_multi_index(strategy, (S,) * len(strategy))) + 1


def report_files(report: GameReport) -> dict[str, str]:
    """Every report artifact as text, keyed by file name."""
    cfg = report.config
    M, N, S, _ = report.h_A.shape
    files = {}
    files["scenario_probs.csv"] = csv_text(
        ["scenario", "price", "wh", "probability"],
        ([s.value + 1, s.price_state, s.wh_state, report.scenario_probs[s]] for s in Scenario),
    )
    files["pi.csv"] = csv_text(
        ["a_type", "b_type", "pi"],
        ([m + 1, n + 1, report.pi.pi[m, n]] for m, n in itertools.product(range(M), range(N))),
    )
    eta_rows = [("A", m + 1, n + 1, report.eta.eta_A[m, n]) for m in range(M) for n in range(N)]
    eta_rows += [("B", n + 1, m + 1, report.eta.eta_B[n, m]) for n in range(N) for m in range(M)]
    files["eta.csv"] = csv_text(["player", "own_type", "opponent_type", "probability"], eta_rows)

    bid_rows = []
    for name, bids in (("A", report.bids_A), ("B", report.bids_B)):
        for t, per_type in enumerate(bids):
            for i, bid in enumerate(per_type):
                bid_rows.append((name, t + 1, i + 1, cfg.strategies.epsilons[i], bid.lambda0, bid.slope_m))
    files["bids.csv"] = csv_text(["seller", "type", "strategy", "epsilon", "lambda0", "slope"], bid_rows)

    files.update(matrix_files(report))

    eq = report.equilibrium
    eq_rows = []
    if eq.found:
        for player, choice, pay in (("A", eq.strategy_A, eq.payoff_A), ("B", eq.strategy_B, eq.payoff_B)):
            for t, i in enumerate(choice):
                eq_rows.append(
                    (player, t + 1, i + 1, cfg.strategies.epsilons[i], cfg.strategies.label(i), pay[t])
                )
    files["equilibrium.csv"] = csv_text(
        ["player", "type", "strategy", "epsilon", "label", "expected_payoff"], eq_rows
    )
    files["outcomes.csv"] = csv_text(
        ["a_type", "b_type", "p_A", "p_B", "phi_T", "price_capped", "qty_capped_A", "qty_capped_B"],
        (
            (m + 1, n + 1, o.p_A, o.p_B, o.phi_T, o.price_capped, o.qty_capped_A, o.qty_capped_B)
            for (m, n), o in sorted(report.outcomes.items())
        ),
    )

    sched = report.scheduling
    sched_rows = [("welfare", sched.welfare.on_count, *_stat_cols(sched.welfare_stats))]
    if sched.scheduled is not None:
        sched_rows.append(("price_sensitive", sched.scheduled.on_count, *_stat_cols(sched.scheduled_stats)))
    files["scheduling.csv"] = csv_text(
        ["schedule", "on_slots", "p_on", "p_on_given_exp", "p_on_given_cheap"], sched_rows
    )
    files["demands.csv"] = csv_text(["aggregator", "demand_kw"], report.demands.items())
    files["summary.txt"] = summary_text(report)
    return files


def _stat_cols(stats) -> tuple[float, float, float]:
    return stats.p_on, stats.p_on_given_exp, stats.p_on_given_cheap


def write_files(directory: str | Path, files: dict[str, str]) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for name, text in files.items():
        with open(directory / name, "w", newline="\n", encoding="utf-8") as fh:
            fh.write(text)
