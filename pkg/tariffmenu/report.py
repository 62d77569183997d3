"""Text and JSON reports for solver results and regime comparisons."""

import json
import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Dict, List, Optional, Union

try:
    from terminaltables import AsciiTable
except ImportError:  # pragma: no cover - fallback when dependency missing
    class AsciiTable:
        def __init__(self, data, title=None):
            self.title = title
            self.table_data = data
            self.justify_columns = {}

        @property
        def table(self):
            lines = [" | ".join(map(str, row)) for row in self.table_data]
            if self.title:
                lines.insert(0, str(self.title))
            return "\n".join(lines)

try:
    from termcolor import colored
except ImportError:  # pragma: no cover - fallback to no-op
    def colored(text, *_args, **_kwargs):
        return text

from tariffmenu.config import SolverLimits
from tariffmenu.errors import GuardError
from tariffmenu.exact import (
    SolveResult,
    solve_exact,
    solve_mandatory,
    solve_upfront_only,
    solve_usage_only,
)
from tariffmenu.instance_io import menu_to_dict
from tariffmenu.instances import compute_hmu
from tariffmenu.model import (
    EXCLUDE,
    OPT_OUT,
    DirectMenu,
    IndirectMenu,
    Instance,
    MenuDiagnostics,
    UsagePrice,
)

logger = logging.getLogger(__name__)

DECIMAL_PLACES = 6


def format_rational(value: Fraction) -> str:
    return str(value)


def format_decimal(value: Fraction, places: int = DECIMAL_PLACES) -> str:
    """Exact decimal rendering, rounded half-even."""
    scaled = round(Fraction(value) * 10 ** places)
    sign = "-" if scaled < 0 else ""
    whole, rest = divmod(abs(scaled), 10 ** places)
    if places == 0:
        return f"{sign}{whole}"
    return f"{sign}{whole}.{rest:0{places}d}"


def format_usage(value: UsagePrice) -> str:
    return EXCLUDE.value if value is EXCLUDE else format_rational(value)


def format_amount(value: Fraction) -> str:
    return f"{format_rational(value)} ({format_decimal(value)})"


@dataclass(frozen=True)
class RegimeComparison:
    full: SolveResult
    upfront: SolveResult
    usage: Optional[SolveResult]
    mandatory: SolveResult
    hmu: Fraction

    @property
    def ratios(self) -> Dict[str, Optional[Fraction]]:
        """Gap ratios; None when the denominator is zero or was not computed."""

        def ratio(top: Fraction, bottom: Optional[SolveResult]) -> Optional[Fraction]:
            if bottom is None or bottom.profit == 0:
                return None
            return top / bottom.profit

        usage_profit = self.usage.profit if self.usage is not None else None
        return {
            "R/R_upfront": ratio(self.full.profit, self.upfront),
            "R/R_usage": ratio(self.full.profit, self.usage),
            "R/R_mandatory": ratio(self.full.profit, self.mandatory),
            "R_usage/R_upfront": None if usage_profit is None else ratio(usage_profit, self.upfront),
        }

    @property
    def sandwich_holds(self) -> bool:
        """R_upfront = R_mandatory <= R <= H_mu * R_mandatory; only R >= 0 when R_mandatory is 0."""
        full, mandatory = self.full.profit, self.mandatory.profit
        if self.upfront.profit != mandatory or full < mandatory:
            return False
        if mandatory == 0:
            return full >= 0
        return full <= self.hmu * mandatory

    @property
    def restrictions_hold(self) -> bool:
        usage_ok = self.usage is None or self.usage.profit <= self.full.profit
        return usage_ok and self.upfront.profit <= self.full.profit


def compare_regimes(
    inst: Instance, limits: Optional[SolverLimits] = None, workers: int = 1
) -> RegimeComparison:
    """Solve all four regimes; R_usage is skipped when its own size guard trips."""
    limits = limits or SolverLimits()
    full = solve_exact(inst, limits, workers=workers)
    upfront = solve_upfront_only(inst, limits, workers)
    try:
        usage: Optional[SolveResult] = solve_usage_only(inst, limits, workers)
    except GuardError as exc:
        logger.warning("skipping R_usage: %s", exc)
        usage = None
    mandatory = solve_mandatory(inst, limits, workers)
    return RegimeComparison(full, upfront, usage, mandatory, compute_hmu(inst.mu))


def menu_rows(menu: Union[DirectMenu, IndirectMenu]) -> List[List[str]]:
    label = "Type" if isinstance(menu, DirectMenu) else "Contract"
    rows = [[label, "Action", "Upfront w", "Usage x"]]
    for k, contract in enumerate(menu):
        action = "opt-out" if contract.is_opt_out else str(contract.action)
        usage = ", ".join(format_usage(x) for x in contract.usage)
        rows.append([str(k), action, format_rational(contract.upfront), f"({usage})"])
    return rows


def menu_table(menu: Union[DirectMenu, IndirectMenu], title: Optional[str] = None) -> str:
    table = AsciiTable(menu_rows(menu))
    if title:
        table.title = title
    table.justify_columns[0] = "right"
    for col in range(1, 4):
        table.justify_columns[col] = "left"
    return table.table


def diagnostics_rows(diagnostics: MenuDiagnostics) -> List[List[str]]:
    rows = [["Type", "Choice", "Utility", "Revenue", "Profit", "Accepted"]]
    for t, report in enumerate(diagnostics.types):
        choice = "opt-out" if report.choice == OPT_OUT else str(report.choice)
        accepted = ",".join(str(q) for q in sorted(report.accepted)) or "-"
        rows.append(
            [
                str(t),
                choice,
                format_rational(report.utility),
                format_rational(report.revenue),
                format_rational(report.profit),
                accepted,
            ]
        )
    return rows


def diagnostics_table(diagnostics: MenuDiagnostics) -> str:
    table = AsciiTable(diagnostics_rows(diagnostics))
    table.justify_columns[0] = "right"
    return table.table


def verdict(ok: bool, text: str) -> str:
    return colored(text, "green" if ok else "red", attrs=["bold"])


def diagnostics_to_dict(diagnostics: MenuDiagnostics) -> Dict[str, Any]:
    return {
        "ok": diagnostics.ok,
        "types": [
            {
                "choice": None if report.choice == OPT_OUT else report.choice,
                "utility": format_rational(report.utility),
                "revenue": format_rational(report.revenue),
                "profit": format_rational(report.profit),
                "accepted": sorted(report.accepted),
            }
            for report in diagnostics.types
        ],
        "ic_violations": [list(pair) for pair in diagnostics.ic_violations],
        "ir_violations": list(diagnostics.ir_violations),
    }


def result_to_dict(result: SolveResult) -> Dict[str, Any]:
    counters = result.counters
    return {
        "regime": result.regime.value,
        "profit": format_rational(result.profit),
        "profit_decimal": format_decimal(result.profit),
        "menu": menu_to_dict(result.menu),
        "diagnostics": diagnostics_to_dict(result.diagnostics),
        "counters": {
            "assignments": counters.assignments,
            "patterns": counters.patterns,
            "lps_solved": counters.lps_solved,
            "peak_states": counters.peak_states,
        },
        "elapsed_seconds": round(result.elapsed, 3),
    }


def comparison_to_dict(comparison: RegimeComparison) -> Dict[str, Any]:
    regimes = {
        "full": comparison.full,
        "upfront": comparison.upfront,
        "usage": comparison.usage,
        "mandatory": comparison.mandatory,
    }
    return {
        "regimes": {
            name: None if result is None else result_to_dict(result)
            for name, result in regimes.items()
        },
        "hmu": format_rational(comparison.hmu),
        "hmu_decimal": format_decimal(comparison.hmu),
        "ratios": {
            name: None if value is None else format_rational(value)
            for name, value in comparison.ratios.items()
        },
        "sandwich_holds": comparison.sandwich_holds,
    }


def dump_json(data: Dict[str, Any]) -> str:
    return json.dumps(data, indent=2)


def render_result(result: SolveResult) -> str:
    lines = [
        colored(f"Regime: {result.regime.value}", "cyan", attrs=["bold"]),
        f"Profit: {colored(format_amount(result.profit), 'green', attrs=['bold'])}",
        menu_table(result.menu, " Witness menu "),
        diagnostics_table(result.diagnostics),
        (
            f"Work: {result.counters.assignments} assignments, {result.counters.patterns} patterns, "
            f"{result.counters.lps_solved} LPs, peak {result.counters.peak_states} states, "
            f"{result.elapsed:.3f}s"
        ),
    ]
    return "\n".join(lines)


def render_comparison(comparison: RegimeComparison) -> str:
    rows = [["Regime", "Profit", "Decimal"]]
    for name, result in (
        ("R", comparison.full),
        ("R_upfront", comparison.upfront),
        ("R_usage", comparison.usage),
        ("R_mandatory", comparison.mandatory),
    ):
        if result is None:
            rows.append([name, "skipped (size guard)", "-"])
        else:
            rows.append([name, format_rational(result.profit), format_decimal(result.profit)])
    rows.append(["H_mu", format_rational(comparison.hmu), format_decimal(comparison.hmu)])
    table = AsciiTable(rows)
    table.title = " Regime comparison "
    table.justify_columns[0] = "right"

    lines = [table.table]
    for name, value in comparison.ratios.items():
        shown = "undefined" if value is None else format_amount(value)
        lines.append(f"  {name}: {shown}")
    lines.append(
        verdict(
            comparison.sandwich_holds,
            "Sandwich R_upfront = R_mandatory <= R <= H_mu * R_mandatory: "
            + ("holds" if comparison.sandwich_holds else "VIOLATED"),
        )
    )
    return "\n".join(lines)
