"""Exact optima for the four payment regimes by enumeration plus exact LPs.

Every direct menu searched here may hand a type the opt-out contract, so all
regimes agree with the indirect formulation in which buyers can always walk away.
"""

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from itertools import product
from typing import Callable, Iterable, List, Optional, Sequence, Tuple, TypeVar, Union

from tariffmenu.config import SolverLimits
from tariffmenu.errors import GuardError, SolverConsistencyError
from tariffmenu.lp import LinearProgram, LpStatus, Relation, direct_upfront_from_values, solve_lp
from tariffmenu.model import (
    EXCLUDE,
    OPT_OUT,
    Contract,
    DirectMenu,
    IndirectMenu,
    Instance,
    MenuDiagnostics,
    Regime,
    UsagePrice,
    contract_value,
    direct_menu_profit,
    indirect_choice_and_profit,
    usage_revenue,
    validate_menu,
)
from tariffmenu.transforms import mandatory_to_upfront

logger = logging.getLogger(__name__)

TaskT = TypeVar("TaskT")
ResultT = TypeVar("ResultT")


class SolveRegime(Enum):
    FULL = "full"
    UPFRONT = "upfront"
    USAGE = "usage"
    MANDATORY = "mandatory"
    FPTAS = "fptas"


@dataclass(frozen=True)
class WorkCounters:
    assignments: int = 0
    patterns: int = 0
    lps_solved: int = 0
    peak_states: int = 0

    def __add__(self, other: "WorkCounters") -> "WorkCounters":
        return WorkCounters(
            self.assignments + other.assignments,
            self.patterns + other.patterns,
            self.lps_solved + other.lps_solved,
            max(self.peak_states, other.peak_states),
        )


@dataclass(frozen=True)
class SolveResult:
    regime: SolveRegime
    profit: Fraction
    menu: Union[DirectMenu, IndirectMenu]
    diagnostics: MenuDiagnostics
    counters: WorkCounters
    elapsed: float = 0.0

    def replay_profit(self, inst: Instance) -> Fraction:
        """Re-evaluate the witness menu from scratch."""
        if isinstance(self.menu, IndirectMenu):
            return indirect_choice_and_profit(self.menu, inst)[1]
        regime = Regime.MANDATORY if self.regime is SolveRegime.MANDATORY else Regime.VOLUNTARY
        return direct_menu_profit(self.menu, inst, regime)


@dataclass(frozen=True)
class ExclusionColumn:
    """Values every type places on one contract with usage prices in {0, EXCLUDE}."""

    accepted: Tuple[bool, ...]
    values: Tuple[Fraction, ...]
    full: bool

    def usage(self) -> Tuple[UsagePrice, ...]:
        return tuple(Fraction(0) if free else EXCLUDE for free in self.accepted)


@lru_cache(maxsize=None)
def exclusion_columns(inst: Instance, action: int) -> Tuple[ExclusionColumn, ...]:
    """Distinct value columns over all exclusion patterns of ``action``, in pattern order.

    Patterns giving every type the same values as an earlier pattern are dropped.
    """
    num_types, num_outcomes = inst.num_types, inst.num_outcomes
    if action == OPT_OUT:
        return (ExclusionColumn((False,) * num_outcomes, (Fraction(0),) * num_types, False),)
    row = inst.transitions[action]
    full_values = tuple(inst.action_value(t, action) for t in range(num_types))
    seen = set()
    columns = []
    for accepted in product((True, False), repeat=num_outcomes):
        values = tuple(
            sum(
                (row[q] * inst.valuations[t][q] for q in range(num_outcomes) if accepted[q]),
                Fraction(0),
            )
            for t in range(num_types)
        )
        if values in seen:
            continue
        seen.add(values)
        columns.append(ExclusionColumn(accepted, values, values == full_values))
    return tuple(columns)


def action_assignments(inst: Instance, with_opt_out: bool = True) -> Iterable[Tuple[int, ...]]:
    first = OPT_OUT if with_opt_out else 0
    return product(range(first, inst.num_actions), repeat=inst.num_types)


def _assignment_count(inst: Instance, with_opt_out: bool = True) -> int:
    return (inst.num_actions + (1 if with_opt_out else 0)) ** inst.num_types


def _check_assignments(inst: Instance, limits: SolverLimits) -> None:
    count = _assignment_count(inst)
    if count > limits.max_assignments:
        raise GuardError(
            f"(A+1)^T = {count} action assignments exceeds max_assignments = {limits.max_assignments}"
        )


def parallel_map(
    func: Callable[[TaskT], ResultT], tasks: Sequence[TaskT], workers: int
) -> List[ResultT]:
    if workers <= 1 or len(tasks) <= 1:
        return [func(task) for task in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, tasks))


@dataclass(frozen=True)
class _Candidate:
    profit: Fraction
    actions: Tuple[int, ...]
    upfront: Tuple[Fraction, ...]
    usage: Tuple[Tuple[UsagePrice, ...], ...]


def _better(candidate: Optional[_Candidate], best: Optional[_Candidate]) -> bool:
    return candidate is not None and (best is None or candidate.profit > best.profit)


def _search_exclusions(task: Tuple[Instance, Tuple[int, ...], bool]) -> Tuple[Optional[_Candidate], WorkCounters]:
    inst, actions, prune = task
    column_sets = [exclusion_columns(inst, a) for a in actions]
    served = [k for k, a in enumerate(actions) if a != OPT_OUT]
    best = None
    patterns = lps = 0
    for columns in product(*column_sets):
        if prune and served and not any(columns[k].full for k in served):
            continue
        patterns += 1
        values = [[column.values[t] for column in columns] for t in range(inst.num_types)]
        lps += 1
        solved = direct_upfront_from_values(values, actions, inst)
        if solved is None:
            continue
        upfront, profit = solved
        candidate = _Candidate(profit, actions, upfront, tuple(c.usage() for c in columns))
        if _better(candidate, best):
            best = candidate
    return best, WorkCounters(1, patterns, lps)


def _direct_menu(inst: Instance, candidate: _Candidate) -> DirectMenu:
    contracts = []
    for action, upfront, usage in zip(candidate.actions, candidate.upfront, candidate.usage):
        if action == OPT_OUT:
            contracts.append(Contract.opt_out(inst.num_outcomes))
        else:
            contracts.append(Contract(action, upfront, usage))
    return DirectMenu(tuple(contracts))


def _reduce(results: Iterable[Tuple[Optional[_Candidate], WorkCounters]]) -> Tuple[_Candidate, WorkCounters]:
    best = None
    counters = WorkCounters()
    for candidate, work in results:
        counters = counters + work
        if _better(candidate, best):
            best = candidate
    if best is None:
        raise SolverConsistencyError("no feasible menu found; the all opt-out menu should be")
    return best, counters


def solve_exact(
    inst: Instance,
    limits: Optional[SolverLimits] = None,
    verify_grid: bool = False,
    workers: int = 1,
) -> SolveResult:
    """R: best two-part tariff menu, searching usage prices in {0, EXCLUDE}.

    On zero-cost instances only patterns where some served contract accepts every
    outcome are searched; the contract with the largest upfront price can always be
    given zero usage prices without lowering revenue.
    """
    limits = limits or SolverLimits()
    cells = inst.num_types * inst.num_outcomes
    if cells > limits.max_exact_cells:
        raise GuardError(f"T*Q = {cells} exceeds max_exact_cells = {limits.max_exact_cells}")
    _check_assignments(inst, limits)

    start = time.perf_counter()
    prune = all(c == 0 for c in inst.costs)
    tasks = [(inst, actions, prune) for actions in action_assignments(inst)]
    best, counters = _reduce(parallel_map(_search_exclusions, tasks, workers))
    menu = _direct_menu(inst, best)
    logger.debug(
        "exact search: %d assignments, %d patterns, profit %s",
        counters.assignments,
        counters.patterns,
        best.profit,
    )

    if verify_grid:
        grid_profit, _ = grid_oracle(inst, limits)
        if grid_profit != best.profit:
            raise SolverConsistencyError(
                f"usage-price grid oracle found {grid_profit}, exclusion search found {best.profit}"
            )
    return SolveResult(
        SolveRegime.FULL,
        best.profit,
        menu,
        validate_menu(menu, inst),
        counters,
        time.perf_counter() - start,
    )


def _search_upfront(task: Tuple[Instance, Tuple[int, ...]]) -> Tuple[Optional[_Candidate], WorkCounters]:
    inst, actions = task
    values = [[inst.action_value(t, a) for a in actions] for t in range(inst.num_types)]
    solved = direct_upfront_from_values(values, actions, inst)
    if solved is None:
        return None, WorkCounters(1, 1, 1)
    upfront, profit = solved
    usage = tuple((Fraction(0),) * inst.num_outcomes for _ in actions)
    return _Candidate(profit, actions, upfront, usage), WorkCounters(1, 1, 1)


def solve_upfront_only(
    inst: Instance, limits: Optional[SolverLimits] = None, workers: int = 1
) -> SolveResult:
    """R_upfront: all usage prices zero."""
    limits = limits or SolverLimits()
    _check_assignments(inst, limits)
    start = time.perf_counter()
    tasks = [(inst, actions) for actions in action_assignments(inst)]
    best, counters = _reduce(parallel_map(_search_upfront, tasks, workers))
    menu = _direct_menu(inst, best)
    return SolveResult(
        SolveRegime.UPFRONT,
        best.profit,
        menu,
        validate_menu(menu, inst),
        counters,
        time.perf_counter() - start,
    )


def _acceptance_levels(inst: Instance, outcome: int) -> List[Fraction]:
    return sorted({inst.valuations[t][outcome] for t in range(inst.num_types)}, reverse=True)


def _usage_cells(inst: Instance, actions: Sequence[int]) -> List[Tuple[int, int]]:
    return [
        (k, q)
        for k, a in enumerate(actions)
        if a != OPT_OUT
        for q in range(inst.num_outcomes)
        if inst.transitions[a][q] > 0
    ]


def _search_usage(task: Tuple[Instance, Tuple[int, ...]]) -> Tuple[Optional[_Candidate], WorkCounters]:
    """Usage-only search over acceptance thresholds.

    For one usage price the set of accepting types is upward closed in valuation,
    so each cell only needs the options "nobody accepts" and "types valuing the
    outcome at least the i-th largest level accept".
    """
    inst, actions = task
    num_types = inst.num_types
    cells = _usage_cells(inst, actions)
    index = {cell: i for i, cell in enumerate(cells)}
    levels = {q: _acceptance_levels(inst, q) for q in range(inst.num_outcomes)}
    offset = -sum((m * inst.cost(a) for m, a in zip(inst.mu, actions)), Fraction(0))

    best = None
    patterns = lps = 0
    for options in product(*(range(len(levels[q]) + 1) for _, q in cells)):
        patterns += 1
        lower: List[Optional[Fraction]] = []
        upper: List[Optional[Fraction]] = []
        accepts = {}
        for (k, q), option in zip(cells, options):
            level = levels[q]
            if option == 0:
                lower.append(level[0])
                upper.append(None)
                accepts[(k, q)] = frozenset()
            else:
                threshold = level[option - 1]
                upper.append(threshold)
                lower.append(level[option] if option < len(level) else Fraction(0))
                accepts[(k, q)] = frozenset(
                    t for t in range(num_types) if inst.valuations[t][q] >= threshold
                )

        def utility_terms(t: int, k: int) -> Tuple[Fraction, List[Fraction]]:
            constant = Fraction(0)
            coefficients = [Fraction(0)] * len(cells)
            if actions[k] == OPT_OUT:
                return constant, coefficients
            row = inst.transitions[actions[k]]
            for q in range(inst.num_outcomes):
                cell = (k, q)
                if cell in index and t in accepts[cell]:
                    constant += row[q] * inst.valuations[t][q]
                    coefficients[index[cell]] -= row[q]
            return constant, coefficients

        objective = [Fraction(0)] * len(cells)
        for (k, q), i in index.items():
            if k in accepts[(k, q)]:
                objective[i] += inst.mu[k] * inst.transitions[actions[k]][q]
        lp = LinearProgram(objective=objective, lower=lower, upper=upper, offset=offset)
        for t in range(num_types):
            own_constant, own = utility_terms(t, t)
            lp.add(own, Relation.GE, -own_constant)
            for k in range(num_types):
                if k == t:
                    continue
                other_constant, other = utility_terms(t, k)
                lp.add(
                    [a - b for a, b in zip(own, other)],
                    Relation.GE,
                    other_constant - own_constant,
                )
        lps += 1
        result = solve_lp(lp)
        if result.status is not LpStatus.OPTIMAL:
            continue
        usage = []
        for k, a in enumerate(actions):
            usage.append(
                tuple(
                    result.solution[index[(k, q)]] if (k, q) in index else EXCLUDE
                    for q in range(inst.num_outcomes)
                )
            )
        candidate = _Candidate(result.value, actions, (Fraction(0),) * num_types, tuple(usage))
        if _better(candidate, best):
            best = candidate
    return best, WorkCounters(1, patterns, lps)


def solve_usage_only(
    inst: Instance, limits: Optional[SolverLimits] = None, workers: int = 1
) -> SolveResult:
    """R_usage: all upfront prices zero, usage prices free."""
    limits = limits or SolverLimits()
    cells = inst.num_types ** 2 * inst.num_outcomes
    if cells > limits.max_usage_cells:
        raise GuardError(f"T^2*Q = {cells} exceeds max_usage_cells = {limits.max_usage_cells}")
    _check_assignments(inst, limits)
    start = time.perf_counter()
    tasks = [(inst, actions) for actions in action_assignments(inst)]
    best, counters = _reduce(parallel_map(_search_usage, tasks, workers))
    menu = _direct_menu(inst, best)
    return SolveResult(
        SolveRegime.USAGE,
        best.profit,
        menu,
        validate_menu(menu, inst),
        counters,
        time.perf_counter() - start,
    )


def _grid_search(
    inst: Instance,
    limits: SolverLimits,
    candidates: Callable[[int], List[UsagePrice]],
    regime: Regime,
) -> _Candidate:
    best = None
    for actions in action_assignments(inst):
        cells = _usage_cells(inst, actions)
        combos = 1
        for _, q in cells:
            combos *= len(candidates(q))
        if combos > limits.max_grid_menus:
            raise GuardError(
                f"{combos} usage grids per assignment exceeds max_grid_menus = {limits.max_grid_menus}"
            )
        for prices in product(*(candidates(q) for _, q in cells)):
            chosen = dict(zip(cells, prices))
            contracts = [
                Contract.opt_out(inst.num_outcomes)
                if a == OPT_OUT
                else Contract(
                    a,
                    Fraction(0),
                    tuple(chosen.get((k, q), EXCLUDE if regime is Regime.VOLUNTARY else Fraction(0))
                          for q in range(inst.num_outcomes)),
                )
                for k, a in enumerate(actions)
            ]
            if regime is Regime.VOLUNTARY:
                values = [[contract_value(t, c, inst) for c in contracts] for t in range(inst.num_types)]
            else:
                values = [
                    [
                        _mandatory_value(t, c, inst)
                        for c in contracts
                    ]
                    for t in range(inst.num_types)
                ]
            revenue = [usage_revenue(k, c, inst, regime) for k, c in enumerate(contracts)]
            solved = direct_upfront_from_values(values, actions, inst, revenue)
            if solved is None:
                continue
            upfront, profit = solved
            candidate = _Candidate(profit, actions, upfront, tuple(c.usage for c in contracts))
            if _better(candidate, best):
                best = candidate
    return best


def _mandatory_value(t: int, contract: Contract, inst: Instance) -> Fraction:
    if contract.is_opt_out:
        return Fraction(0)
    row = inst.transitions[contract.action]
    return sum(
        (p * (v - x) for p, v, x in zip(row, inst.valuations[t], contract.usage)), Fraction(0)
    )


def grid_oracle(inst: Instance, limits: Optional[SolverLimits] = None) -> Tuple[Fraction, DirectMenu]:
    """R over usage prices drawn from {0, EXCLUDE} and every valuation of the outcome."""
    limits = limits or SolverLimits()
    _check_assignments(inst, limits)

    def candidates(q: int) -> List[UsagePrice]:
        levels = sorted({inst.valuations[t][q] for t in range(inst.num_types)} - {Fraction(0)})
        return [Fraction(0), EXCLUDE] + levels

    best = _grid_search(inst, limits, candidates, Regime.VOLUNTARY)
    return best.profit, _direct_menu(inst, best)


def redistribution_check(
    inst: Instance, limits: Optional[SolverLimits] = None
) -> Tuple[Fraction, DirectMenu]:
    """R_mandatory over finite usage prices drawn from {0} and every valuation of the outcome."""
    limits = limits or SolverLimits()
    _check_assignments(inst, limits)

    def candidates(q: int) -> List[UsagePrice]:
        return sorted({Fraction(0)} | {inst.valuations[t][q] for t in range(inst.num_types)})

    best = _grid_search(inst, limits, candidates, Regime.MANDATORY)
    return best.profit, _direct_menu(inst, best)


def solve_mandatory(
    inst: Instance,
    limits: Optional[SolverLimits] = None,
    workers: int = 1,
    cross_check: bool = False,
) -> SolveResult:
    """R_mandatory, computed as R_upfront: mandatory usage payments fold into the upfront price."""
    upfront = solve_upfront_only(inst, limits, workers)
    if cross_check:
        profit, witness = redistribution_check(inst, limits)
        if profit != upfront.profit:
            raise SolverConsistencyError(
                f"mandatory usage grid found {profit}, upfront-only search found {upfront.profit}"
            )
        folded = direct_menu_profit(mandatory_to_upfront(witness, inst), inst)
        if folded != profit:
            raise SolverConsistencyError(
                f"redistributed mandatory witness earns {folded}, expected {profit}"
            )
    return SolveResult(
        SolveRegime.MANDATORY,
        upfront.profit,
        upfront.menu,
        validate_menu(upfront.menu, inst, Regime.MANDATORY),
        upfront.counters,
        upfront.elapsed,
    )
