"""Trimmed dynamic program over contract-value states.

Inputs are the ``(type, outcome)`` pairs. Each step either frees the outcome in the
type's contract (F0, adding ``p * v`` to that contract's column) or excludes it
(FINF, leaving the state alone). After every step states are bucketed on a
multiplicative grid per coordinate and one representative per bucket survives.
Final states are scored exactly with the indirect-menu profit LPs.
"""

import logging
import math
import time
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from itertools import product
from typing import Dict, List, Optional, Sequence, Tuple

from tariffmenu.config import SolverLimits
from tariffmenu.errors import GuardError, SolverConsistencyError, ValidationError
from tariffmenu.exact import SolveRegime, SolveResult, WorkCounters, parallel_map
from tariffmenu.lp import IndirectScore, StateVector, indirect_profit_of_state
from tariffmenu.model import (
    EXCLUDE,
    OPT_OUT,
    Contract,
    IndirectMenu,
    Instance,
    UsagePrice,
    as_rational,
    indirect_choice_and_profit,
    indirect_diagnostics,
)

logger = logging.getLogger(__name__)

Item = Tuple[int, int]
Signature = Tuple[Tuple[int, ...], ...]

# Float logs decide buckets unless the value sits this close to a grid line.
_BOUNDARY_SLACK = 1e-7


class Transition(Enum):
    F0 = 0
    FINF = 1


@dataclass(frozen=True)
class DpState:
    state: StateVector
    trace: Tuple[Transition, ...] = ()

    def trace_key(self) -> Tuple[int, ...]:
        return tuple(step.value for step in self.trace)


@lru_cache(maxsize=4096)
def _grid_power(delta: Fraction, exponent: int) -> Fraction:
    return delta ** exponent


@dataclass(frozen=True)
class TrimConfig:
    """Grid ratio ``delta`` for trimming; ``delta=None`` keeps every distinct state."""

    epsilon: Fraction
    delta: Optional[Fraction]

    def __post_init__(self) -> None:
        epsilon = as_rational(self.epsilon, "epsilon")
        if not 0 < epsilon < 1:
            raise ValidationError(f"epsilon = {epsilon} must lie in (0, 1)")
        object.__setattr__(self, "epsilon", epsilon)
        if self.delta is not None:
            delta = as_rational(self.delta, "delta")
            if delta <= 1:
                raise ValidationError(f"grid ratio delta = {delta} must exceed 1")
            object.__setattr__(self, "delta", delta)

    @classmethod
    def for_instance(cls, epsilon: object, num_inputs: int) -> "TrimConfig":
        """Rational grid ratio not above ``(1 + epsilon) ** (1 / (2 n))``."""
        epsilon = as_rational(epsilon, "epsilon")
        n = max(1, num_inputs)
        return cls(epsilon, 1 + epsilon / (2 * n * (1 + epsilon)))

    @classmethod
    def disabled(cls, epsilon: object = Fraction(1, 2)) -> "TrimConfig":
        return cls(as_rational(epsilon, "epsilon"), None)

    @property
    def trims(self) -> bool:
        return self.delta is not None

    def bucket(self, value: Fraction) -> Tuple[int, ...]:
        """``(0,)`` for zero, else ``(1, floor(log_delta(value)))``."""
        if value == 0:
            return (0,)
        estimate = (math.log(value.numerator) - math.log(value.denominator)) / math.log1p(
            float(self.delta - 1)
        )
        index = math.floor(estimate)
        if estimate - index < _BOUNDARY_SLACK or index + 1 - estimate < _BOUNDARY_SLACK:
            while _grid_power(self.delta, index) > value:
                index -= 1
            while _grid_power(self.delta, index + 1) <= value:
                index += 1
        return (1, index)


def bucket_signature(state: StateVector, cfg: TrimConfig) -> Signature:
    return tuple(cfg.bucket(v) for row in state.values for v in row)


def dp_inputs(inst: Instance, actions: Optional[Sequence[int]] = None) -> List[Item]:
    return [(t, q) for t in range(inst.num_types) for q in range(inst.num_outcomes)]


def transition_f0(
    state: StateVector, item: Item, inst: Instance, actions: Sequence[int]
) -> StateVector:
    t, q = item
    action = actions[t]
    if action == OPT_OUT:
        return state
    p = inst.prob(action, q)
    increments = [p * inst.valuations[u][q] for u in range(inst.num_types)]
    if not any(increments):
        return state
    return state.add_to_column(t, increments)


def transition_finf(state: StateVector, item: Item) -> StateVector:
    return state


def apply_transition(
    state: StateVector, step: Transition, item: Item, inst: Instance, actions: Sequence[int]
) -> StateVector:
    if step is Transition.F0:
        return transition_f0(state, item, inst, actions)
    return transition_finf(state, item)


def replay(
    trace: Sequence[Transition], inputs: Sequence[Item], inst: Instance, actions: Sequence[int]
) -> StateVector:
    state = StateVector.zeros(inst.num_types)
    for step, item in zip(trace, inputs):
        state = apply_transition(state, step, item, inst, actions)
    return state


def _preferred(candidate: DpState, incumbent: DpState) -> bool:
    # Larger coordinate sum, then lexicographically larger state, then smaller trace.
    left = (candidate.state.total(), candidate.state.values)
    right = (incumbent.state.total(), incumbent.state.values)
    if left != right:
        return left > right
    return candidate.trace_key() < incumbent.trace_key()


def trim_states(states: Sequence[DpState], cfg: TrimConfig) -> List[DpState]:
    kept: Dict[object, DpState] = {}
    for candidate in states:
        key = bucket_signature(candidate.state, cfg) if cfg.trims else candidate.state.values
        incumbent = kept.get(key)
        if incumbent is None or _preferred(candidate, incumbent):
            kept[key] = candidate
    return [kept[key] for key in sorted(kept)]


def run_dp(
    inst: Instance, actions: Sequence[int], cfg: TrimConfig
) -> Tuple[List[DpState], int]:
    """Final states for one action assignment and the peak number kept after a trim."""
    states = [DpState(StateVector.zeros(inst.num_types))]
    peak = 1
    for item in dp_inputs(inst, actions):
        expanded = []
        for current in states:
            for step in Transition:
                next_state = apply_transition(current.state, step, item, inst, actions)
                expanded.append(DpState(next_state, current.trace + (step,)))
        states = trim_states(expanded, cfg)
        peak = max(peak, len(states))
        logger.debug("dp step %s: %d -> %d states", item, len(expanded), len(states))
    return states, peak


def state_count_bound(inst: Instance, actions: Sequence[int], cfg: TrimConfig) -> float:
    """Upper bound on the states kept after any trim: ``(log_delta(V_max / V_min) + 3) ** (T*T)``."""
    if not cfg.trims:
        return float(2 ** (inst.num_types * inst.num_outcomes))
    increments = [
        inst.prob(actions[t], q) * inst.valuations[u][q]
        for t in range(inst.num_types)
        if actions[t] != OPT_OUT
        for q in range(inst.num_outcomes)
        for u in range(inst.num_types)
    ]
    positive = [v for v in increments if v > 0]
    if not positive:
        return 1.0
    largest = max(
        inst.action_value(u, actions[k])
        for u in range(inst.num_types)
        for k in range(inst.num_types)
    )
    spread = math.log(largest / min(positive)) / math.log1p(float(cfg.delta - 1))
    return (spread + 3) ** (inst.num_types ** 2)


def _usage_from_trace(
    trace: Sequence[Transition], inst: Instance, contract: int
) -> Tuple[UsagePrice, ...]:
    inputs = dp_inputs(inst)
    usage = [EXCLUDE] * inst.num_outcomes
    for step, (t, q) in zip(trace, inputs):
        if t == contract and step is Transition.F0:
            usage[q] = Fraction(0)
    return tuple(usage)


@dataclass(frozen=True)
class _Scored:
    score: IndirectScore
    actions: Tuple[int, ...]
    trace: Tuple[Transition, ...]


def _fptas_assignment(
    task: Tuple[Instance, Tuple[int, ...], TrimConfig, int]
) -> Tuple[Optional[_Scored], WorkCounters]:
    inst, actions, cfg, max_types = task
    states, peak = run_dp(inst, actions, cfg)
    best = None
    for dp_state in states:
        score = indirect_profit_of_state(dp_state.state, actions, inst, max_types)
        if best is None or score.profit > best.score.profit:
            best = _Scored(score, actions, dp_state.trace)
    lps = len(states) * (inst.num_types + 1) ** inst.num_types
    return best, WorkCounters(1, len(states), lps, peak)


def fptas_solve(
    inst: Instance,
    epsilon: object,
    trim: bool = True,
    limits: Optional[SolverLimits] = None,
    workers: int = 1,
) -> SolveResult:
    """(1 - epsilon)-approximate indirect menu; ``trim=False`` makes it exact."""
    limits = limits or SolverLimits()
    if inst.num_types > limits.max_fptas_types:
        raise GuardError(f"T = {inst.num_types} exceeds max_fptas_types = {limits.max_fptas_types}")
    count = inst.num_actions ** inst.num_types
    if count > limits.max_assignments:
        raise GuardError(
            f"A^T = {count} action assignments exceeds max_assignments = {limits.max_assignments}"
        )
    num_inputs = inst.num_types * inst.num_outcomes
    cfg = TrimConfig.for_instance(epsilon, num_inputs) if trim else TrimConfig.disabled(epsilon)

    start = time.perf_counter()
    tasks = [
        (inst, actions, cfg, limits.max_indirect_types)
        for actions in product(range(inst.num_actions), repeat=inst.num_types)
    ]
    best = None
    counters = WorkCounters()
    for scored, work in parallel_map(_fptas_assignment, tasks, workers):
        counters = counters + work
        if scored is not None and (best is None or scored.score.profit > best.score.profit):
            best = scored

    contracts = [
        Contract(action, best.score.upfront[k], _usage_from_trace(best.trace, inst, k))
        for k, action in enumerate(best.actions)
    ]
    choices, realized = indirect_choice_and_profit(IndirectMenu(tuple(contracts)), inst)
    used = sorted({k for k in choices if k != OPT_OUT})
    menu = IndirectMenu(tuple(contracts[k] for k in used))
    replayed = indirect_choice_and_profit(menu, inst)[1]
    if realized != best.score.profit or replayed != best.score.profit:
        raise SolverConsistencyError(
            f"reconstructed menu earns {replayed}, scoring LP promised {best.score.profit}"
        )
    logger.debug(
        "fptas: %d assignments, peak %d states, profit %s",
        counters.assignments,
        counters.peak_states,
        best.score.profit,
    )
    return SolveResult(
        SolveRegime.FPTAS,
        best.score.profit,
        menu,
        indirect_diagnostics(menu, inst),
        counters,
        time.perf_counter() - start,
    )
