"""Single-parameter instances: valuations ``alpha[t] * baseline[q]``.

Revenue is maximized by one zero-usage contract on the most valuable action; the
upfront price is the value of the cheapest type still served.
"""

from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Dict, List, Optional, Sequence, Tuple

from tariffmenu.errors import IncentiveError, MonotonicityError, ValidationError
from tariffmenu.lp import LinearProgram, Relation
from tariffmenu.model import (
    EXCLUDE,
    Contract,
    DirectMenu,
    IndirectMenu,
    Instance,
    as_rational,
    contract_value,
    indirect_choice_and_profit,
    validate_menu,
)
from tariffmenu.transforms import normalize_two_prices


@dataclass(frozen=True)
class SingleParamInstance:
    base: Instance
    alpha: Tuple[Fraction, ...]
    baseline: Tuple[Fraction, ...]

    def __post_init__(self) -> None:
        alpha = tuple(as_rational(a, f"alpha[{t}]") for t, a in enumerate(self.alpha))
        baseline = tuple(as_rational(v, f"baseline[{q}]") for q, v in enumerate(self.baseline))
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "baseline", baseline)
        if len(alpha) != self.base.num_types:
            raise ValidationError(f"alpha has {len(alpha)} entries, expected T={self.base.num_types}")
        if len(baseline) != self.base.num_outcomes:
            raise ValidationError(
                f"baseline has {len(baseline)} entries, expected Q={self.base.num_outcomes}"
            )
        for t, a in enumerate(alpha):
            if a <= 0:
                raise ValidationError(f"alpha[{t}] = {a} must be positive")
            if t and a <= alpha[t - 1]:
                raise ValidationError("alpha must be strictly increasing")
        for q, v in enumerate(baseline):
            if v < 0:
                raise ValidationError(f"baseline[{q}] = {v} must be nonnegative")
        for t, row in enumerate(self.base.valuations):
            if row != tuple(alpha[t] * v for v in baseline):
                raise ValidationError(f"v[{t}] is not alpha[{t}] * baseline")

    @classmethod
    def build(
        cls,
        alpha: Sequence[object],
        baseline: Sequence[object],
        mu: Sequence[object],
        costs: Sequence[object],
        transitions: Sequence[Sequence[object]],
    ) -> "SingleParamInstance":
        """Sort types by alpha and merge types sharing an alpha, adding their prior mass."""
        alpha = [as_rational(a, f"alpha[{t}]") for t, a in enumerate(alpha)]
        mu = [as_rational(m, f"mu[{t}]") for t, m in enumerate(mu)]
        if len(alpha) != len(mu):
            raise ValidationError(f"alpha has {len(alpha)} entries, expected T={len(mu)}")
        merged: Dict[Fraction, Fraction] = {}
        for a, m in zip(alpha, mu):
            merged[a] = merged.get(a, Fraction(0)) + m
        levels = sorted(merged)
        baseline = tuple(as_rational(v, f"baseline[{q}]") for q, v in enumerate(baseline))
        base = Instance(
            mu=tuple(merged[a] for a in levels),
            costs=tuple(costs),
            transitions=tuple(tuple(row) for row in transitions),
            valuations=tuple(tuple(a * v for v in baseline) for a in levels),
        )
        return cls(base, tuple(levels), baseline)

    @property
    def num_types(self) -> int:
        return self.base.num_types

    def with_zero_costs(self) -> "SingleParamInstance":
        base = self.base.with_costs([0] * self.base.num_actions)
        return SingleParamInstance(base, self.alpha, self.baseline)


@dataclass(frozen=True)
class ValueProfile:
    """Value ``V[t]`` each type places on its own contract."""

    values: Tuple[Fraction, ...]

    def __post_init__(self) -> None:
        values = tuple(as_rational(v, f"V[{t}]") for t, v in enumerate(self.values))
        for t, v in enumerate(values):
            if v < 0:
                raise ValidationError(f"V[{t}] = {v} must be nonnegative")
        object.__setattr__(self, "values", values)


def single_param_M(inst: SingleParamInstance) -> Tuple[Fraction, int]:
    best_value, best_action = None, 0
    for a, row in enumerate(inst.base.transitions):
        value = sum((p * v for p, v in zip(row, inst.baseline)), Fraction(0))
        if best_value is None or value > best_value:
            best_value, best_action = value, a
    return best_value, best_action


def closed_form_upfront(profile: ValueProfile, inst: SingleParamInstance) -> Tuple[Fraction, ...]:
    """Revenue-maximizing upfront prices for a value profile.

    ``w[0] = V[0]`` and each step adds ``V[t] - (alpha[t] / alpha[t-1]) * V[t-1]``.
    """
    values, alpha = profile.values, inst.alpha
    if len(values) != len(alpha):
        raise ValidationError(f"profile has {len(values)} values, expected T={len(alpha)}")
    for t in range(1, len(values)):
        if values[t] / alpha[t] < values[t - 1] / alpha[t - 1]:
            raise MonotonicityError(
                f"V[{t}]/alpha[{t}] < V[{t - 1}]/alpha[{t - 1}]: profile is not IC-realizable"
            )
    prices = [values[0]]
    for t in range(1, len(values)):
        prices.append(prices[-1] + values[t] - alpha[t] / alpha[t - 1] * values[t - 1])
    return tuple(prices)


def profile_values(profile: ValueProfile, inst: SingleParamInstance) -> List[List[Fraction]]:
    """Value matrix ``V(t; C^k) = (alpha[t] / alpha[k]) * V[k]`` of a zero-usage profile."""
    alpha = inst.alpha
    return [
        [alpha[t] / alpha[k] * profile.values[k] for k in range(len(alpha))]
        for t in range(len(alpha))
    ]


def _tail_masses(inst: SingleParamInstance) -> List[Fraction]:
    tails = [Fraction(0)] * (inst.num_types + 1)
    for t in reversed(range(inst.num_types)):
        tails[t] = tails[t + 1] + inst.base.mu[t]
    return tails


def lp_relaxation_optimum(inst: SingleParamInstance) -> Tuple[Fraction, int]:
    """Scan the cutoff type: serving every type from ``t`` upward at price ``M * alpha[t]``."""
    top, _ = single_param_M(inst)
    tails = _tail_masses(inst)
    best_value, best_cutoff = None, 0
    for t, a in enumerate(inst.alpha):
        value = top * a * tails[t]
        if best_value is None or value > best_value:
            best_value, best_cutoff = value, t
    return best_value, best_cutoff


def lp_relaxation_lp(inst: SingleParamInstance) -> LinearProgram:
    """Revenue LP over ``y[t] = V[t] / alpha[t]``, nondecreasing and within ``[0, M]``."""
    top, _ = single_param_M(inst)
    alpha = inst.alpha
    tails = _tail_masses(inst)
    size = inst.num_types
    objective = []
    for t in range(size):
        following = alpha[t + 1] * tails[t + 1] if t + 1 < size else Fraction(0)
        objective.append(alpha[t] * tails[t] - following)
    lp = LinearProgram(objective=objective, lower=[Fraction(0)] * size, upper=[top] * size)
    for t in range(1, size):
        lp.add_difference(t, t - 1, Relation.GE, 0)
    return lp


def best_single_contract(inst: SingleParamInstance) -> Tuple[IndirectMenu, Fraction]:
    top, action = single_param_M(inst)
    value, cutoff = lp_relaxation_optimum(inst)
    contract = Contract.upfront_only(action, top * inst.alpha[cutoff], inst.base.num_outcomes)
    return IndirectMenu((contract,)), value


def check_monotone(menu: DirectMenu, inst: SingleParamInstance) -> bool:
    """Whether ``V[t]/alpha[t]`` and ``w[t]`` are nondecreasing in an IC menu.

    Menus with general usage prices are first brought to {0, EXCLUDE} form.
    """
    base = inst.base
    if not all(c.is_two_price for c in menu):
        menu = normalize_two_prices(menu, base)
    diagnostics = validate_menu(menu, base)
    if diagnostics.ic_violations:
        raise IncentiveError(f"menu is not IC: {diagnostics.describe()}", diagnostics)
    ratios = [contract_value(t, c, base) / inst.alpha[t] for t, c in enumerate(menu)]
    prices = [c.upfront for c in menu]
    return all(
        ratios[t - 1] <= ratios[t] and prices[t - 1] <= prices[t] for t in range(1, len(ratios))
    )


@dataclass(frozen=True)
class SingleContractSearch:
    profit: Fraction
    profit_menu: IndirectMenu
    revenue: Fraction
    revenue_menu: IndirectMenu


def single_contract_profits(inst: SingleParamInstance) -> SingleContractSearch:
    """Exhaustive search over single contracts with usage in {0, EXCLUDE}.

    Profit is piecewise linear in the upfront price with kinks where a type stops
    buying, so the valuation-derived breakpoints ``V(t; C)`` cover every optimum.
    """
    base = inst.base
    free = base.with_costs([0] * base.num_actions)
    best: Optional[Tuple[Fraction, IndirectMenu]] = None
    best_revenue: Optional[Tuple[Fraction, IndirectMenu]] = None
    for action in range(base.num_actions):
        for pattern in product((True, False), repeat=base.num_outcomes):
            usage = tuple(Fraction(0) if free_q else EXCLUDE for free_q in pattern)
            free_contract = Contract(action, Fraction(0), usage)
            breakpoints = sorted(
                {Fraction(0)} | {contract_value(t, free_contract, base) for t in range(base.num_types)}
            )
            for price in breakpoints:
                menu = IndirectMenu((Contract(action, price, usage),))
                profit = indirect_choice_and_profit(menu, base)[1]
                revenue = indirect_choice_and_profit(menu, free)[1]
                if best is None or profit > best[0]:
                    best = (profit, menu)
                if best_revenue is None or revenue > best_revenue[0]:
                    best_revenue = (revenue, menu)
    return SingleContractSearch(best[0], best[1], best_revenue[0], best_revenue[1])
