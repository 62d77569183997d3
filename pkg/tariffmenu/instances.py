"""Instance families: worst-case priors, usage gap, Partition reduction, random instances."""

from dataclasses import dataclass
from fractions import Fraction
from random import Random
from typing import List, Optional, Sequence, Tuple

from tariffmenu.config import SolverLimits
from tariffmenu.errors import ValidationError
from tariffmenu.exact import SolveResult, solve_exact
from tariffmenu.lp import direct_upfront_from_values
from tariffmenu.model import (
    EXCLUDE,
    Contract,
    DirectMenu,
    Instance,
    UsagePrice,
    as_rational,
    contract_value,
)
from tariffmenu.single_param import SingleParamInstance


@dataclass(frozen=True)
class Multiset:
    items: Tuple[int, ...]

    def __post_init__(self) -> None:
        items = tuple(self.items)
        if not items:
            raise ValidationError("multiset must contain at least one item")
        for i, n in enumerate(items):
            if isinstance(n, bool) or not isinstance(n, int) or n <= 0:
                raise ValidationError(f"items[{i}] = {n!r} must be a positive integer")
        object.__setattr__(self, "items", items)

    @property
    def total(self) -> int:
        return sum(self.items)

    def __len__(self) -> int:
        return len(self.items)


def harmonic_number(count: int) -> Fraction:
    return sum((Fraction(1, i) for i in range(1, count + 1)), Fraction(0))


def _ascending_order(mu: Sequence[Fraction]) -> List[int]:
    return sorted(range(len(mu)), key=lambda t: (mu[t], t))


def compute_hmu(mu: Sequence[object]) -> Fraction:
    """Sum of each prior mass over the cumulative mass up to it, in ascending order."""
    mu = [as_rational(m, f"mu[{t}]") for t, m in enumerate(mu)]
    total = Fraction(0)
    prefix = Fraction(0)
    for t in _ascending_order(mu):
        prefix += mu[t]
        total += mu[t] / prefix
    return total


def hmu_extreme_prior(num_types: int, eps: object) -> Tuple[Fraction, ...]:
    """Prior ``eps^(T-t) - eps^(T-t+1)`` with the leftover mass on the first type."""
    eps = as_rational(eps, "eps")
    if not 0 < eps < 1:
        raise ValidationError(f"eps = {eps} must lie in (0, 1)")
    mu = [eps ** (num_types - t) - eps ** (num_types - t + 1) for t in range(1, num_types + 1)]
    mu[0] += eps ** num_types
    return tuple(mu)


def gen_hmu_worstcase(mu: Sequence[object]) -> Instance:
    """One free action, uniform outcomes; type ``t`` only values its own outcome."""
    mu = tuple(as_rational(m, f"mu[{t}]") for t, m in enumerate(mu))
    num_types = len(mu)
    valuations = [[Fraction(0)] * num_types for _ in range(num_types)]
    prefix = Fraction(0)
    for t in _ascending_order(mu):
        prefix += mu[t]
        valuations[t][t] = num_types / prefix
    return Instance(
        mu=mu,
        costs=(Fraction(0),),
        transitions=((Fraction(1, num_types),) * num_types,),
        valuations=tuple(tuple(row) for row in valuations),
    )


def gen_usage_gap() -> Instance:
    half = Fraction(1, 2)
    return Instance(
        mu=(half, half),
        costs=(Fraction(0),),
        transitions=((half, half),),
        valuations=((Fraction(1), half), (half, Fraction(1))),
    )


def gen_partition_instance(ms: Multiset) -> Instance:
    """Two types, one free action, outcome 0 plus one outcome per item, all equally likely."""
    k = len(ms)
    scale = k + 1
    low = (Fraction(ms.total * scale),) + tuple(Fraction(n * scale) for n in ms.items)
    high = (Fraction(0),) + tuple(Fraction(3 * n * scale) for n in ms.items)
    half = Fraction(1, 2)
    return Instance(
        mu=(half, half),
        costs=(Fraction(0),),
        transitions=((Fraction(1, scale),) * scale,),
        valuations=(low, high),
    )


def subset_sum_oracle(ms: Multiset) -> bool:
    """Exhaustive Partition decision by reachable subset sums."""
    if ms.total % 2:
        return False
    target = ms.total // 2
    reachable = {0}
    for n in ms.items:
        reachable |= {s + n for s in reachable if s + n <= target}
    return target in reachable


def partition_profit_for_subset(ms: Multiset, subset_sum: int) -> Fraction:
    """Profit of the reduction menu in which the low type accepts outcome 0 and a subset summing to ``subset_sum``."""
    total = ms.total
    if 2 * subset_sum <= total:
        return Fraction(4 * total + subset_sum, 2)
    return Fraction(5 * total - subset_sum, 2)


def two_type_upfront_prices(
    inst: Instance, accepted: Sequence[int]
) -> Tuple[Fraction, Fraction]:
    """Closed-form upfront prices when the low type accepts ``accepted`` and the high type everything.

    The low type's IR binds and the high type pays the least of its full value and
    the low contract's price plus its value gap. Valid only when the low type does not
    envy the high contract at these prices.
    """
    if inst.num_types != 2:
        raise ValidationError("two_type_upfront_prices needs exactly two types")
    low_usage: Tuple[UsagePrice, ...] = tuple(
        Fraction(0) if q in set(accepted) else EXCLUDE for q in range(inst.num_outcomes)
    )
    low_contract = Contract(0, Fraction(0), low_usage)
    high_contract = Contract.upfront_only(0, 0, inst.num_outcomes)
    low_own = contract_value(0, low_contract, inst)
    low_other = contract_value(0, high_contract, inst)
    high_own = contract_value(1, high_contract, inst)
    high_other = contract_value(1, low_contract, inst)

    low_price = low_own
    high_price = min(high_own, low_price + high_own - high_other)
    if low_own - low_price < low_other - high_price:
        raise ValidationError("low type envies the high contract; closed form does not apply")
    return low_price, high_price


def decide_partition(ms: Multiset, limits: Optional[SolverLimits] = None) -> bool:
    return partition_reduction(ms, limits)[0]


def partition_reduction(
    ms: Multiset, limits: Optional[SolverLimits] = None
) -> Tuple[bool, SolveResult]:
    """Solve the reduction instance; a partition exists iff the optimum is exactly 9M/4."""
    result = solve_exact(gen_partition_instance(ms), limits)
    return result.profit == Fraction(9 * ms.total, 4), result


def gen_single_param_counterexample() -> SingleParamInstance:
    """Two types, two deterministic actions; no single contract is profit-optimal."""
    return SingleParamInstance.build(
        alpha=(1, 2),
        baseline=(1, 2),
        mu=(Fraction(2, 3), Fraction(1, 3)),
        costs=(0, Fraction(3, 2)),
        transitions=((1, 0), (0, 1)),
    )


def _check_dims(num_types: int, num_actions: int, num_outcomes: int, value_bound: int) -> None:
    for name, value in (
        ("T", num_types),
        ("A", num_actions),
        ("Q", num_outcomes),
        ("value_bound", value_bound),
    ):
        if value < 1:
            raise ValidationError(f"{name} = {value} must be positive")


def _random_distribution(rng: Random, size: int, spread: int = 3) -> Tuple[Fraction, ...]:
    weights = [rng.randint(0, spread) for _ in range(size)]
    if not any(weights):
        weights[rng.randrange(size)] = 1
    total = sum(weights)
    return tuple(Fraction(w, total) for w in weights)


def _random_prior(rng: Random, size: int) -> Tuple[Fraction, ...]:
    weights = [rng.randint(1, 4) for _ in range(size)]
    total = sum(weights)
    return tuple(Fraction(w, total) for w in weights)


def gen_random(
    num_types: int, num_actions: int, num_outcomes: int, seed: int, value_bound: int = 10
) -> Instance:
    """Seeded instance with integer valuations, half-integer costs and small-denominator probabilities."""
    _check_dims(num_types, num_actions, num_outcomes, value_bound)
    rng = Random(seed)
    mu = _random_prior(rng, num_types)
    costs = tuple(Fraction(rng.randint(0, value_bound), 2) for _ in range(num_actions))
    transitions = tuple(_random_distribution(rng, num_outcomes) for _ in range(num_actions))
    valuations = tuple(
        tuple(Fraction(rng.randint(0, value_bound)) for _ in range(num_outcomes))
        for _ in range(num_types)
    )
    return Instance(mu, costs, transitions, valuations)


def gen_random_single_param(
    num_types: int,
    num_actions: int,
    num_outcomes: int,
    seed: int,
    value_bound: int = 10,
    zero_costs: bool = True,
) -> SingleParamInstance:
    _check_dims(num_types, num_actions, num_outcomes, value_bound)
    rng = Random(seed)
    alpha = rng.sample(range(1, 2 * num_types + 3), num_types)
    baseline = [rng.randint(0, value_bound) for _ in range(num_outcomes)]
    mu = _random_prior(rng, num_types)
    transitions = [_random_distribution(rng, num_outcomes) for _ in range(num_actions)]
    if zero_costs:
        costs = [0] * num_actions
    else:
        costs = [Fraction(rng.randint(0, value_bound), 2) for _ in range(num_actions)]
    return SingleParamInstance.build(alpha, baseline, mu, costs, transitions)


def gen_random_ic_menu(inst: Instance, seed: int, attempts: int = 20) -> DirectMenu:
    """Random IC and IR direct menu with general usage prices.

    Actions and usage prices are drawn at random; upfront prices then come from the
    direct upfront-price LP. Falls back to one shared upfront-free contract.
    """
    rng = Random(seed)
    num_types, num_outcomes = inst.num_types, inst.num_outcomes
    for _ in range(attempts):
        actions = [rng.randrange(inst.num_actions) for _ in range(num_types)]
        drafts = []
        for _ in range(num_types):
            usage = []
            for q in range(num_outcomes):
                pool: List[UsagePrice] = [Fraction(0), EXCLUDE]
                pool.extend(inst.valuations[t][q] for t in range(num_types))
                pool.append(Fraction(rng.randint(0, 20), 2))
                usage.append(rng.choice(pool))
            drafts.append(tuple(usage))
        contracts = [Contract(a, Fraction(0), usage) for a, usage in zip(actions, drafts)]
        values = [[contract_value(t, c, inst) for c in contracts] for t in range(num_types)]
        solved = direct_upfront_from_values(values, actions, inst)
        if solved is None:
            continue
        upfront, _ = solved
        return DirectMenu(
            tuple(Contract(a, w, usage) for a, w, usage in zip(actions, upfront, drafts))
        )
    shared = Contract.upfront_only(0, 0, num_outcomes)
    return DirectMenu((shared,) * num_types)
