"""Problem primitives: instances, two-part tariff contracts, menus and their evaluation."""

import math
import numbers
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import FrozenSet, Iterator, List, Sequence, Tuple, Union

from tariffmenu.errors import IncentiveError, RegimeMismatchError, ValidationError

OPT_OUT = -1


class Price(Enum):
    EXCLUDE = "EXCLUDE"

    def __repr__(self) -> str:
        return self.value


EXCLUDE = Price.EXCLUDE


class Regime(Enum):
    VOLUNTARY = "voluntary"
    MANDATORY = "mandatory"


UsagePrice = Union[Fraction, Price]


def as_rational(value: object, name: str = "value") -> Fraction:
    """Convert ints, rationals, decimal literals and ``"p/q"`` strings to an exact Fraction."""
    if isinstance(value, bool):
        raise ValidationError(f"{name}: {value!r} is not a rational number")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, numbers.Rational):
        return Fraction(value.numerator, value.denominator)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValidationError(f"{name}: {value!r} is not a finite rational")
        # Decimal literal as typed, not the binary expansion.
        return Fraction(repr(value))
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError):
            raise ValidationError(f"{name}: {value!r} is not a rational number") from None
    raise ValidationError(f"{name}: {value!r} is not a rational number")


def as_usage_price(value: object, name: str = "x") -> UsagePrice:
    if value is EXCLUDE or (isinstance(value, str) and value.strip().upper() == "EXCLUDE"):
        return EXCLUDE
    return as_rational(value, name)


def _check_index(kind: str, index: int, size: int) -> None:
    if not 0 <= index < size:
        raise IndexError(f"{kind} index {index} out of range [0, {size})")


@dataclass(frozen=True)
class Instance:
    """Actions with costs and outcome distributions, buyer types with valuations and a prior."""

    mu: Tuple[Fraction, ...]
    costs: Tuple[Fraction, ...]
    transitions: Tuple[Tuple[Fraction, ...], ...]
    valuations: Tuple[Tuple[Fraction, ...], ...]

    def __post_init__(self) -> None:
        mu = tuple(as_rational(m, f"mu[{t}]") for t, m in enumerate(self.mu))
        costs = tuple(as_rational(c, f"costs[{a}]") for a, c in enumerate(self.costs))
        transitions = tuple(
            tuple(as_rational(p, f"p[{a}][{q}]") for q, p in enumerate(row))
            for a, row in enumerate(self.transitions)
        )
        valuations = tuple(
            tuple(as_rational(v, f"v[{t}][{q}]") for q, v in enumerate(row))
            for t, row in enumerate(self.valuations)
        )
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "costs", costs)
        object.__setattr__(self, "transitions", transitions)
        object.__setattr__(self, "valuations", valuations)
        self._validate()

    def _validate(self) -> None:
        if not self.mu:
            raise ValidationError("mu must contain at least one type")
        for t, m in enumerate(self.mu):
            if m <= 0:
                raise ValidationError(f"mu[{t}] = {m} must be positive")
        if sum(self.mu) != 1:
            raise ValidationError(f"mu sums to {sum(self.mu)}, expected 1")

        if not self.costs:
            raise ValidationError("costs must contain at least one action")
        for a, c in enumerate(self.costs):
            if c < 0:
                raise ValidationError(f"costs[{a}] = {c} must be nonnegative")

        if len(self.transitions) != len(self.costs):
            raise ValidationError(
                f"p has {len(self.transitions)} rows, expected A={len(self.costs)}"
            )
        num_outcomes = len(self.transitions[0])
        if num_outcomes == 0:
            raise ValidationError("p rows must cover at least one outcome")
        for a, row in enumerate(self.transitions):
            if len(row) != num_outcomes:
                raise ValidationError(f"p[{a}] has {len(row)} entries, expected Q={num_outcomes}")
            for q, p in enumerate(row):
                if p < 0 or p > 1:
                    raise ValidationError(f"p[{a}][{q}] = {p} must lie in [0, 1]")
            if sum(row) != 1:
                raise ValidationError(f"p[{a}] sums to {sum(row)}, expected 1")

        if len(self.valuations) != len(self.mu):
            raise ValidationError(
                f"v has {len(self.valuations)} rows, expected T={len(self.mu)}"
            )
        for t, row in enumerate(self.valuations):
            if len(row) != num_outcomes:
                raise ValidationError(f"v[{t}] has {len(row)} entries, expected Q={num_outcomes}")
            for q, v in enumerate(row):
                if v < 0:
                    raise ValidationError(f"v[{t}][{q}] = {v} must be nonnegative")

    @property
    def num_types(self) -> int:
        return len(self.mu)

    @property
    def num_actions(self) -> int:
        return len(self.costs)

    @property
    def num_outcomes(self) -> int:
        return len(self.transitions[0])

    def cost(self, action: int) -> Fraction:
        if action == OPT_OUT:
            return Fraction(0)
        _check_index("action", action, self.num_actions)
        return self.costs[action]

    def prob(self, action: int, outcome: int) -> Fraction:
        _check_index("action", action, self.num_actions)
        return self.transitions[action][outcome]

    def action_value(self, t: int, action: int) -> Fraction:
        """Expected valuation of type ``t`` when every outcome of ``action`` is accepted for free."""
        if action == OPT_OUT:
            return Fraction(0)
        _check_index("type", t, self.num_types)
        row = self.transitions[action]
        return sum((p * v for p, v in zip(row, self.valuations[t])), Fraction(0))

    def with_costs(self, costs: Sequence[object]) -> "Instance":
        return Instance(self.mu, tuple(costs), self.transitions, self.valuations)


@dataclass(frozen=True)
class Contract:
    """Two-part tariff ``(action, upfront, usage)``; usage entries may be EXCLUDE."""

    action: int
    upfront: Fraction
    usage: Tuple[UsagePrice, ...]

    def __post_init__(self) -> None:
        if not isinstance(self.action, int) or self.action < OPT_OUT:
            raise ValidationError(f"contract action {self.action!r} is not a valid action index")
        upfront = as_rational(self.upfront, "w")
        if upfront < 0:
            raise ValidationError(f"upfront price w = {upfront} must be nonnegative")
        usage = tuple(as_usage_price(x, f"x[{q}]") for q, x in enumerate(self.usage))
        for q, x in enumerate(usage):
            if x is not EXCLUDE and x < 0:
                raise ValidationError(f"usage price x[{q}] = {x} must be nonnegative")
        object.__setattr__(self, "upfront", upfront)
        object.__setattr__(self, "usage", usage)

    @classmethod
    def opt_out(cls, num_outcomes: int) -> "Contract":
        return cls(OPT_OUT, Fraction(0), (EXCLUDE,) * num_outcomes)

    @classmethod
    def upfront_only(cls, action: int, upfront: object, num_outcomes: int) -> "Contract":
        return cls(action, as_rational(upfront), (Fraction(0),) * num_outcomes)

    @property
    def is_opt_out(self) -> bool:
        return self.action == OPT_OUT

    @property
    def has_exclusions(self) -> bool:
        return any(x is EXCLUDE for x in self.usage)

    @property
    def is_two_price(self) -> bool:
        """All usage prices are either 0 or EXCLUDE."""
        return all(x is EXCLUDE or x == 0 for x in self.usage)


class _Menu:
    contracts: Tuple[Contract, ...]

    def __len__(self) -> int:
        return len(self.contracts)

    def __iter__(self) -> Iterator[Contract]:
        return iter(self.contracts)

    def __getitem__(self, index: int) -> Contract:
        return self.contracts[index]


@dataclass(frozen=True)
class DirectMenu(_Menu):
    """One contract per type; contract ``t`` is intended for type ``t``."""

    contracts: Tuple[Contract, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "contracts", tuple(self.contracts))


@dataclass(frozen=True)
class IndirectMenu(_Menu):
    """Any number of contracts; the opt-out option is implicit."""

    contracts: Tuple[Contract, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "contracts", tuple(self.contracts))


@dataclass(frozen=True)
class TypeReport:
    choice: int
    utility: Fraction
    revenue: Fraction
    profit: Fraction
    accepted: FrozenSet[int]


@dataclass(frozen=True)
class MenuDiagnostics:
    types: Tuple[TypeReport, ...]
    ic_violations: Tuple[Tuple[int, int], ...] = ()
    ir_violations: Tuple[int, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.ic_violations and not self.ir_violations

    @property
    def choices(self) -> Tuple[int, ...]:
        return tuple(report.choice for report in self.types)

    def describe(self) -> str:
        parts: List[str] = []
        if self.ic_violations:
            pairs = ", ".join(f"type {t} prefers contract {k}" for t, k in self.ic_violations)
            parts.append(f"IC violated ({pairs})")
        if self.ir_violations:
            types = ", ".join(str(t) for t in self.ir_violations)
            parts.append(f"IR violated for type(s) {types}")
        return "; ".join(parts) or "IC and IR hold"


def check_contract(contract: Contract, inst: Instance) -> None:
    if contract.action != OPT_OUT:
        _check_index("action", contract.action, inst.num_actions)
    if len(contract.usage) != inst.num_outcomes:
        raise ValidationError(
            f"contract has {len(contract.usage)} usage prices, expected Q={inst.num_outcomes}"
        )


def accepts(valuation: Fraction, price: UsagePrice, favor_seller: bool = True) -> bool:
    if price is EXCLUDE:
        return False
    return valuation >= price if favor_seller else valuation > price


def accepted_outcomes(
    t: int, contract: Contract, inst: Instance, favor_seller: bool = True
) -> FrozenSet[int]:
    _check_index("type", t, inst.num_types)
    check_contract(contract, inst)
    if contract.is_opt_out:
        return frozenset()
    values = inst.valuations[t]
    return frozenset(
        q for q, x in enumerate(contract.usage) if accepts(values[q], x, favor_seller)
    )


def contract_value(t: int, contract: Contract, inst: Instance) -> Fraction:
    """V(t; C): the buyer's expected surplus before the upfront price, i.e. U + w."""
    _check_index("type", t, inst.num_types)
    check_contract(contract, inst)
    if contract.is_opt_out:
        return Fraction(0)
    row = inst.transitions[contract.action]
    total = Fraction(0)
    for q, x in enumerate(contract.usage):
        if x is EXCLUDE:
            continue
        gain = inst.valuations[t][q] - x
        if gain > 0:
            total += row[q] * gain
    return total


def gross_accepted_value(t: int, contract: Contract, inst: Instance) -> Fraction:
    """Expected valuation over the outcomes type ``t`` accepts, payments ignored."""
    accepted = accepted_outcomes(t, contract, inst)
    if not accepted:
        return Fraction(0)
    row = inst.transitions[contract.action]
    return sum((row[q] * inst.valuations[t][q] for q in accepted), Fraction(0))


def buyer_utility_voluntary(t: int, contract: Contract, inst: Instance) -> Fraction:
    return contract_value(t, contract, inst) - contract.upfront


def buyer_utility_mandatory(t: int, contract: Contract, inst: Instance) -> Fraction:
    _check_index("type", t, inst.num_types)
    check_contract(contract, inst)
    if contract.is_opt_out:
        return Fraction(0)
    if contract.has_exclusions:
        raise RegimeMismatchError("EXCLUDE usage price is not allowed under mandatory usage")
    row = inst.transitions[contract.action]
    surplus = sum(
        (p * (v - x) for p, v, x in zip(row, inst.valuations[t], contract.usage)), Fraction(0)
    )
    return surplus - contract.upfront


def buyer_utility(
    t: int, contract: Contract, inst: Instance, regime: Regime = Regime.VOLUNTARY
) -> Fraction:
    if regime is Regime.MANDATORY:
        return buyer_utility_mandatory(t, contract, inst)
    return buyer_utility_voluntary(t, contract, inst)


def usage_revenue(
    t: int,
    contract: Contract,
    inst: Instance,
    regime: Regime = Regime.VOLUNTARY,
    favor_seller: bool = True,
) -> Fraction:
    if contract.is_opt_out:
        return Fraction(0)
    row = inst.transitions[contract.action]
    if regime is Regime.MANDATORY:
        if contract.has_exclusions:
            raise RegimeMismatchError("EXCLUDE usage price is not allowed under mandatory usage")
        return sum((p * x for p, x in zip(row, contract.usage)), Fraction(0))
    accepted = accepted_outcomes(t, contract, inst, favor_seller)
    return sum((row[q] * contract.usage[q] for q in accepted), Fraction(0))


def seller_revenue(
    t: int,
    contract: Contract,
    inst: Instance,
    regime: Regime = Regime.VOLUNTARY,
    favor_seller: bool = True,
) -> Fraction:
    return contract.upfront + usage_revenue(t, contract, inst, regime, favor_seller)


def seller_profit(
    t: int,
    contract: Contract,
    inst: Instance,
    regime: Regime = Regime.VOLUNTARY,
    favor_seller: bool = True,
) -> Fraction:
    return seller_revenue(t, contract, inst, regime, favor_seller) - inst.cost(contract.action)


def _type_report(
    t: int, choice: int, contract: Contract, inst: Instance, regime: Regime, utility: Fraction
) -> TypeReport:
    revenue = seller_revenue(t, contract, inst, regime)
    if regime is Regime.MANDATORY and not contract.is_opt_out:
        accepted = frozenset(range(inst.num_outcomes))
    else:
        accepted = accepted_outcomes(t, contract, inst)
    return TypeReport(
        choice=choice,
        utility=utility,
        revenue=revenue,
        profit=revenue - inst.cost(contract.action),
        accepted=accepted,
    )


def validate_menu(
    menu: DirectMenu, inst: Instance, regime: Regime = Regime.VOLUNTARY
) -> MenuDiagnostics:
    """List every violated IC pair and IR type of a direct menu, exactly."""
    num_types = inst.num_types
    if len(menu) != num_types:
        raise ValidationError(f"menu has {len(menu)} contracts, expected T={num_types}")
    for contract in menu:
        check_contract(contract, inst)

    utilities = [
        [buyer_utility(t, contract, inst, regime) for contract in menu] for t in range(num_types)
    ]
    ic_violations = tuple(
        (t, k)
        for t in range(num_types)
        for k in range(num_types)
        if k != t and utilities[t][t] < utilities[t][k]
    )
    ir_violations = tuple(t for t in range(num_types) if utilities[t][t] < 0)
    reports = tuple(
        _type_report(t, t, menu[t], inst, regime, utilities[t][t]) for t in range(num_types)
    )
    return MenuDiagnostics(reports, ic_violations, ir_violations)


def direct_menu_profit(
    menu: DirectMenu,
    inst: Instance,
    regime: Regime = Regime.VOLUNTARY,
    favor_seller: bool = True,
) -> Fraction:
    """Expected seller profit of an IC and IR direct menu.

    ``favor_seller=False`` evaluates with buyers rejecting outcomes priced exactly at
    their valuation; utilities and therefore IC are unaffected by that tie rule.
    """
    diagnostics = validate_menu(menu, inst, regime)
    if not diagnostics.ok:
        raise IncentiveError(f"menu is not IC/IR: {diagnostics.describe()}", diagnostics)
    return sum(
        (
            m * seller_profit(t, menu[t], inst, regime, favor_seller)
            for t, m in enumerate(inst.mu)
        ),
        Fraction(0),
    )


def _choose(t: int, menu: IndirectMenu, inst: Instance) -> Tuple[int, Fraction, Fraction]:
    """Utility-maximal contract; ties go to the larger ``w - c(a)``, then the lower index."""
    # Opt-out comes first so it wins exact ties.
    best, best_utility, best_margin = OPT_OUT, Fraction(0), Fraction(0)
    for k, contract in enumerate(menu):
        utility = buyer_utility_voluntary(t, contract, inst)
        if utility < best_utility:
            continue
        margin = contract.upfront - inst.cost(contract.action)
        if utility > best_utility or margin > best_margin:
            best, best_utility, best_margin = k, utility, margin
    if best == OPT_OUT:
        return best, best_utility, Fraction(0)
    return best, best_utility, seller_profit(t, menu[best], inst)


def indirect_choice_and_profit(
    menu: IndirectMenu, inst: Instance
) -> Tuple[Tuple[int, ...], Fraction]:
    choices: List[int] = []
    profit = Fraction(0)
    for t, m in enumerate(inst.mu):
        choice, _, type_profit = _choose(t, menu, inst)
        choices.append(choice)
        profit += m * type_profit
    return tuple(choices), profit


def indirect_diagnostics(menu: IndirectMenu, inst: Instance) -> MenuDiagnostics:
    reports = []
    for t in range(inst.num_types):
        choice, utility, _ = _choose(t, menu, inst)
        contract = menu[choice] if choice != OPT_OUT else Contract.opt_out(inst.num_outcomes)
        reports.append(_type_report(t, choice, contract, inst, Regime.VOLUNTARY, utility))
    return MenuDiagnostics(tuple(reports))
