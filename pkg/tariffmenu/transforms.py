"""Menu rewrites that preserve utilities: two-price normalization, zero usage, redistribution."""

from fractions import Fraction
from typing import List

from tariffmenu.errors import IncentiveError, RegimeMismatchError, ValidationError
from tariffmenu.model import (
    EXCLUDE,
    Contract,
    DirectMenu,
    Instance,
    accepted_outcomes,
    buyer_utility_voluntary,
    check_contract,
    seller_profit,
    validate_menu,
)


def _require_ic(menu: DirectMenu, inst: Instance) -> None:
    diagnostics = validate_menu(menu, inst)
    if diagnostics.ic_violations:
        raise IncentiveError(f"menu is not IC: {diagnostics.describe()}", diagnostics)


def normalize_two_prices(menu: DirectMenu, inst: Instance) -> DirectMenu:
    """Move every accepted usage payment into the upfront price.

    Outcomes a type accepts under its own contract become free, all others EXCLUDE.
    """
    _require_ic(menu, inst)
    contracts: List[Contract] = []
    for t, contract in enumerate(menu):
        if contract.is_opt_out:
            contracts.append(contract)
            continue
        accepted = accepted_outcomes(t, contract, inst)
        row = inst.transitions[contract.action]
        upfront = contract.upfront + sum(
            (row[q] * contract.usage[q] for q in accepted), Fraction(0)
        )
        usage = tuple(
            Fraction(0) if q in accepted else EXCLUDE for q in range(inst.num_outcomes)
        )
        contracts.append(Contract(contract.action, upfront, usage))
    return DirectMenu(tuple(contracts))


def zero_usage_for_highest(menu: DirectMenu, inst: Instance) -> DirectMenu:
    """Drop the usage exclusions of every contract with the largest upfront price.

    Types that now strictly prefer one of those contracts are moved onto it.
    """
    for contract in menu:
        check_contract(contract, inst)
        if not contract.is_two_price:
            raise ValidationError("zero_usage_for_highest needs usage prices in {0, EXCLUDE}")
    _require_ic(menu, inst)

    served = [t for t, contract in enumerate(menu) if not contract.is_opt_out]
    if not served:
        return menu
    top = max(menu[t].upfront for t in served)
    highest = [t for t in served if menu[t].upfront == top]

    contracts = list(menu)
    for h in highest:
        contracts[h] = Contract.upfront_only(menu[h].action, top, inst.num_outcomes)
    candidates = [contracts[h] for h in highest]

    for t in range(inst.num_types):
        current = buyer_utility_voluntary(t, contracts[t], inst)
        best = max(
            candidates,
            key=lambda c: (buyer_utility_voluntary(t, c, inst), seller_profit(t, c, inst)),
        )
        if buyer_utility_voluntary(t, best, inst) > current:
            contracts[t] = best
    return DirectMenu(tuple(contracts))


def mandatory_to_upfront(menu: DirectMenu, inst: Instance) -> DirectMenu:
    """Fold the expected mandatory usage payments of each contract into its upfront price."""
    contracts: List[Contract] = []
    for contract in menu:
        check_contract(contract, inst)
        if contract.is_opt_out:
            contracts.append(contract)
            continue
        if contract.has_exclusions:
            raise RegimeMismatchError("mandatory menus cannot carry EXCLUDE usage prices")
        row = inst.transitions[contract.action]
        upfront = contract.upfront + sum(
            (p * x for p, x in zip(row, contract.usage)), Fraction(0)
        )
        contracts.append(Contract.upfront_only(contract.action, upfront, inst.num_outcomes))
    return DirectMenu(tuple(contracts))
