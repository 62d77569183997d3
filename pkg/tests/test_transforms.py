from fractions import Fraction as F

import pytest

import tariffmenu.transforms as tr
from tariffmenu.errors import IncentiveError, RegimeMismatchError, ValidationError
from tariffmenu.instances import (
    gen_hmu_worstcase,
    gen_random,
    gen_random_ic_menu,
    gen_single_param_counterexample,
    gen_usage_gap,
)
from tariffmenu.model import (
    EXCLUDE,
    Contract,
    DirectMenu,
    Instance,
    Regime,
    buyer_utility_mandatory,
    buyer_utility_voluntary,
    direct_menu_profit,
    seller_profit,
    seller_revenue,
    validate_menu,
)


def single_type():
    return Instance((1,), (0,), ((F(1, 2), F(1, 2)),), ((3, 4),))


def expected_revenue(menu, inst):
    return sum(m * seller_revenue(t, menu[t], inst) for t, m in enumerate(inst.mu))


def test_normalize_single_contract():
    inst = single_type()
    before = DirectMenu((Contract(0, 1, (2, 5)),))
    after = tr.normalize_two_prices(before, inst)
    assert after[0] == Contract(0, 2, (0, EXCLUDE))
    assert buyer_utility_voluntary(0, after[0], inst) == F(-1, 2)
    assert seller_profit(0, after[0], inst) == seller_profit(0, before[0], inst) == 2


def test_normalize_shared_contract_splits_it():
    inst = gen_hmu_worstcase((F(1, 2), F(1, 2)))
    shared = Contract(0, 0, (4, 2))
    after = tr.normalize_two_prices(DirectMenu((shared, shared)), inst)
    assert after[0] == Contract(0, 2, (0, EXCLUDE))
    assert after[1] == Contract(0, 1, (EXCLUDE, 0))
    assert direct_menu_profit(after, inst) == F(3, 2)


def test_normalize_is_idempotent():
    inst = gen_hmu_worstcase((F(1, 2), F(1, 2)))
    menu = DirectMenu((Contract(0, 2, (0, EXCLUDE)), Contract(0, 1, (EXCLUDE, 0))))
    assert tr.normalize_two_prices(menu, inst) == menu


def test_normalize_keeps_opt_out_contracts():
    inst = gen_usage_gap()
    menu = DirectMenu((Contract.opt_out(2), Contract(0, 0, (1, 1))))
    after = tr.normalize_two_prices(menu, inst)
    assert after[0].is_opt_out
    assert after[1] == Contract(0, F(1, 2), (EXCLUDE, 0))


def test_normalize_requires_ic():
    inst = gen_single_param_counterexample().base
    bad = DirectMenu((Contract(0, 1, (0, 0)), Contract(1, 4, (0, 0))))
    with pytest.raises(IncentiveError):
        tr.normalize_two_prices(bad, inst)


@pytest.mark.parametrize("seed", range(25))
def test_normalize_preserves_utilities_and_profit(seed):
    inst = gen_random(2, 2, 2, seed)
    menu = gen_random_ic_menu(inst, seed)
    after = tr.normalize_two_prices(menu, inst)
    assert all(contract.is_two_price for contract in after)
    for t in range(inst.num_types):
        assert buyer_utility_voluntary(t, after[t], inst) == buyer_utility_voluntary(t, menu[t], inst)
    assert validate_menu(after, inst).ok
    assert direct_menu_profit(after, inst) == direct_menu_profit(menu, inst)


def test_zero_usage_for_highest_on_split_menu():
    inst = gen_hmu_worstcase((F(1, 2), F(1, 2)))
    menu = DirectMenu((Contract(0, 2, (0, EXCLUDE)), Contract(0, 1, (EXCLUDE, 0))))
    after = tr.zero_usage_for_highest(menu, inst)
    assert after[0] == Contract(0, 2, (0, 0))
    assert after[1] == menu[1]
    assert direct_menu_profit(after, inst) == F(3, 2)


def test_zero_usage_for_all_tied_highest_contracts():
    inst = gen_usage_gap()
    contract = Contract(0, F(1, 4), (0, EXCLUDE))
    after = tr.zero_usage_for_highest(DirectMenu((contract, contract)), inst)
    assert after[0] == after[1] == Contract(0, F(1, 4), (0, 0))


def test_zero_usage_single_type_keeps_price():
    inst = single_type()
    after = tr.zero_usage_for_highest(DirectMenu((Contract(0, 1, (0, EXCLUDE)),)), inst)
    assert after[0] == Contract(0, 1, (0, 0))


def test_zero_usage_requires_two_prices():
    inst = single_type()
    with pytest.raises(ValidationError):
        tr.zero_usage_for_highest(DirectMenu((Contract(0, 0, (1, 0)),)), inst)


@pytest.mark.parametrize("seed", range(25))
def test_zero_usage_keeps_menu_valid_and_revenue(seed):
    inst = gen_random(2, 2, 2, seed)
    menu = tr.normalize_two_prices(gen_random_ic_menu(inst, seed), inst)
    after = tr.zero_usage_for_highest(menu, inst)
    assert validate_menu(after, inst).ok
    assert expected_revenue(after, inst) >= expected_revenue(menu, inst)
    top = max((c.upfront for c in after if not c.is_opt_out), default=None)
    for contract in after:
        if not contract.is_opt_out and contract.upfront == top:
            assert contract.usage == (0,) * inst.num_outcomes


def test_mandatory_to_upfront_example():
    inst = single_type()
    before = DirectMenu((Contract(0, 1, (2, 5)),))
    after = tr.mandatory_to_upfront(before, inst)
    assert after[0] == Contract(0, F(9, 2), (0, 0))
    assert buyer_utility_mandatory(0, before[0], inst) == buyer_utility_voluntary(0, after[0], inst) == -1


def test_mandatory_to_upfront_rejects_exclude():
    inst = single_type()
    with pytest.raises(RegimeMismatchError):
        tr.mandatory_to_upfront(DirectMenu((Contract(0, 0, (0, EXCLUDE)),)), inst)


@pytest.mark.parametrize("seed", range(15))
def test_mandatory_to_upfront_preserves_every_utility(seed):
    inst = gen_random(2, 2, 3, seed)
    contracts = tuple(
        Contract(seed % 2, F(seed % 5, 2), tuple(F((seed + t + q) % 7) for q in range(3)))
        for t in range(2)
    )
    before = DirectMenu(contracts)
    after = tr.mandatory_to_upfront(before, inst)
    for t in range(2):
        for k in range(2):
            assert buyer_utility_mandatory(t, before[k], inst) == buyer_utility_voluntary(
                t, after[k], inst
            )
            assert seller_revenue(t, before[k], inst, Regime.MANDATORY) == seller_revenue(
                t, after[k], inst
            )
