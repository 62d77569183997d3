from fractions import Fraction as F

import pytest

import tariffmenu.exact as ex
from tariffmenu.config import SolverLimits
from tariffmenu.errors import GuardError
from tariffmenu.instances import (
    gen_hmu_worstcase,
    gen_random,
    gen_single_param_counterexample,
    gen_usage_gap,
)
from tariffmenu.model import Instance, Regime, direct_menu_profit

HALF = F(1, 2)


def one_type():
    return Instance((1,), (1,), ((1,),), ((5,),))


@pytest.mark.parametrize(
    "inst, full, upfront, usage",
    [
        (one_type(), 4, 4, 4),
        (gen_hmu_worstcase((HALF, HALF)), F(3, 2), 1, F(3, 2)),
        (gen_usage_gap(), F(3, 4), F(3, 4), F(1, 2)),
    ],
)
def test_regime_optima(inst, full, upfront, usage):
    assert ex.solve_exact(inst).profit == full
    assert ex.solve_upfront_only(inst).profit == upfront
    assert ex.solve_usage_only(inst).profit == usage
    assert ex.solve_mandatory(inst).profit == upfront


def test_exact_on_counterexample():
    inst = gen_single_param_counterexample().base
    result = ex.solve_exact(inst)
    assert result.profit == F(7, 6)
    assert result.regime is ex.SolveRegime.FULL


@pytest.mark.parametrize("solver", [ex.solve_exact, ex.solve_upfront_only, ex.solve_usage_only])
def test_witness_replays_to_reported_profit(solver):
    inst = gen_hmu_worstcase((HALF, HALF))
    result = solver(inst)
    assert result.diagnostics.ok
    assert result.replay_profit(inst) == result.profit


def test_mandatory_witness_is_valid_under_mandatory_usage():
    inst = gen_usage_gap()
    result = ex.solve_mandatory(inst)
    assert result.diagnostics.ok
    assert direct_menu_profit(result.menu, inst, Regime.MANDATORY) == result.profit
    assert result.replay_profit(inst) == result.profit


def test_usage_only_witness_has_zero_upfront():
    result = ex.solve_usage_only(gen_usage_gap())
    assert all(contract.upfront == 0 for contract in result.menu)


def test_upfront_only_witness_has_zero_usage():
    result = ex.solve_upfront_only(gen_usage_gap())
    for contract in result.menu:
        assert contract.is_opt_out or all(x == 0 for x in contract.usage)


def test_counters_cover_every_assignment():
    inst = gen_hmu_worstcase((HALF, HALF))
    result = ex.solve_exact(inst)
    assert result.counters.assignments == 4
    assert result.counters.lps_solved == result.counters.patterns
    assert result.elapsed >= 0


def test_exclusion_columns_drop_duplicate_patterns():
    inst = Instance((1,), (0,), ((1, 0),), ((3, 3),))
    columns = ex.exclusion_columns(inst, 0)
    assert [column.values for column in columns] == [(3,), (0,)]
    assert columns[0].full
    assert not columns[1].full
    assert columns[0].usage() == (0, 0)


def test_exclusion_columns_keep_distinct_patterns():
    inst = gen_hmu_worstcase((HALF, HALF))
    values = [column.values for column in ex.exclusion_columns(inst, 0)]
    assert values == [(2, 1), (2, 0), (0, 1), (0, 0)]


def test_exact_guard_on_cells():
    inst = gen_random(3, 1, 7, seed=1)
    with pytest.raises(GuardError, match="max_exact_cells"):
        ex.solve_exact(inst)


def test_usage_guard_on_cells():
    inst = gen_random(2, 1, 5, seed=1)
    with pytest.raises(GuardError, match="max_usage_cells"):
        ex.solve_usage_only(inst)


def test_assignment_guard():
    inst = gen_hmu_worstcase((HALF, HALF))
    with pytest.raises(GuardError, match="max_assignments"):
        ex.solve_exact(inst, SolverLimits(max_assignments=3))


def test_grid_oracle_matches_exclusion_search():
    for inst in (gen_hmu_worstcase((HALF, HALF)), gen_usage_gap()):
        grid_profit, grid_menu = ex.grid_oracle(inst)
        assert grid_profit == ex.solve_exact(inst, verify_grid=True).profit
        assert direct_menu_profit(grid_menu, inst) == grid_profit


def test_grid_guard():
    inst = gen_hmu_worstcase((HALF, HALF))
    with pytest.raises(GuardError, match="max_grid_menus"):
        ex.grid_oracle(inst, SolverLimits(max_grid_menus=10))


def test_redistribution_matches_upfront_only():
    inst = gen_usage_gap()
    profit, _ = ex.redistribution_check(inst)
    assert profit == F(3, 4)
    assert ex.solve_mandatory(inst, cross_check=True).profit == F(3, 4)


def test_parallel_search_matches_serial():
    inst = gen_single_param_counterexample().base
    serial = ex.solve_exact(inst, workers=1)
    parallel = ex.solve_exact(inst, workers=2)
    assert parallel.profit == serial.profit
    assert parallel.menu == serial.menu


def test_parallel_map_keeps_order():
    assert ex.parallel_map(abs, [-3, 1, -2], workers=2) == [3, 1, 2]
    assert ex.parallel_map(abs, [-3], workers=4) == [3]


@pytest.mark.parametrize("seed", range(6))
def test_restricted_regimes_never_beat_full(seed):
    inst = gen_random(2, 2, 2, seed)
    full = ex.solve_exact(inst).profit
    assert ex.solve_upfront_only(inst).profit <= full
    assert ex.solve_usage_only(inst).profit <= full
    assert full >= 0


@pytest.mark.parametrize("seed", range(4))
def test_exact_is_deterministic(seed):
    inst = gen_random(2, 2, 2, seed)
    first, second = ex.solve_exact(inst), ex.solve_exact(inst)
    assert first.profit == second.profit
    assert first.menu == second.menu
