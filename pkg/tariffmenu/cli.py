"""Command-line front end for the tariff menu solvers."""

import argparse
import json
import logging
import sys
from fractions import Fraction
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, Tuple

try:  # pragma: no cover - optional dependency used for rich tables
    from terminaltables import AsciiTable
except ImportError:  # pragma: no cover
    AsciiTable = None

try:  # pragma: no cover - colour output is optional in tests
    from termcolor import colored
except ImportError:  # pragma: no cover
    def colored(text, *_args, **_kwargs):
        return text

from tariffmenu.config import (
    DEFAULT_ACTIONS,
    DEFAULT_EPSILON,
    DEFAULT_OUTCOMES,
    DEFAULT_SEED,
    DEFAULT_THREADS,
    DEFAULT_TYPES,
    DEFAULT_VALUE_BOUND,
    SolverLimits,
    collect_default_updates,
    config_path,
    get_default,
    load_user_defaults,
    save_user_defaults,
)
from tariffmenu.errors import GuardError, IncentiveError, SolverConsistencyError, ValidationError
from tariffmenu.exact import (
    SolveResult,
    solve_exact,
    solve_mandatory,
    solve_upfront_only,
    solve_usage_only,
)
from tariffmenu.fptas import fptas_solve
from tariffmenu.instance_io import (
    LoadedInstance,
    instance_to_dict,
    load_instance,
    load_menu,
    menu_to_dict,
    save_instance,
)
from tariffmenu.instances import (
    Multiset,
    gen_hmu_worstcase,
    gen_partition_instance,
    gen_random,
    gen_random_single_param,
    gen_single_param_counterexample,
    gen_usage_gap,
    partition_reduction,
    subset_sum_oracle,
)
from tariffmenu.interactive_config import is_interactive_available, prompt_missing_params
from tariffmenu.model import (
    IndirectMenu,
    Instance,
    Regime,
    as_rational,
    check_contract,
    direct_menu_profit,
    indirect_choice_and_profit,
    indirect_diagnostics,
    validate_menu,
)
from tariffmenu.report import (
    compare_regimes,
    comparison_to_dict,
    diagnostics_table,
    diagnostics_to_dict,
    dump_json,
    format_amount,
    format_decimal,
    format_rational,
    menu_table,
    render_comparison,
    render_result,
    result_to_dict,
    verdict,
)
from tariffmenu.single_param import (
    SingleParamInstance,
    best_single_contract,
    lp_relaxation_optimum,
    single_contract_profits,
    single_param_M,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INCONSISTENT = 1
EXIT_INVALID = 2
EXIT_GUARD = 3

GENERATOR_FIELDS = ("types", "actions", "outcomes", "value_bound", "seed")
BUILTIN_GENERATOR_DEFAULTS = {
    "types": DEFAULT_TYPES,
    "actions": DEFAULT_ACTIONS,
    "outcomes": DEFAULT_OUTCOMES,
    "value_bound": DEFAULT_VALUE_BOUND,
    "seed": DEFAULT_SEED,
}


def _base(inst: LoadedInstance) -> Instance:
    return inst.base if isinstance(inst, SingleParamInstance) else inst


def _parse_list(text: str, name: str) -> List[str]:
    parts = [part.strip() for part in text.split(",")]
    if not text.strip() or any(not part for part in parts):
        raise ValidationError(f"{name}: expected a comma separated list, got {text!r}")
    return parts


def parse_items(text: str) -> Multiset:
    items = []
    for part in _parse_list(text, "--items"):
        try:
            items.append(int(part))
        except ValueError:
            raise ValidationError(f"--items: {part!r} is not an integer") from None
    return Multiset(tuple(items))


def parse_mu(text: str) -> Tuple[Fraction, ...]:
    return tuple(as_rational(part, f"mu[{t}]") for t, part in enumerate(_parse_list(text, "--mu")))


def _limits(defaults: Dict[str, object]) -> SolverLimits:
    return SolverLimits.from_defaults(defaults)


def _workers(args: argparse.Namespace, defaults: Dict[str, object]) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    stored = get_default(defaults, "threads")
    return max(1, int(stored)) if stored is not None else DEFAULT_THREADS


def _emit(args: argparse.Namespace, data: Dict[str, Any], text: str) -> None:
    print(dump_json(data) if args.json else text)


def _check_replay(result: SolveResult, inst: Instance) -> None:
    replayed = result.replay_profit(inst)
    if replayed != result.profit:
        raise SolverConsistencyError(
            f"witness menu earns {replayed} on replay, solver reported {result.profit}"
        )


def cmd_solve(args: argparse.Namespace, defaults: Dict[str, object]) -> int:
    inst = _base(load_instance(args.file))
    limits, workers = _limits(defaults), _workers(args, defaults)
    if args.regime == "full":
        result = solve_exact(inst, limits, verify_grid=args.verify_grid, workers=workers)
    elif args.regime == "upfront":
        result = solve_upfront_only(inst, limits, workers)
    elif args.regime == "usage":
        result = solve_usage_only(inst, limits, workers)
    else:
        result = solve_mandatory(inst, limits, workers, cross_check=args.cross_check)
    _check_replay(result, inst)
    _emit(args, result_to_dict(result), render_result(result))
    return EXIT_OK


def cmd_compare(args: argparse.Namespace, defaults: Dict[str, object]) -> int:
    inst = _base(load_instance(args.file))
    comparison = compare_regimes(inst, _limits(defaults), _workers(args, defaults))
    _emit(args, comparison_to_dict(comparison), render_comparison(comparison))
    return EXIT_OK


def cmd_fptas(args: argparse.Namespace, defaults: Dict[str, object]) -> int:
    inst = _base(load_instance(args.file))
    if args.eps is not None:
        epsilon = as_rational(args.eps, "--eps")
    else:
        stored = get_default(defaults, "epsilon")
        epsilon = stored if stored is not None else DEFAULT_EPSILON
    result = fptas_solve(
        inst,
        epsilon,
        trim=not args.no_trim,
        limits=_limits(defaults),
        workers=_workers(args, defaults),
    )
    data = result_to_dict(result)
    data["epsilon"] = format_rational(epsilon)
    data["trimmed"] = not args.no_trim
    text = render_result(result) + f"\nGuarantee: profit >= (1 - {epsilon}) * optimum"
    _emit(args, data, text)
    return EXIT_OK


def cmd_single_param(args: argparse.Namespace, defaults: Dict[str, object]) -> int:
    inst = load_instance(args.file)
    if not isinstance(inst, SingleParamInstance):
        raise ValidationError(f"{args.file}: single-param needs 'alpha' and 'baseline' keys")
    top, action = single_param_M(inst)
    relaxation, cutoff = lp_relaxation_optimum(inst)
    menu, revenue = best_single_contract(inst)
    search = single_contract_profits(inst)
    zero_costs = all(c == 0 for c in inst.base.costs)

    data = {
        "M": format_rational(top),
        "best_action": action,
        "lp_relaxation": format_rational(relaxation),
        "cutoff_type": cutoff,
        "single_contract": menu_to_dict(menu),
        "single_contract_revenue": format_rational(revenue),
        "best_single_contract_profit": format_rational(search.profit),
        "best_single_contract_revenue": format_rational(search.revenue),
        "zero_costs": zero_costs,
    }
    lines = [
        colored("Single-parameter instance", "cyan", attrs=["bold"]),
        f"M = {format_amount(top)} on action {action}",
        f"LP relaxation optimum: {format_amount(relaxation)} (cutoff type {cutoff})",
        menu_table(menu, " Revenue-optimal single contract "),
        f"Single contract revenue: {format_amount(revenue)}",
        f"Best single contract profit (exhaustive): {format_amount(search.profit)}",
    ]
    if not zero_costs:
        lines.append(colored("Costs are nonzero: the single contract is revenue-optimal, not necessarily profit-optimal", "yellow"))
    _emit(args, data, "\n".join(lines))
    return EXIT_OK


def cmd_reduce_partition(args: argparse.Namespace, defaults: Dict[str, object]) -> int:
    items = parse_items(args.items)
    exists, result = partition_reduction(items, _limits(defaults))
    if exists != subset_sum_oracle(items):
        raise SolverConsistencyError("reduction verdict disagrees with the subset-sum oracle")
    target = Fraction(9 * items.total, 4)
    if exists:
        text = f"PARTITION EXISTS (profit {result.profit} = 9M/4)"
    else:
        text = f"NO PARTITION (profit {result.profit} < 9M/4 = {target})"
    data = {
        "items": list(items.items),
        "partition_exists": exists,
        "profit": format_rational(result.profit),
        "profit_decimal": format_decimal(result.profit),
        "threshold": format_rational(target),
    }
    _emit(args, data, verdict(exists, text))
    return EXIT_OK


def highlight_value(value: object, field: str, auto_fields: Iterable[str], default_fields: Iterable[str]) -> str:
    if field in auto_fields:
        return colored(f"{value} *", "cyan")
    if field in default_fields:
        return colored(f"{value} †", "yellow")
    return str(value)


def resolve_generator_params(
    args: argparse.Namespace, defaults: Dict[str, object], use_defaults: bool = False
) -> Tuple[Dict[str, int], List[str], List[str]]:
    """Command line first, then stored defaults, then prompts, then built-in values."""
    auto_fields: List[str] = []
    default_fields: List[str] = []
    params: Dict[str, Optional[int]] = {}
    for field in GENERATOR_FIELDS:
        value = getattr(args, field, None)
        if value is None:
            value = get_default(defaults, field)
            if value is not None:
                default_fields.append(field)
        params[field] = value

    missing = [field for field in GENERATOR_FIELDS if params[field] is None]
    if missing and not use_defaults and sys.stdin.isatty() and is_interactive_available():
        params.update(prompt_missing_params(missing, BUILTIN_GENERATOR_DEFAULTS))

    for field in GENERATOR_FIELDS:
        if params[field] is None:
            params[field] = BUILTIN_GENERATOR_DEFAULTS[field]
            auto_fields.append(field)
    return {k: int(v) for k, v in params.items()}, auto_fields, default_fields


def print_generator_summary(
    params: Dict[str, int], auto_fields: Sequence[str], default_fields: Sequence[str], output: str
) -> None:
    rows = [
        ("Types T", highlight_value(params["types"], "types", auto_fields, default_fields)),
        ("Actions A", highlight_value(params["actions"], "actions", auto_fields, default_fields)),
        ("Outcomes Q", highlight_value(params["outcomes"], "outcomes", auto_fields, default_fields)),
        ("Value bound", highlight_value(params["value_bound"], "value_bound", auto_fields, default_fields)),
        ("Seed", highlight_value(params["seed"], "seed", auto_fields, default_fields)),
        ("Output", output),
    ]
    if AsciiTable:
        table = AsciiTable([["Setting", "Value"]] + [list(row) for row in rows])
        table.justify_columns[0] = "right"
        table.justify_columns[1] = "left"
        print(table.table)
    else:  # pragma: no cover - fallback formatting for missing dependency
        for setting, value in rows:
            print(f"{setting:>12}: {value}")

    if auto_fields:
        print(colored("* Built-in default", "cyan"))
    if default_fields:
        print(colored("† Loaded from saved defaults", "yellow"))


def cmd_gen(args: argparse.Namespace, defaults: Dict[str, object]) -> int:
    family = args.family
    if family == "hmu":
        inst: LoadedInstance = gen_hmu_worstcase(parse_mu(args.mu))
    elif family == "usage-gap":
        inst = gen_usage_gap()
    elif family == "partition":
        inst = gen_partition_instance(parse_items(args.items))
    elif family == "counterexample":
        inst = gen_single_param_counterexample()
    else:
        params, auto_fields, default_fields = resolve_generator_params(
            args, defaults, use_defaults=args.defaults
        )
        generator = gen_random_single_param if args.single_param else gen_random
        inst = generator(
            params["types"],
            params["actions"],
            params["outcomes"],
            params["seed"],
            value_bound=params["value_bound"],
        )
        if args.output:
            print_generator_summary(params, auto_fields, default_fields, args.output)

    if args.output:
        save_instance(inst, args.output)
        print(f"Wrote {family} instance to {args.output}")
    else:
        print(json.dumps(instance_to_dict(inst), indent=2))
    return EXIT_OK


def cmd_check_menu(args: argparse.Namespace, defaults: Dict[str, object]) -> int:
    inst = _base(load_instance(args.file))
    menu = load_menu(args.menu)
    regime = Regime(args.regime)

    if isinstance(menu, IndirectMenu):
        if regime is not Regime.VOLUNTARY:
            raise ValidationError("indirect menus are evaluated under voluntary usage only")
        for contract in menu:
            check_contract(contract, inst)
        diagnostics = indirect_diagnostics(menu, inst)
        profit = indirect_choice_and_profit(menu, inst)[1]
        data = {
            "indirect": True,
            "profit": format_rational(profit),
            "profit_decimal": format_decimal(profit),
            "diagnostics": diagnostics_to_dict(diagnostics),
        }
        text = "\n".join(
            [
                menu_table(menu, " Indirect menu "),
                diagnostics_table(diagnostics),
                f"Profit: {format_amount(profit)}",
            ]
        )
        _emit(args, data, text)
        return EXIT_OK

    diagnostics = validate_menu(menu, inst, regime)
    data: Dict[str, Any] = {
        "indirect": False,
        "regime": regime.value,
        "diagnostics": diagnostics_to_dict(diagnostics),
    }
    lines = [menu_table(menu, " Direct menu "), diagnostics_table(diagnostics)]
    if diagnostics.ok:
        profit = direct_menu_profit(menu, inst, regime)
        data["profit"] = format_rational(profit)
        data["profit_decimal"] = format_decimal(profit)
        lines.append(f"Profit: {format_amount(profit)}")
    lines.append(verdict(diagnostics.ok, diagnostics.describe()))
    _emit(args, data, "\n".join(lines))
    if not diagnostics.ok:
        raise IncentiveError(f"menu is not IC/IR: {diagnostics.describe()}", diagnostics)
    return EXIT_OK


def cmd_defaults(args: argparse.Namespace, defaults: Dict[str, object]) -> int:
    if args.show:
        rows = [["Setting", "Value"]] + [[key, str(value)] for key, value in sorted(defaults.items())]
        if AsciiTable:
            table = AsciiTable(rows)
            table.title = f" {config_path()} "
            print(table.table)
        else:  # pragma: no cover
            for key, value in rows[1:]:
                print(f"{key:>20}: {value}")
        return EXIT_OK

    updates = collect_default_updates(args)
    if updates:
        save_user_defaults(updates)
    else:
        print("No values provided to save as defaults.")
    return EXIT_OK


def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="store_true", help="Log solver progress to stderr")
    common.add_argument("--json", action="store_true", help="Print a machine-readable report")
    common.add_argument("--threads", type=int, help="Worker processes for the enumerative solvers")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_options()
    parser = argparse.ArgumentParser(
        prog="tariffmenu",
        description="Exact and approximate optimal two-part tariff menus for a service provider.",
    )
    subparsers = parser.add_subparsers(dest="command", metavar="command")
    subparsers.required = True

    solve = subparsers.add_parser("solve", parents=[common], help="Optimal menu under one payment regime")
    solve.add_argument("file", help="Instance JSON file")
    solve.add_argument(
        "--regime",
        choices=["full", "upfront", "usage", "mandatory"],
        default="full",
        help="Payment regime (default: full two-part tariff)",
    )
    solve.add_argument("--verify-grid", action="store_true", help="Cross-check R against a usage-price grid")
    solve.add_argument(
        "--cross-check",
        action="store_true",
        help="Cross-check R_mandatory by redistributing mandatory usage payments",
    )
    solve.set_defaults(handler=cmd_solve)

    compare = subparsers.add_parser("compare", parents=[common], help="All four regimes and the sandwich bound")
    compare.add_argument("file", help="Instance JSON file")
    compare.set_defaults(handler=cmd_compare)

    fptas = subparsers.add_parser("fptas", parents=[common], help="(1 - eps)-approximate indirect menu")
    fptas.add_argument("file", help="Instance JSON file")
    fptas.add_argument("--eps", help="Approximation parameter in (0, 1), e.g. 1/10")
    fptas.add_argument("--no-trim", action="store_true", help="Keep every distinct state (exact)")
    fptas.set_defaults(handler=cmd_fptas)

    single = subparsers.add_parser("single-param", parents=[common], help="Single-parameter analysis")
    single.add_argument("file", help="Instance JSON file with alpha and baseline")
    single.set_defaults(handler=cmd_single_param)

    partition = subparsers.add_parser(
        "reduce-partition", parents=[common], help="Decide Partition through the pricing reduction"
    )
    partition.add_argument("--items", required=True, help="Comma separated positive integers")
    partition.set_defaults(handler=cmd_reduce_partition)

    gen = subparsers.add_parser("gen", help="Write an instance family to JSON")
    families = gen.add_subparsers(dest="family", metavar="family")
    families.required = True
    for name, help_text in (
        ("hmu", "Worst-case instance for upfront-only pricing"),
        ("usage-gap", "Instance where usage-only pricing loses"),
        ("partition", "Partition reduction instance"),
        ("counterexample", "Single-parameter instance where one contract is not profit-optimal"),
        ("random", "Seeded random instance"),
    ):
        family = families.add_parser(name, parents=[common], help=help_text)
        family.add_argument("-o", "--output", help="Output file (default: print to stdout)")
        family.set_defaults(handler=cmd_gen)
        if name == "hmu":
            family.add_argument("--mu", required=True, help="Comma separated prior, e.g. 1/4,3/4")
        elif name == "partition":
            family.add_argument("--items", required=True, help="Comma separated positive integers")
        elif name == "random":
            family.add_argument("--types", type=int, help="Number of buyer types")
            family.add_argument("--actions", type=int, help="Number of seller actions")
            family.add_argument("--outcomes", type=int, help="Number of outcomes")
            family.add_argument("--seed", type=int, help="Random seed")
            family.add_argument("--bound", dest="value_bound", type=int, help="Largest valuation")
            family.add_argument("--single-param", action="store_true", help="Valuations alpha[t] * baseline[q]")
            family.add_argument(
                "-d", "--defaults",
                action="store_true",
                help="Use stored or built-in defaults without interactive prompts",
            )

    check = subparsers.add_parser("check-menu", parents=[common], help="Validate and price a menu file")
    check.add_argument("file", help="Instance JSON file")
    check.add_argument("menu", help="Menu JSON file")
    check.add_argument(
        "--regime",
        choices=[regime.value for regime in Regime],
        default=Regime.VOLUNTARY.value,
        help="Usage regime for direct menus (default: voluntary)",
    )
    check.set_defaults(handler=cmd_check_menu)

    store = subparsers.add_parser("defaults", parents=[common], help="Show or persist default options")
    store.add_argument("--show", action="store_true", help="Print the stored defaults")
    store.add_argument("--epsilon", type=Fraction, help="Default FPTAS epsilon")
    store.add_argument("--types", type=int, help="Default number of types for gen random")
    store.add_argument("--actions", type=int, help="Default number of actions for gen random")
    store.add_argument("--outcomes", type=int, help="Default number of outcomes for gen random")
    store.add_argument("--seed", type=int, help="Default seed for gen random")
    store.add_argument("--bound", dest="value_bound", type=int, help="Default largest valuation")
    for limit in (
        "max_exact_cells",
        "max_assignments",
        "max_usage_cells",
        "max_indirect_types",
        "max_fptas_types",
        "max_grid_menus",
    ):
        store.add_argument("--" + limit.replace("_", "-"), dest=limit, type=int, help=f"Size guard {limit}")
    store.set_defaults(handler=cmd_defaults)
    return parser


def _configure_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def _fail(message: object, code: int) -> int:
    print(f"Error: {message}", file=sys.stderr)
    return code


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _configure_logging(args.verbose)
    defaults = load_user_defaults()
    handler: Callable[[argparse.Namespace, Dict[str, object]], int] = args.handler
    try:
        return handler(args, defaults)
    except GuardError as exc:
        return _fail(exc, EXIT_GUARD)
    except (ValidationError, IndexError) as exc:
        return _fail(exc, EXIT_INVALID)
    except SolverConsistencyError as exc:
        return _fail(exc, EXIT_INCONSISTENT)


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
