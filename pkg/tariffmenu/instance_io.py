"""JSON instance and menu files. Rationals travel as strings such as ``"3/4"``."""

import json
from fractions import Fraction
from typing import Any, Dict, List, Union

from tariffmenu.errors import ValidationError
from tariffmenu.model import (
    EXCLUDE,
    OPT_OUT,
    Contract,
    DirectMenu,
    IndirectMenu,
    Instance,
    UsagePrice,
    as_rational,
)
from tariffmenu.single_param import SingleParamInstance

LoadedInstance = Union[Instance, SingleParamInstance]
Menu = Union[DirectMenu, IndirectMenu]


def rational_to_json(value: Fraction) -> Union[int, str]:
    return value.numerator if value.denominator == 1 else str(value)


def usage_to_json(value: UsagePrice) -> Union[int, str]:
    return EXCLUDE.value if value is EXCLUDE else rational_to_json(value)


def _require(data: Dict[str, Any], key: str) -> Any:
    if key not in data:
        raise ValidationError(f"instance file is missing key {key!r}")
    return data[key]


def _rational_list(values: Any, name: str) -> List[Fraction]:
    if not isinstance(values, list):
        raise ValidationError(f"{name} must be an array")
    return [as_rational(v, f"{name}[{i}]") for i, v in enumerate(values)]


def _rational_matrix(rows: Any, name: str) -> List[List[Fraction]]:
    if not isinstance(rows, list):
        raise ValidationError(f"{name} must be an array of rows")
    return [_rational_list(row, f"{name}[{i}]") for i, row in enumerate(rows)]


def _check_count(data: Dict[str, Any], key: str, actual: int) -> None:
    if key not in data:
        return
    declared = data[key]
    if isinstance(declared, bool) or not isinstance(declared, int):
        raise ValidationError(f"{key} must be an integer, got {declared!r}")
    if declared != actual:
        raise ValidationError(f"{key} = {declared} but the arrays describe {actual}")


def instance_from_dict(data: Any) -> LoadedInstance:
    """Parse an instance object; ``alpha`` plus ``baseline`` marks a single-parameter instance."""
    if not isinstance(data, dict):
        raise ValidationError("instance file must hold a JSON object")
    mu = _rational_list(_require(data, "mu"), "mu")
    costs = _rational_list(_require(data, "costs"), "costs")
    transitions = _rational_matrix(_require(data, "p"), "p")

    if "alpha" in data or "baseline" in data:
        alpha = _rational_list(_require(data, "alpha"), "alpha")
        baseline = _rational_list(_require(data, "baseline"), "baseline")
        # T and v describe the types as written; equal alphas are merged afterwards.
        _check_count(data, "T", len(alpha))
        if "v" in data and _rational_matrix(data["v"], "v") != [[a * b for b in baseline] for a in alpha]:
            raise ValidationError("v disagrees with alpha[t] * baseline[q]")
        loaded: LoadedInstance = SingleParamInstance.build(alpha, baseline, mu, costs, transitions)
        base = loaded.base
    else:
        valuations = _rational_matrix(_require(data, "v"), "v")
        base = Instance(tuple(mu), tuple(costs), tuple(map(tuple, transitions)), tuple(map(tuple, valuations)))
        loaded = base
        _check_count(data, "T", base.num_types)

    _check_count(data, "A", base.num_actions)
    _check_count(data, "Q", base.num_outcomes)
    return loaded


def instance_to_dict(inst: LoadedInstance) -> Dict[str, Any]:
    base = inst.base if isinstance(inst, SingleParamInstance) else inst
    data: Dict[str, Any] = {
        "T": base.num_types,
        "A": base.num_actions,
        "Q": base.num_outcomes,
        "mu": [rational_to_json(m) for m in base.mu],
        "costs": [rational_to_json(c) for c in base.costs],
        "p": [[rational_to_json(p) for p in row] for row in base.transitions],
        "v": [[rational_to_json(v) for v in row] for row in base.valuations],
    }
    if isinstance(inst, SingleParamInstance):
        data["alpha"] = [rational_to_json(a) for a in inst.alpha]
        data["baseline"] = [rational_to_json(b) for b in inst.baseline]
    return data


def _contract_from_dict(entry: Any, index: int) -> Contract:
    if not isinstance(entry, dict):
        raise ValidationError(f"contracts[{index}] must be an object")
    for key in ("action", "w", "x"):
        if key not in entry:
            raise ValidationError(f"contracts[{index}] is missing key {key!r}")
    action = entry["action"]
    if action is None:
        action = OPT_OUT
    if isinstance(action, bool) or not isinstance(action, int):
        raise ValidationError(f"contracts[{index}].action must be an integer or null")
    if not isinstance(entry["x"], list):
        raise ValidationError(f"contracts[{index}].x must be an array")
    return Contract(action, as_rational(entry["w"], f"contracts[{index}].w"), tuple(entry["x"]))


def menu_from_dict(data: Any) -> Menu:
    """Direct menu unless the object carries ``"indirect": true``."""
    if not isinstance(data, dict) or not isinstance(data.get("contracts"), list):
        raise ValidationError("menu file must hold an object with a 'contracts' array")
    contracts = tuple(_contract_from_dict(entry, i) for i, entry in enumerate(data["contracts"]))
    if data.get("indirect", False):
        return IndirectMenu(contracts)
    return DirectMenu(contracts)


def menu_to_dict(menu: Menu) -> Dict[str, Any]:
    contracts = [
        {
            "action": None if contract.is_opt_out else contract.action,
            "w": rational_to_json(contract.upfront),
            "x": [usage_to_json(x) for x in contract.usage],
        }
        for contract in menu
    ]
    data: Dict[str, Any] = {"contracts": contracts}
    if isinstance(menu, IndirectMenu):
        data["indirect"] = True
    return data


def _read_json(path: str) -> Any:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            return json.load(handle)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: malformed JSON ({exc.msg} at line {exc.lineno})") from None
    except UnicodeDecodeError as exc:
        raise ValidationError(f"{path}: not valid UTF-8 (byte offset {exc.start})") from None
    except OSError as exc:
        raise ValidationError(f"{path}: cannot read file ({exc.strerror})") from None


def _write_json(data: Dict[str, Any], path: str) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(data, handle, indent=2)
        handle.write("\n")


def load_instance(path: str) -> LoadedInstance:
    return instance_from_dict(_read_json(path))


def save_instance(inst: LoadedInstance, path: str) -> None:
    _write_json(instance_to_dict(inst), path)


def load_menu(path: str) -> Menu:
    return menu_from_dict(_read_json(path))


def save_menu(menu: Menu, path: str) -> None:
    _write_json(menu_to_dict(menu), path)
