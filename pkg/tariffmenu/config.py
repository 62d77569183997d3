"""Stored user defaults and solver size limits."""

import argparse
import json
import os
import sys
from dataclasses import dataclass, fields
from fractions import Fraction
from typing import Dict, Optional

DEFAULT_CONFIG_PATH = os.path.join(
    os.path.expanduser("~"), ".config", "tariffmenu", "defaults.json"
)
CONFIG_ENV_VAR = "TARIFFMENU_CONFIG"

DEFAULT_EPSILON = Fraction(1, 10)
DEFAULT_THREADS = 1
DEFAULT_TYPES = 2
DEFAULT_ACTIONS = 2
DEFAULT_OUTCOMES = 2
DEFAULT_VALUE_BOUND = 10
DEFAULT_SEED = 0

DEFAULT_FIELD_TYPES: Dict[str, type] = {
    "epsilon": Fraction,
    "threads": int,
    "types": int,
    "actions": int,
    "outcomes": int,
    "value_bound": int,
    "seed": int,
    "max_exact_cells": int,
    "max_assignments": int,
    "max_usage_cells": int,
    "max_indirect_types": int,
    "max_fptas_types": int,
    "max_grid_menus": int,
}


@dataclass(frozen=True)
class SolverLimits:
    """Size guards for the exact and enumerative solvers."""

    max_exact_cells: int = 20
    max_assignments: int = 10 ** 5
    max_usage_cells: int = 16
    max_indirect_types: int = 6
    max_fptas_types: int = 4
    max_grid_menus: int = 4096

    @classmethod
    def from_defaults(cls, defaults: Dict[str, object]) -> "SolverLimits":
        overrides = {}
        for limit in fields(cls):
            value = get_default(defaults, limit.name)
            if value is not None:
                overrides[limit.name] = value
        return cls(**overrides)


def config_path() -> str:
    return os.environ.get(CONFIG_ENV_VAR) or DEFAULT_CONFIG_PATH


def get_default(defaults: Dict[str, object], key: str) -> Optional[object]:
    if key not in defaults:
        return None
    value = defaults[key]
    target_type = DEFAULT_FIELD_TYPES.get(key)
    if target_type is not None and value is not None:
        try:
            return target_type(value)
        except (TypeError, ValueError, ZeroDivisionError):
            print(f"Ignoring stored default for {key!r}: {value!r}", file=sys.stderr)
            return None
    return value


def load_user_defaults(path: Optional[str] = None) -> Dict[str, object]:
    path = path or config_path()
    try:
        with open(path, "r", encoding="utf-8") as config_file:
            data = json.load(config_file)
            if isinstance(data, dict):
                return data
            print(f"Ignoring malformed defaults at {path}: expected an object", file=sys.stderr)
    except FileNotFoundError:
        return {}
    except (json.JSONDecodeError, UnicodeDecodeError):
        print(f"Ignoring corrupted defaults file at {path}", file=sys.stderr)
    return {}


def save_user_defaults(updates: Dict[str, object], path: Optional[str] = None) -> None:
    path = path or config_path()
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    defaults = load_user_defaults(path)
    defaults.update(updates)
    with open(path, "w", encoding="utf-8") as config_file:
        json.dump(defaults, config_file, indent=2)
    print(f"Saved defaults to {path}")


def collect_default_updates(args: argparse.Namespace) -> Dict[str, object]:
    updates: Dict[str, object] = {}
    for key in DEFAULT_FIELD_TYPES:
        value = getattr(args, key, None)
        if value is not None:
            # Rationals are stored as strings, like everywhere else on disk.
            updates[key] = str(value) if isinstance(value, Fraction) else value
    return updates
