"""Interactive prompts for random instance dimensions."""

from typing import Dict, List, Optional

try:
    import questionary
    from questionary import Style

    QUESTIONARY_AVAILABLE = True
except ImportError:
    QUESTIONARY_AVAILABLE = False

from tariffmenu.config import (
    DEFAULT_ACTIONS,
    DEFAULT_OUTCOMES,
    DEFAULT_SEED,
    DEFAULT_TYPES,
    DEFAULT_VALUE_BOUND,
)


# Custom style for the interactive prompts
CUSTOM_STYLE = None
if QUESTIONARY_AVAILABLE:
    CUSTOM_STYLE = Style([
        ("qmark", "fg:cyan bold"),
        ("question", "fg:white bold"),
        ("answer", "fg:green bold"),
        ("pointer", "fg:cyan bold"),
        ("highlighted", "fg:cyan bold"),
        ("selected", "fg:green"),
    ])

PROMPT_ORDER = ("types", "actions", "outcomes", "value_bound", "seed")


def _select_count(message: str, default: int, max_val: int) -> int:
    if not QUESTIONARY_AVAILABLE:
        return default

    choices = [str(i) for i in range(1, max_val + 1)]
    default_str = str(min(max(default, 1), max_val))

    result = questionary.select(
        message,
        choices=choices,
        default=default_str,
        style=CUSTOM_STYLE,
    ).ask()

    return int(result) if result else default


def prompt_types(default: int = DEFAULT_TYPES) -> int:
    """Number of buyer types; exact solvers stay fast up to three."""
    return _select_count("Select number of buyer types T:", default, max_val=6)


def prompt_actions(default: int = DEFAULT_ACTIONS) -> int:
    return _select_count("Select number of seller actions A:", default, max_val=6)


def prompt_outcomes(default: int = DEFAULT_OUTCOMES) -> int:
    return _select_count("Select number of outcomes Q:", default, max_val=8)


def _prompt_integer(message: str, default: int, minimum: int) -> int:
    if not QUESTIONARY_AVAILABLE:
        return default

    result = questionary.text(
        message,
        default=str(default),
        validate=lambda text: text.strip().lstrip("-").isdigit() and int(text) >= minimum,
        style=CUSTOM_STYLE,
    ).ask()

    return int(result) if result else default


def prompt_value_bound(default: int = DEFAULT_VALUE_BOUND) -> int:
    return _prompt_integer("Enter largest valuation:", default, minimum=1)


def prompt_seed(default: int = DEFAULT_SEED) -> int:
    return _prompt_integer("Enter random seed:", default, minimum=0)


_PROMPTS = {
    "types": prompt_types,
    "actions": prompt_actions,
    "outcomes": prompt_outcomes,
    "value_bound": prompt_value_bound,
    "seed": prompt_seed,
}


def prompt_missing_params(
    missing_fields: List[str],
    defaults: Dict[str, object],
) -> Dict[str, int]:
    """
    Prompt user for all missing generator parameters.

    Args:
        missing_fields: Field names that need values
        defaults: Current default values, used to preselect answers

    Returns:
        Dictionary of field names to selected values
    """
    if not QUESTIONARY_AVAILABLE:
        print("Warning: questionary not installed. Using defaults.")
        return {}

    results: Dict[str, int] = {}
    for field in PROMPT_ORDER:
        if field not in missing_fields:
            continue
        default: Optional[object] = defaults.get(field)
        prompt = _PROMPTS[field]
        results[field] = prompt(int(default)) if default is not None else prompt()
    return results


def is_interactive_available() -> bool:
    """Check if interactive mode is available."""
    return QUESTIONARY_AVAILABLE
