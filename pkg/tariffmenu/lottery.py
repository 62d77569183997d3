"""Lottery menus with per-item usage prices, and the transform that folds those prices away.

Items are indexed from 0; item 0 is the trivial item, worth nothing to every type.
Valuation matrices passed in here cover the real items only (``valuations[t][i - 1]``).
"""

from dataclasses import dataclass
from fractions import Fraction
from random import Random
from typing import List, Sequence, Tuple

from tariffmenu.errors import RegimeMismatchError, ValidationError
from tariffmenu.model import EXCLUDE, Regime, UsagePrice, accepts, as_rational, as_usage_price

TRIVIAL_ITEM = 0

Valuations = Sequence[Sequence[object]]


@dataclass(frozen=True)
class Lottery:
    price: Fraction
    distribution: Tuple[Fraction, ...]
    item_prices: Tuple[UsagePrice, ...]

    def __post_init__(self) -> None:
        price = as_rational(self.price, "w")
        if price < 0:
            raise ValidationError(f"lottery price w = {price} must be nonnegative")
        distribution = tuple(as_rational(p, f"p[{i}]") for i, p in enumerate(self.distribution))
        item_prices = tuple(as_usage_price(x, f"x[{i}]") for i, x in enumerate(self.item_prices))
        if not distribution:
            raise ValidationError("lottery distribution must include the trivial item")
        if len(item_prices) != len(distribution):
            raise ValidationError(
                f"lottery has {len(item_prices)} item prices for {len(distribution)} items"
            )
        for i, p in enumerate(distribution):
            if p < 0:
                raise ValidationError(f"p[{i}] = {p} must be nonnegative")
        if sum(distribution) != 1:
            raise ValidationError(f"lottery distribution sums to {sum(distribution)}, expected 1")
        for i, x in enumerate(item_prices):
            if x is not EXCLUDE and x < 0:
                raise ValidationError(f"item price x[{i}] = {x} must be nonnegative")
        if item_prices[TRIVIAL_ITEM] != 0:
            raise ValidationError("the trivial item must be priced at 0")
        object.__setattr__(self, "price", price)
        object.__setattr__(self, "distribution", distribution)
        object.__setattr__(self, "item_prices", item_prices)

    @property
    def num_items(self) -> int:
        return len(self.distribution)

    @property
    def is_upfront_only(self) -> bool:
        return all(x == 0 for x in self.item_prices)


@dataclass(frozen=True)
class LotteryMenu:
    """One lottery per type, all over the same item set."""

    lotteries: Tuple[Lottery, ...]

    def __post_init__(self) -> None:
        lotteries = tuple(self.lotteries)
        if not lotteries:
            raise ValidationError("lottery menu must contain at least one lottery")
        sizes = {lottery.num_items for lottery in lotteries}
        if len(sizes) != 1:
            raise ValidationError(f"lotteries disagree on the item count: {sorted(sizes)}")
        object.__setattr__(self, "lotteries", lotteries)

    @classmethod
    def build(
        cls,
        entries: Sequence[Tuple[object, Sequence[object], Sequence[object]]],
        include_trivial: bool = False,
    ) -> "LotteryMenu":
        """Menu from ``(price, distribution, item_prices)`` entries.

        Unless ``include_trivial`` is set the entries cover the real items and the
        trivial item is prepended with the leftover probability mass.
        """
        lotteries = []
        for t, (price, distribution, item_prices) in enumerate(entries):
            distribution = [as_rational(p, f"p[{t}]") for p in distribution]
            item_prices = list(item_prices)
            if not include_trivial:
                distribution.insert(TRIVIAL_ITEM, 1 - sum(distribution, Fraction(0)))
                item_prices.insert(TRIVIAL_ITEM, Fraction(0))
            lotteries.append(Lottery(price, tuple(distribution), tuple(item_prices)))
        return cls(tuple(lotteries))

    @property
    def num_types(self) -> int:
        return len(self.lotteries)

    @property
    def num_items(self) -> int:
        return self.lotteries[0].num_items

    def __len__(self) -> int:
        return len(self.lotteries)

    def __getitem__(self, t: int) -> Lottery:
        return self.lotteries[t]


def _item_values(valuations: Valuations, t: int, num_items: int) -> Tuple[Fraction, ...]:
    row = valuations[t]
    if len(row) != num_items - 1:
        raise ValidationError(
            f"v[{t}] has {len(row)} entries, expected {num_items - 1} real items"
        )
    values = tuple(as_rational(v, f"v[{t}][{i}]") for i, v in enumerate(row))
    for i, v in enumerate(values):
        if v < 0:
            raise ValidationError(f"v[{t}][{i}] = {v} must be nonnegative")
    return (Fraction(0),) + values


def _check_market(menu: LotteryMenu, valuations: Valuations, mu: Sequence[object]) -> None:
    if len(valuations) != menu.num_types:
        raise ValidationError(f"v has {len(valuations)} rows, expected T={menu.num_types}")
    if len(mu) != menu.num_types:
        raise ValidationError(f"mu has {len(mu)} entries, expected T={menu.num_types}")


def _require_finite(lottery: Lottery) -> None:
    if any(x is EXCLUDE for x in lottery.item_prices):
        raise RegimeMismatchError("EXCLUDE item price is not allowed under mandatory usage")


def lottery_utility(
    t: int,
    lottery: Lottery,
    valuations: Valuations,
    mode: Regime = Regime.VOLUNTARY,
) -> Fraction:
    values = _item_values(valuations, t, lottery.num_items)
    if mode is Regime.MANDATORY:
        _require_finite(lottery)
        surplus = sum(
            (p * (v - x) for p, v, x in zip(lottery.distribution, values, lottery.item_prices)),
            Fraction(0),
        )
    else:
        surplus = sum(
            (
                p * (v - x)
                for p, v, x in zip(lottery.distribution, values, lottery.item_prices)
                if x is not EXCLUDE and v > x
            ),
            Fraction(0),
        )
    return surplus - lottery.price


def lottery_revenue(
    t: int,
    lottery: Lottery,
    valuations: Valuations,
    mode: Regime = Regime.VOLUNTARY,
) -> Fraction:
    values = _item_values(valuations, t, lottery.num_items)
    if mode is Regime.MANDATORY:
        _require_finite(lottery)
        paid = sum((p * x for p, x in zip(lottery.distribution, lottery.item_prices)), Fraction(0))
    else:
        paid = sum(
            (
                p * x
                for p, v, x in zip(lottery.distribution, values, lottery.item_prices)
                if accepts(v, x)
            ),
            Fraction(0),
        )
    return lottery.price + paid


def _strip_voluntary(t: int, lottery: Lottery, valuations: Valuations) -> Lottery:
    values = _item_values(valuations, t, lottery.num_items)
    price = lottery.price
    distribution = list(lottery.distribution)
    for i in range(1, lottery.num_items):
        x = lottery.item_prices[i]
        if accepts(values[i], x):
            price += distribution[i] * x
        else:
            distribution[TRIVIAL_ITEM] += distribution[i]
            distribution[i] = Fraction(0)
    return Lottery(price, tuple(distribution), (Fraction(0),) * lottery.num_items)


def _strip_mandatory(lottery: Lottery) -> Lottery:
    _require_finite(lottery)
    paid = sum((p * x for p, x in zip(lottery.distribution, lottery.item_prices)), Fraction(0))
    return Lottery(lottery.price + paid, lottery.distribution, (Fraction(0),) * lottery.num_items)


def strip_usage_lottery(
    menu: LotteryMenu,
    valuations: Valuations,
    mu: Sequence[object],
    mode: Regime = Regime.VOLUNTARY,
) -> LotteryMenu:
    """Equivalent menu with every item priced at 0.

    Voluntary: each type's accepted item payments move into its lottery price and the
    mass of the items it rejects moves to the trivial item. Mandatory: all item
    payments move into the price and the distribution stays.
    """
    _check_market(menu, valuations, mu)
    if mode is Regime.MANDATORY:
        return LotteryMenu(tuple(_strip_mandatory(lottery) for lottery in menu.lotteries))
    return LotteryMenu(
        tuple(_strip_voluntary(t, lottery, valuations) for t, lottery in enumerate(menu.lotteries))
    )


def _expected_revenue(
    menu: LotteryMenu, valuations: Valuations, mu: Sequence[object], mode: Regime
) -> Fraction:
    return sum(
        (
            as_rational(m, f"mu[{t}]") * lottery_revenue(t, menu[t], valuations, mode)
            for t, m in enumerate(mu)
        ),
        Fraction(0),
    )


def lottery_equiv_check(
    before: LotteryMenu,
    after: LotteryMenu,
    valuations: Valuations,
    mu: Sequence[object],
    mode: Regime = Regime.VOLUNTARY,
) -> bool:
    """Own-lottery utilities and expected revenue agree exactly, both menus read under ``mode``."""
    _check_market(before, valuations, mu)
    _check_market(after, valuations, mu)
    for t in range(before.num_types):
        if lottery_utility(t, before[t], valuations, mode) != lottery_utility(
            t, after[t], valuations, mode
        ):
            return False
    return _expected_revenue(before, valuations, mu, mode) == _expected_revenue(
        after, valuations, mu, mode
    )


def lottery_menu_is_ic(
    menu: LotteryMenu, valuations: Valuations, mode: Regime = Regime.VOLUNTARY
) -> bool:
    for t in range(menu.num_types):
        own = lottery_utility(t, menu[t], valuations, mode)
        for other in menu.lotteries:
            if lottery_utility(t, other, valuations, mode) > own:
                return False
    return True


def gen_random_lottery_menu(
    num_types: int,
    num_items: int,
    seed: int,
    value_bound: int = 10,
    allow_exclude: bool = True,
) -> Tuple[LotteryMenu, Tuple[Tuple[Fraction, ...], ...], Tuple[Fraction, ...]]:
    """Seeded ``(menu, valuations, mu)`` over ``num_items`` real items plus the trivial one."""
    if num_types < 1 or num_items < 1 or value_bound < 1:
        raise ValidationError("num_types, num_items and value_bound must be positive")
    rng = Random(seed)
    weights = [rng.randint(1, 4) for _ in range(num_types)]
    mu = tuple(Fraction(w, sum(weights)) for w in weights)
    valuations = tuple(
        tuple(Fraction(rng.randint(0, value_bound)) for _ in range(num_items))
        for _ in range(num_types)
    )
    entries = []
    for _ in range(num_types):
        mass = [rng.randint(0, 3) for _ in range(num_items + 1)]
        if not any(mass):
            mass[rng.randrange(num_items + 1)] = 1
        distribution = [Fraction(m, sum(mass)) for m in mass]
        prices: List[UsagePrice] = [Fraction(0)]
        for _ in range(num_items):
            if allow_exclude and rng.random() < 0.2:
                prices.append(EXCLUDE)
            else:
                prices.append(Fraction(rng.randint(0, 2 * value_bound), 2))
        entries.append((Fraction(rng.randint(0, value_bound), 2), distribution, prices))
    return LotteryMenu.build(entries, include_trivial=True), valuations, mu
