"""Exact rational linear programming and the upfront-price LPs built on it.

Two engines are available. The simplex engine is a dense two-phase tableau with
Bland's rule. The difference engine handles systems whose rows are single-variable
bounds or ``x_i - x_j`` differences: it solves them as shortest paths on the
constraint graph, which yields the componentwise largest feasible point and hence
the optimum of any nonnegative objective.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from itertools import product
from typing import List, Optional, Sequence, Tuple

from tariffmenu.errors import GuardError, ValidationError
from tariffmenu.model import OPT_OUT, Instance, as_rational

logger = logging.getLogger(__name__)

Edge = Tuple[int, int, Fraction]


class Relation(Enum):
    LE = "<="
    EQ = "="
    GE = ">="

    def flipped(self) -> "Relation":
        if self is Relation.LE:
            return Relation.GE
        if self is Relation.GE:
            return Relation.LE
        return self


class LpStatus(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class Constraint:
    coefficients: Tuple[Fraction, ...]
    relation: Relation
    rhs: Fraction

    def holds_for(self, solution: Sequence[Fraction]) -> bool:
        lhs = sum((a * x for a, x in zip(self.coefficients, solution)), Fraction(0))
        if self.relation is Relation.LE:
            return lhs <= self.rhs
        if self.relation is Relation.GE:
            return lhs >= self.rhs
        return lhs == self.rhs


@dataclass
class LinearProgram:
    """Maximize ``objective . x + offset`` subject to rows and optional per-variable bounds."""

    objective: Sequence[Fraction]
    constraints: List[Constraint] = field(default_factory=list)
    lower: Optional[List[Optional[Fraction]]] = None
    upper: Optional[List[Optional[Fraction]]] = None
    offset: Fraction = Fraction(0)

    def __post_init__(self) -> None:
        self.objective = tuple(as_rational(c, "objective") for c in self.objective)
        size = len(self.objective)
        if self.lower is None:
            self.lower = [None] * size
        if self.upper is None:
            self.upper = [None] * size
        if len(self.lower) != size or len(self.upper) != size:
            raise ValidationError(f"bounds must have {size} entries")
        self.lower = [None if b is None else as_rational(b, "lower") for b in self.lower]
        self.upper = [None if b is None else as_rational(b, "upper") for b in self.upper]
        self.offset = as_rational(self.offset, "offset")
        for constraint in self.constraints:
            if len(constraint.coefficients) != size:
                raise ValidationError(
                    f"constraint has {len(constraint.coefficients)} coefficients, expected {size}"
                )

    @property
    def num_vars(self) -> int:
        return len(self.objective)

    def add(self, coefficients: Sequence[object], relation: object, rhs: object) -> None:
        coefficients = tuple(as_rational(a, "coefficient") for a in coefficients)
        if len(coefficients) != self.num_vars:
            raise ValidationError(
                f"constraint has {len(coefficients)} coefficients, expected {self.num_vars}"
            )
        self.constraints.append(Constraint(coefficients, Relation(relation), as_rational(rhs)))

    def add_difference(self, i: int, j: int, relation: object, rhs: object) -> None:
        """Add ``x_i - x_j (relation) rhs``."""
        coefficients = [Fraction(0)] * self.num_vars
        coefficients[i] += 1
        coefficients[j] -= 1
        self.add(coefficients, relation, rhs)

    def evaluate(self, solution: Sequence[Fraction]) -> Fraction:
        return self.offset + sum((c * x for c, x in zip(self.objective, solution)), Fraction(0))

    def is_feasible(self, solution: Sequence[Fraction]) -> bool:
        for x, lo, hi in zip(solution, self.lower, self.upper):
            if (lo is not None and x < lo) or (hi is not None and x > hi):
                return False
        return all(constraint.holds_for(solution) for constraint in self.constraints)


@dataclass(frozen=True)
class LpResult:
    status: LpStatus
    value: Optional[Fraction] = None
    solution: Optional[Tuple[Fraction, ...]] = None


def difference_solution(num_vars: int, edges: Sequence[Edge]) -> Optional[List[Optional[Fraction]]]:
    """Bellman-Ford from the source node ``num_vars``.

    An edge ``(j, i, b)`` encodes ``x_i - x_j <= b``; the source is pinned at 0.
    Returns the largest feasible assignment (``None`` entries for nodes the source
    cannot reach), or ``None`` when a negative cycle makes the system infeasible.
    """
    source = num_vars
    dist: List[Optional[Fraction]] = [None] * (num_vars + 1)
    dist[source] = Fraction(0)
    for _ in range(num_vars + 1):
        changed = False
        for start, end, weight in edges:
            if dist[start] is None:
                continue
            candidate = dist[start] + weight
            if dist[end] is None or candidate < dist[end]:
                dist[end] = candidate
                changed = True
        if not changed:
            return dist[:num_vars]
    return None


def _difference_edges(lp: LinearProgram) -> Optional[List[Edge]]:
    if any(c < 0 for c in lp.objective):
        return None
    source = lp.num_vars
    edges: List[Edge] = []

    def bound(i: int, relation: Relation, value: Fraction) -> None:
        if relation in (Relation.LE, Relation.EQ):
            edges.append((source, i, value))
        if relation in (Relation.GE, Relation.EQ):
            edges.append((i, source, -value))

    def difference(i: int, j: int, relation: Relation, value: Fraction) -> None:
        if relation in (Relation.LE, Relation.EQ):
            edges.append((j, i, value))
        if relation in (Relation.GE, Relation.EQ):
            edges.append((i, j, -value))

    for constraint in lp.constraints:
        nonzero = [(k, a) for k, a in enumerate(constraint.coefficients) if a != 0]
        if not nonzero:
            if not constraint.holds_for([Fraction(0)] * lp.num_vars):
                # 0 (rel) rhs is false: force a negative cycle.
                edges.append((source, source, Fraction(-1)))
            continue
        if len(nonzero) == 1:
            (i, a), = nonzero
            relation = constraint.relation if a > 0 else constraint.relation.flipped()
            bound(i, relation, constraint.rhs / a)
            continue
        if len(nonzero) != 2:
            return None
        (i, a), (j, b) = nonzero
        if a != -b:
            return None
        if a < 0:
            i, j, a = j, i, b
        difference(i, j, constraint.relation, constraint.rhs / a)

    for i in range(lp.num_vars):
        if lp.upper[i] is not None:
            bound(i, Relation.LE, lp.upper[i])
        if lp.lower[i] is not None:
            bound(i, Relation.GE, lp.lower[i])
    return edges


def _solve_difference(lp: LinearProgram) -> Optional[LpResult]:
    edges = _difference_edges(lp)
    if edges is None:
        return None
    dist = difference_solution(lp.num_vars, edges)
    if dist is None:
        return LpResult(LpStatus.INFEASIBLE)
    if any(d is None for d in dist):
        return None
    solution = tuple(dist)
    return LpResult(LpStatus.OPTIMAL, lp.evaluate(solution), solution)


class _Tableau:
    def __init__(self, rows: List[List[Fraction]], rhs: List[Fraction], basis: List[int]) -> None:
        self.rows = rows
        self.rhs = rhs
        self.basis = basis

    @property
    def num_cols(self) -> int:
        return len(self.rows[0]) if self.rows else 0

    def pivot(self, r: int, c: int) -> None:
        factor = self.rows[r][c]
        self.rows[r] = [a / factor for a in self.rows[r]]
        self.rhs[r] /= factor
        pivot_row = self.rows[r]
        for i, row in enumerate(self.rows):
            coefficient = row[c]
            if i == r or coefficient == 0:
                continue
            self.rows[i] = [a - coefficient * b for a, b in zip(row, pivot_row)]
            self.rhs[i] -= coefficient * self.rhs[r]
        self.basis[r] = c

    def optimize(self, cost: Sequence[Fraction], allowed: Sequence[int]) -> bool:
        """Bland's rule primal simplex; returns False when unbounded."""
        while True:
            basic = set(self.basis)
            entering = None
            for j in allowed:
                if j in basic:
                    continue
                reduced = cost[j] - sum(
                    (cost[b] * row[j] for b, row in zip(self.basis, self.rows)), Fraction(0)
                )
                if reduced > 0:
                    entering = j
                    break
            if entering is None:
                return True
            leaving = None
            best_key = None
            for i, row in enumerate(self.rows):
                if row[entering] > 0:
                    key = (self.rhs[i] / row[entering], self.basis[i])
                    if best_key is None or key < best_key:
                        best_key = key
                        leaving = i
            if leaving is None:
                return False
            self.pivot(leaving, entering)

    def value(self, cost: Sequence[Fraction]) -> Fraction:
        return sum((cost[b] * v for b, v in zip(self.basis, self.rhs)), Fraction(0))

    def drive_out(self, artificial: set) -> None:
        redundant = []
        for i in range(len(self.rows)):
            if self.basis[i] not in artificial:
                continue
            column = next(
                (j for j in range(self.num_cols) if j not in artificial and self.rows[i][j] != 0),
                None,
            )
            if column is None:
                redundant.append(i)
            else:
                self.pivot(i, column)
        for i in reversed(redundant):
            del self.rows[i]
            del self.rhs[i]
            del self.basis[i]


def _solve_simplex(lp: LinearProgram) -> LpResult:
    # Substitute every variable by nonnegative ones: x_j = offset_j + sum(sign * y_k).
    substitution: List[Tuple[Fraction, List[Tuple[int, int]]]] = []
    box_rows: List[Tuple[int, Fraction]] = []
    num_y = 0
    for lo, hi in zip(lp.lower, lp.upper):
        if lo is not None:
            substitution.append((lo, [(num_y, 1)]))
            if hi is not None:
                box_rows.append((num_y, hi - lo))
            num_y += 1
        elif hi is not None:
            substitution.append((hi, [(num_y, -1)]))
            num_y += 1
        else:
            substitution.append((Fraction(0), [(num_y, 1), (num_y + 1, -1)]))
            num_y += 2

    rows: List[Tuple[List[Fraction], Relation, Fraction]] = []
    for constraint in lp.constraints:
        coefficients = [Fraction(0)] * num_y
        rhs = constraint.rhs
        for j, a in enumerate(constraint.coefficients):
            if a == 0:
                continue
            offset, parts = substitution[j]
            rhs -= a * offset
            for k, sign in parts:
                coefficients[k] += a * sign
        rows.append((coefficients, constraint.relation, rhs))
    for k, width in box_rows:
        coefficients = [Fraction(0)] * num_y
        coefficients[k] = Fraction(1)
        rows.append((coefficients, Relation.LE, width))

    cost_y = [Fraction(0)] * num_y
    for c, (_, parts) in zip(lp.objective, substitution):
        for k, sign in parts:
            cost_y[k] += c * sign

    normalized = []
    for coefficients, relation, rhs in rows:
        if rhs < 0:
            coefficients = [-a for a in coefficients]
            rhs = -rhs
            relation = relation.flipped()
        normalized.append((coefficients, relation, rhs))

    num_slack = sum(1 for _, rel, _ in normalized if rel is not Relation.EQ)
    num_art = sum(1 for _, rel, _ in normalized if rel is not Relation.LE)
    width = num_y + num_slack + num_art
    slack_col, art_col = num_y, num_y + num_slack
    tableau_rows, rhs_values, basis = [], [], []
    artificial = set()
    for coefficients, relation, rhs in normalized:
        row = coefficients + [Fraction(0)] * (num_slack + num_art)
        if relation is Relation.LE:
            row[slack_col] = Fraction(1)
            basis.append(slack_col)
            slack_col += 1
        else:
            if relation is Relation.GE:
                row[slack_col] = Fraction(-1)
                slack_col += 1
            row[art_col] = Fraction(1)
            basis.append(art_col)
            artificial.add(art_col)
            art_col += 1
        tableau_rows.append(row)
        rhs_values.append(rhs)

    tableau = _Tableau(tableau_rows, rhs_values, basis)
    if artificial:
        phase_one = [Fraction(-1) if k in artificial else Fraction(0) for k in range(width)]
        tableau.optimize(phase_one, range(width))
        if tableau.value(phase_one) < 0:
            return LpResult(LpStatus.INFEASIBLE)
        tableau.drive_out(artificial)

    cost = cost_y + [Fraction(0)] * (width - num_y)
    allowed = [k for k in range(width) if k not in artificial]
    if not tableau.optimize(cost, allowed):
        return LpResult(LpStatus.UNBOUNDED)

    y = [Fraction(0)] * width
    for b, v in zip(tableau.basis, tableau.rhs):
        y[b] = v
    solution = tuple(
        offset + sum((sign * y[k] for k, sign in parts), Fraction(0))
        for offset, parts in substitution
    )
    return LpResult(LpStatus.OPTIMAL, lp.evaluate(solution), solution)


def solve_lp(lp: LinearProgram, method: str = "auto") -> LpResult:
    """Solve ``lp`` exactly. ``method`` is ``auto``, ``simplex`` or ``difference``."""
    if method not in ("auto", "simplex", "difference"):
        raise ValueError(f"unknown LP method {method!r}")
    if method != "simplex":
        result = _solve_difference(lp)
        if result is not None:
            return result
        if method == "difference":
            raise ValidationError("linear program is not a bounded difference system")
    return _solve_simplex(lp)


@dataclass(frozen=True)
class StateVector:
    """T x T matrix of contract values, ``values[t][k] = V(t; C^k)``."""

    values: Tuple[Tuple[Fraction, ...], ...]

    def __post_init__(self) -> None:
        values = tuple(tuple(as_rational(v, "state") for v in row) for row in self.values)
        size = len(values)
        for t, row in enumerate(values):
            if len(row) != size:
                raise ValidationError(f"state row {t} has {len(row)} entries, expected {size}")
            for k, v in enumerate(row):
                if v < 0:
                    raise ValidationError(f"state entry [{t}][{k}] = {v} must be nonnegative")
        object.__setattr__(self, "values", values)

    @classmethod
    def zeros(cls, size: int) -> "StateVector":
        return cls(tuple((Fraction(0),) * size for _ in range(size)))

    @property
    def size(self) -> int:
        return len(self.values)

    def __getitem__(self, t: int) -> Tuple[Fraction, ...]:
        return self.values[t]

    def total(self) -> Fraction:
        return sum((v for row in self.values for v in row), Fraction(0))

    def add_to_column(self, k: int, increments: Sequence[Fraction]) -> "StateVector":
        return StateVector(
            tuple(
                tuple(v + increments[t] if j == k else v for j, v in enumerate(row))
                for t, row in enumerate(self.values)
            )
        )

    def with_entry(self, t: int, k: int, value: object) -> "StateVector":
        rows = [list(row) for row in self.values]
        rows[t][k] = as_rational(value)
        return StateVector(tuple(tuple(row) for row in rows))

    def within_bounds(self, actions: Sequence[int], inst: Instance) -> bool:
        return all(
            self.values[t][k] <= inst.action_value(t, actions[k])
            for t in range(self.size)
            for k in range(self.size)
        )


def _usage_revenue_vector(size: int, usage_revenue: Optional[Sequence[Fraction]]) -> List[Fraction]:
    if usage_revenue is None:
        return [Fraction(0)] * size
    return [as_rational(r, "usage revenue") for r in usage_revenue]


def direct_profit_lp(
    values: Sequence[Sequence[Fraction]],
    actions: Sequence[int],
    inst: Instance,
    usage_revenue: Optional[Sequence[Fraction]] = None,
) -> LinearProgram:
    """Upfront-price LP of a direct menu with fixed actions and values, ``w >= 0``."""
    size = len(values)
    revenue = _usage_revenue_vector(size, usage_revenue)
    lp = LinearProgram(
        objective=list(inst.mu),
        lower=[Fraction(0)] * size,
        upper=[values[t][t] for t in range(size)],
        offset=sum(
            (m * (r - inst.cost(a)) for m, r, a in zip(inst.mu, revenue, actions)), Fraction(0)
        ),
    )
    for t in range(size):
        for k in range(size):
            if k != t:
                lp.add_difference(t, k, Relation.LE, values[t][t] - values[t][k])
    return lp


def direct_upfront_from_values(
    values: Sequence[Sequence[Fraction]],
    actions: Sequence[int],
    inst: Instance,
    usage_revenue: Optional[Sequence[Fraction]] = None,
    engine: str = "closure",
) -> Optional[Tuple[Tuple[Fraction, ...], Fraction]]:
    """Optimal upfront prices for arbitrary (possibly negative) direct values.

    Returns ``None`` when no nonnegative upfront prices make the values IC and IR.
    """
    size = len(values)
    if len(actions) != size:
        raise ValidationError(f"expected {size} actions, got {len(actions)}")
    if engine != "closure":
        result = solve_lp(direct_profit_lp(values, actions, inst, usage_revenue), method=engine)
        if result.status is not LpStatus.OPTIMAL:
            return None
        return result.solution, result.value

    revenue = _usage_revenue_vector(size, usage_revenue)
    source = size
    edges: List[Edge] = []
    for t in range(size):
        own = values[t][t]
        edges.append((source, t, own))
        edges.append((t, source, Fraction(0)))
        for k in range(size):
            if k != t:
                edges.append((k, t, own - values[t][k]))
    dist = difference_solution(size, edges)
    if dist is None:
        return None
    upfront = tuple(dist)
    profit = sum(
        (m * (w + r - inst.cost(a)) for m, w, r, a in zip(inst.mu, upfront, revenue, actions)),
        Fraction(0),
    )
    return upfront, profit


def optimal_upfront_direct(
    state: StateVector,
    actions: Sequence[int],
    inst: Instance,
    usage_revenue: Optional[Sequence[Fraction]] = None,
    engine: str = "closure",
) -> Optional[Tuple[Tuple[Fraction, ...], Fraction]]:
    return direct_upfront_from_values(state.values, actions, inst, usage_revenue, engine)


@dataclass(frozen=True)
class IndirectScore:
    profit: Fraction
    upfront: Tuple[Fraction, ...]
    assignment: Tuple[int, ...]


def _indirect_edges(state: StateVector, assignment: Sequence[int]) -> List[Edge]:
    size = state.size
    source = size
    edges: List[Edge] = []
    for k in range(size):
        edges.append((source, k, max(state[t][k] for t in range(size))))
        edges.append((k, source, Fraction(0)))
    for t, k in enumerate(assignment):
        row = state[t]
        if k == OPT_OUT:
            for j in range(size):
                edges.append((j, source, -row[j]))
            continue
        edges.append((source, k, row[k]))
        for j in range(size):
            if j != k:
                edges.append((j, k, row[k] - row[j]))
    return edges


def indirect_assignment_lp(
    state: StateVector, actions: Sequence[int], inst: Instance, assignment: Sequence[int]
) -> LinearProgram:
    """Profit LP of an indirect menu whose type ``t`` is steered to ``assignment[t]``."""
    size = state.size
    objective = [Fraction(0)] * size
    offset = Fraction(0)
    for t, k in enumerate(assignment):
        if k != OPT_OUT:
            objective[k] += inst.mu[t]
            offset -= inst.mu[t] * inst.cost(actions[k])
    lp = LinearProgram(
        objective=objective,
        lower=[Fraction(0)] * size,
        upper=[max(state[t][k] for t in range(size)) for k in range(size)],
        offset=offset,
    )
    for t, k in enumerate(assignment):
        row = state[t]
        if k == OPT_OUT:
            for j in range(size):
                unit = [Fraction(0)] * size
                unit[j] = Fraction(1)
                lp.add(unit, Relation.GE, row[j])
            continue
        unit = [Fraction(0)] * size
        unit[k] = Fraction(1)
        lp.add(unit, Relation.LE, row[k])
        for j in range(size):
            if j != k:
                lp.add_difference(k, j, Relation.LE, row[k] - row[j])
    return lp


def indirect_profit_of_state(
    state: StateVector,
    actions: Sequence[int],
    inst: Instance,
    max_types: int = 6,
    engine: str = "closure",
) -> IndirectScore:
    """Best profit of an indirect menu realizing ``state``, over all type-to-contract assignments.

    Upfront prices are capped at the largest value any type places on a contract; a
    price above that cap sells to nobody, so the cap loses nothing. Profit ties are
    broken by the lexicographically smallest assignment, with OPT_OUT ordered first.
    """
    size = state.size
    if size > max_types:
        raise GuardError(f"T = {size} exceeds max_indirect_types = {max_types}")
    if len(actions) != size:
        raise ValidationError(f"expected {size} actions, got {len(actions)}")

    best: Optional[IndirectScore] = None
    for assignment in product(range(OPT_OUT, size), repeat=size):
        if engine == "closure":
            dist = difference_solution(size, _indirect_edges(state, assignment))
            if dist is None:
                continue
            upfront = tuple(dist)
        else:
            result = solve_lp(indirect_assignment_lp(state, actions, inst, assignment), engine)
            if result.status is not LpStatus.OPTIMAL:
                continue
            upfront = result.solution
        profit = sum(
            (
                inst.mu[t] * (upfront[k] - inst.cost(actions[k]))
                for t, k in enumerate(assignment)
                if k != OPT_OUT
            ),
            Fraction(0),
        )
        if best is None or profit > best.profit:
            best = IndirectScore(profit, upfront, tuple(assignment))
    logger.debug("indirect scoring of %d-type state: profit %s", size, best.profit)
    return best
