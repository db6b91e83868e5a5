"""
Constraints and the substitution normal form of a constraint submanifold

A ConstraintSet solves a constraint for a chart coordinate when the
constraint is linear in it with a rational or invertible-atom coefficient,
and keeps the substitutions triangular: no substituted coordinate appears on
any right-hand side. Every other constraint is kept whole as a residual, and
residuals that factor are also listed in `factorable`.
"""
import logging
from dataclasses import dataclass

import sympy
from sympy.core.function import AppliedUndef

from symbolic.expressions import (
    EvaluationError, UnboundSymbolError, eval_rational, is_zero, leading_coefficient, normalize,
    numerator, strip_atom_content, substitute, symbols_inside_atoms,
)

logger = logging.getLogger(__name__)


@dataclass
class Constraint:
    expr: sympy.Expr
    generation: int
    constraint_class: str
    origin: str = ''

    def __post_init__(self):
        if is_zero(self.expr):
            raise ValueError('A constraint cannot be identically zero')


def canonical_form(expr, invertible_atoms=(), ordering=()):
    """Numerator without rational or invertible-atom content, leading coefficient positive"""
    expr = numerator(expr)
    if expr == 0:
        return sympy.S.Zero
    if expr.is_Number:
        return sympy.S.One
    expr = strip_atom_content(expr, invertible_atoms)
    _, expr = expr.primitive()
    expr = sympy.expand(expr)
    if leading_coefficient(expr, ordering) < 0:
        expr = -expr
    return expr


def is_factorable(expr):
    """More than one irreducible factor, counted with multiplicity"""
    _, factors = sympy.factor_list(expr)
    return sum(power for _, power in factors) > 1


class ConstraintSet:
    def __init__(self, chart, invertible_atoms=(), ordering=()):
        self.chart = chart
        self.invertible_atoms = tuple(invertible_atoms)
        self.ordering = tuple(ordering) or tuple(chart.table.ordering())
        self.constraints = []
        self.substitutions = {}
        self.residuals = []
        self.is_empty = False

    @classmethod
    def for_model(cls, model):
        return cls(model.chart, model.invertible_atoms, model.table.ordering())

    @classmethod
    def from_exprs(cls, chart, exprs, invertible_atoms=(), generation=1, constraint_class=''):
        """Normal form of a plain list of expressions, dropping implied ones"""
        constraints = cls(chart, invertible_atoms)
        for index, expr in enumerate(exprs, 1):
            reduced = constraints.canonical(expr)
            if reduced is not None:
                constraints.add(Constraint(reduced, generation, constraint_class, f'#{index}'))
        return constraints

    def __repr__(self):
        return (
            f'ConstraintSet({len(self.constraints)} constraints, '
            f'{len(self.substitutions)} substitutions, {len(self.residuals)} residuals)'
        )

    def __len__(self):
        return len(self.constraints)

    def __iter__(self):
        return iter(self.constraints)

    def copy(self):
        duplicate = ConstraintSet(self.chart, self.invertible_atoms, self.ordering)
        duplicate.constraints = list(self.constraints)
        duplicate.substitutions = dict(self.substitutions)
        duplicate.residuals = list(self.residuals)
        duplicate.is_empty = self.is_empty
        return duplicate

    def generation(self, number):
        return [constraint for constraint in self.constraints if constraint.generation == number]

    @property
    def final_generation(self):
        return max((constraint.generation for constraint in self.constraints), default=0)

    @property
    def factorable(self):
        return [residual for residual in self.residuals if is_factorable(residual)]

    def reduce(self, expr):
        return normalize(substitute(sympy.sympify(expr), self.substitutions))

    def canonical(self, expr):
        """Canonical reduced form, or None when expr vanishes on the set"""
        if self.is_empty:
            return None
        reduced = self.reduce(expr)
        if is_zero(reduced):
            return None
        reduced = canonical_form(reduced, self.invertible_atoms, self.ordering)
        if reduced in self.residuals:
            return None
        return reduced

    def implies(self, expr):
        return self.is_empty or self.canonical(expr) is None

    def add(self, constraint):
        """Record a constraint already in canonical form relative to this set"""
        self.constraints.append(constraint)
        self._absorb(constraint.expr)
        return constraint

    def _absorb(self, expr):
        pending = [expr]
        while pending:
            reduced = self.canonical(pending.pop(0))
            if reduced is None:
                continue
            if reduced.is_Number:
                if not self.is_empty:
                    logger.info('Constraint normal form contains a nonzero constant')
                self.is_empty = True
                continue
            solved = self._solve_for(reduced)
            if solved is None:
                self.residuals.append(reduced)
                continue
            symbol, value = solved
            replacement = {symbol: value}
            self.substitutions = {
                key: normalize(substitute(existing, replacement))
                for key, existing in self.substitutions.items()
            }
            self.substitutions[symbol] = value
            pending.extend(self.residuals)
            self.residuals = []

    def _coefficient_rank(self, coefficient):
        """0 for rationals, 1 for monomials in invertible atoms, 2 otherwise"""
        if coefficient.is_Number:
            return 0
        for factor in sympy.Mul.make_args(coefficient):
            base, _ = factor.as_base_exp()
            if factor.is_Number:
                continue
            if not (isinstance(base, AppliedUndef) and base.func.__name__ in self.invertible_atoms):
                return 2
        return 1

    def _solve_for(self, expr):
        """(coordinate, value) for the preferred coordinate expr is linear in"""
        inside = symbols_inside_atoms(expr)
        best = None
        for symbol in expr.free_symbols:
            if symbol not in self.chart or symbol in inside:
                continue
            coefficient = sympy.expand(sympy.diff(expr, symbol))
            if symbol in coefficient.free_symbols:
                continue
            rank = self._coefficient_rank(coefficient)
            if rank > 1:
                continue
            key = (rank, -self.chart.index(symbol))
            if best is None or key < best[0]:
                best = (key, symbol, coefficient)
        if best is None:
            return None
        _, symbol, coefficient = best
        rest = expr.xreplace({symbol: sympy.S.Zero})
        return symbol, normalize(-rest / coefficient)

    def complete_point(self, values):
        """Extend values of the free symbols to a point of the set, or None"""
        point = dict(values)
        try:
            for symbol, expr in self.substitutions.items():
                point[symbol] = eval_rational(expr, values)
            if any(eval_rational(residual, point) != 0 for residual in self.residuals):
                return None
        except (EvaluationError, UnboundSymbolError):
            return None
        return point

    def free_symbols(self):
        return [
            symbol for symbol in list(self.chart.all_coordinates) + self.chart.parameters()
            if symbol not in self.substitutions
        ]

    def sample_point(self, rng, low=-5, high=5):
        if self.is_empty:
            return None
        values = {
            symbol: sympy.Integer(int(rng.integers(low, high + 1)))
            for symbol in self.free_symbols()
        }
        return self.complete_point(values)


def mutually_reducible(first, second):
    """Each set's constraints vanish on the other set"""
    return (
        all(second.implies(constraint.expr) for constraint in first)
        and all(first.implies(constraint.expr) for constraint in second)
    )
