"""
Numeric and rank diagnostics attached to a finished run
"""
import logging

import numpy as np
import sympy
from django.conf import settings
from sympy.core.function import AppliedUndef

from linalg.elimination import generic_rank
from linalg.matrices import SymMatrix
from symbolic.expressions import EvaluationError, UnboundSymbolError, eval_rational
from .spaces import ker_fl_basis, vertical_perp_basis

logger = logging.getLogger(__name__)


def constraint_jacobian(model, constraints):
    exprs = [constraint.expr for constraint in constraints]
    coordinates = model.chart.all_coordinates
    entries = {}
    for row, expr in enumerate(exprs):
        for col, symbol in enumerate(coordinates):
            if symbol in expr.free_symbols:
                entries[(row, col)] = model.diff(expr, symbol)
    return SymMatrix(
        len(exprs), len(coordinates), entries,
        row_labels=[f'c{index}' for index in range(1, len(exprs) + 1)],
        col_labels=[str(symbol) for symbol in coordinates],
    )


def independence_certificate(model, constraints, seed=None):
    """Generic rank of the constraint Jacobian; None when skipped"""
    limit = getattr(settings, 'KSYMP_INDEPENDENCE_LIMIT', 200)
    if not len(constraints) or len(constraints) > limit:
        return None
    return generic_rank(constraint_jacobian(model, constraints), seed)


def _evaluate_base(family, point):
    chart = family.chart
    return tuple(
        eval_rational(field.base(i), point)
        for field in family for i in range(1, chart.n + 1)
    )


def _shifted_points(constraints, point, directions):
    free = constraints.free_symbols()
    for direction in directions:
        values = {symbol: point[symbol] + direction.get(symbol, 0) for symbol in free}
        if all(values[symbol] == point[symbol] for symbol in free):
            continue
        shifted = constraints.complete_point(values)
        if shifted is not None:
            yield shifted


def projectability_diagnostic(family, model, constraints, seed=None):
    """Look for two points of the final set in one Legendre fibre with different SOPDE base parts"""
    samples = getattr(settings, 'KSYMP_DIAGNOSTIC_SAMPLES', 8)
    if model.function_heads:
        return {'verdict': 'skipped', 'reason': 'model uses function atoms', 'samples': 0}
    if constraints.is_empty:
        return {'verdict': 'skipped', 'reason': 'empty constraint set', 'samples': 0}
    rng = np.random.default_rng(seed)
    kernel = ker_fl_basis(model)
    free_velocities = [
        velocity for velocity in model.chart.velocities if velocity not in constraints.substitutions
    ]
    tried = 0
    for _ in range(samples):
        point = constraints.sample_point(rng)
        if point is None:
            continue
        tried += 1
        try:
            image = model.legendre_image(point)
            base = _evaluate_base(family, point)
        except (EvaluationError, UnboundSymbolError):
            continue
        directions = [{velocity: sympy.S.One} for velocity in free_velocities]
        for field in kernel:
            try:
                directions.append({
                    symbol: eval_rational(value, point) for symbol, value in field.items()
                })
            except EvaluationError:
                continue
        for shifted in _shifted_points(constraints, point, directions):
            try:
                if model.legendre_image(shifted) != image:
                    continue
                other = _evaluate_base(family, shifted)
            except (EvaluationError, UnboundSymbolError):
                continue
            if other != base:
                witness = {
                    str(symbol): str(shifted[symbol]) for symbol in model.chart.velocities
                    if shifted[symbol] != point[symbol]
                }
                logger.info(f'{model.name}: Legendre fibre meets the final set in two points')
                return {'verdict': 'not projectable as-is', 'witness': witness, 'samples': tried}
    verdict = 'projectable' if tried else 'inconclusive'
    return {'verdict': verdict, 'samples': tried}


def _numeric_rank(vectors, coordinates, point, bindings):
    if not vectors:
        return 0, np.zeros((0, len(coordinates)))
    values = np.array([
        [float(eval_rational(field[symbol], point, bindings)) for symbol in coordinates]
        for field in vectors
    ])
    return int(np.linalg.matrix_rank(values)), values


def lemma_cross_check(model, seed=None, points=10):
    """Compare perp-and-vertical with Ker FL* as subspaces at random points"""
    rng = np.random.default_rng(seed)
    chart = model.chart
    vertical = vertical_perp_basis(model)
    kernel = ker_fl_basis(model)
    atoms = set()
    for field in vertical + kernel:
        for _, value in field.items():
            atoms |= value.atoms(AppliedUndef, sympy.Derivative)
    symbols = list(chart.all_coordinates) + chart.parameters()
    checked, agrees = 0, True
    dimensions = set()
    for _ in range(points * 3):
        if checked == points:
            break
        point = {symbol: sympy.Integer(int(rng.integers(-9, 10))) for symbol in symbols}
        bindings = {
            atom: sympy.Integer(int(rng.integers(1, 10)))
            for atom in sorted(atoms, key=sympy.default_sort_key)
        }
        try:
            first, a = _numeric_rank(vertical, chart.velocities, point, bindings)
            second, b = _numeric_rank(kernel, chart.velocities, point, bindings)
        except EvaluationError:
            continue
        joint = int(np.linalg.matrix_rank(np.vstack([a, b]))) if len(a) + len(b) else 0
        checked += 1
        dimensions.add(second)
        if not first == second == joint:
            agrees = False
            logger.warning(f'{model.name}: perp-vertical rank {first}, Ker FL* rank {second}, joint {joint}')
    return {'agrees': agrees, 'points': checked, 'dimensions': sorted(dimensions)}
