"""
Fraction-free Gauss-Jordan elimination over sparse polynomial rings

Matrix rows are converted to sympy ``PolyElement`` dictionaries and reduced
with Bareiss updates, so every intermediate entry is a minor of the input and
every division is exact. Columns are eliminated latest-first; within a column
the candidate row with the fewest terms is chosen, ties going to the lowest
row index.
"""
import logging
from dataclasses import dataclass, field
from functools import reduce

import numpy as np
import sympy
from django.conf import settings
from sympy import default_sort_key
from sympy.core.function import AppliedUndef
from sympy.polys.domains import QQ
from sympy.polys.polyerrors import ExactQuotientFailed
from sympy.polys.rings import sring

from symbolic.expressions import (
    EvaluationError, eval_rational, generators, is_rational_function, normalize,
    symbols_inside_atoms,
)
from symbolic.printing import print_expr
from .matrices import SymMatrix

logger = logging.getLogger(__name__)


class NonlinearUnknownError(ValueError):
    pass


@dataclass
class RankCertificate:
    """Generic rank with the pivot minor whose vanishing would lower it"""
    rank: int
    minor: sympy.Expr = sympy.S.One
    rows: tuple = ()
    columns: tuple = ()
    sample_rank: int | None = None

    @property
    def is_constant(self):
        return self.minor.is_Number

    def minor_text(self, table=None):
        limit = getattr(settings, 'KSYMP_CERTIFICATE_MAX_TERMS', 64)
        terms = len(sympy.Add.make_args(self.minor))
        if terms > limit:
            return f'<minor with {terms} terms>'
        return print_expr(self.minor, table)

    def warning(self, label, table=None):
        if self.is_constant:
            return None
        return f'{label}: rank {self.rank} holds only where {self.minor_text(table)} != 0'

    def as_dict(self, table=None):
        return {
            'rank': self.rank,
            'minor': self.minor_text(table),
            'rows': [str(label) for label in self.rows],
            'columns': [str(label) for label in self.columns],
            'sample_rank': self.sample_rank,
        }


@dataclass
class ParametricSolution:
    """General solution of M x = b: pivot unknowns in terms of the free ones"""
    unknowns: tuple
    general: dict
    particular: dict
    nullspace: list
    consistency: list
    consistency_rows: list
    certificate: RankCertificate
    free: list = field(default_factory=list)

    @property
    def determined(self):
        return [unknown for unknown in self.unknowns if unknown in self.general]

    @property
    def is_consistent(self):
        return not self.consistency


def _cleared(row):
    """Scale a row of expressions so every entry is a polynomial"""
    denominators = []
    for value in row.values():
        if is_rational_function(value):
            _, bottom = sympy.fraction(sympy.together(value))
            denominators.append(bottom)
    if not denominators:
        return row
    scale = reduce(sympy.lcm, denominators)
    return {key: normalize(sympy.cancel(value * scale)) for key, value in row.items()}


def _to_ring(expression_rows):
    """PolyElement rows over QQ[generators]; ring is None for a zero matrix"""
    flat = [value for row in expression_rows for value in row.values()]
    if not flat:
        return [dict() for _ in expression_rows], None
    found = set()
    for value in flat:
        found |= generators(value)
    gens = sorted(found, key=default_sort_key) or [sympy.Dummy('t')]
    ring, polys = sring(flat, *gens, domain=QQ)
    rows = []
    position = 0
    for row in expression_rows:
        converted = {}
        for key in row:
            converted[key] = polys[position]
            position += 1
        rows.append({key: value for key, value in converted.items() if value})
    return rows, ring


def _eliminate(rows, column_order, ring, origins, full=True):
    """Bareiss elimination in place; returns [(row, col)] pivots and the last pivot"""
    one = ring.one
    previous = one
    pivots = []
    rank = 0
    for col in column_order:
        candidates = [i for i in range(rank, len(rows)) if col in rows[i]]
        if not candidates:
            continue
        best = min(candidates, key=lambda i: (len(rows[i][col]), i))
        rows[rank], rows[best] = rows[best], rows[rank]
        origins[rank], origins[best] = origins[best], origins[rank]
        pivot_row = rows[rank]
        pivot = pivot_row[col]
        targets = range(len(rows)) if full else range(rank + 1, len(rows))
        for i in targets:
            row = rows[i]
            if i == rank or not row:
                continue
            factor = row.get(col)
            keys = set(row) | set(pivot_row) if factor else set(row)
            updated = {}
            for key in keys:
                value = pivot * row.get(key, ring.zero)
                if factor:
                    value -= factor * pivot_row.get(key, ring.zero)
                if previous != one:
                    value = value.exquo(previous)
                if value:
                    updated[key] = value
            rows[i] = updated
        pivots.append((rank, col))
        previous = pivot
        rank += 1
    return pivots, previous


def _strip_factor(value, factor):
    if factor.is_ground:
        return value
    while True:
        try:
            value = value.exquo(factor)
        except ExactQuotientFailed:
            return value


def _primitive(entries):
    """Divide a polynomial vector by the gcd of its entries"""
    values = list(entries.values())
    common = reduce(lambda a, b: a.gcd(b), values)
    if common and not (common.is_ground and common.LC == 1):
        entries = {key: value.exquo(common) for key, value in entries.items()}
    return entries


def _sample_rank(matrix, seed):
    if seed is None or matrix.is_zero():
        return None if seed is None else 0
    rng = np.random.default_rng(seed)
    symbols, atoms = set(), set()
    for _, value in matrix.items():
        atoms |= value.atoms(AppliedUndef, sympy.Derivative)
        symbols |= value.free_symbols
    point = {s: int(rng.integers(-9, 10)) for s in sorted(symbols, key=default_sort_key)}
    bindings = {a: int(rng.integers(-9, 10)) for a in sorted(atoms, key=default_sort_key)}
    try:
        values = matrix.evaluate(point, bindings)
    except EvaluationError:
        return None
    return int(np.linalg.matrix_rank(values))


def generic_rank(matrix, seed=None):
    """Rank over the field of rational functions, with its certificate"""
    rows, ring = _to_ring([_cleared(row) for row in matrix.row_dicts()])
    if ring is None:
        return RankCertificate(rank=0, sample_rank=_sample_rank(matrix, seed))
    origins = list(range(matrix.rows))
    pivots, last = _eliminate(rows, list(reversed(range(matrix.cols))), ring, origins, full=False)
    certificate = RankCertificate(
        rank=len(pivots),
        minor=last.as_expr() if pivots else sympy.S.One,
        rows=tuple(matrix.row_labels[origins[r]] for r, _ in pivots),
        columns=tuple(matrix.col_labels[col] for _, col in pivots),
        sample_rank=_sample_rank(matrix, seed),
    )
    if certificate.sample_rank is not None and certificate.sample_rank > certificate.rank:
        logger.error(f'Sample rank {certificate.sample_rank} exceeds generic rank {certificate.rank}')
    return certificate


def _unit(size, position):
    return [sympy.S.One if index == position else sympy.S.Zero for index in range(size)]


def kernel_basis(matrix):
    """Polynomial basis of the right kernel, ordered by free column"""
    nonzero = set(matrix.nonzero_columns())
    vectors = {col: _unit(matrix.cols, col) for col in range(matrix.cols) if col not in nonzero}
    rows, ring = _to_ring([_cleared(row) for row in matrix.row_dicts()])
    if ring is not None:
        active = [col for col in reversed(range(matrix.cols)) if col in nonzero]
        pivots, last = _eliminate(rows, active, ring, list(range(matrix.rows)))
        pivot_of = {col: r for r, col in pivots}
        for free in active:
            if free in pivot_of:
                continue
            entries = {free: last}
            for col, r in pivot_of.items():
                value = rows[r].get(free)
                if value:
                    entries[col] = -value
            entries = _primitive(entries)
            if entries[free].LC < 0:
                entries = {key: -value for key, value in entries.items()}
            vector = [sympy.S.Zero] * matrix.cols
            for col, value in entries.items():
                vector[col] = value.as_expr()
            vectors[free] = vector
    return [vectors[col] for col in sorted(vectors)]


def solve_parametric(matrix, rhs, unknowns):
    """Solve M x = b for the listed unknowns (one per column)"""
    unknowns = tuple(unknowns)
    if len(unknowns) != matrix.cols or len(rhs) != matrix.rows:
        raise ValueError('System shape does not match the unknowns and right-hand side')
    target = matrix.cols
    expression_rows = matrix.row_dicts()
    for r, value in enumerate(rhs):
        value = normalize(value)
        if value != 0:
            expression_rows[r][target] = value
    rows, ring = _to_ring([_cleared(row) for row in expression_rows])
    if ring is None:
        return ParametricSolution(
            unknowns=unknowns,
            general={},
            particular={unknown: sympy.S.Zero for unknown in unknowns},
            nullspace=[{unknown: sympy.S.One} for unknown in unknowns],
            consistency=[],
            consistency_rows=[],
            certificate=RankCertificate(rank=0),
            free=list(unknowns),
        )

    origins = list(range(matrix.rows))
    pivots, last = _eliminate(rows, list(reversed(range(matrix.cols))), ring, origins)
    pivot_of = {col: r for r, col in pivots}
    free = [col for col in range(matrix.cols) if col not in pivot_of]
    divisor = last.as_expr()

    general, particular = {}, {}
    for col in sorted(pivot_of):
        row = rows[pivot_of[col]]
        constant = row[target].as_expr() if target in row else sympy.S.Zero
        value = constant - sum(
            (row[f].as_expr() * unknowns[f] for f in free if f in row), sympy.S.Zero
        )
        general[unknowns[col]] = normalize(value / divisor)
        particular[unknowns[col]] = normalize(constant / divisor)
    for col in free:
        particular[unknowns[col]] = sympy.S.Zero

    nullspace = []
    for f in free:
        vector = {unknowns[f]: sympy.S.One}
        for col, r in pivot_of.items():
            if f in rows[r]:
                vector[unknowns[col]] = normalize(-rows[r][f].as_expr() / divisor)
        nullspace.append(vector)

    consistency, consistency_rows = [], []
    for r in range(len(pivots), len(rows)):
        value = rows[r].get(target)
        if value:
            consistency.append(_strip_factor(value, last).as_expr())
            consistency_rows.append(origins[r])

    certificate = RankCertificate(
        rank=len(pivots),
        minor=divisor if pivots else sympy.S.One,
        rows=tuple(matrix.row_labels[origins[r]] for r, _ in pivots),
        columns=tuple(matrix.col_labels[col] for _, col in pivots),
    )
    if not certificate.is_constant:
        logger.warning(f'Solution divides by a non-constant pivot minor of rank {certificate.rank}')
    return ParametricSolution(
        unknowns=unknowns,
        general=general,
        particular=particular,
        nullspace=nullspace,
        consistency=consistency,
        consistency_rows=consistency_rows,
        certificate=certificate,
        free=[unknowns[col] for col in free],
    )


def linear_system(equations, unknowns, row_labels=None):
    """Coefficient matrix and right-hand side of equations = 0, linear in the unknowns"""
    unknowns = list(unknowns)
    position = {unknown: index for index, unknown in enumerate(unknowns)}
    unknown_set = set(unknowns)
    zero = {unknown: sympy.S.Zero for unknown in unknowns}
    entries, rhs = {}, []
    for row, equation in enumerate(equations):
        equation = normalize(equation)
        if symbols_inside_atoms(equation) & unknown_set:
            raise NonlinearUnknownError(f'Unknown used as a function argument in equation {row}')
        for unknown in equation.free_symbols & unknown_set:
            coefficient = normalize(sympy.diff(equation, unknown))
            if coefficient.free_symbols & unknown_set:
                raise NonlinearUnknownError(f"'{unknown}' appears nonlinearly in equation {row}")
            entries[(row, position[unknown])] = coefficient
        rhs.append(normalize(-equation.xreplace(zero)))
    matrix = SymMatrix(
        len(equations), len(unknowns), entries,
        row_labels=row_labels, col_labels=[str(unknown) for unknown in unknowns],
    )
    return matrix, rhs
