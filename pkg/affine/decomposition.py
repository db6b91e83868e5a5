"""
Affine Lagrangians L = F^alpha_i(q) v^i_alpha + G(q)

Every affine Lagrangian is singular and its two-forms only couple base
directions, through the antisymmetrized Jacobian

    M^alpha_ij = dF^alpha_i/dq^j - dF^alpha_j/dq^i

The rank of M decides which constraints appear, so the constraint algorithm
reduces to closed formulas in F and G.
"""
import logging
from dataclasses import dataclass, field

import sympy
from django.utils.functional import cached_property

from constraints.algorithm import classify, fiber_unknowns
from constraints.choices import ConstraintClass
from constraints.normal_form import Constraint, ConstraintSet
from geometry.fields import VectorFieldOnTkQ
from linalg.elimination import generic_rank, kernel_basis, linear_system, solve_parametric
from linalg.matrices import SymMatrix
from symbolic.expressions import is_zero, normalize

logger = logging.getLogger(__name__)


@dataclass
class AffineDecomposition:
    model: object
    F: dict
    G: sympy.Expr
    _jacobian: dict = field(default_factory=dict, repr=False)

    @property
    def chart(self):
        return self.model.chart

    def f(self, alpha, i):
        return self.F.get((alpha, i), sympy.S.Zero)

    def reconstruct(self):
        chart = self.chart
        return normalize(sum(
            (value * chart.velocity(i, alpha) for (alpha, i), value in self.F.items()),
            self.G,
        ))

    def partial(self, alpha, i, j):
        """dF^alpha_i/dq^j"""
        key = (alpha, i, j)
        if key not in self._jacobian:
            value = self.f(alpha, i)
            symbol = self.chart.base(j)
            self._jacobian[key] = (
                self.model.diff(value, symbol) if symbol in value.free_symbols else sympy.S.Zero
            )
        return self._jacobian[key]

    def m_entry(self, alpha, i, j):
        if i == j:
            return sympy.S.Zero
        return normalize(self.partial(alpha, i, j) - self.partial(alpha, j, i))

    @cached_property
    def gradient(self):
        """dG/dq^j for j = 1..n"""
        return [self.model.diff(self.G, q) for q in self.chart.coordinates]


def detect_affine(model):
    """The decomposition of an affine Lagrangian, or None"""
    chart = model.chart
    velocities = set(chart.velocities)
    for key, momentum in model.momenta.items():
        if momentum.free_symbols & velocities:
            return None
    if not model.hessian.is_zero():
        return None
    F = {
        (alpha, i): model.momenta[(i, alpha)]
        for i, alpha in chart.velocity_keys() if model.momenta[(i, alpha)] != 0
    }
    rest = model.lagrangian - sum(
        (value * chart.velocity(i, alpha) for (alpha, i), value in F.items()), sympy.S.Zero
    )
    G = normalize(rest)
    if G.free_symbols & velocities:
        return None
    decomposition = AffineDecomposition(model, F, G)
    logger.debug(f'{model.name}: affine with {len(F)} nonzero coefficients')
    return decomposition


def m_matrix(a):
    """Rows j, columns (alpha, i): M^alpha_ij"""
    chart = a.chart
    n, k = chart.n, chart.k
    entries = {}
    columns = [(alpha, i) for alpha in range(1, k + 1) for i in range(1, n + 1)]
    for col, (alpha, i) in enumerate(columns):
        for j in range(1, n + 1):
            value = a.m_entry(alpha, i, j)
            if value != 0:
                entries[(j - 1, col)] = value
    return SymMatrix(
        n, n * k, entries,
        row_labels=[str(q) for q in chart.coordinates],
        col_labels=[f'M{alpha}[{chart.base(i)}]' for alpha, i in columns],
    )


def base_kernel(a, matrix=None):
    """Base fields Z with M^alpha_ij Z^j = 0 for every alpha and i"""
    chart = a.chart
    matrix = m_matrix(a) if matrix is None else matrix
    vectors = kernel_basis(matrix.transpose())
    return [VectorFieldOnTkQ(chart, dict(zip(chart.coordinates, vector))) for vector in vectors]


def ndgc_constraints(a):
    """eta^j = sum v^i_alpha M^alpha_ij + dG/dq^j for every base index j"""
    chart = a.chart
    eta = []
    for j in range(1, chart.n + 1):
        total = a.gradient[j - 1]
        for alpha in range(1, chart.k + 1):
            for i in range(1, chart.n + 1):
                entry = a.m_entry(alpha, i, j)
                if entry != 0:
                    total += chart.velocity(i, alpha) * entry
        eta.append(normalize(total))
    return eta


@dataclass
class AffineConstraints:
    zeta: list
    eta: list
    kernel: list
    constraints: ConstraintSet
    certificate: object = None


@dataclass
class AffineTangency:
    determinations: dict
    residuals: list
    certificate: object = None


def _specializer(specialization):
    if not specialization:
        return normalize
    return lambda expr: normalize(sympy.sympify(expr).xreplace(specialization))


def _vertical_kernel(chart):
    return [VectorFieldOnTkQ.coordinate(chart, velocity) for velocity in chart.velocities]


def affine_constraints(a, seed=None, specialization=None):
    """First-generation constraints from the rank of M

    ``specialization`` maps symbols and atoms to values; it is applied
    to M before its rank and kernel are taken and to every raw constraint
    before it enters the normal form.
    """
    model = a.model
    chart = a.chart
    special = _specializer(specialization)
    matrix = m_matrix(a)
    if specialization:
        matrix = matrix.map(special)
    certificate = generic_rank(matrix, seed)
    if certificate.rank == chart.n:
        kernel = []
    elif certificate.rank == 0:
        kernel = [VectorFieldOnTkQ.coordinate(chart, q) for q in chart.coordinates]
    else:
        kernel = base_kernel(a, matrix)
    logger.info(f'{model.name}: rank M = {certificate.rank}, {len(kernel)} kernel fields')

    zeta = []
    for field_ in kernel:
        value = normalize(sum(
            (field_[q] * derivative for q, derivative in zip(chart.coordinates, a.gradient)),
            sympy.S.Zero,
        ))
        if not is_zero(value):
            zeta.append(value)
    eta = ndgc_constraints(a)

    constraints = ConstraintSet.for_model(model)
    vertical = _vertical_kernel(chart)
    for index, value in enumerate(zeta, 1):
        reduced = constraints.canonical(special(value))
        if reduced is not None:
            constraints.add(Constraint(
                reduced, 1, ConstraintClass.DYNAMICAL, f'i(Z{index})dE'
            ))
    for j, value in enumerate(eta, 1):
        reduced = constraints.canonical(special(value))
        if reduced is not None:
            kind = classify(reduced, model, constraints, vertical)
            constraints.add(Constraint(reduced, 1, kind, f'eta[{chart.base(j)}]'))
    return AffineConstraints(zeta, eta, list(kernel), constraints, certificate)


def _gradient(model, expr):
    chart = model.chart
    return [
        model.diff(expr, q) if q in expr.free_symbols else sympy.S.Zero
        for q in chart.coordinates
    ]


def _along_sopde(chart, alpha, gradient):
    return sum(
        (chart.velocity(l, alpha) * value for l, value in enumerate(gradient, 1) if value != 0),
        sympy.S.Zero,
    )


def affine_tangency(a, result, specialization=None, include_sopde=True):
    """Tangency of the affine constraints along the generic SOPDE

    Gamma_alpha(zeta) only involves base derivatives; Gamma_alpha(eta^j)
    brings in the fiber unknowns through sum (Gamma_alpha)^i_beta M^beta_ij.
    """
    model = a.model
    chart = a.chart
    n, k = chart.n, chart.k
    special = _specializer(specialization)
    rows, labels = [], []

    zeta_gradients = [_gradient(model, value) for value in result.zeta]
    for alpha in range(1, k + 1):
        for index, gradient in enumerate(zeta_gradients, 1):
            rows.append(_along_sopde(chart, alpha, gradient))
            labels.append(f'Gamma_{alpha}(zeta{index})')

    unknowns = []
    if include_sopde:
        unknowns = fiber_unknowns(model)
        for j in range(1, n + 1):
            inner = []
            for l in range(1, n + 1):
                symbol = chart.base(l)
                total = a.gradient[j - 1]
                total = model.diff(total, symbol) if symbol in total.free_symbols else sympy.S.Zero
                for beta in range(1, k + 1):
                    for i in range(1, n + 1):
                        entry = a.m_entry(beta, i, j)
                        if symbol in entry.free_symbols:
                            total += chart.velocity(i, beta) * model.diff(entry, symbol)
                inner.append(normalize(total))
            for alpha in range(1, k + 1):
                value = _along_sopde(chart, alpha, inner)
                for beta in range(1, k + 1):
                    for i in range(1, n + 1):
                        entry = a.m_entry(beta, i, j)
                        if entry != 0:
                            value += model.unknown(alpha, chart.velocity(i, beta)) * entry
                rows.append(value)
                labels.append(f'Gamma_{alpha}(eta{j})')

    constraints = result.constraints
    equations = [constraints.reduce(special(row)) for row in rows]
    matrix, rhs = linear_system(equations, unknowns, row_labels=labels)
    solution = solve_parametric(matrix, rhs, unknowns)
    determinations = {
        unknown: constraints.reduce(solution.general[unknown]) for unknown in solution.determined
    }
    residuals = []
    for expr in solution.consistency:
        reduced = constraints.canonical(expr)
        if reduced is not None and reduced not in residuals:
            residuals.append(reduced)
    logger.info(
        f'{model.name}: affine tangency fixed {len(determinations)} unknowns, '
        f'{len(residuals)} residual conditions'
    )
    return AffineTangency(determinations, residuals, solution.certificate)
