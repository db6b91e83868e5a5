"""
One-forms, families of two-forms and the Cartan data of a Lagrangian

A two-form W is stored through its upper-triangular entries: W[a, b] is the
coefficient of dx^a ^ dx^b for a < b in chart order, W[b, a] = -W[a, b], and
contraction reads i(X)W = sum_{a,b} X^a W[a, b] dx^b.
"""
from collections import defaultdict

import sympy

from linalg.matrices import SymMatrix
from symbolic.expressions import diff, is_zero, normalize
from .charts import DimensionMismatchError


class OneForm:
    def __init__(self, chart, coefficients=None):
        self.chart = chart
        self._coefficients = {}
        for symbol, value in (coefficients or {}).items():
            if symbol not in chart:
                raise DimensionMismatchError(f"'{symbol}' is not a coordinate of {chart!r}")
            value = normalize(value)
            if value != 0:
                self._coefficients[symbol] = value

    def __repr__(self):
        terms = ', '.join(f'{symbol}: {value}' for symbol, value in self.items())
        return f'OneForm({{{terms}}})'

    def __getitem__(self, symbol):
        return self._coefficients.get(symbol, sympy.S.Zero)

    def __eq__(self, other):
        return isinstance(other, OneForm) and self._coefficients == other._coefficients

    def __add__(self, other):
        keys = set(self._coefficients) | set(other._coefficients)
        return OneForm(self.chart, {key: self[key] + other[key] for key in keys})

    def __neg__(self):
        return OneForm(self.chart, {key: -value for key, value in self._coefficients.items()})

    def __sub__(self, other):
        return self + (-other)

    def items(self):
        return sorted(self._coefficients.items(), key=lambda item: self.chart.index(item[0]))

    def map(self, function):
        return OneForm(self.chart, {key: function(value) for key, value in self._coefficients.items()})

    def is_zero(self):
        return all(is_zero(value) for value in self._coefficients.values())


class TwoFormFamily:
    """k antisymmetric coefficient matrices over one chart"""

    def __init__(self, chart, blocks):
        self.chart = chart
        self._blocks = []
        for block in blocks:
            cleaned = {}
            for (first, second), value in block.items():
                if first >= second:
                    raise ValueError('Two-form entries are stored with first < second')
                value = normalize(value)
                if value != 0:
                    cleaned[(first, second)] = value
            self._blocks.append(cleaned)

    def __len__(self):
        return len(self._blocks)

    def block(self, alpha):
        """Upper-triangular entries {(a, b): W[a, b]} by chart index, alpha 1-based"""
        return self._blocks[alpha - 1]

    def entry(self, alpha, first, second):
        i, j = self.chart.index(first), self.chart.index(second)
        if i == j:
            return sympy.S.Zero
        block = self.block(alpha)
        if i < j:
            return block.get((i, j), sympy.S.Zero)
        return -block.get((j, i), sympy.S.Zero)

    def matrix(self, alpha):
        labels = [str(symbol) for symbol in self.chart.all_coordinates]
        entries = {}
        for (i, j), value in self.block(alpha).items():
            entries[(i, j)] = value
            entries[(j, i)] = -value
        size = len(labels)
        return SymMatrix(size, size, entries, labels, labels)

    def velocity_block_is_zero(self, alpha):
        return all(
            not (self.chart.is_velocity(self.chart.all_coordinates[i])
                 and self.chart.is_velocity(self.chart.all_coordinates[j]))
            for i, j in self.block(alpha)
        )


def _partial(model, expr, symbol):
    if symbol not in expr.free_symbols:
        return sympy.S.Zero
    return model.diff(expr, symbol)


def cartan_forms(model):
    """theta^alpha = sum_i dL/dv^i_alpha dq^i and omega^alpha = -d theta^alpha"""
    chart = model.chart
    thetas, blocks = [], []
    for alpha in range(1, chart.k + 1):
        momenta = {i: model.momenta[(i, alpha)] for i in range(1, chart.n + 1)}
        thetas.append(OneForm(chart, {chart.base(i): momenta[i] for i in momenta}))
        block = {}
        for i in range(1, chart.n + 1):
            for j in range(i + 1, chart.n + 1):
                value = (
                    _partial(model, momenta[i], chart.base(j))
                    - _partial(model, momenta[j], chart.base(i))
                )
                if value != 0:
                    block[(chart.index(chart.base(i)), chart.index(chart.base(j)))] = value
            for velocity in chart.velocities:
                value = _partial(model, momenta[i], velocity)
                if value != 0:
                    block[(chart.index(chart.base(i)), chart.index(velocity))] = value
        blocks.append(block)
    return thetas, TwoFormFamily(chart, blocks)


def exterior_derivative(form, rules=None):
    """Upper-triangular entries of d(form)"""
    chart = form.chart
    coordinates = chart.all_coordinates
    entries = defaultdict(lambda: sympy.S.Zero)
    for symbol, value in form.items():
        b = chart.index(symbol)
        for variable in value.free_symbols:
            if variable not in chart:
                continue
            a = chart.index(variable)
            if a == b:
                continue
            derivative = diff(value, coordinates[a], rules)
            if a < b:
                entries[(a, b)] += derivative
            else:
                entries[(b, a)] -= derivative
    return {key: normalize(value) for key, value in entries.items() if not is_zero(value)}


def energy(model):
    """E = sum v^i_alpha dL/dv^i_alpha - L and its differential"""
    chart = model.chart
    value = sum(
        (chart.velocity(*key) * momentum for key, momentum in model.momenta.items()),
        sympy.S.Zero,
    ) - model.lagrangian
    value = normalize(value)
    differential = OneForm(chart, {
        symbol: model.diff(value, symbol)
        for symbol in chart.all_coordinates if symbol in value.free_symbols
    })
    return value, differential


def hessian(model):
    """d2L/dv^i_alpha dv^j_beta, rows and columns in velocity order"""
    chart = model.chart
    labels = [str(velocity) for velocity in chart.velocities]
    entries = {}
    for row, key in enumerate(chart.velocity_keys()):
        momentum = model.momenta[key]
        for col, velocity in enumerate(chart.velocities):
            value = _partial(model, momentum, velocity)
            if value != 0:
                entries[(row, col)] = value
    return SymMatrix(len(labels), len(labels), entries, labels, labels)


def legendre_jacobian(model):
    """Jacobian of (q, v) -> (q, dL/dv)"""
    chart = model.chart
    row_labels = [str(symbol) for symbol in chart.coordinates]
    row_labels += [f'p[{chart.coordinate_names[i - 1]},{alpha}]' for i, alpha in chart.velocity_keys()]
    entries = {(i, i): sympy.S.One for i in range(chart.n)}
    for offset, key in enumerate(chart.velocity_keys()):
        momentum = model.momenta[key]
        for col, symbol in enumerate(chart.all_coordinates):
            value = _partial(model, momentum, symbol)
            if value != 0:
                entries[(chart.n + offset, col)] = value
    size = chart.dimension
    return SymMatrix(size, size, entries, row_labels, [str(s) for s in chart.all_coordinates])


def contract(omega, fields):
    """Omega(X) = sum_alpha i(X_alpha) omega^alpha"""
    fields = list(fields)
    if len(fields) != len(omega):
        raise DimensionMismatchError(f'Expected {len(omega)} fields, got {len(fields)}')
    chart = omega.chart
    coordinates = chart.all_coordinates
    coefficients = defaultdict(lambda: sympy.S.Zero)
    for alpha, field in enumerate(fields, 1):
        if field.chart is not chart:
            raise DimensionMismatchError('Vector field lives on a different chart')
        for (i, j), value in omega.block(alpha).items():
            first, second = coordinates[i], coordinates[j]
            coefficients[second] += field[first] * value
            coefficients[first] -= field[second] * value
    return OneForm(chart, coefficients)
