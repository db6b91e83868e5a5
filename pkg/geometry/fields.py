"""
Vector fields and k-vector fields on the k-tangent bundle
"""
import sympy

from symbolic.expressions import diff, is_zero, normalize
from .charts import DimensionMismatchError


class VectorFieldOnTkQ:
    def __init__(self, chart, components=None):
        self.chart = chart
        self._components = {}
        for symbol, value in (components or {}).items():
            if symbol not in chart:
                raise DimensionMismatchError(f"'{symbol}' is not a coordinate of {chart!r}")
            value = normalize(value)
            if value != 0:
                self._components[symbol] = value

    @classmethod
    def coordinate(cls, chart, symbol):
        """The coordinate field d/dsymbol"""
        return cls(chart, {symbol: sympy.S.One})

    def __repr__(self):
        terms = ', '.join(f'{symbol}: {value}' for symbol, value in self.items())
        return f'VectorFieldOnTkQ({{{terms}}})'

    def __getitem__(self, symbol):
        return self._components.get(symbol, sympy.S.Zero)

    def __eq__(self, other):
        return isinstance(other, VectorFieldOnTkQ) and self._components == other._components

    def __add__(self, other):
        keys = set(self._components) | set(other._components)
        return VectorFieldOnTkQ(self.chart, {key: self[key] + other[key] for key in keys})

    def __neg__(self):
        return self.scale(-1)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, factor):
        return VectorFieldOnTkQ(
            self.chart, {key: factor * value for key, value in self._components.items()}
        )

    def base(self, i):
        return self[self.chart.base(i)]

    def fiber(self, i, beta):
        return self[self.chart.velocity(i, beta)]

    def items(self):
        return sorted(self._components.items(), key=lambda item: self.chart.index(item[0]))

    def components(self):
        return [self[symbol] for symbol in self.chart.all_coordinates]

    def map(self, function):
        return VectorFieldOnTkQ(
            self.chart, {key: function(value) for key, value in self._components.items()}
        )

    def is_vertical(self):
        return all(is_zero(self[symbol]) for symbol in self.chart.coordinates)

    def is_zero(self):
        return all(is_zero(value) for value in self._components.values())

    def free_symbols(self):
        found = set()
        for value in self._components.values():
            found |= value.free_symbols
        return found

    def apply(self, f, rules=None):
        """Directional derivative X(f)"""
        total = sympy.S.Zero
        variables = f.free_symbols
        for symbol, value in self._components.items():
            if symbol in variables:
                total += value * diff(f, symbol, rules)
        return normalize(total)


def lie_bracket(first, second, rules=None):
    """[A, B]^c = A(B^c) - B(A^c)"""
    components = {}
    for symbol in first.chart.all_coordinates:
        components[symbol] = first.apply(second[symbol], rules) - second.apply(first[symbol], rules)
    return VectorFieldOnTkQ(first.chart, components)


class KVectorFieldFamily:
    """(X_1, ..., X_k), possibly depending on free parameters"""

    def __init__(self, fields, parameters=()):
        self.fields = tuple(fields)
        if not self.fields:
            raise DimensionMismatchError('A k-vector field needs at least one field')
        self.chart = self.fields[0].chart
        if len(self.fields) != self.chart.k:
            raise DimensionMismatchError(f'Expected {self.chart.k} fields, got {len(self.fields)}')
        if any(field.chart is not self.chart for field in self.fields):
            raise DimensionMismatchError('All fields must share one chart')
        self.parameters = tuple(parameters)
        if any(parameter in self.chart for parameter in self.parameters):
            raise DimensionMismatchError('Parameters must not be chart coordinates')

    def __iter__(self):
        return iter(self.fields)

    def __len__(self):
        return len(self.fields)

    def field(self, alpha):
        return self.fields[alpha - 1]

    def map(self, function):
        return KVectorFieldFamily([field.map(function) for field in self.fields], self.parameters)

    def substitute(self, mapping, reducer=None):
        """Replace parameters; substituted parameters stop being free"""
        def replace(value):
            value = normalize(value.xreplace(mapping))
            return reducer(value) if reducer else value

        remaining = [parameter for parameter in self.parameters if parameter not in mapping]
        return KVectorFieldFamily([field.map(replace) for field in self.fields], remaining)


def sopde_defect(family):
    """Y_alpha with base components v^i_alpha - X_alpha^i and zero fiber part"""
    chart = family.chart
    defects = []
    for alpha, field in enumerate(family, 1):
        defects.append(VectorFieldOnTkQ(chart, {
            chart.base(i): chart.velocity(i, alpha) - field.base(i) for i in range(1, chart.n + 1)
        }))
    return KVectorFieldFamily(defects, family.parameters)


def is_sopde(family):
    return all(defect.is_zero() for defect in sopde_defect(family))


def vertical_endomorphism(alpha, field):
    """J^alpha(Z) = sum_i Z^i d/dv^i_alpha"""
    chart = field.chart
    return VectorFieldOnTkQ(chart, {
        chart.velocity(i, alpha): field.base(i) for i in range(1, chart.n + 1)
    })


def liouville_field(chart):
    return VectorFieldOnTkQ(chart, {velocity: velocity for velocity in chart.velocities})


def is_sopde_by_endomorphisms(family):
    """sum_alpha J^alpha(X_alpha) equals the Liouville field"""
    total = liouville_field(family.chart).scale(-1)
    for alpha, field in enumerate(family, 1):
        total = total + vertical_endomorphism(alpha, field)
    return total.is_zero()
