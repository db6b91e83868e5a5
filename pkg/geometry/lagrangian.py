"""
Lagrangian models: a chart, a Lagrangian and the derivative rules of its atoms
"""
import logging
import threading

import sympy
from django.utils.functional import cached_property
from sympy.core.function import AppliedUndef

from symbolic.expressions import diff, eval_rational, normalize
from symbolic.parser import parse
from symbolic.rules import DerivativeRuleTable
from symbolic.symbols import SymbolKind, SymbolTable
from .charts import BundleChart
from .differential import cartan_forms, energy, hessian, legendre_jacobian

logger = logging.getLogger(__name__)


class ModelError(ValueError):
    pass


class LagrangianModel:
    def __init__(self, name, chart, lagrangian, rules=None, invertible_atoms=()):
        self.name = name
        self.chart = chart
        self.table = chart.table
        self.rules = rules if rules is not None else DerivativeRuleTable()
        self.lagrangian = normalize(lagrangian)
        self.parameters = tuple(self.table.symbols(SymbolKind.PARAMETER))
        self.function_heads = tuple(entry.name for entry in self.table.functions())
        self.invertible_atoms = tuple(invertible_atoms)
        self._unknowns = {}
        self._lock = threading.Lock()

        stray = chart.check_symbols(self.lagrangian, self.parameters)
        if stray:
            raise ModelError(f"Lagrangian uses undeclared symbols: {', '.join(map(str, stray))}")
        for atom in self.lagrangian.atoms(AppliedUndef):
            entry = self.table.function(atom.func.__name__)
            if entry is None or tuple(atom.args) != entry.arguments:
                raise ModelError(f"Lagrangian uses undeclared atom '{atom}'")
        for head in self.invertible_atoms:
            if self.table.function(head) is None:
                raise ModelError(f"Invertible atom '{head}' is not declared")
        self.rules.check_closed(self.table)

    def __repr__(self):
        return f'LagrangianModel({self.name!r}, n={self.chart.n}, k={self.chart.k})'

    def diff(self, expr, symbol):
        return diff(expr, symbol, self.rules)

    @cached_property
    def momenta(self):
        """dL/dv^i_alpha keyed by (i, alpha)"""
        return {
            key: self.diff(self.lagrangian, self.chart.velocity(*key))
            for key in self.chart.velocity_keys()
        }

    @cached_property
    def cartan(self):
        return cartan_forms(self)

    @property
    def thetas(self):
        return self.cartan[0]

    @property
    def omega(self):
        return self.cartan[1]

    @cached_property
    def _energy(self):
        return energy(self)

    @property
    def energy(self):
        return self._energy[0]

    @property
    def energy_differential(self):
        return self._energy[1]

    @cached_property
    def hessian(self):
        return hessian(self)

    @cached_property
    def legendre_jacobian(self):
        return legendre_jacobian(self)

    def legendre_image(self, point, bindings=None):
        """(q, dL/dv) at an exact point"""
        image = [eval_rational(q, point) for q in self.chart.coordinates]
        image += [
            eval_rational(self.momenta[key], point, bindings)
            for key in self.chart.velocity_keys()
        ]
        return tuple(image)

    def unknown(self, alpha, coordinate):
        """Symbol for the coordinate component of the alpha-th unknown field"""
        key = (alpha, coordinate)
        with self._lock:
            symbol = self._unknowns.get(key)
            if symbol is not None:
                return symbol
            if self.chart.is_velocity(coordinate):
                i, beta = self.chart.velocity_key(coordinate)
                stem = f'X_{alpha}_{self.chart.coordinate_names[i - 1]}_{beta}'
            else:
                stem = f'X_{alpha}_{coordinate}'
            taken = {str(existing) for existing in self._unknowns.values()}
            name, counter = stem, 0
            while name in self.table or name in taken:
                counter += 1
                name = f'{stem}__{counter}'
            symbol = sympy.Symbol(name)
            self._unknowns[key] = symbol
            return symbol

    def family_atom(self, unknown):
        """Free function of all bundle coordinates standing for a free unknown"""
        return self.table.declare_function(str(unknown), self.chart.all_coordinates)


def build_model(name, coordinate_names, k, lagrangian, parameters=(), function_atoms=(),
                invertible_atoms=()):
    """Model from text: function_atoms are dicts with name, arguments, rules and terminal"""
    table = SymbolTable()
    chart = BundleChart(coordinate_names, k, table)
    for parameter in parameters:
        table.declare_parameter(parameter)
    rules = DerivativeRuleTable()
    for declaration in function_atoms:
        arguments = [_argument(table, argument) for argument in declaration.get('arguments', [])]
        table.declare_function(declaration['name'], arguments)
    for declaration in function_atoms:
        if declaration.get('terminal'):
            rules.declare_terminal(declaration['name'])
        for variable, text in sorted((declaration.get('rules') or {}).items()):
            value = text if isinstance(text, sympy.Basic) else parse(text, table)
            rules.add(declaration['name'], _argument(table, variable), value)
    if not isinstance(lagrangian, sympy.Basic):
        lagrangian = parse(lagrangian, table)
    return LagrangianModel(name, chart, lagrangian, rules, invertible_atoms)


def _argument(table, name):
    entry = table.lookup(name)
    if entry is None or entry.kind == SymbolKind.FUNCTION:
        raise ModelError(f"Unknown coordinate '{name}'")
    return entry.symbol
