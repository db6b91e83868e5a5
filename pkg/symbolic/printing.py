"""
Deterministic printer whose output re-parses to the same expression
"""
import sympy
from sympy.core.function import AppliedUndef

from .expressions import is_rational_function, normalize, ordered_terms


def print_atom(atom):
    if isinstance(atom, sympy.Derivative):
        variables = []
        for variable, count in atom.variable_count:
            variables.extend([variable.name] * int(count))
        return f"diff({print_atom(atom.expr)}, {', '.join(variables)})"
    if isinstance(atom, AppliedUndef):
        return f"{atom.func.__name__}({', '.join(str(arg) for arg in atom.args)})"
    return str(atom)


def _print_power(base, exponent):
    text = print_atom(base)
    return text if exponent == 1 else f'{text}^{exponent}'


def print_polynomial(expr, ordering=()):
    terms = ordered_terms(expr, ordering)
    if not terms:
        return '0'
    parts = []
    for index, (coeff, powers) in enumerate(terms):
        monomial = '*'.join(_print_power(base, exponent) for base, exponent in powers)
        negative = coeff < 0
        magnitude = -coeff if negative else coeff
        if not monomial:
            body = str(magnitude)
        elif magnitude == 1:
            body = monomial
        else:
            body = f'{magnitude}*{monomial}'
        if index == 0:
            parts.append(f'-{body}' if negative else body)
        else:
            parts.append(f' - {body}' if negative else f' + {body}')
    return ''.join(parts)


def print_expr(expr, table=None):
    """Canonical text of an expression in the model-file grammar"""
    ordering = table.ordering() if table is not None else ()
    expr = normalize(expr)
    if is_rational_function(expr):
        top, bottom = sympy.fraction(expr)
        return f'({print_polynomial(top, ordering)})*({print_polynomial(bottom, ordering)})^-1'
    return print_polynomial(expr, ordering)
