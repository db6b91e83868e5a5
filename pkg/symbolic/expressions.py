"""
Canonical form, differentiation and exact evaluation of expressions

Expressions are sympy trees over declared symbols and free-function atoms.
Polynomials are kept fully expanded; rational functions (which only appear
after division by a non-constant pivot) are kept as a cancelled quotient.
"""
import logging

import sympy
from sympy import default_sort_key
from sympy.core.function import AppliedUndef

logger = logging.getLogger(__name__)


class UnboundSymbolError(LookupError):
    pass


class EvaluationError(ArithmeticError):
    pass


def function_atoms(expr):
    """Function atoms and formal derivatives, sorted"""
    return sorted(expr.atoms(AppliedUndef, sympy.Derivative), key=default_sort_key)


def is_rational_function(expr):
    return any(
        power.exp.is_negative and not power.base.is_Number
        for power in expr.atoms(sympy.Pow)
    )


def normalize(expr):
    expr = sympy.sympify(expr)
    if is_rational_function(expr):
        return sympy.cancel(sympy.together(expr))
    return sympy.expand(expr)


def numerator(expr):
    expr = normalize(expr)
    if not is_rational_function(expr):
        return expr
    top, _ = sympy.fraction(expr)
    return sympy.expand(top)


def is_zero(expr):
    expr = normalize(expr)
    if expr == 0:
        return True
    return is_rational_function(expr) and numerator(expr) == 0


def diff(expr, symbol, rules=None):
    """Derivative with derivative rules applied to function atoms"""
    result = sympy.diff(expr, symbol)
    if rules:
        result = rules.rewrite(result)
    return normalize(result)


def substitute(expr, mapping):
    """Replace symbols outside of function atoms; atoms stay opaque"""
    if not mapping:
        return expr
    atoms = expr.atoms(AppliedUndef, sympy.Derivative)
    if not atoms:
        return expr.xreplace(mapping)
    guards = {atom: sympy.Dummy() for atom in atoms}
    replaced = expr.xreplace(guards).xreplace(mapping)
    return replaced.xreplace({dummy: atom for atom, dummy in guards.items()})


def symbols_inside_atoms(expr):
    inside = set()
    for atom in expr.atoms(AppliedUndef, sympy.Derivative):
        inside |= atom.free_symbols
    return inside


def eval_rational(expr, point, bindings=None):
    """Exact value at a rational point; atoms are taken from bindings"""
    mapping = {key: sympy.Rational(value) for key, value in (bindings or {}).items()}
    mapping.update({key: sympy.Rational(value) for key, value in point.items()})
    value = sympy.sympify(expr).xreplace(mapping)
    leftover = value.atoms(AppliedUndef, sympy.Derivative) | value.free_symbols
    if leftover:
        names = ', '.join(sorted(str(item) for item in leftover))
        raise UnboundSymbolError(f'No value bound for {names}')
    if not value.is_Rational:
        raise EvaluationError(f'Expression is undefined at the given point ({value})')
    return value


def generators(expr):
    """Symbols and atoms an expanded polynomial is built from"""
    found = set()
    for term in sympy.Add.make_args(sympy.expand(expr)):
        for factor in sympy.Mul.make_args(term):
            base, _ = factor.as_base_exp()
            if not base.is_Number:
                found.add(base)
    return found


def ordered_terms(expr, ordering=()):
    """(coefficient, [(generator, exponent), ...]) pairs in graded-lex order

    Generators follow ``ordering`` first, then any remaining ones by sympy's
    default sort key.
    """
    expr = sympy.expand(expr)
    if expr == 0:
        return []
    parsed = []
    seen = set()
    for term in sympy.Add.make_args(expr):
        coeff, rest = term.as_coeff_Mul()
        powers = {}
        for factor in sympy.Mul.make_args(rest):
            if factor.is_Number:
                coeff *= factor
                continue
            base, exponent = factor.as_base_exp()
            powers[base] = powers.get(base, 0) + int(exponent)
        parsed.append((coeff, powers))
        seen.update(powers)

    ordered = [symbol for symbol in ordering if symbol in seen]
    listed = set(ordered)
    gens = ordered + sorted((g for g in seen if g not in listed), key=default_sort_key)
    index = {gen: position for position, gen in enumerate(gens)}

    def grlex(item):
        exponents = [0] * len(gens)
        for base, exponent in item[1].items():
            exponents[index[base]] = exponent
        return (-sum(exponents), [-exponent for exponent in exponents])

    parsed.sort(key=grlex)
    return [
        (coeff, [(gen, powers[gen]) for gen in gens if gen in powers])
        for coeff, powers in parsed
    ]


def leading_coefficient(expr, ordering=()):
    terms = ordered_terms(expr, ordering)
    return terms[0][0] if terms else sympy.S.Zero


def strip_atom_content(expr, heads):
    """Divide out the largest monomial in the named atoms that divides every term"""
    if not heads:
        return expr
    terms = sympy.Add.make_args(sympy.expand(expr))
    content = sympy.S.One
    candidates = {
        base for base in generators(expr)
        if isinstance(base, AppliedUndef) and base.func.__name__ in heads
    }
    for atom in candidates:
        lowest = min(term.as_powers_dict().get(atom, 0) for term in terms)
        if lowest:
            content *= atom ** lowest
    if content == 1:
        return expr
    return sympy.expand(expr / content)
