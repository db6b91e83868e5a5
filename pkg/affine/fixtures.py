"""
Built-in models, as model-file documents
"""
import logging

from geometry.lagrangian import build_model
from symbolic.printing import print_expr
from .relativity import build_einstein_palatini

logger = logging.getLogger(__name__)


class UnknownFixtureError(KeyError):
    pass


def academic():
    return {
        'name': 'academic',
        'n': 2,
        'k': 2,
        'coordinates': ['q1', 'q2'],
        'lagrangian': 'q2*v[q1,1] - q1*v[q2,2] + q1*q2',
    }


def affine_rank0():
    return {
        'name': 'affine-rank0',
        'n': 1,
        'k': 2,
        'coordinates': ['q'],
        'lagrangian': 'v[q,1] + q^2',
    }


def free():
    return {
        'name': 'free',
        'n': 2,
        'k': 2,
        'coordinates': ['q1', 'q2'],
        'lagrangian': '1/2*v[q1,1]^2 + 1/2*v[q2,1]^2 + 1/2*v[q1,2]^2 + 1/2*v[q2,2]^2',
    }


def model_document(model):
    """A model-file document that rebuilds the model"""
    table = model.table
    function_atoms = []
    for entry in table.functions():
        if entry.name not in model.function_heads:
            continue
        declaration = {
            'name': entry.name,
            'arguments': [str(argument) for argument in entry.arguments],
        }
        rules = {
            str(symbol): print_expr(expr, table) for symbol, expr in model.rules.rules_for(entry.name)
        }
        if rules:
            declaration['rules'] = dict(sorted(rules.items()))
        if model.rules.is_terminal(entry.name):
            declaration['terminal'] = True
        function_atoms.append(declaration)
    document = {
        'name': model.name,
        'n': model.chart.n,
        'k': model.chart.k,
        'coordinates': list(model.chart.coordinate_names),
        'lagrangian': print_expr(model.lagrangian, table),
    }
    if model.parameters:
        document['parameters'] = [str(parameter) for parameter in model.parameters]
    if function_atoms:
        document['function_atoms'] = function_atoms
    if model.invertible_atoms:
        document['invertible_atoms'] = list(model.invertible_atoms)
    return document


def einstein_palatini():
    return model_document(build_einstein_palatini())


FIXTURES = {
    'academic': academic,
    'affine-rank0': affine_rank0,
    'free': free,
    'einstein-palatini': einstein_palatini,
}


def fixture_names():
    return sorted(FIXTURES)


def fixture_document(name):
    try:
        factory = FIXTURES[name]
    except KeyError:
        raise UnknownFixtureError(
            f"Unknown fixture '{name}' (choose from {', '.join(fixture_names())})"
        ) from None
    return factory()


def build_document(document):
    """Model from an already validated document"""
    return build_model(
        document['name'],
        document['coordinates'],
        document['k'],
        document['lagrangian'],
        parameters=document.get('parameters') or (),
        function_atoms=document.get('function_atoms') or (),
        invertible_atoms=document.get('invertible_atoms') or (),
    )


def build_fixture(name):
    if name == 'einstein-palatini':
        return build_einstein_palatini()
    model = build_document(fixture_document(name))
    logger.debug(f'Built fixture {name}: {model!r}')
    return model
