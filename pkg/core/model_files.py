"""
Model files: JSON documents describing a Lagrangian model

    {
      "name": "academic",
      "n": 2, "k": 2,
      "coordinates": ["q1", "q2"],
      "parameters": [],
      "lagrangian": "q2*v[q1,1] - q1*v[q2,2] + q1*q2",
      "function_atoms": [{"name": "f", "arguments": ["q1"], "rules": {"q1": "2*q1"}}],
      "invertible_atoms": []
    }
"""
import json
import logging
from pathlib import Path

from affine.fixtures import build_document, fixture_document, model_document
from geometry.charts import ChartError, DimensionMismatchError
from geometry.lagrangian import ModelError
from symbolic.parser import ExpressionSyntaxError
from symbolic.rules import RuleTableError
from symbolic.symbols import DuplicateSymbolError
from .forms import ModelFileForm

logger = logging.getLogger(__name__)


class ModelFileError(ValueError):
    def __init__(self, message, line=None, column=None):
        self.message = message
        self.line = line
        self.column = column
        super().__init__(str(self))

    def __str__(self):
        if self.line is None:
            return self.message
        return f'line {self.line}, column {self.column}: {self.message}'


def _locate(source, text, position):
    """Line and column of a character of an expression string inside the file"""
    if source is None or text is None:
        return None, None
    literal = json.dumps(text)
    start = source.find(literal)
    if start < 0:
        return None, None
    offset = start + position
    line = source.count('\n', 0, offset) + 1
    column = offset - source.rfind('\n', 0, offset)
    return line, column


def decode(source):
    try:
        document = json.loads(source)
    except json.JSONDecodeError as error:
        raise ModelFileError(error.msg, error.lineno, error.colno) from None
    if not isinstance(document, dict):
        raise ModelFileError('A model file must contain a JSON object')
    return document


def validate(document):
    form = ModelFileForm(data=document)
    if not form.is_valid():
        raise ModelFileError(form.first_error())
    return form.cleaned_data


def build(document, source=None):
    """Validated model from a decoded document; source locates expression errors"""
    cleaned = validate(document)
    try:
        model = build_document(cleaned)
    except ExpressionSyntaxError as error:
        line, column = _locate(source, error.text, error.position)
        raise ModelFileError(error.message, line, column) from None
    except (ChartError, DimensionMismatchError, DuplicateSymbolError, ModelError,
            RuleTableError) as error:
        raise ModelFileError(str(error)) from None
    logger.debug(f'Loaded model {model!r}')
    return model


def load(path):
    """Read, validate and build the model of a model file"""
    try:
        source = Path(path).read_text(encoding='utf-8')
    except OSError as error:
        raise ModelFileError(f'Cannot read {path}: {error.strerror}') from None
    return build(decode(source), source)


def load_fixture(name):
    """Fixture model through the same validation as a file"""
    return build(fixture_document(name))


def dump(model):
    return json.dumps(model_document(model), indent=2) + '\n'
