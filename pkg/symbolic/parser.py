"""
Recursive-descent parser for the model-file expression grammar

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := ('-' | '+') unary | power
    power  := atom (('^' | '**') unary)?
    atom   := number | name | 'v[' name ',' int ']' | name '(' args ')'
            | 'diff(' atom (',' name)+ ')' | '(' expr ')'

Division is only allowed by nonzero rational constants and exponents must be
integers. Error positions are 1-based columns.
"""
import re
from dataclasses import dataclass

import sympy

from .expressions import normalize
from .symbols import SymbolKind, velocity_name


class ExpressionSyntaxError(ValueError):
    def __init__(self, message, position):
        super().__init__(f'{message} (column {position})')
        self.message = message
        self.position = position
        self.text = None


class UnknownIdentifierError(ExpressionSyntaxError):
    pass


TOKEN = re.compile(
    r'(?P<number>\d+)'
    r'|(?P<name>[A-Za-z][A-Za-z0-9_]*)'
    r'|(?P<op>\*\*|[-+*/^(),\[\]])'
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    position: int


def tokenize(text):
    tokens = []
    index = 0
    while index < len(text):
        if text[index].isspace():
            index += 1
            continue
        match = TOKEN.match(text, index)
        if match is None:
            raise ExpressionSyntaxError(f"Unexpected character '{text[index]}'", index + 1)
        tokens.append(Token(match.lastgroup, match.group(), index + 1))
        index = match.end()
    tokens.append(Token('end', '', len(text) + 1))
    return tokens


class ExpressionParser:
    def __init__(self, text, table):
        self.text = text
        self.table = table
        self.tokens = tokenize(text)
        self.index = 0

    def parse(self):
        value = self._expression()
        token = self._peek()
        if token.kind != 'end':
            raise ExpressionSyntaxError(f"Unexpected '{token.text}'", token.position)
        return normalize(value)

    def _peek(self, offset=0):
        return self.tokens[min(self.index + offset, len(self.tokens) - 1)]

    def _advance(self):
        token = self._peek()
        self.index += 1
        return token

    def _expect(self, text):
        token = self._advance()
        if token.text != text:
            found = token.text or 'end of input'
            raise ExpressionSyntaxError(f"Expected '{text}' but found '{found}'", token.position)
        return token

    def _expression(self):
        value = self._term()
        while self._peek().text in ('+', '-'):
            operator = self._advance().text
            operand = self._term()
            value = value + operand if operator == '+' else value - operand
        return value

    def _term(self):
        value = self._unary()
        while self._peek().text in ('*', '/'):
            operator = self._advance()
            operand = self._unary()
            if operator.text == '*':
                value = value * operand
                continue
            if not operand.is_Rational:
                raise ExpressionSyntaxError(
                    'Division is only allowed by rational constants', operator.position
                )
            if operand == 0:
                raise ExpressionSyntaxError('Division by zero', operator.position)
            value = value / operand
        return value

    def _unary(self):
        token = self._peek()
        if token.text == '-':
            self._advance()
            return -self._unary()
        if token.text == '+':
            self._advance()
            return self._unary()
        return self._power()

    def _power(self):
        base = self._atom()
        if self._peek().text in ('^', '**'):
            operator = self._advance()
            exponent = self._unary()
            if not exponent.is_Integer:
                raise ExpressionSyntaxError('Exponents must be integers', operator.position)
            if base == 0 and exponent < 0:
                raise ExpressionSyntaxError('Negative power of zero', operator.position)
            return base ** exponent
        return base

    def _atom(self):
        token = self._peek()
        if token.kind == 'number':
            self._advance()
            return sympy.Rational(token.text)
        if token.text == '(':
            self._advance()
            value = self._expression()
            self._expect(')')
            return value
        if token.kind == 'name':
            following = self._peek(1).text
            if token.text == 'v' and following == '[':
                return self._velocity()
            if token.text == 'diff' and following == '(':
                return self._derivative()
            if following == '(':
                return self._function()
            return self._symbol()
        found = token.text or 'end of input'
        raise ExpressionSyntaxError(f"Unexpected '{found}'", token.position)

    def _symbol(self):
        token = self._advance()
        entry = self.table.lookup(token.text)
        if entry is None or entry.kind == SymbolKind.FUNCTION:
            raise UnknownIdentifierError(f"Unknown identifier '{token.text}'", token.position)
        return entry.symbol

    def _velocity(self):
        start = self._advance()
        self._expect('[')
        base = self._advance()
        if base.kind != 'name':
            raise ExpressionSyntaxError('Expected a coordinate name', base.position)
        self._expect(',')
        direction = self._advance()
        if direction.kind != 'number' or not direction.text.isdigit():
            raise ExpressionSyntaxError('Expected a direction index', direction.position)
        self._expect(']')
        name = velocity_name(base.text, int(direction.text))
        entry = self.table.lookup(name)
        if entry is None:
            raise UnknownIdentifierError(f"Unknown velocity '{name}'", start.position)
        return entry.symbol

    def _argument(self):
        token = self._peek()
        if token.text == 'v' and self._peek(1).text == '[':
            return self._velocity()
        if token.kind != 'name':
            raise ExpressionSyntaxError('Expected a coordinate name', token.position)
        return self._symbol()

    def _function(self):
        token = self._advance()
        entry = self.table.function(token.text)
        if entry is None:
            raise UnknownIdentifierError(f"Unknown function '{token.text}'", token.position)
        self._expect('(')
        arguments = [self._argument()]
        while self._peek().text == ',':
            self._advance()
            arguments.append(self._argument())
        self._expect(')')
        if tuple(arguments) != entry.arguments:
            expected = ', '.join(str(argument) for argument in entry.arguments)
            raise ExpressionSyntaxError(
                f"'{token.text}' must be applied to ({expected})", token.position
            )
        return entry.atom()

    def _derivative(self):
        self._advance()
        self._expect('(')
        token = self._peek()
        if token.kind != 'name' or self._peek(1).text != '(':
            raise ExpressionSyntaxError('diff expects a function atom', token.position)
        atom = self._function()
        variables = []
        while self._peek().text == ',':
            self._advance()
            variables.append(self._argument())
        if not variables:
            raise ExpressionSyntaxError('diff expects at least one variable', self._peek().position)
        self._expect(')')
        return sympy.diff(atom, *variables)


def parse(text, table):
    """Parse text against a symbol table into a canonical expression"""
    try:
        return ExpressionParser(text, table).parse()
    except ExpressionSyntaxError as error:
        error.text = text
        raise
