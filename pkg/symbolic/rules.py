"""
Derivative rules for free-function atoms
"""
import sympy
from sympy.core.function import AppliedUndef


class RuleTableError(ValueError):
    pass


class DerivativeRuleTable:
    """Maps (atom head, coordinate) to the derivative of the atom"""

    def __init__(self):
        self._rules = {}
        self._terminal = set()

    def __bool__(self):
        return bool(self._rules) or bool(self._terminal)

    def __len__(self):
        return len(self._rules)

    def add(self, head, symbol, expr):
        self._rules[(head, symbol)] = sympy.sympify(expr)

    def declare_terminal(self, head):
        """Atoms whose derivatives are all zero"""
        self._terminal.add(head)

    def lookup(self, head, symbol):
        return self._rules.get((head, symbol))

    def heads(self):
        return {head for head, _ in self._rules} | self._terminal

    def is_terminal(self, head):
        return head in self._terminal

    def items(self):
        return list(self._rules.items())

    def rules_for(self, head):
        return [(symbol, expr) for (name, symbol), expr in self._rules.items() if name == head]

    def _matches(self, node):
        if not isinstance(node, sympy.Derivative) or not isinstance(node.expr, AppliedUndef):
            return False
        if len(node.variable_count) != 1 or node.variable_count[0][1] != 1:
            return False
        head = node.expr.func.__name__
        if head in self._terminal:
            return True
        return (head, node.variable_count[0][0]) in self._rules

    def _value(self, node):
        head = node.expr.func.__name__
        if head in self._terminal:
            return sympy.S.Zero
        return self._rules[(head, node.variable_count[0][0])]

    def rewrite(self, expr):
        """Replace first-order formal derivatives that have a rule"""
        if not self:
            return expr
        return expr.replace(self._matches, self._value)

    def check_closed(self, table):
        """Every atom on a rule right-hand side must be declared"""
        for (head, symbol), expr in self._rules.items():
            if table.function(head) is None:
                raise RuleTableError(f"Rule given for undeclared atom '{head}'")
            if symbol not in table.function(head).arguments:
                raise RuleTableError(f"'{symbol}' is not an argument of '{head}'")
            for atom in expr.atoms(AppliedUndef):
                name = atom.func.__name__
                entry = table.function(name)
                if entry is None or tuple(atom.args) != entry.arguments:
                    raise RuleTableError(f"Rule for '{head}' uses undeclared atom '{atom}'")
            for symbol_used in expr.free_symbols:
                if table.info(symbol_used) is None:
                    raise RuleTableError(f"Rule for '{head}' uses undeclared symbol '{symbol_used}'")
