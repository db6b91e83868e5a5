"""
Symbol registry for bundle coordinates, velocities, parameters and function atoms
"""
import re
import threading
from dataclasses import dataclass, field

import sympy
from django.db import models


IDENTIFIER = re.compile(r'[A-Za-z][A-Za-z0-9_]*\Z')
RESERVED_NAMES = frozenset({'diff', 'v'})


class SymbolKind(models.TextChoices):
    BASE = 'base', 'Base coordinate'
    VELOCITY = 'velocity', 'Velocity'
    PARAMETER = 'parameter', 'Parameter'
    FUNCTION = 'function', 'Function atom'


class DuplicateSymbolError(ValueError):
    pass


def velocity_name(base_name, direction):
    return f'v[{base_name},{direction}]'


@dataclass(frozen=True)
class SymbolInfo:
    """One interned name with its kind"""
    name: str
    kind: str
    symbol: object
    base_name: str | None = None
    direction: int | None = None
    arguments: tuple = field(default=())

    def atom(self):
        """Applied function atom for FUNCTION entries"""
        return self.symbol(*self.arguments)


class SymbolTable:
    """Declaration-ordered, synchronized table of names"""

    def __init__(self):
        self._entries = {}
        self._lock = threading.Lock()

    def __contains__(self, name):
        return name in self._entries

    def __len__(self):
        return len(self._entries)

    def _declare(self, info):
        with self._lock:
            existing = self._entries.get(info.name)
            if existing is not None:
                if existing.kind == info.kind and existing.arguments == info.arguments:
                    return existing
                raise DuplicateSymbolError(
                    f"'{info.name}' is already declared as {existing.kind}"
                )
            self._entries[info.name] = info
            return info

    @staticmethod
    def _check_identifier(name):
        if not isinstance(name, str) or not IDENTIFIER.match(name):
            raise ValueError(f"'{name}' is not a valid identifier")
        if name in RESERVED_NAMES:
            raise ValueError(f"'{name}' is a reserved name")

    def declare_base(self, name):
        self._check_identifier(name)
        return self._declare(SymbolInfo(name, SymbolKind.BASE, sympy.Symbol(name))).symbol

    def declare_velocity(self, base_name, direction):
        base = self.lookup(base_name)
        if base is None or base.kind != SymbolKind.BASE:
            raise ValueError(f"'{base_name}' is not a base coordinate")
        if direction < 1:
            raise ValueError('Velocity directions start at 1')
        name = velocity_name(base_name, direction)
        info = SymbolInfo(
            name, SymbolKind.VELOCITY, sympy.Symbol(name),
            base_name=base_name, direction=direction,
        )
        return self._declare(info).symbol

    def declare_parameter(self, name):
        self._check_identifier(name)
        return self._declare(SymbolInfo(name, SymbolKind.PARAMETER, sympy.Symbol(name))).symbol

    def declare_function(self, name, arguments):
        self._check_identifier(name)
        arguments = tuple(arguments)
        for argument in arguments:
            if self.info(argument) is None:
                raise ValueError(f"Argument '{argument}' of '{name}' is not declared")
        info = SymbolInfo(name, SymbolKind.FUNCTION, sympy.Function(name), arguments=arguments)
        return self._declare(info).atom()

    def lookup(self, name):
        return self._entries.get(name)

    def info(self, symbol):
        entry = self._entries.get(str(symbol))
        if entry is None or entry.kind == SymbolKind.FUNCTION:
            return None
        return entry if entry.symbol == symbol else None

    def function(self, name):
        entry = self._entries.get(name)
        if entry is None or entry.kind != SymbolKind.FUNCTION:
            return None
        return entry

    def symbols(self, kind=None):
        """Declared symbols in declaration order (function heads excluded)"""
        return [
            entry.symbol for entry in self._entries.values()
            if entry.kind != SymbolKind.FUNCTION and (kind is None or entry.kind == kind)
        ]

    def functions(self):
        return [entry for entry in self._entries.values() if entry.kind == SymbolKind.FUNCTION]

    def entries(self):
        return list(self._entries.values())

    def ordering(self):
        """Generator ordering used by the printer and normal forms"""
        return self.symbols()
