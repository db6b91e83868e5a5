"""
Sparse matrices of expressions
"""
import numpy as np
import sympy

from symbolic.expressions import eval_rational, normalize


class SymMatrix:
    """Sparse rows x cols matrix; only nonzero entries are stored"""

    def __init__(self, rows, cols, entries=None, row_labels=None, col_labels=None):
        self.rows = rows
        self.cols = cols
        self.row_labels = tuple(row_labels) if row_labels is not None else tuple(range(rows))
        self.col_labels = tuple(col_labels) if col_labels is not None else tuple(range(cols))
        if len(self.row_labels) != rows or len(self.col_labels) != cols:
            raise ValueError('Label count does not match the matrix shape')
        if len(set(self.row_labels)) != rows or len(set(self.col_labels)) != cols:
            raise ValueError('Row and column labels must be unique')
        self._entries = {}
        for (row, col), value in (entries or {}).items():
            if not (0 <= row < rows and 0 <= col < cols):
                raise IndexError(f'Entry ({row}, {col}) outside a {rows}x{cols} matrix')
            value = normalize(value)
            if value != 0:
                self._entries[(row, col)] = value

    @classmethod
    def from_rows(cls, rows, row_labels=None, col_labels=None):
        rows = [list(row) for row in rows]
        width = len(rows[0]) if rows else len(col_labels or ())
        if any(len(row) != width for row in rows):
            raise ValueError('Rows have different lengths')
        entries = {
            (r, c): value for r, row in enumerate(rows) for c, value in enumerate(row)
        }
        return cls(len(rows), width, entries, row_labels, col_labels)

    def __repr__(self):
        return f'SymMatrix({self.rows}x{self.cols}, {len(self._entries)} nonzero)'

    def __eq__(self, other):
        return (
            isinstance(other, SymMatrix)
            and self.shape == other.shape
            and self._entries == other._entries
        )

    @property
    def shape(self):
        return self.rows, self.cols

    def entry(self, row, col):
        return self._entries.get((row, col), sympy.S.Zero)

    def items(self):
        return sorted(self._entries.items())

    def row(self, row):
        return {col: value for (r, col), value in self._entries.items() if r == row}

    def row_dicts(self):
        rows = [dict() for _ in range(self.rows)]
        for (row, col), value in self._entries.items():
            rows[row][col] = value
        return rows

    def nonzero_columns(self):
        return sorted({col for _, col in self._entries})

    def is_zero(self):
        return not self._entries

    def transpose(self):
        entries = {(col, row): value for (row, col), value in self._entries.items()}
        return SymMatrix(self.cols, self.rows, entries, self.col_labels, self.row_labels)

    def stack(self, *others):
        """Rows of self followed by the rows of others"""
        entries = dict(self._entries)
        labels = list(self.row_labels)
        offset = self.rows
        for other in others:
            if other.cols != self.cols:
                raise ValueError('Stacked matrices need the same number of columns')
            for (row, col), value in other._entries.items():
                entries[(row + offset, col)] = value
            labels.extend(other.row_labels)
            offset += other.rows
        return SymMatrix(offset, self.cols, entries, labels, self.col_labels)

    def map(self, function):
        entries = {key: function(value) for key, value in self._entries.items()}
        return SymMatrix(self.rows, self.cols, entries, self.row_labels, self.col_labels)

    def to_rows(self):
        return [[self.entry(r, c) for c in range(self.cols)] for r in range(self.rows)]

    def to_sympy(self):
        return sympy.Matrix(self.rows, self.cols, lambda r, c: self.entry(r, c))

    def apply(self, vector):
        """Matrix times a column vector of expressions"""
        result = [sympy.S.Zero] * self.rows
        for (row, col), value in self._entries.items():
            result[row] += value * vector[col]
        return [normalize(value) for value in result]

    def evaluate(self, point, bindings=None):
        """Float matrix at an exact rational point"""
        values = np.zeros((self.rows, self.cols))
        for (row, col), value in self._entries.items():
            values[row, col] = float(eval_rational(value, point, bindings))
        return values
