"""
Natural coordinates on the k-tangent bundle
"""
from symbolic.symbols import SymbolKind, SymbolTable


class ChartError(ValueError):
    pass


class DimensionMismatchError(ValueError):
    pass


class BundleChart:
    """Coordinates (q^i, v^i_alpha): base coordinates first, then velocities by direction"""

    def __init__(self, coordinate_names, k, table=None):
        coordinate_names = list(coordinate_names)
        if not coordinate_names:
            raise ChartError('A chart needs at least one base coordinate')
        if len(set(coordinate_names)) != len(coordinate_names):
            raise ChartError('Base coordinate names must be distinct')
        if k < 1:
            raise ChartError('k must be at least 1')
        self.table = table if table is not None else SymbolTable()
        self.n = len(coordinate_names)
        self.k = k
        self.coordinate_names = tuple(coordinate_names)
        self.coordinates = tuple(self.table.declare_base(name) for name in coordinate_names)
        self._velocities = {}
        ordered = []
        for alpha in range(1, k + 1):
            for i, name in enumerate(coordinate_names, 1):
                symbol = self.table.declare_velocity(name, alpha)
                self._velocities[(i, alpha)] = symbol
                ordered.append(symbol)
        self.velocities = tuple(ordered)
        self.all_coordinates = self.coordinates + self.velocities
        self._index = {symbol: position for position, symbol in enumerate(self.all_coordinates)}
        self._velocity_key = {symbol: key for key, symbol in self._velocities.items()}

    def __repr__(self):
        return f'BundleChart(n={self.n}, k={self.k})'

    @property
    def dimension(self):
        return self.n * (self.k + 1)

    def velocity(self, i, alpha):
        """v^i_alpha with 1-based indices"""
        try:
            return self._velocities[(i, alpha)]
        except KeyError:
            raise DimensionMismatchError(f'No velocity v^{i}_{alpha} in {self!r}') from None

    def base(self, i):
        return self.coordinates[i - 1]

    def index(self, symbol):
        return self._index[symbol]

    def __contains__(self, symbol):
        return symbol in self._index

    def is_base(self, symbol):
        return symbol in self._index and symbol not in self._velocity_key

    def is_velocity(self, symbol):
        return symbol in self._velocity_key

    def velocity_key(self, symbol):
        """(i, alpha) of a velocity coordinate"""
        return self._velocity_key[symbol]

    def base_index(self, symbol):
        return self.coordinates.index(symbol) + 1

    def velocity_keys(self):
        """(i, alpha) pairs in coordinate order"""
        return [self._velocity_key[symbol] for symbol in self.velocities]

    def check_symbols(self, expr, allowed=()):
        """Symbols of expr that are neither chart coordinates nor allowed"""
        allowed = set(allowed)
        return sorted(
            (s for s in expr.free_symbols if s not in self._index and s not in allowed),
            key=str,
        )

    def parameters(self):
        return self.table.symbols(SymbolKind.PARAMETER)
