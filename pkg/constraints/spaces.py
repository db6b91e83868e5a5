"""
Bases of the distinguished distributions of a Lagrangian model

perp_basis       common kernel of the omega^alpha
ker_fl_basis     vertical fields annihilated by the Hessian
m_space_basis    fields omega-orthogonal to every vertical k-vector field
"""
from geometry.fields import VectorFieldOnTkQ
from linalg.elimination import kernel_basis
from linalg.matrices import SymMatrix


def _fields(chart, vectors, coordinates):
    return [VectorFieldOnTkQ(chart, dict(zip(coordinates, vector))) for vector in vectors]


def _omega_block(model, alpha, columns):
    chart = model.chart
    coordinates = chart.all_coordinates
    position = {symbol: col for col, symbol in enumerate(columns)}
    entries = {}
    for (i, j), value in model.omega.block(alpha).items():
        first, second = coordinates[i], coordinates[j]
        if second in position:
            entries[(i, position[second])] = value
        if first in position:
            entries[(j, position[first])] = -value
    return SymMatrix(
        len(coordinates), len(columns), entries,
        [f'omega{alpha}[{symbol}]' for symbol in coordinates],
        [str(symbol) for symbol in columns],
    )


def omega_matrix(model, columns=None):
    """The k two-form matrices stacked, restricted to the given coordinates"""
    chart = model.chart
    columns = list(chart.all_coordinates if columns is None else columns)
    blocks = [_omega_block(model, alpha, columns) for alpha in range(1, chart.k + 1)]
    return blocks[0].stack(*blocks[1:])


def perp_basis(model):
    chart = model.chart
    return _fields(chart, kernel_basis(omega_matrix(model)), chart.all_coordinates)


def vertical_perp_basis(model):
    """Vertical fields in the common kernel of the omega^alpha"""
    chart = model.chart
    matrix = omega_matrix(model, chart.velocities)
    return _fields(chart, kernel_basis(matrix), chart.velocities)


def ker_fl_basis(model):
    chart = model.chart
    return _fields(chart, kernel_basis(model.hessian), chart.velocities)


def m_space_matrix(model):
    """Rows (alpha, j, beta), columns i: d2L/dv^i_alpha dv^j_beta"""
    chart = model.chart
    hessian = model.hessian
    keys = chart.velocity_keys()
    slot = {key: position for position, key in enumerate(keys)}
    entries, row_labels = {}, []
    row = 0
    for alpha in range(1, chart.k + 1):
        for j, beta in keys:
            row_labels.append(f'H[{alpha};{j},{beta}]')
            for i in range(1, chart.n + 1):
                value = hessian.entry(slot[(i, alpha)], slot[(j, beta)])
                if value != 0:
                    entries[(row, i - 1)] = value
            row += 1
    return SymMatrix(row, chart.n, entries, row_labels, [str(q) for q in chart.coordinates])


def m_space_basis(model):
    """Base-kernel generators followed by every fiber direction"""
    chart = model.chart
    base = _fields(chart, kernel_basis(m_space_matrix(model)), chart.coordinates)
    fiber = [VectorFieldOnTkQ.coordinate(chart, velocity) for velocity in chart.velocities]
    return base + fiber
