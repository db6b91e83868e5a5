"""
The Einstein-Palatini model in metric-affine variables

Base coordinates are the metric components g_a_b (a <= b) followed by the
connection coefficients Gam_n_l_c = Gamma^n_lc, with k equal to the
spacetime dimension. The volume density rho = sqrt|det g| and the inverse
metric ginv_a_b are opaque atoms of the metric, differentiated through
derivative rules. Metric coordinates stand for both g_ab and g_ba, so
derivatives with respect to an off-diagonal g_mn carry a factor 2.

The expected-constraint oracle transcribes the known constraint families of
the theory in closed form, for comparison with what the engine derives.
"""
import itertools
import logging
from dataclasses import dataclass, field

import numpy as np
import sympy
from sympy.polys.domains import QQ
from sympy.polys.rings import sring

from geometry.charts import ChartError
from geometry.lagrangian import build_model
from symbolic.expressions import diff, generators, normalize
from symbolic.rules import DerivativeRuleTable
from symbolic.symbols import velocity_name

logger = logging.getLogger(__name__)


def delta(a, b):
    return 1 if a == b else 0


class EPChart:
    """Index bookkeeping for the metric-affine chart in dimension dim"""

    def __init__(self, dim=4):
        if dim < 3:
            raise ChartError('The Einstein-Palatini chart needs dimension 3 or more')
        self.dim = dim
        self.k = dim
        self.indices = tuple(range(dim))
        self.metric_pairs = [(a, b) for a in self.indices for b in self.indices if a <= b]
        self.connection_triples = list(itertools.product(self.indices, repeat=3))
        self.coordinate_names = (
            [self.metric_name(a, b) for a, b in self.metric_pairs]
            + [self.connection_name(*triple) for triple in self.connection_triples]
        )
        self.metric_symbols = tuple(
            sympy.Symbol(self.metric_name(a, b)) for a, b in self.metric_pairs
        )
        self.rho = sympy.Function('rho')(*self.metric_symbols)
        self.trace_factor = sympy.Rational(1, dim - 1)

    def __repr__(self):
        return f'EPChart(dim={self.dim})'

    @property
    def n(self):
        return len(self.coordinate_names)

    @staticmethod
    def metric_name(a, b):
        a, b = sorted((a, b))
        return f'g_{a}_{b}'

    @staticmethod
    def connection_name(n, l, c):
        return f'Gam_{n}_{l}_{c}'

    @staticmethod
    def inverse_name(a, b):
        a, b = sorted((a, b))
        return f'ginv_{a}_{b}'

    def g(self, a, b):
        return sympy.Symbol(self.metric_name(a, b))

    def ginv(self, a, b):
        return sympy.Function(self.inverse_name(a, b))(*self.metric_symbols)

    def gamma(self, n, l, c):
        return sympy.Symbol(self.connection_name(n, l, c))

    def metric_velocity(self, a, b, mu):
        return sympy.Symbol(velocity_name(self.metric_name(a, b), mu + 1))

    def gamma_velocity(self, n, l, c, mu):
        return sympy.Symbol(velocity_name(self.connection_name(n, l, c), mu + 1))

    def torsion(self, a, b, c):
        return self.gamma(a, b, c) - self.gamma(a, c, b)

    def torsion_velocity(self, a, b, c, mu):
        return self.gamma_velocity(a, b, c, mu) - self.gamma_velocity(a, c, b, mu)

    def torsion_trace(self, c):
        """T^n_nc"""
        return sum((self.torsion(n, n, c) for n in self.indices), sympy.S.Zero)

    def torsion_trace_velocity(self, c, mu):
        return sum((self.torsion_velocity(n, n, c, mu) for n in self.indices), sympy.S.Zero)

    def traceless_torsion(self, a, b, c, mu=None):
        """Traceless part of T^a_bc, or of its velocity in direction mu"""
        if mu is None:
            torsion, trace = self.torsion, self.torsion_trace
        else:
            def torsion(*indices):
                return self.torsion_velocity(*indices, mu)

            def trace(index):
                return self.torsion_trace_velocity(index, mu)
        factor = self.trace_factor
        return normalize(
            torsion(a, b, c) - factor * delta(a, b) * trace(c) + factor * delta(a, c) * trace(b)
        )

    @staticmethod
    def weight(m, n):
        """(2 - delta_mn) / 2, the symmetric-coordinate factor"""
        return sympy.Rational(2 - delta(m, n), 2)

    def inverse_rule(self, a, b, m, n):
        """d ginv_ab / d g_mn"""
        return -self.weight(m, n) * (
            self.ginv(a, m) * self.ginv(n, b) + self.ginv(a, n) * self.ginv(m, b)
        )

    def density_rule(self, m, n):
        """d rho / d g_mn"""
        return self.weight(m, n) * self.rho * self.ginv(m, n)

    def function_atoms(self):
        """Atom declarations in the form build_model accepts"""
        arguments = [str(symbol) for symbol in self.metric_symbols]
        declarations = [{
            'name': 'rho',
            'arguments': arguments,
            'rules': {
                self.metric_name(m, n): self.density_rule(m, n) for m, n in self.metric_pairs
            },
        }]
        for a, b in self.metric_pairs:
            declarations.append({
                'name': self.inverse_name(a, b),
                'arguments': arguments,
                'rules': {
                    self.metric_name(m, n): self.inverse_rule(a, b, m, n)
                    for m, n in self.metric_pairs
                },
            })
        return declarations

    def rule_table(self):
        table = DerivativeRuleTable()
        for declaration in self.function_atoms():
            for name, expr in declaration['rules'].items():
                table.add(declaration['name'], sympy.Symbol(name), expr)
        return table

    def quadratic_ricci(self, a, b):
        """Gamma^c_ba Gamma^s_sc - Gamma^c_bs Gamma^s_ca"""
        return sum((
            self.gamma(c, b, a) * self.gamma(s, s, c) - self.gamma(c, b, s) * self.gamma(s, c, a)
            for c in self.indices for s in self.indices
        ), sympy.S.Zero)

    def ricci(self, a, b):
        linear = sum((
            self.gamma_velocity(c, b, a, c) - self.gamma_velocity(c, c, a, b)
            for c in self.indices
        ), sympy.S.Zero)
        return linear + self.quadratic_ricci(a, b)

    def lagrangian(self):
        """rho g^ab R_ab"""
        return normalize(self.rho * sum((
            self.ginv(a, b) * self.ricci(a, b) for a in self.indices for b in self.indices
        ), sympy.S.Zero))

    def potential(self):
        """G, the velocity-free part of the Lagrangian"""
        return normalize(self.rho * sum((
            self.ginv(a, b) * self.quadratic_ricci(a, b)
            for a in self.indices for b in self.indices
        ), sympy.S.Zero))

    def momentum(self, alpha, beta, gamma, mu):
        """F^{beta gamma, mu}_alpha, the coefficient of Gamma^alpha_{beta gamma, mu}"""
        return self.rho * (
            delta(mu, alpha) * self.ginv(beta, gamma) - delta(beta, alpha) * self.ginv(mu, gamma)
        )

    def s_tensor(self, alpha, beta, gamma, lam, rho, nu):
        """S^alpha_{beta gamma, lam rho nu}, generator of the traceless antisymmetric kernel"""
        g, c = self.g, self.trace_factor
        return (
            c * g(lam, nu) * g(rho, beta) * delta(alpha, gamma)
            - c * g(rho, nu) * g(lam, beta) * delta(alpha, gamma)
            + c * g(rho, nu) * g(lam, gamma) * delta(alpha, beta)
            - c * g(lam, nu) * g(rho, gamma) * delta(alpha, beta)
            + g(lam, beta) * g(rho, gamma) * delta(alpha, nu)
            - g(rho, beta) * g(lam, gamma) * delta(alpha, nu)
        )


def build_einstein_palatini(dim=4):
    layout = EPChart(dim)
    name = 'einstein-palatini' if dim == 4 else f'einstein-palatini-{dim}d'
    model = build_model(
        name, layout.coordinate_names, layout.k, layout.lagrangian(),
        function_atoms=layout.function_atoms(), invertible_atoms=['rho'],
    )
    logger.info(f'{name}: n = {model.chart.n}, k = {model.chart.k}')
    return model


@dataclass
class ExpectedConstraints:
    torsion: list = field(default_factory=list)
    connection: list = field(default_factory=list)
    metric: list = field(default_factory=list)
    pre_metricity: list = field(default_factory=list)
    second_generation: list = field(default_factory=list)
    kernel: list = field(default_factory=list)


def ep_expected_constraints(dim=4):
    """Closed-form constraint families and base-kernel generators"""
    layout = EPChart(dim)
    rules = layout.rule_table()
    indices = layout.indices
    c = layout.trace_factor
    expected = ExpectedConstraints()

    for alpha, beta, gamma in layout.connection_triples:
        if beta >= gamma:
            continue
        expected.torsion.append(layout.traceless_torsion(alpha, beta, gamma))
        for nu in indices:
            expected.second_generation.append(layout.traceless_torsion(alpha, beta, gamma, nu))

    G = layout.potential()
    momenta = {
        (alpha, beta, gamma, mu): layout.momentum(alpha, beta, gamma, mu)
        for alpha, beta, gamma in layout.connection_triples for mu in indices
    }
    slopes = {}
    for (r, s) in layout.metric_pairs:
        symbol = layout.g(r, s)
        for key, value in momenta.items():
            if value != 0:
                slopes[(r, s) + key] = diff(value, symbol, rules)

    for r, s in layout.metric_pairs:
        total = diff(G, layout.g(r, s), rules)
        for alpha, beta, gamma in layout.connection_triples:
            for mu in indices:
                slope = slopes.get((r, s, alpha, beta, gamma, mu))
                if slope is not None:
                    total += layout.gamma_velocity(alpha, beta, gamma, mu) * slope
        expected.connection.append(normalize(total))

    for alpha, beta, gamma in layout.connection_triples:
        total = diff(G, layout.gamma(alpha, beta, gamma), rules)
        for r, s in layout.metric_pairs:
            for mu in indices:
                slope = slopes.get((r, s, alpha, beta, gamma, mu))
                if slope is not None:
                    total -= layout.metric_velocity(r, s, mu) * slope
        expected.metric.append(normalize(total))

    for r, s in layout.metric_pairs:
        for mu in indices:
            expected.pre_metricity.append(normalize(
                -layout.metric_velocity(r, s, mu)
                + sum((
                    layout.g(s, l) * layout.gamma(l, mu, r) + layout.g(r, l) * layout.gamma(l, mu, s)
                    for l in indices
                ), sympy.S.Zero)
                + 2 * c * layout.g(r, s) * layout.torsion_trace(mu)
            ))

    for beta in indices:
        expected.kernel.append({layout.gamma(a, beta, a): sympy.S.One for a in indices})
    for lam, rho in itertools.combinations(indices, 2):
        for nu in indices:
            vector = {}
            for alpha, beta, gamma in layout.connection_triples:
                value = layout.s_tensor(alpha, beta, gamma, lam, rho, nu)
                if value != 0:
                    vector[layout.gamma(alpha, beta, gamma)] = value
            expected.kernel.append(vector)
    logger.debug(
        f'dim {dim}: {len(expected.torsion)} torsion, {len(expected.pre_metricity)} pre-metricity, '
        f'{len(expected.kernel)} kernel generators'
    )
    return expected


def clear_inverse_metric(expr, layout):
    """Numerator of expr after ginv_ab -> adj(g)_ab / det g and rho -> 1

    Every constraint of the model is homogeneous in rho, so dropping it does
    not change the zero set. The result is a polynomial in the metric and the
    remaining symbols; it vanishes exactly when expr does on nondegenerate
    metrics.
    """
    expr = sympy.expand(sympy.sympify(expr).xreplace({layout.rho: sympy.S.One}))
    if expr == 0:
        return sympy.S.Zero
    inverse = {
        layout.ginv(a, b): (a, b) for a in layout.indices for b in layout.indices if a <= b
    }
    gens = sorted(generators(expr) | set(layout.metric_symbols), key=sympy.default_sort_key)
    ring, poly = sring(expr, *gens, domain=QQ)
    metric = sympy.Matrix(layout.dim, layout.dim, lambda a, b: layout.g(a, b))
    adjugate = metric.adjugate()
    determinant = ring(sympy.expand(metric.det()))
    replacements = {
        position: ring(sympy.expand(adjugate[inverse[gen]]))
        for position, gen in enumerate(gens) if gen in inverse
    }

    top = max(
        sum(monom[position] for position in replacements) for monom in poly.monoms()
    )
    result = ring.zero
    for monom, coeff in poly.terms():
        term = ring.ground_new(coeff)
        degree = 0
        for position, exponent in enumerate(monom):
            if not exponent:
                continue
            if position in replacements:
                term *= replacements[position] ** exponent
                degree += exponent
            else:
                term *= ring.gens[position] ** exponent
        result += term * determinant ** (top - degree)
    return result.as_expr()


def minkowski(dim=4):
    return sympy.diag(-1, *([1] * (dim - 1)))


def random_metric(dim, rng):
    """Exact nondegenerate symmetric metric near Minkowski"""
    while True:
        metric = minkowski(dim)
        for a in range(dim):
            for b in range(a, dim):
                shift = sympy.Rational(int(rng.integers(-3, 4)), int(rng.integers(6, 11)))
                metric[a, b] += shift
                if a != b:
                    metric[b, a] += shift
        if metric.det() != 0:
            return metric


def metric_specialization(layout, metric):
    """Values for the metric coordinates and atoms; rho is set to 1"""
    inverse = metric.inv()
    mapping = {layout.rho: sympy.S.One}
    for a, b in layout.metric_pairs:
        mapping[layout.g(a, b)] = metric[a, b]
        mapping[layout.ginv(a, b)] = inverse[a, b]
    return mapping


def specialize(exprs, mapping):
    return [normalize(sympy.sympify(expr).xreplace(mapping)) for expr in exprs]


def _float_array(metric):
    return np.array(metric.tolist(), dtype=float)


def s_tensor_array(metric):
    """S^a_{bc,lrn} as a float array indexed [a, b, c, l, r, n]"""
    g = _float_array(metric)
    dim = g.shape[0]
    c = 1.0 / (dim - 1)
    eye = np.eye(dim)
    return (
        c * np.einsum('ln,rb,ac->abclrn', g, g, eye)
        - c * np.einsum('rn,lb,ac->abclrn', g, g, eye)
        + c * np.einsum('rn,lc,ab->abclrn', g, g, eye)
        - c * np.einsum('ln,rc,ab->abclrn', g, g, eye)
        + np.einsum('lb,rc,an->abclrn', g, g, eye)
        - np.einsum('rb,lc,an->abclrn', g, g, eye)
    )


def reconstruct_from_s_tensor(K, metric):
    """1/2 K^n_st g^ls g^rt S^a_{bc,lrn}"""
    g = _float_array(metric)
    inverse = np.linalg.inv(g)
    return 0.5 * np.einsum('nst,ls,rt,abclrn->abc', K, inverse, inverse, s_tensor_array(g))
