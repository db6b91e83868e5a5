import numpy as np
import sympy
from django.test import SimpleTestCase

from linalg.elimination import generic_rank
from symbolic.expressions import diff, is_zero
from .charts import BundleChart, ChartError, DimensionMismatchError
from .differential import contract, exterior_derivative
from .fields import (
    KVectorFieldFamily, VectorFieldOnTkQ, is_sopde, is_sopde_by_endomorphisms, lie_bracket,
    liouville_field, sopde_defect, vertical_endomorphism,
)
from .lagrangian import ModelError, build_model

ACADEMIC = 'q2*v[q1,1] - q1*v[q2,2] + q1*q2'


def academic_model():
    return build_model('academic', ['q1', 'q2'], 2, ACADEMIC)


class ChartTests(SimpleTestCase):
    def test_coordinate_order(self):
        chart = BundleChart(['q1', 'q2'], 2)
        self.assertEqual(
            [str(s) for s in chart.all_coordinates],
            ['q1', 'q2', 'v[q1,1]', 'v[q2,1]', 'v[q1,2]', 'v[q2,2]'],
        )
        self.assertEqual(chart.dimension, 6)
        self.assertEqual(chart.velocity_key(chart.velocity(2, 1)), (2, 1))

    def test_invalid_charts(self):
        with self.assertRaises(ChartError):
            BundleChart([], 1)
        with self.assertRaises(ChartError):
            BundleChart(['q'], 0)
        with self.assertRaises(DimensionMismatchError):
            BundleChart(['q'], 1).velocity(1, 2)


class AcademicCartanTests(SimpleTestCase):
    def setUp(self):
        self.model = academic_model()
        self.chart = self.model.chart
        self.q1, self.q2 = self.chart.coordinates

    def test_two_forms(self):
        omega = self.model.omega
        for alpha in (1, 2):
            self.assertEqual(omega.entry(alpha, self.q1, self.q2), 1)
            self.assertEqual(omega.entry(alpha, self.q2, self.q1), -1)
            self.assertEqual(len(omega.block(alpha)), 1)
            self.assertTrue(omega.velocity_block_is_zero(alpha))

    def test_energy(self):
        self.assertEqual(self.model.energy, -self.q1 * self.q2)
        differential = self.model.energy_differential
        self.assertEqual(differential[self.q1], -self.q2)
        self.assertEqual(differential[self.q2], -self.q1)
        self.assertEqual(len(differential.items()), 2)

    def test_hessian_vanishes(self):
        self.assertTrue(self.model.hessian.is_zero())

    def test_contraction(self):
        symbols = sympy.symbols('a1 a2 b1 b2')
        fields = [
            VectorFieldOnTkQ(self.chart, {self.q1: symbols[0], self.q2: symbols[1]}),
            VectorFieldOnTkQ(self.chart, {self.q1: symbols[2], self.q2: symbols[3]}),
        ]
        result = contract(self.model.omega, fields)
        self.assertTrue(is_zero(result[self.q1] + symbols[1] + symbols[3]))
        self.assertTrue(is_zero(result[self.q2] - symbols[0] - symbols[2]))

    def test_contraction_needs_k_fields(self):
        with self.assertRaises(DimensionMismatchError):
            contract(self.model.omega, [VectorFieldOnTkQ(self.chart)])


class RandomCubicLagrangianTests(SimpleTestCase):
    """Cartan forms of random cubic Lagrangians"""

    def random_model(self, rng):
        chart_names = ['q1', 'q2']
        model = build_model('cubic', chart_names, 2, '0')
        coordinates = model.chart.all_coordinates
        lagrangian = sympy.S.Zero
        for _ in range(6):
            term = sympy.Integer(int(rng.integers(-3, 4)) or 1)
            for _ in range(int(rng.integers(1, 4))):
                term *= coordinates[int(rng.integers(len(coordinates)))]
            lagrangian += term
        return build_model('cubic', chart_names, 2, lagrangian)

    def test_omega_is_minus_d_theta_and_closed(self):
        rng = np.random.default_rng(5)
        for _ in range(5):
            model = self.random_model(rng)
            chart = model.chart
            for alpha in (1, 2):
                derivative = exterior_derivative(model.thetas[alpha - 1])
                block = model.omega.block(alpha)
                self.assertEqual(set(derivative), set(block))
                for key, value in block.items():
                    self.assertTrue(is_zero(value + derivative[key]))
                coordinates = chart.all_coordinates
                for a in range(len(coordinates)):
                    for b in range(a + 1, len(coordinates)):
                        for c in range(b + 1, len(coordinates)):
                            x, y, z = coordinates[a], coordinates[b], coordinates[c]
                            omega = model.omega
                            cyclic = (
                                diff(omega.entry(alpha, y, z), x)
                                + diff(omega.entry(alpha, z, x), y)
                                + diff(omega.entry(alpha, x, y), z)
                            )
                            self.assertTrue(is_zero(cyclic))

    def test_hessian_symmetric(self):
        rng = np.random.default_rng(9)
        model = self.random_model(rng)
        hessian = model.hessian
        self.assertEqual(hessian, hessian.transpose())


class RegularModelTests(SimpleTestCase):
    def test_legendre_jacobian_full_rank(self):
        model = build_model(
            'free', ['q1', 'q2'], 2,
            '1/2*v[q1,1]^2 + 1/2*v[q2,1]^2 + 1/2*v[q1,2]^2 + 1/2*v[q2,2]^2',
        )
        self.assertEqual(generic_rank(model.hessian).rank, 4)
        self.assertEqual(generic_rank(model.legendre_jacobian).rank, 6)
        image = model.legendre_image({s: 1 for s in model.chart.all_coordinates})
        self.assertEqual(image, (1, 1, 1, 1, 1, 1))


class FieldTests(SimpleTestCase):
    def setUp(self):
        self.chart = BundleChart(['q1', 'q2'], 2)
        self.q1, self.q2 = self.chart.coordinates
        a = sympy.Symbol('a')
        self.parameter = a
        self.family = KVectorFieldFamily([
            VectorFieldOnTkQ(self.chart, {
                self.q1: self.chart.velocity(1, alpha),
                self.q2: self.chart.velocity(2, alpha),
                self.chart.velocity(1, 1): a,
            })
            for alpha in (1, 2)
        ], parameters=[a])

    def test_sopde_detection(self):
        self.assertTrue(is_sopde(self.family))
        self.assertTrue(is_sopde_by_endomorphisms(self.family))
        broken = KVectorFieldFamily([
            VectorFieldOnTkQ.coordinate(self.chart, self.q1), self.family.field(2),
        ])
        self.assertFalse(is_sopde(broken))
        self.assertFalse(is_sopde_by_endomorphisms(broken))
        defects = sopde_defect(broken)
        self.assertIsInstance(defects, KVectorFieldFamily)
        self.assertEqual(defects.field(1)[self.q1], self.chart.velocity(1, 1) - 1)
        self.assertTrue(defects.field(2).is_zero())

    def test_vertical_endomorphism_and_liouville(self):
        image = vertical_endomorphism(2, VectorFieldOnTkQ.coordinate(self.chart, self.q2))
        self.assertEqual(image.items(), [(self.chart.velocity(2, 2), 1)])
        self.assertTrue(liouville_field(self.chart).is_vertical())

    def test_lie_bracket(self):
        X = VectorFieldOnTkQ(self.chart, {self.q1: self.q2})
        Y = VectorFieldOnTkQ(self.chart, {self.q2: self.q1})
        bracket = lie_bracket(X, Y)
        self.assertEqual(bracket[self.q1], -self.q1)
        self.assertEqual(bracket[self.q2], self.q2)
        self.assertTrue((bracket + lie_bracket(Y, X)).is_zero())

    def test_parameter_substitution(self):
        fixed = self.family.substitute({self.parameter: self.q1})
        self.assertEqual(fixed.parameters, ())
        self.assertEqual(fixed.field(1)[self.chart.velocity(1, 1)], self.q1)

    def test_parameters_cannot_be_coordinates(self):
        with self.assertRaises(DimensionMismatchError):
            KVectorFieldFamily(self.family.fields, parameters=[self.q1])


class ModelValidationTests(SimpleTestCase):
    def test_unknown_symbols_rejected(self):
        with self.assertRaises(ValueError):
            build_model('bad', ['q'], 1, 'q*w')

    def test_undeclared_invertible_atom(self):
        with self.assertRaises(ModelError):
            build_model('bad', ['q'], 1, 'q', invertible_atoms=['rho'])

    def test_function_atoms_and_rules(self):
        model = build_model(
            'atoms', ['g'], 1, 'rho(g)*v[g,1]',
            function_atoms=[{'name': 'rho', 'arguments': ['g'], 'rules': {'g': '1/2*rho(g)'}}],
            invertible_atoms=['rho'],
        )
        g = model.chart.base(1)
        rho = sympy.Function('rho')(g)
        self.assertEqual(model.momenta[(1, 1)], rho)
        self.assertEqual(model.omega.entry(1, g, model.chart.velocity(1, 1)), 0)
        self.assertEqual(model.energy, 0)


class RandomSopdeTests(SimpleTestCase):
    def random_family(self, rng, chart):
        coordinates = chart.all_coordinates
        fields = []
        for alpha in range(1, chart.k + 1):
            components = {chart.base(i): chart.velocity(i, alpha) for i in range(1, chart.n + 1)}
            for velocity in chart.velocities:
                term = sympy.Integer(int(rng.integers(-3, 4)))
                for _ in range(int(rng.integers(0, 3))):
                    term *= coordinates[int(rng.integers(len(coordinates)))]
                components[velocity] = term
            fields.append(VectorFieldOnTkQ(chart, components))
        return KVectorFieldFamily(fields)

    def test_endomorphisms_sum_to_liouville(self):
        rng = np.random.default_rng(13)
        for case in range(20):
            chart = BundleChart(['q1', 'q2', 'q3'][:1 + case % 3], 1 + case % 2)
            family = self.random_family(rng, chart)
            self.assertTrue(is_sopde_by_endomorphisms(family))
            self.assertTrue(is_sopde(family))
            total = liouville_field(chart).scale(-1)
            for alpha, field in enumerate(family, 1):
                total = total + vertical_endomorphism(alpha, field)
            self.assertTrue(total.is_zero())

            alpha = chart.k
            shifted = family.field(alpha) + VectorFieldOnTkQ.coordinate(chart, chart.base(1))
            broken = KVectorFieldFamily(family.fields[:alpha - 1] + (shifted,))
            self.assertFalse(is_sopde_by_endomorphisms(broken))
            self.assertFalse(is_sopde(broken))
            self.assertEqual(sopde_defect(broken).field(alpha)[chart.base(1)], -1)


class LegendreRankTests(SimpleTestCase):
    """rank of the Legendre Jacobian is n plus the Hessian rank"""

    def test_singular_random_models(self):
        rng = np.random.default_rng(17)
        for _ in range(10):
            names = ['q1', 'q2', 'q3']
            chart = BundleChart(names, 2)
            # one velocity never appears, so the Hessian is singular
            excluded = chart.velocities[int(rng.integers(len(chart.velocities)))]
            coordinates = [symbol for symbol in chart.all_coordinates if symbol != excluded]
            lagrangian = sympy.S.Zero
            for _ in range(6):
                term = sympy.Integer(int(rng.integers(-3, 4)) or 1)
                for _ in range(int(rng.integers(1, 4))):
                    term *= coordinates[int(rng.integers(len(coordinates)))]
                lagrangian += term
            model = build_model('singular', names, 2, lagrangian)
            hessian_rank = generic_rank(model.hessian).rank
            self.assertLess(hessian_rank, 6)
            self.assertEqual(generic_rank(model.legendre_jacobian).rank, 3 + hessian_rank)
