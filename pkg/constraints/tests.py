import numpy as np
import sympy
from django.test import SimpleTestCase, override_settings

from geometry.charts import BundleChart
from geometry.fields import is_sopde
from geometry.lagrangian import build_model
from symbolic.expressions import eval_rational, is_zero
from .algorithm import (
    classify, first_generation, generic_sopde, lagrangian_defect, sopde_generation, stabilize,
)
from .choices import ConstraintClass, ReportStatus
from .diagnostics import independence_certificate, lemma_cross_check
from .normal_form import Constraint, ConstraintSet, canonical_form, mutually_reducible
from .spaces import ker_fl_basis, m_space_basis, perp_basis, vertical_perp_basis

ACADEMIC = 'q2*v[q1,1] - q1*v[q2,2] + q1*q2'
FREE = '1/2*v[q1,1]^2 + 1/2*v[q2,1]^2 + 1/2*v[q1,2]^2 + 1/2*v[q2,2]^2'
RANK_ZERO = 'v[q,1] + q^2'


def academic():
    return build_model('academic', ['q1', 'q2'], 2, ACADEMIC)


def free():
    return build_model('free', ['q1', 'q2'], 2, FREE)


def rank_zero():
    return build_model('affine-rank0', ['q'], 2, RANK_ZERO)


def random_model(rng, n, k, degree=3, terms=5, affine=False):
    """Random polynomial Lagrangian; affine ones are linear in the velocities"""
    names = [f'q{i}' for i in range(1, n + 1)]
    chart = BundleChart(names, k)
    lagrangian = sympy.S.Zero
    for _ in range(terms):
        coefficient = int(rng.integers(-3, 4)) or 1
        if affine:
            term = coefficient * chart.velocities[int(rng.integers(len(chart.velocities)))]
            for _ in range(int(rng.integers(0, degree))):
                term *= chart.coordinates[int(rng.integers(n))]
        else:
            term = sympy.Integer(coefficient)
            for _ in range(int(rng.integers(1, degree + 1))):
                term *= chart.all_coordinates[int(rng.integers(len(chart.all_coordinates)))]
        lagrangian += term
    for _ in range(2):
        coefficient = int(rng.integers(-3, 4)) or 1
        lagrangian += coefficient * chart.coordinates[int(rng.integers(n))] ** 2
    return build_model('random', names, k, lagrangian)


class NormalFormTests(SimpleTestCase):
    def setUp(self):
        self.chart = BundleChart(['q1', 'q2'], 1)
        self.q1, self.q2 = self.chart.coordinates
        self.v1, self.v2 = self.chart.velocities

    def test_canonical_form_drops_scaling(self):
        self.assertEqual(canonical_form(2 * self.q1), self.q1)
        self.assertEqual(canonical_form(-self.v1 / 3 + self.q2 / 6), canonical_form(self.v1 * 2 - self.q2))
        self.assertEqual(canonical_form(sympy.Integer(-7)), 1)

    def test_canonical_form_strips_invertible_atoms(self):
        rho = sympy.Function('rho')(self.q1)
        self.assertEqual(canonical_form(rho ** 2 * self.v1 + rho * self.q2, ['rho']), rho * self.v1 + self.q2)

    def test_substitutions_stay_triangular(self):
        constraints = ConstraintSet.from_exprs(
            self.chart, [self.v2 - self.q1 * self.v1, self.v1 - self.q2]
        )
        self.assertEqual(set(constraints.substitutions), {self.v1, self.v2})
        self.assertEqual(constraints.substitutions[self.v2], self.q1 * self.q2)
        for value in constraints.substitutions.values():
            self.assertFalse(value.free_symbols & set(constraints.substitutions))

    def test_residuals_and_implication(self):
        constraints = ConstraintSet.from_exprs(self.chart, [self.q1 ** 2 + self.q2 ** 2])
        self.assertEqual(len(constraints.residuals), 1)
        self.assertTrue(constraints.implies(-3 * self.q1 ** 2 - 3 * self.q2 ** 2))
        self.assertFalse(constraints.implies(self.q1))

    def test_products_are_not_solved_through_a_coordinate(self):
        constraints = ConstraintSet.from_exprs(self.chart, [self.q1 * self.q2 ** 2])
        self.assertEqual(constraints.substitutions, {})
        self.assertEqual(constraints.residuals, [self.q1 * self.q2 ** 2])
        self.assertEqual(constraints.factorable, constraints.residuals)
        self.assertFalse(constraints.implies(self.q1))
        self.assertFalse(constraints.implies(self.q2))
        point = constraints.complete_point({self.q1: 1, self.q2: 0, self.v1: 0, self.v2: 0})
        self.assertIsNotNone(point)

    def test_no_branch_is_chosen(self):
        constraints = ConstraintSet.from_exprs(self.chart, [self.q1 * self.q2 - self.q1])
        self.assertNotIn(self.q2, constraints.substitutions)
        self.assertNotIn(self.q1, constraints.substitutions)
        self.assertFalse(constraints.implies(self.q2 - 1))
        self.assertFalse(constraints.implies(self.q1))
        self.assertEqual(len(constraints.factorable), 1)
        self.assertIsNotNone(constraints.complete_point({self.q1: 0, self.q2: 5, self.v1: 0, self.v2: 0}))

    def test_invertible_atom_coefficients_are_solved(self):
        rho = sympy.Function('rho')(self.q1)
        constraints = ConstraintSet.from_exprs(self.chart, [rho * self.v1 + self.v2 ** 2], ['rho'])
        self.assertTrue(is_zero(constraints.substitutions[self.v1] + self.v2 ** 2 / rho))
        self.assertEqual(constraints.factorable, [])

    def test_duplicate_constraints_are_dropped(self):
        constraints = ConstraintSet.from_exprs(self.chart, [self.q1 + self.v1, 2 * self.q1 + 2 * self.v1])
        self.assertEqual(len(constraints), 1)

    def test_empty_manifold(self):
        constraints = ConstraintSet.from_exprs(self.chart, [self.q1, self.q1 - 1])
        self.assertTrue(constraints.is_empty)
        self.assertTrue(constraints.implies(self.v2))
        self.assertIsNone(constraints.sample_point(np.random.default_rng(0)))

    def test_zero_constraint_rejected(self):
        with self.assertRaises(ValueError):
            Constraint(self.q1 - self.q1, 1, ConstraintClass.DYNAMICAL)

    def test_sample_point_lies_on_the_set(self):
        exprs = [self.v1 - self.q1 * self.q2, self.v2 + self.v1 - 1]
        constraints = ConstraintSet.from_exprs(self.chart, exprs)
        rng = np.random.default_rng(1)
        for _ in range(10):
            point = constraints.sample_point(rng)
            for expr in exprs:
                self.assertEqual(eval_rational(expr, point), 0)

    def test_mutual_reducibility(self):
        first = ConstraintSet.from_exprs(self.chart, [self.v1 + self.v2 - self.q1, self.v1 - self.v2])
        second = ConstraintSet.from_exprs(self.chart, [2 * self.v1 - self.q1, 2 * self.v2 - self.q1])
        third = ConstraintSet.from_exprs(self.chart, [self.v1 - self.q1])
        self.assertTrue(mutually_reducible(first, second))
        self.assertFalse(mutually_reducible(first, third))


class SpaceTests(SimpleTestCase):
    def test_academic_perp_is_vertical(self):
        model = academic()
        basis = perp_basis(model)
        self.assertEqual(len(basis), 4)
        self.assertTrue(all(field.is_vertical() for field in basis))
        self.assertEqual(len(ker_fl_basis(model)), 4)
        self.assertEqual(len(m_space_basis(model)), 6)

    def test_regular_spaces(self):
        model = free()
        self.assertEqual(perp_basis(model), [])
        self.assertEqual(ker_fl_basis(model), [])
        basis = m_space_basis(model)
        self.assertEqual(len(basis), 4)
        self.assertTrue(all(field.is_vertical() for field in basis))

    def test_mixed_kernel(self):
        model = build_model('mixed', ['q1', 'q2'], 1, '1/2*v[q1,1]^2 + v[q2,1]')
        kernel = ker_fl_basis(model)
        self.assertEqual(len(kernel), 1)
        self.assertEqual(kernel[0].items(), [(model.chart.velocity(2, 1), 1)])
        self.assertEqual(len(vertical_perp_basis(model)), 1)

    def test_affine_base_kernel(self):
        model = build_model('affine', ['q1', 'q2', 'q3'], 1, 'q2*v[q1,1] + q3^2 + q1*q3')
        base = [field for field in perp_basis(model) if not field.is_vertical()]
        self.assertEqual(len(base), 1)
        self.assertEqual(base[0].items(), [(model.chart.base(3), 1)])


class ReportInvariantsMixin:
    def assertReportInvariants(self, report):
        model = report.model
        constraints = report.constraints
        family = report.family
        self.assertTrue(is_sopde(family))
        defect = lagrangian_defect(model, family)
        for symbol in model.chart.all_coordinates:
            self.assertTrue(constraints.implies(defect[symbol]), f'Lagrangian equation fails at {symbol}')
        kernel = ker_fl_basis(model)
        for constraint in constraints:
            for field in family:
                self.assertTrue(constraints.implies(field.apply(constraint.expr, model.rules)))
            annihilated = all(
                constraints.implies(vector.apply(constraint.expr, model.rules)) for vector in kernel
            )
            if constraint.constraint_class == ConstraintClass.DYNAMICAL:
                self.assertTrue(annihilated, f'{constraint.expr} misclassified')
            else:
                self.assertFalse(annihilated, f'{constraint.expr} misclassified')


class AcademicExampleTests(ReportInvariantsMixin, SimpleTestCase):
    """Affine Lagrangian q2 v^1_1 - q1 v^2_2 + q1 q2 with rank M = n"""

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.report = stabilize(academic(), seed=0)

    def test_no_dynamical_constraints(self):
        constraints, family = first_generation(academic())
        self.assertEqual(len(constraints), 0)
        self.assertEqual(len(family.parameters), 10)

    def test_sopde_constraints(self):
        report = self.report
        chart = report.model.chart
        q1, q2 = chart.coordinates
        v = chart.velocity
        self.assertEqual(report.count(ConstraintClass.SOPDE), 2)
        self.assertEqual(report.count(ConstraintClass.DYNAMICAL), 0)
        expected = ConstraintSet.from_exprs(chart, [
            -v(2, 1) - v(2, 2) + q2,
            v(1, 1) + v(1, 2) + q1,
        ])
        self.assertTrue(mutually_reducible(report.constraints, expected))
        self.assertEqual(
            [constraint.expr for constraint in report.constraints],
            [q2 - v(2, 1) - v(2, 2), q1 + v(1, 1) + v(1, 2)],
        )

    def test_determinations(self):
        report = self.report
        chart = report.model.chart
        determined = {str(item.unknown): item.value for item in report.determinations}
        self.assertEqual(
            sorted(determined), ['X_1_q1_2', 'X_1_q2_2', 'X_2_q1_2', 'X_2_q2_2']
        )
        atom = report.model.table.function('X_1_q2_1').atom()
        self.assertTrue(is_zero(determined['X_1_q2_2'] - chart.velocity(2, 1) + atom))

    def test_stabilizes_with_four_free_functions(self):
        report = self.report
        self.assertEqual(report.status, ReportStatus.STABILIZED)
        self.assertEqual(report.exit_code, 0)
        self.assertEqual(report.final_generation, 1)
        self.assertEqual(
            sorted(atom.func.__name__ for atom in report.free_atoms),
            ['X_1_q1_1', 'X_1_q2_1', 'X_2_q1_1', 'X_2_q2_1'],
        )
        self.assertTrue(report.basis_cross_check)
        self.assertEqual(report.warnings, [])

    def test_report_invariants(self):
        self.assertReportInvariants(self.report)

    def test_integrability_residuals_use_free_functions(self):
        self.assertTrue(self.report.integrability)
        derivatives = set()
        for condition in self.report.integrability:
            derivatives |= condition.expr.atoms(sympy.Derivative)
        self.assertTrue(derivatives)

    def test_projectability(self):
        self.assertEqual(self.report.projectability['verdict'], 'not projectable as-is')

    def test_independence(self):
        self.assertEqual(self.report.independence.rank, 2)

    def test_labels(self):
        self.assertEqual(self.report.labels(), ['eta_1^1', 'eta_1^2'])


class RegularLagrangianTests(ReportInvariantsMixin, SimpleTestCase):
    def test_no_constraints(self):
        report = stabilize(free(), seed=0)
        self.assertEqual(report.status, ReportStatus.STABILIZED)
        self.assertEqual(len(report.constraints), 0)
        self.assertEqual(report.final_generation, 0)
        self.assertEqual(len(report.determinations), 2)
        self.assertEqual(len(report.free_atoms), 6)
        self.assertEqual(report.projectability['verdict'], 'projectable')
        self.assertIsNone(report.independence)
        self.assertReportInvariants(report)


class RankZeroTests(ReportInvariantsMixin, SimpleTestCase):
    """L = v[q,1] + q^2: dE = -2q dq, so q = 0, then v_1 = v_2 = 0 by tangency"""

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.report = stabilize(rank_zero(), seed=0)

    def test_constraint_chain(self):
        chart = self.report.model.chart
        q = chart.base(1)
        chain = [
            (constraint.generation, constraint.expr, constraint.constraint_class)
            for constraint in self.report.constraints
        ]
        self.assertEqual(chain, [
            (1, q, ConstraintClass.DYNAMICAL),
            (2, chart.velocity(1, 1), ConstraintClass.SOPDE),
            (2, chart.velocity(1, 2), ConstraintClass.SOPDE),
        ])

    def test_final_manifold_is_a_point(self):
        report = self.report
        self.assertEqual(report.status, ReportStatus.STABILIZED)
        self.assertEqual(report.final_generation, 2)
        self.assertEqual(set(report.constraints.substitutions.values()), {0})
        self.assertEqual(len(report.constraints.substitutions), 3)
        self.assertTrue(all(item.value == 0 for item in report.determinations))
        self.assertEqual(report.free_atoms, [])
        self.assertEqual(report.projectability['verdict'], 'projectable')

    def test_report_invariants(self):
        self.assertReportInvariants(self.report)

    def test_iteration_cap(self):
        report = stabilize(rank_zero(), max_iterations=1, seed=0)
        self.assertEqual(report.status, ReportStatus.ITERATION_CAP)
        self.assertEqual(report.exit_code, 2)
        self.assertTrue(report.warnings)

    def test_invalid_iteration_cap(self):
        with self.assertRaises(ValueError):
            stabilize(rank_zero(), max_iterations=0)


class EmptyManifoldTests(SimpleTestCase):
    def test_linear_potential_has_no_solutions(self):
        report = stabilize(build_model('empty', ['q'], 1, 'v[q,1] + q'), seed=0)
        self.assertEqual(report.status, ReportStatus.EMPTY)
        self.assertEqual(report.exit_code, 1)
        self.assertEqual(report.integrability, [])
        self.assertIsNone(report.projectability)


class FactoredConstraintTests(SimpleTestCase):
    def test_products_are_flagged(self):
        model = build_model('product', ['q1', 'q2'], 1, 'q1^2*q2^2')
        report = stabilize(model, max_iterations=3, seed=0)
        self.assertTrue(any('factors' in message for message in report.warnings))


class ClassificationTests(SimpleTestCase):
    def test_academic_eta_is_sopde(self):
        model = academic()
        constraints, _ = first_generation(model)
        constraints, _ = sopde_generation(model, constraints)
        q1 = model.chart.base(1)
        self.assertEqual(classify(q1, model, ConstraintSet.for_model(model)), ConstraintClass.DYNAMICAL)
        for constraint in constraints:
            self.assertEqual(constraint.constraint_class, ConstraintClass.SOPDE)

    def test_generic_sopde_family(self):
        family = generic_sopde(academic())
        self.assertTrue(is_sopde(family))
        self.assertEqual(len(family.parameters), 8)
        self.assertEqual(str(family.parameters[-1]), 'X_2_q2_2')


class FirstGenerationSoundnessTests(SimpleTestCase):
    def test_perp_constraints_vanish_on_p1(self):
        model = build_model('affine', ['q1', 'q2', 'q3'], 1, 'q2*v[q1,1] + q3^2 + q1*q3')
        constraints, _ = first_generation(model)
        self.assertEqual(len(constraints), 1)
        rng = np.random.default_rng(11)
        perp = perp_basis(model)
        for _ in range(50):
            point = constraints.sample_point(rng)
            for field in perp:
                self.assertEqual(eval_rational(field.apply(model.energy), point), 0)
        outside = {symbol: 1 for symbol in model.chart.all_coordinates}
        values = [eval_rational(field.apply(model.energy), outside) for field in perp]
        self.assertTrue(any(value != 0 for value in values))


class RandomCorpusTests(ReportInvariantsMixin, SimpleTestCase):
    def test_lemma_cross_check(self):
        rng = np.random.default_rng(20240601)
        for index in range(20):
            model = random_model(rng, 2, 1 + index % 2, affine=index % 2 == 0)
            result = lemma_cross_check(model, seed=index, points=10)
            self.assertTrue(result['agrees'], f'model {index}: {model.lagrangian}')
            self.assertEqual(result['points'], 10)

    def test_hessian_kernel_matches_numeric_nullspace(self):
        rng = np.random.default_rng(7)
        for index in range(20):
            model = random_model(rng, 2, 2, affine=index % 4 == 0)
            expected = len(ker_fl_basis(model))
            hessian = model.hessian
            symbols = model.chart.all_coordinates
            for _ in range(3):
                point = {symbol: int(rng.integers(-10 ** 6, 10 ** 6)) for symbol in symbols}
                numeric = hessian.evaluate(point)
                self.assertEqual(hessian.rows - np.linalg.matrix_rank(numeric), expected)

    def run_corpus(self, rng, count, affine):
        checked = 0
        for index in range(count):
            model = random_model(rng, 2, 1 + index % 2, degree=2, terms=4, affine=affine)
            report = stabilize(model, max_iterations=6, seed=index, diagnostics=False)
            self.assertIn(report.status, ReportStatus.values, model.lagrangian)
            for constraint in report.constraints:
                self.assertIn(constraint.constraint_class, ConstraintClass.values)
                self.assertGreaterEqual(constraint.generation, 1)
            # residuals are only recognised syntactically, so implication checks need none
            if report.status == ReportStatus.STABILIZED and not report.constraints.residuals:
                self.assertReportInvariants(report)
                checked += 1
        return checked

    def test_random_affine_runs_classify_soundly(self):
        self.assertGreater(self.run_corpus(np.random.default_rng(3), 25, affine=True), 0)

    def test_random_general_runs_classify_soundly(self):
        self.assertGreater(self.run_corpus(np.random.default_rng(4), 20, affine=False), 0)


class DeterminismTests(SimpleTestCase):
    def summary(self, report):
        return (
            report.status,
            [(c.generation, str(c.expr), c.constraint_class, c.origin) for c in report.constraints],
            [(str(d.unknown), str(d.value)) for d in report.determinations],
            [str(condition.expr) for condition in report.integrability],
        )

    def test_repeated_runs_agree(self):
        self.assertEqual(self.summary(stabilize(academic())), self.summary(stabilize(academic())))

    @override_settings(KSYMP_THREADS=4)
    def test_threads_do_not_change_results(self):
        threaded = self.summary(stabilize(rank_zero()))
        with self.settings(KSYMP_THREADS=1):
            sequential = self.summary(stabilize(rank_zero()))
        self.assertEqual(threaded, sequential)

    def test_independence_certificate_counts_constraints(self):
        report = stabilize(rank_zero())
        certificate = independence_certificate(report.model, report.constraints, seed=0)
        self.assertEqual(certificate.rank, 3)
