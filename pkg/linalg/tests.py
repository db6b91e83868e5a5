import numpy as np
import sympy
from django.test import SimpleTestCase

from symbolic.expressions import EvaluationError, eval_rational, is_zero
from .elimination import (
    NonlinearUnknownError, generic_rank, kernel_basis, linear_system, solve_parametric,
)
from .matrices import SymMatrix

x, y, z, a, b = sympy.symbols('x y z a b')


class SymMatrixTests(SimpleTestCase):
    def test_zero_entries_are_not_stored(self):
        matrix = SymMatrix.from_rows([[x - x, 1], [0, y]])
        self.assertEqual(len(matrix.items()), 2)
        self.assertEqual(matrix.nonzero_columns(), [1])

    def test_stack_and_transpose(self):
        top = SymMatrix.from_rows([[x, 0]], row_labels=['r0'])
        bottom = SymMatrix.from_rows([[0, y]], row_labels=['r1'])
        stacked = top.stack(bottom)
        self.assertEqual(stacked.shape, (2, 2))
        self.assertEqual(stacked.transpose().entry(1, 1), y)

    def test_map_drops_entries_that_become_zero(self):
        matrix = SymMatrix.from_rows([[x, y], [1, x * y]])
        mapped = matrix.map(lambda value: value.xreplace({x: 0}))
        self.assertEqual(mapped.to_rows(), [[0, y], [1, 0]])
        self.assertEqual(len(mapped.items()), 2)

    def test_duplicate_labels_rejected(self):
        with self.assertRaises(ValueError):
            SymMatrix(2, 1, row_labels=['r', 'r'])


class RankTests(SimpleTestCase):
    def test_dependent_rows(self):
        certificate = generic_rank(SymMatrix.from_rows([[x, y], [2 * x, 2 * y]]), seed=0)
        self.assertEqual(certificate.rank, 1)
        self.assertFalse(certificate.is_constant)
        self.assertIsNotNone(certificate.warning('test'))

    def test_certificate_minor_is_the_determinant(self):
        matrix = SymMatrix.from_rows([[x, 1, y], [y, x, 1], [1, y, x]])
        certificate = generic_rank(matrix, seed=3)
        determinant = matrix.to_sympy().det()
        self.assertEqual(certificate.rank, 3)
        self.assertTrue(is_zero(certificate.minor - determinant) or is_zero(certificate.minor + determinant))
        self.assertLessEqual(certificate.sample_rank, 3)

    def test_sample_rank_on_nonvanishing_minor(self):
        certificate = generic_rank(SymMatrix.from_rows([[x, 1], [-1, x]]), seed=5)
        self.assertEqual(certificate.rank, 2)
        self.assertEqual(certificate.sample_rank, 2)

    def test_zero_matrix(self):
        certificate = generic_rank(SymMatrix(3, 2))
        self.assertEqual(certificate.rank, 0)
        self.assertTrue(certificate.is_constant)

    def test_random_integer_matrices_match_numpy(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            rows, cols = rng.integers(1, 6, size=2)
            values = rng.integers(-2, 3, size=(rows, cols))
            values[:, 0] = values[:, -1]
            matrix = SymMatrix.from_rows(values.tolist())
            self.assertEqual(generic_rank(matrix).rank, np.linalg.matrix_rank(values))


class KernelTests(SimpleTestCase):
    def test_kernel_vectors_annihilate(self):
        matrix = SymMatrix.from_rows([[x, y, 0], [0, z, x]])
        basis = kernel_basis(matrix)
        self.assertEqual(len(basis), 1)
        for value in matrix.apply(basis[0]):
            self.assertTrue(is_zero(value))

    def test_zero_columns_give_unit_vectors(self):
        basis = kernel_basis(SymMatrix.from_rows([[0, x, 0]]))
        self.assertEqual(basis, [[1, 0, 0], [0, 0, 1]])

    def test_numeric_nullspace_dimension(self):
        rng = np.random.default_rng(11)
        symbols = [x, y, z]
        for _ in range(10):
            entries = [
                [sum(int(rng.integers(-2, 3)) * s for s in symbols) for _ in range(4)]
                for _ in range(3)
            ]
            entries[2] = [entries[0][c] + entries[1][c] for c in range(4)]
            matrix = SymMatrix.from_rows(entries)
            basis = kernel_basis(matrix)
            point = {s: int(rng.integers(1, 9)) for s in symbols}
            numeric = matrix.evaluate(point)
            self.assertEqual(len(basis), 4 - np.linalg.matrix_rank(numeric))


class SolveTests(SimpleTestCase):
    def test_latest_unknown_is_determined(self):
        u1, u2 = sympy.symbols('u1 u2')
        matrix, rhs = linear_system([u1 + u2 - a], [u1, u2])
        solution = solve_parametric(matrix, rhs, [u1, u2])
        self.assertEqual(solution.general, {u2: a - u1})
        self.assertEqual(solution.free, [u1])
        self.assertEqual(solution.particular, {u1: 0, u2: a})
        self.assertTrue(solution.is_consistent)

    def test_consistency_condition(self):
        u = sympy.Symbol('u')
        matrix, rhs = linear_system([u - a, u - b], [u])
        solution = solve_parametric(matrix, rhs, [u])
        self.assertEqual(len(solution.consistency), 1)
        condition = solution.consistency[0]
        self.assertTrue(is_zero(condition - (b - a)) or is_zero(condition - (a - b)))

    def test_symbolic_pivot_gives_rational_solution(self):
        u = sympy.Symbol('u')
        matrix, rhs = linear_system([x * u - 1], [u])
        solution = solve_parametric(matrix, rhs, [u])
        self.assertTrue(is_zero(solution.general[u] - 1 / x))
        self.assertFalse(solution.certificate.is_constant)

    def test_nullspace_solves_homogeneous_system(self):
        u1, u2, u3 = sympy.symbols('u1 u2 u3')
        equations = [x * u1 + y * u2 + u3, u1 - u3]
        matrix, rhs = linear_system(equations, [u1, u2, u3])
        solution = solve_parametric(matrix, rhs, [u1, u2, u3])
        self.assertEqual(len(solution.nullspace), 1)
        vector = solution.nullspace[0]
        for equation in equations:
            self.assertTrue(is_zero(equation.xreplace({u: vector.get(u, 0) for u in (u1, u2, u3)})))

    def test_nonlinear_unknowns_are_rejected(self):
        u = sympy.Symbol('u')
        with self.assertRaises(NonlinearUnknownError):
            linear_system([u ** 2 - 1], [u])
        with self.assertRaises(NonlinearUnknownError):
            linear_system([x * u * y + u * u], [u])


def random_symbolic_matrix(rng, rows, cols, symbols=(x, y)):
    return [
        [int(rng.integers(-2, 3)) + sum(int(rng.integers(-1, 2)) * s for s in symbols)
         for _ in range(cols)]
        for _ in range(rows)
    ]


class RankInvarianceTests(SimpleTestCase):
    def test_permutations_and_scaling_keep_the_rank(self):
        rng = np.random.default_rng(23)
        for _ in range(20):
            rows, cols = (int(value) for value in rng.integers(1, 5, size=2))
            entries = random_symbolic_matrix(rng, rows, cols)
            if rows > 1:
                entries[-1] = [entries[0][c] * (x + 1) for c in range(cols)]
            rank = generic_rank(SymMatrix.from_rows(entries)).rank
            row_order = rng.permutation(rows)
            col_order = rng.permutation(cols)
            scales = [int(rng.choice([-3, -1, 2, 5])) for _ in range(rows)]
            shuffled = [
                [scales[r] * entries[row_order[r]][col_order[c]] for c in range(cols)]
                for r in range(rows)
            ]
            self.assertEqual(generic_rank(SymMatrix.from_rows(shuffled)).rank, rank)
            self.assertEqual(generic_rank(SymMatrix.from_rows(entries).transpose()).rank, rank)

    def test_kernel_vectors_are_independent(self):
        rng = np.random.default_rng(29)
        for _ in range(15):
            rows = int(rng.integers(1, 4))
            cols = int(rng.integers(rows + 1, 6))
            matrix = SymMatrix.from_rows(random_symbolic_matrix(rng, rows, cols, (x, y, z)))
            basis = kernel_basis(matrix)
            self.assertEqual(len(basis), cols - generic_rank(matrix).rank)
            self.assertEqual(generic_rank(SymMatrix.from_rows(basis)).rank, len(basis))
            for vector in basis:
                self.assertTrue(all(is_zero(value) for value in matrix.apply(vector)))


class SolveOracleTests(SimpleTestCase):
    """solve_parametric against exact evaluation at random rational points"""

    def test_fifty_random_systems(self):
        rng = np.random.default_rng(31)
        checked = 0
        for case in range(50):
            rows = int(rng.integers(1, 5))
            cols = int(rng.integers(1, 5))
            unknowns = sympy.symbols(f'u1:{cols + 1}')
            entries = random_symbolic_matrix(rng, rows, cols)
            matrix = SymMatrix.from_rows(entries)
            witness = [int(rng.integers(-3, 4)) for _ in range(cols)]
            rhs = [sum(entries[r][c] * witness[c] for c in range(cols)) for r in range(rows)]
            if case % 2:
                rhs[int(rng.integers(rows))] += a
            solution = solve_parametric(matrix, rhs, unknowns)
            if case % 2 == 0:
                self.assertTrue(solution.is_consistent)

            point = {
                x: sympy.Rational(int(rng.integers(1, 60)), int(rng.integers(1, 7))),
                y: sympy.Rational(int(rng.integers(-60, 60)), int(rng.integers(1, 7))),
                a: 0,
            }
            try:
                minor = eval_rational(solution.certificate.minor, point)
            except EvaluationError:
                continue
            if minor == 0:
                continue
            numeric = matrix.evaluate(point)
            self.assertEqual(len(solution.determined), np.linalg.matrix_rank(numeric))
            for condition in solution.consistency:
                self.assertEqual(eval_rational(condition, point), 0)

            values = [eval_rational(solution.particular[u], point) for u in unknowns]
            for r in range(rows):
                total = sum(eval_rational(entries[r][c], point) * values[c] for c in range(cols))
                self.assertEqual(total, eval_rational(rhs[r], point))
            for vector in solution.nullspace:
                kernel = [eval_rational(vector.get(u, 0), point) for u in unknowns]
                for r in range(rows):
                    self.assertEqual(
                        sum(eval_rational(entries[r][c], point) * kernel[c] for c in range(cols)), 0,
                    )
            checked += 1
        self.assertGreater(checked, 30)
