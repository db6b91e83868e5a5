"""
The constraint algorithm for k-presymplectic Lagrangian field theories

Generation 1 holds the compatibility conditions of the Lagrangian equation
(dynamical) and the conditions for a second-order solution to exist (SOPDE).
Each further generation comes from requiring the solution family to be
tangent to the current constraint set, until nothing new appears.
"""
import logging
import time

import sympy
from django.conf import settings

from geometry.differential import contract
from geometry.fields import KVectorFieldFamily, VectorFieldOnTkQ, is_sopde, lie_bracket
from linalg.elimination import generic_rank, linear_system, solve_parametric
from symbolic.expressions import is_zero, normalize
from symbolic.printing import print_expr
from .choices import ConstraintClass, ReportStatus
from .concurrency import parallel_map
from .diagnostics import independence_certificate, projectability_diagnostic
from .normal_form import Constraint, ConstraintSet, mutually_reducible
from .report import AlgorithmReport, Determination, IntegrabilityCondition
from .spaces import ker_fl_basis, m_space_basis, omega_matrix, perp_basis

logger = logging.getLogger(__name__)


def lagrangian_unknowns(model):
    chart = model.chart
    return [
        model.unknown(alpha, coordinate)
        for alpha in range(1, chart.k + 1) for coordinate in chart.all_coordinates
    ]


def fiber_unknowns(model):
    """(X_alpha)^i_beta ordered by alpha, then beta, then i"""
    chart = model.chart
    return [
        model.unknown(alpha, chart.velocity(i, beta))
        for alpha in range(1, chart.k + 1)
        for beta in range(1, chart.k + 1)
        for i in range(1, chart.n + 1)
    ]


def generic_sopde(model):
    """Base components v^i_alpha, every fiber component a free unknown"""
    chart = model.chart
    fields = []
    for alpha in range(1, chart.k + 1):
        components = {chart.base(i): chart.velocity(i, alpha) for i in range(1, chart.n + 1)}
        for velocity in chart.velocities:
            components[velocity] = model.unknown(alpha, velocity)
        fields.append(VectorFieldOnTkQ(chart, components))
    return KVectorFieldFamily(fields, fiber_unknowns(model))


def lagrangian_defect(model, family):
    """Omega_L(X) - dE_L"""
    return contract(model.omega, family.fields) - model.energy_differential


def classify(f, model, constraints, kernel=None):
    """Dynamical when every Ker FL* direction annihilates f on the constraint set"""
    kernel = ker_fl_basis(model) if kernel is None else kernel
    for field in kernel:
        if not constraints.implies(field.apply(f, model.rules)):
            return ConstraintClass.SOPDE
    return ConstraintClass.DYNAMICAL


def _record(model, constraints, expr, generation, origin, kernel):
    reduced = constraints.canonical(expr)
    if reduced is None:
        return None
    kind = classify(reduced, model, constraints, kernel)
    constraint = constraints.add(Constraint(reduced, generation, kind, origin))
    logger.debug(f'Generation {generation} {kind} constraint from {origin}: {reduced}')
    return constraint


def _flag_products(model, report, constraints):
    """Warn about constraints that factor; their branches are kept together"""
    for expr in constraints.factorable:
        report.warn(f'Constraint {print_expr(expr, model.table)} factors; branches are not split')


def _certify(report, label, certificate):
    if report is not None:
        report.certify(label, certificate)


def _warn(report, message):
    if report is None:
        logger.warning(message)
    else:
        report.warn(message)


def first_generation(model, report=None, seed=None, kernel=None):
    """P1 and the general solution of the Lagrangian equation on it"""
    chart = model.chart
    kernel = ker_fl_basis(model) if kernel is None else kernel
    constraints = ConstraintSet.for_model(model)
    _certify(report, 'perp', generic_rank(omega_matrix(model), seed))

    perp = perp_basis(model)
    values = parallel_map(lambda field: field.apply(model.energy, model.rules), perp)
    for index, value in enumerate(values, 1):
        if not is_zero(value):
            _record(model, constraints, value, 1, f'i(Z{index})dE', kernel)

    unknowns = lagrangian_unknowns(model)
    fields = [
        VectorFieldOnTkQ(chart, {c: model.unknown(alpha, c) for c in chart.all_coordinates})
        for alpha in range(1, chart.k + 1)
    ]
    family = KVectorFieldFamily(fields, unknowns)
    defect = lagrangian_defect(model, family)
    matrix, rhs = linear_system(
        [defect[c] for c in chart.all_coordinates], unknowns,
        row_labels=[f'lagrangian[{c}]' for c in chart.all_coordinates],
    )
    solution = solve_parametric(matrix, rhs, unknowns)
    _certify(report, 'lagrangian equation', solution.certificate)
    for expr in solution.consistency:
        if not constraints.implies(expr):
            _warn(report, f'Lagrangian equation condition {expr} is not implied by the perp constraints')
            _record(model, constraints, expr, 1, 'lagrangian equation', kernel)

    general = {unknown: solution.general[unknown] for unknown in solution.determined}
    family = KVectorFieldFamily(fields, solution.free).substitute(general, constraints.reduce)
    logger.info(f'{model.name}: {len(constraints)} first-generation dynamical constraints')
    return constraints, family


def _sopde_conditions(model, basis, defect, unknowns):
    chart = model.chart

    def contracted(field):
        return normalize(sum((field[c] * defect[c] for c in chart.all_coordinates), sympy.S.Zero))

    equations = parallel_map(contracted, basis)
    matrix, rhs = linear_system(
        equations, unknowns, row_labels=[f'i(M{j})' for j in range(1, len(basis) + 1)]
    )
    solution = solve_parametric(matrix, rhs, unknowns)
    conditions = [
        (expr, f'i(M{row + 1})(Omega(Gamma) - dE)')
        for expr, row in zip(solution.consistency, solution.consistency_rows)
    ]
    return conditions, solution.certificate


def sopde_generation(model, constraints, report=None, kernel=None):
    """S1 and the generic SOPDE family solving the Lagrangian equation on it"""
    chart = model.chart
    kernel = ker_fl_basis(model) if kernel is None else kernel
    first = constraints.copy()
    gamma = generic_sopde(model)
    unknowns = list(gamma.parameters)
    defect = lagrangian_defect(model, gamma)
    basis = m_space_basis(model)

    conditions, certificate = _sopde_conditions(model, basis, defect, unknowns)
    _certify(report, 'sopde', certificate)
    for expr, origin in conditions:
        _record(model, constraints, expr, 1, origin, kernel)

    if getattr(settings, 'KSYMP_BASIS_CROSS_CHECK', True):
        reordered, _ = _sopde_conditions(model, list(reversed(basis)), defect, unknowns)
        for expr, origin in reordered:
            _record(model, first, expr, 1, origin, kernel)
        agrees = mutually_reducible(constraints, first)
        if report is not None:
            report.basis_cross_check = agrees
        if not agrees:
            _warn(report, 'SOPDE constraints depend on the order of the M basis')

    matrix, rhs = linear_system(
        [defect[c] for c in chart.all_coordinates], unknowns,
        row_labels=[f'sopde[{c}]' for c in chart.all_coordinates],
    )
    solution = solve_parametric(matrix, rhs, unknowns)
    _certify(report, 'sopde equation', solution.certificate)
    for expr in solution.consistency:
        if not constraints.implies(expr):
            _warn(report, f'SOPDE equation condition {expr} is not implied by the M-basis constraints')
            _record(model, constraints, expr, 1, 'Omega(Gamma) - dE', kernel)

    determined = {
        unknown: constraints.reduce(solution.general[unknown]) for unknown in solution.determined
    }
    if report is not None:
        report.determinations.extend(
            Determination(unknown, value, 0) for unknown, value in determined.items()
        )
    sopde = KVectorFieldFamily(gamma.fields, unknowns).substitute(determined)
    logger.info(f'{model.name}: {len(constraints)} constraints after the SOPDE generation')
    return constraints, sopde


def tangency_step(model, constraints, family, generation, report=None, kernel=None, step=1):
    """New constraints and parameter determinations from Gamma_alpha(c) = 0 on the set"""
    kernel = ker_fl_basis(model) if kernel is None else kernel
    if not is_sopde(family):
        raise ValueError('Tangency is computed for SOPDE families only')
    existing = list(constraints)
    pairs = [
        (alpha, index, constraint)
        for index, constraint in enumerate(existing, 1)
        for alpha in range(1, model.chart.k + 1)
    ]

    def tangency(pair):
        alpha, _, constraint = pair
        return constraints.reduce(family.field(alpha).apply(constraint.expr, model.rules))

    equations = parallel_map(tangency, pairs)
    parameters = list(family.parameters)
    matrix, rhs = linear_system(
        equations, parameters,
        row_labels=[f'Gamma_{alpha}(c{index})' for alpha, index, _ in pairs],
    )
    solution = solve_parametric(matrix, rhs, parameters)
    _certify(report, f'tangency {step}', solution.certificate)
    determinations = {
        unknown: constraints.reduce(solution.general[unknown]) for unknown in solution.determined
    }

    created = []
    for expr, row in zip(solution.consistency, solution.consistency_rows):
        alpha, index, parent = pairs[row]
        constraint = _record(
            model, constraints, expr, generation, f'Gamma_{alpha}(c{index})', kernel
        )
        if constraint is None:
            continue
        created.append(constraint)
        if parent.constraint_class == ConstraintClass.SOPDE:
            _warn(report, f'Tangency of SOPDE constraint c{index} left residual {constraint.expr}')
    return created, determinations


def integrability_conditions(family, constraints, rules=None):
    """Nonzero components of [Gamma_alpha, Gamma_beta] on the constraint set"""
    chart = family.chart
    pairs = [
        (alpha, beta) for alpha in range(1, chart.k + 1) for beta in range(alpha + 1, chart.k + 1)
    ]
    brackets = parallel_map(
        lambda pair: lie_bracket(family.field(pair[0]), family.field(pair[1]), rules), pairs
    )
    conditions = []
    for (alpha, beta), bracket in zip(pairs, brackets):
        for coordinate in chart.all_coordinates:
            value = constraints.reduce(bracket[coordinate])
            if not is_zero(value):
                conditions.append(IntegrabilityCondition(alpha, beta, coordinate, value))
    return conditions


def stabilize(model, max_iterations=None, seed=None, integrability=True, diagnostics=True):
    """Run every generation until the constraint set stops growing"""
    if max_iterations is None:
        max_iterations = getattr(settings, 'KSYMP_MAX_ITERATIONS', 16)
    if max_iterations < 1:
        raise ValueError('max_iterations must be at least 1')
    if seed is None:
        seed = getattr(settings, 'KSYMP_SEED', 0)

    started = time.perf_counter()
    report = AlgorithmReport(model=model, seed=seed)
    kernel = ker_fl_basis(model)
    constraints, report.lagrangian_family = first_generation(model, report, seed, kernel)
    constraints, family = sopde_generation(model, constraints, report, kernel)
    report.timing['first_generation'] = time.perf_counter() - started

    generation = constraints.final_generation or 1
    status = None
    for step in range(1, max_iterations + 1):
        if constraints.is_empty:
            status = ReportStatus.EMPTY
            break
        report.iterations = step
        created, determined = tangency_step(
            model, constraints, family, generation + 1, report, kernel, step
        )
        if determined:
            family = family.substitute(determined)
            report.determinations = [
                Determination(item.unknown, normalize(item.value.xreplace(determined)), item.step)
                for item in report.determinations
            ]
            report.determinations.extend(
                Determination(unknown, value, step) for unknown, value in determined.items()
            )
        if not created:
            status = ReportStatus.STABILIZED
            break
        generation += 1
        logger.info(f'{model.name}: generation {generation} added {len(created)} constraints')
    if status is None:
        if constraints.is_empty:
            status = ReportStatus.EMPTY
        else:
            status = ReportStatus.ITERATION_CAP
            report.warn(f'Iteration cap {max_iterations} reached before stabilization')
    report.status = status
    report.timing['tangency'] = time.perf_counter() - started

    atoms = {parameter: model.family_atom(parameter) for parameter in family.parameters}
    report.family = family.substitute(atoms)
    report.free_atoms = list(atoms.values())
    report.determinations = [
        Determination(item.unknown, normalize(item.value.xreplace(atoms)), item.step)
        for item in report.determinations
    ]
    report.constraints = constraints
    _flag_products(model, report, constraints)

    if status != ReportStatus.EMPTY:
        if integrability:
            report.integrability = integrability_conditions(report.family, constraints, model.rules)
        if diagnostics:
            report.independence = independence_certificate(model, constraints, seed)
            if report.independence is not None and report.independence.rank < len(constraints):
                report.warn(
                    f'Constraint Jacobian has rank {report.independence.rank} '
                    f'for {len(constraints)} constraints'
                )
            report.projectability = projectability_diagnostic(
                report.family, model, constraints, seed
            )
    report.timing['total'] = time.perf_counter() - started
    logger.info(
        f'{model.name}: {status} after {report.iterations} steps, '
        f'{len(constraints)} constraints, {len(report.free_atoms)} free functions'
    )
    return report
