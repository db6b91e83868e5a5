"""
Outcome of a constraint-algorithm run
"""
import logging
from dataclasses import dataclass, field

import sympy

from .choices import EXIT_CODES, ConstraintClass, ReportStatus

logger = logging.getLogger(__name__)

CONSTRAINT_LETTERS = {
    ConstraintClass.DYNAMICAL: 'zeta',
    ConstraintClass.SOPDE: 'eta',
    ConstraintClass.INTEGRABILITY: 'iota',
}


@dataclass
class Determination:
    """A family parameter fixed by the equations of one step"""
    unknown: sympy.Symbol
    value: sympy.Expr
    step: int


@dataclass
class IntegrabilityCondition:
    alpha: int
    beta: int
    coordinate: sympy.Symbol
    expr: sympy.Expr


@dataclass
class AlgorithmReport:
    model: object
    seed: int = 0
    status: str = ReportStatus.STABILIZED
    constraints: object = None
    family: object = None
    lagrangian_family: object = None
    determinations: list = field(default_factory=list)
    free_atoms: list = field(default_factory=list)
    integrability: list = field(default_factory=list)
    certificates: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)
    iterations: int = 0
    basis_cross_check: bool | None = None
    independence: object = None
    projectability: dict | None = None
    timing: dict = field(default_factory=dict)

    def warn(self, message):
        logger.warning(message)
        if message not in self.warnings:
            self.warnings.append(message)

    def certify(self, label, certificate):
        self.certificates[label] = certificate
        message = certificate.warning(label, self.model.table)
        if message:
            self.warn(message)

    @property
    def exit_code(self):
        return EXIT_CODES[ReportStatus(self.status)]

    @property
    def final_generation(self):
        return self.constraints.final_generation if self.constraints is not None else 0

    def generations(self):
        """{generation: [constraints]} in emission order"""
        grouped = {}
        for constraint in self.constraints or ():
            grouped.setdefault(constraint.generation, []).append(constraint)
        return grouped

    def labels(self):
        """zeta_g^j / eta_g^j names, numbered per generation and class"""
        names, counters = [], {}
        for constraint in self.constraints or ():
            key = (constraint.generation, constraint.constraint_class)
            counters[key] = counters.get(key, 0) + 1
            letter = CONSTRAINT_LETTERS.get(constraint.constraint_class, 'c')
            names.append(f'{letter}_{constraint.generation}^{counters[key]}')
        return names

    def count(self, constraint_class=None):
        return sum(
            1 for constraint in self.constraints or ()
            if constraint_class is None or constraint.constraint_class == constraint_class
        )
