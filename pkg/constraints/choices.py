from django.db import models


class ConstraintClass(models.TextChoices):
    DYNAMICAL = 'dynamical', 'Dynamical'
    SOPDE = 'sopde', 'SOPDE'
    INTEGRABILITY = 'integrability', 'Integrability'


class ReportStatus(models.TextChoices):
    STABILIZED = 'stabilized', 'Stabilized'
    EMPTY = 'empty', 'Empty manifold'
    ITERATION_CAP = 'iteration_cap', 'Iteration cap reached'


EXIT_CODES = {
    ReportStatus.STABILIZED: 0,
    ReportStatus.EMPTY: 1,
    ReportStatus.ITERATION_CAP: 2,
}
