from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from affine.decomposition import detect_affine, m_matrix
from linalg.elimination import generic_rank
from symbolic.symbols import SymbolKind
from .ksymp_run import INPUT_ERROR, load_source


def describe(entry):
    if entry.kind == SymbolKind.VELOCITY:
        return f'velocity of {entry.base_name} along direction {entry.direction}'
    if entry.kind == SymbolKind.FUNCTION:
        return f"function of ({', '.join(str(argument) for argument in entry.arguments)})"
    return SymbolKind(entry.kind).label.lower()


class Command(BaseCommand):
    help = 'Parse and check a model without running the constraint algorithm'

    def add_arguments(self, parser):
        parser.add_argument('model', nargs='?', help='Path to a JSON model file')
        parser.add_argument('--fixture', help='Name of a built-in model')
        parser.add_argument('--seed', type=int, default=getattr(settings, 'KSYMP_SEED', 0))

    def handle(self, *args, **options):
        if options['model'] is None and options['fixture'] is None:
            raise CommandError('Give a model file or --fixture', returncode=INPUT_ERROR)
        model = load_source(options)
        chart = model.chart
        table = model.table
        seed = options['seed']

        self.stdout.write(f'Model {model.name}: n = {chart.n}, k = {chart.k}')
        self.stdout.write('Symbols:')
        for entry in table.entries():
            self.stdout.write(f'  {entry.name}: {describe(entry)}')
        if model.rules:
            self.stdout.write(f'Derivative rules: {len(model.rules)}')

        certificate = generic_rank(model.hessian, seed)
        size = chart.n * chart.k
        self.stdout.write(
            f'Hessian: rank {certificate.rank} of {size} '
            f'(minor {certificate.minor_text(table)})'
        )
        if certificate.rank == size:
            self.stdout.write(self.style.SUCCESS('regular: yes'))
        else:
            self.stdout.write(f'regular: no, {size - certificate.rank} singular directions')

        decomposition = detect_affine(model)
        if decomposition is None:
            self.stdout.write('affine: no')
        elif size > getattr(settings, 'KSYMP_VALIDATE_RANK_LIMIT', 64):
            self.stdout.write(self.style.SUCCESS(
                f'affine: yes, {chart.n} fiber coordinates, k = {chart.k}'
            ))
        else:
            rank = generic_rank(m_matrix(decomposition), seed)
            self.stdout.write(self.style.SUCCESS(f'affine: yes, rank M = {rank.rank}'))
            warning = rank.warning('rank M', table)
            if warning:
                self.stdout.write(self.style.WARNING(warning))
