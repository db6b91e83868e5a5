import sys

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from affine.fixtures import UnknownFixtureError
from constraints.algorithm import stabilize
from constraints.choices import ReportStatus
from core.model_files import ModelFileError, dump, load, load_fixture
from core.reports import render_json, render_text

INPUT_ERROR = 3


def load_source(options):
    """Model named by exactly one of --model / --fixture"""
    path, fixture = options.get('model'), options.get('fixture')
    if (path is None) == (fixture is None):
        raise CommandError('Give exactly one of --model or --fixture', returncode=INPUT_ERROR)
    try:
        if path is not None:
            return load(path)
        return load_fixture(fixture)
    except ModelFileError as error:
        raise CommandError(f'{path or fixture}: {error}', returncode=INPUT_ERROR) from None
    except UnknownFixtureError as error:
        raise CommandError(error.args[0], returncode=INPUT_ERROR) from None


class Command(BaseCommand):
    help = 'Run the k-presymplectic constraint algorithm on a model file or a built-in fixture'

    def add_arguments(self, parser):
        parser.add_argument('--model', help='Path to a JSON model file')
        parser.add_argument('--fixture', help='Name of a built-in model')
        parser.add_argument(
            '--format',
            default='text',
            help='Report format: text or json (default: text)'
        )
        parser.add_argument(
            '--max-iterations',
            type=int,
            default=getattr(settings, 'KSYMP_MAX_ITERATIONS', 16),
            help='Tangency steps before giving up'
        )
        parser.add_argument(
            '--seed',
            type=int,
            default=getattr(settings, 'KSYMP_SEED', 0),
            help='Seed of the random evaluation points used for ranks and diagnostics'
        )
        parser.add_argument(
            '--skip-integrability',
            action='store_true',
            help='Do not compute the integrability residuals of the final family'
        )
        parser.add_argument(
            '--dump-model',
            action='store_true',
            help='Print the model file of the selected model and exit'
        )

    def handle(self, *args, **options):
        if options['format'] not in ('text', 'json'):
            raise CommandError(f"Unknown format '{options['format']}'", returncode=INPUT_ERROR)
        if options['max_iterations'] < 1:
            raise CommandError('--max-iterations must be at least 1', returncode=INPUT_ERROR)

        model = load_source(options)
        if options['dump_model']:
            self.stdout.write(dump(model), ending='')
            return

        report = stabilize(
            model,
            max_iterations=options['max_iterations'],
            seed=options['seed'],
            integrability=not options['skip_integrability'],
        )
        render = render_json if options['format'] == 'json' else render_text
        self.stdout.write(render(report), ending='')
        if report.exit_code:
            self.stderr.write(f'{model.name}: {ReportStatus(report.status).label}')
            sys.exit(report.exit_code)
