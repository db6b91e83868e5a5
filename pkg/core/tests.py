import json
import tempfile
from io import StringIO
from pathlib import Path

from django.core.management import call_command
from django.core.management.base import CommandError
from django.db import connections
from django.test import SimpleTestCase, override_settings, tag

from affine.fixtures import academic, free, model_document
from affine.relativity import build_einstein_palatini
from constraints.algorithm import stabilize
from symbolic.parser import parse
from .forms import ModelFileForm
from .model_files import ModelFileError, build, decode, dump, load, load_fixture
from .reports import render_json, render_text, report_document
from .runner import KsympTestRunner


class TemporaryFilesMixin:
    def setUp(self):
        super().setUp()
        self._directory = tempfile.TemporaryDirectory()
        self.addCleanup(self._directory.cleanup)

    def write(self, name, text):
        path = Path(self._directory.name) / name
        path.write_text(text, encoding='utf-8')
        return str(path)

    def write_document(self, name, document):
        return self.write(name, json.dumps(document, indent=2))


def run(*args, **options):
    out = StringIO()
    call_command('ksymp_run', *args, stdout=out, stderr=StringIO(), no_color=True, **options)
    return out.getvalue()


def validate(*args, **options):
    out = StringIO()
    call_command('ksymp_validate', *args, stdout=out, no_color=True, **options)
    return out.getvalue()


class ModelFileFormTests(SimpleTestCase):
    def test_academic_document_is_valid(self):
        form = ModelFileForm(data=academic())
        self.assertTrue(form.is_valid(), form.errors)
        self.assertEqual(form.cleaned_data['coordinates'], ['q1', 'q2'])
        self.assertEqual(form.cleaned_data['function_atoms'], [])

    def test_coordinate_count_must_match_n(self):
        document = dict(academic(), n=3)
        form = ModelFileForm(data=document)
        self.assertFalse(form.is_valid())
        self.assertIn('n is 3', form.first_error())

    def test_k_must_be_positive(self):
        form = ModelFileForm(data=dict(academic(), k=0))
        self.assertFalse(form.is_valid())
        self.assertTrue(form.first_error().startswith('k:'))

    def test_rejects_bad_and_reserved_names(self):
        for coordinates in (['q-1'], ['v'], ['q', 'q']):
            with self.subTest(coordinates=coordinates):
                document = dict(academic(), n=len(coordinates), coordinates=coordinates)
                self.assertFalse(ModelFileForm(data=document).is_valid())

    def test_missing_lagrangian(self):
        document = academic()
        del document['lagrangian']
        form = ModelFileForm(data=document)
        self.assertFalse(form.is_valid())
        self.assertIn('lagrangian', form.errors)

    def test_atom_declarations(self):
        document = dict(academic(), function_atoms=[
            {'name': 'f', 'arguments': ['q1'], 'rules': {'q2': '1'}},
        ])
        self.assertIn('non-arguments', ModelFileForm(data=document).first_error() or '')

        document['function_atoms'] = [{'name': 'f', 'arguments': ['q1'], 'colour': 'red'}]
        self.assertFalse(ModelFileForm(data=document).is_valid())

    def test_invertible_atoms_must_be_declared(self):
        document = dict(academic(), invertible_atoms=['rho'])
        form = ModelFileForm(data=document)
        self.assertFalse(form.is_valid())
        self.assertIn('rho', form.first_error())


class ModelFileTests(TemporaryFilesMixin, SimpleTestCase):
    def test_load_academic(self):
        model = load(self.write_document('academic.json', academic()))
        self.assertEqual(model.name, 'academic')
        self.assertEqual((model.chart.n, model.chart.k), (2, 2))

    def test_json_errors_carry_line_and_column(self):
        with self.assertRaises(ModelFileError) as caught:
            decode('{\n  "name": "broken",\n  "n": 2,,\n}')
        self.assertEqual(caught.exception.line, 3)
        self.assertIsNotNone(caught.exception.column)

    def test_top_level_must_be_an_object(self):
        with self.assertRaises(ModelFileError):
            decode('[1, 2]')

    def test_expression_errors_point_into_the_file(self):
        document = dict(academic(), lagrangian='q1*v[q2,1] + $')
        source = json.dumps(document, indent=2)
        with self.assertRaises(ModelFileError) as caught:
            build(json.loads(source), source)
        error = caught.exception
        line = source.splitlines()[error.line - 1]
        self.assertEqual(line[error.column - 1], '$')
        self.assertIn(f'line {error.line}', str(error))

    def test_unknown_identifier(self):
        path = self.write_document('typo.json', dict(academic(), lagrangian='q1*v[q3,1]'))
        with self.assertRaises(ModelFileError) as caught:
            load(path)
        self.assertIsNotNone(caught.exception.line)

    def test_missing_file(self):
        with self.assertRaises(ModelFileError):
            load(Path(self._directory.name) / 'missing.json')

    def test_atom_applied_to_wrong_arguments(self):
        document = dict(academic(), lagrangian='q1*v[q2,1] + f(q1)', function_atoms=[
            {'name': 'f', 'arguments': ['q2']},
        ])
        with self.assertRaises(ModelFileError):
            build(document)

    def test_dump_round_trip(self):
        for name in ('academic', 'affine-rank0', 'free'):
            with self.subTest(fixture=name):
                model = load_fixture(name)
                again = build(decode(dump(model)))
                self.assertEqual(again.lagrangian, model.lagrangian)
                self.assertEqual(again.chart.coordinate_names, model.chart.coordinate_names)

    def test_dump_keeps_atom_rules(self):
        model = build_einstein_palatini(3)
        again = build(decode(dump(model)))
        self.assertEqual(again.lagrangian, model.lagrangian)
        self.assertEqual(len(again.rules), len(model.rules))
        self.assertEqual(again.invertible_atoms, ('rho',))


class ReportTests(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.report = stabilize(load_fixture('academic'), seed=0)

    def test_document_counts(self):
        document = report_document(self.report)
        self.assertEqual(document['status'], 'stabilized')
        constraints = [c for generation in document['generations'] for c in generation['constraints']]
        self.assertEqual(len(constraints), 2)
        self.assertEqual({c['class'] for c in constraints}, {'sopde'})
        self.assertEqual([c['label'] for c in constraints], ['eta_1^1', 'eta_1^2'])
        self.assertEqual(len(document['determinations']), 4)
        self.assertEqual(len(document['free_atoms']), 4)
        self.assertNotIn('timing', document)

    def test_expressions_reparse(self):
        table = self.report.model.table
        document = report_document(self.report)
        constraints = [c for generation in document['generations'] for c in generation['constraints']]
        for text, constraint in zip([c['expr'] for c in constraints], self.report.constraints):
            self.assertEqual(parse(text, table), constraint.expr)
        for item, determination in zip(document['determinations'], self.report.determinations):
            self.assertEqual(parse(item['value'], table), determination.value)
        for field, family_field in zip(document['family'], self.report.family):
            for coordinate, text in field['components'].items():
                self.assertEqual(parse(text, table), family_field[table.lookup(coordinate).symbol])

    def test_text_uses_generation_labels(self):
        text = render_text(self.report)
        self.assertIn('Status: stabilized', text)
        self.assertIn('eta_1^1 = ', text)
        self.assertIn('Free functions: ', text)

    @override_settings(KSYMP_REPORT_TIMING=True)
    def test_timing_is_opt_in(self):
        document = json.loads(render_json(self.report))
        self.assertIn('total', document['timing'])


class RunCommandTests(TemporaryFilesMixin, SimpleTestCase):
    def test_academic_json(self):
        document = json.loads(run(fixture='academic', format='json'))
        self.assertEqual(document['status'], 'stabilized')
        self.assertEqual(document['exit_code'], 0)
        classes = [c['class'] for generation in document['generations'] for c in generation['constraints']]
        self.assertEqual(classes, ['sopde', 'sopde'])
        self.assertEqual(len(document['determinations']), 4)
        self.assertEqual(len(document['free_atoms']), 4)

    def test_free_has_no_constraints(self):
        document = json.loads(run(fixture='free', format='json'))
        self.assertEqual(document['status'], 'stabilized')
        self.assertEqual(document['generations'], [])
        self.assertIn('No constraints', run(fixture='free'))

    def test_rank_zero_chain(self):
        document = json.loads(run(fixture='affine-rank0', format='json'))
        self.assertEqual(document['status'], 'stabilized')
        chain = [
            (generation['generation'], c['expr'], c['class'])
            for generation in document['generations'] for c in generation['constraints']
        ]
        self.assertCountEqual(chain, [
            (1, 'q', 'dynamical'),
            (2, 'v[q,1]', 'sopde'),
            (2, 'v[q,2]', 'sopde'),
        ])

    def test_iteration_cap_exit_code(self):
        with self.assertRaises(SystemExit) as caught:
            run(fixture='affine-rank0', max_iterations=1)
        self.assertEqual(caught.exception.code, 2)

    def test_empty_manifold_exit_code(self):
        document = {
            'name': 'empty', 'n': 1, 'k': 1, 'coordinates': ['q'], 'lagrangian': 'v[q,1] + q',
        }
        with self.assertRaises(SystemExit) as caught:
            run(model=self.write_document('empty.json', document), format='json')
        self.assertEqual(caught.exception.code, 1)

    def test_input_errors_exit_with_three(self):
        broken = self.write('broken.json', '{"name": "x",\n "n": }')
        cases = [
            {'fixture': 'nonexistent'},
            {},
            {'fixture': 'free', 'model': broken},
            {'model': broken},
            {'fixture': 'free', 'format': 'yaml'},
            {'fixture': 'free', 'max_iterations': 0},
        ]
        for options in cases:
            with self.subTest(options=options):
                with self.assertRaises(CommandError) as caught:
                    run(**options)
                self.assertEqual(caught.exception.returncode, 3)

    def test_malformed_file_message_has_position(self):
        broken = self.write('broken.json', '{"name": "x",\n "n": }')
        with self.assertRaisesMessage(CommandError, 'line 2'):
            run(model=broken)

    def test_unknown_fixture_lists_choices(self):
        with self.assertRaisesMessage(CommandError, 'academic'):
            run(fixture='nonexistent')

    def test_reports_are_deterministic(self):
        for name in ('academic', 'affine-rank0', 'free'):
            with self.subTest(fixture=name):
                self.assertEqual(
                    run(fixture=name, format='json', seed=7),
                    run(fixture=name, format='json', seed=7),
                )

    def test_dumped_model_gives_the_same_report(self):
        for name in ('academic', 'affine-rank0'):
            with self.subTest(fixture=name):
                path = self.write(f'{name}.json', run(fixture=name, dump_model=True))
                self.assertEqual(
                    run(model=path, format='json'),
                    run(fixture=name, format='json'),
                )

    def test_skip_integrability(self):
        document = json.loads(run(fixture='academic', format='json', skip_integrability=True))
        self.assertEqual(document['integrability'], [])


class ValidateCommandTests(TemporaryFilesMixin, SimpleTestCase):
    def test_academic(self):
        output = validate(self.write_document('academic.json', academic()))
        self.assertIn('affine: yes, rank M = 2', output)
        self.assertIn('regular: no', output)
        self.assertIn('q1: base coordinate', output)
        self.assertIn('v[q2,1]: velocity of q2 along direction 1', output)
        self.assertIn('Hessian: rank 0 of 4', output)

    def test_free(self):
        output = validate(self.write_document('free.json', free()))
        self.assertIn('regular: yes', output)
        self.assertIn('affine: no', output)

    def test_fixture_option(self):
        self.assertIn('affine: yes, rank M = 0', validate(fixture='affine-rank0'))

    def test_einstein_palatini_dump(self):
        path = self.write_document('ep3.json', model_document(build_einstein_palatini(3)))
        output = validate(path)
        self.assertIn('affine: yes, 33 fiber coordinates, k = 3', output)
        self.assertIn('rho: function of', output)

    def test_input_error(self):
        with self.assertRaises(CommandError) as caught:
            validate(str(Path(self._directory.name) / 'missing.json'))
        self.assertEqual(caught.exception.returncode, 3)
        with self.assertRaises(CommandError):
            validate()


@tag('slow')
class EinsteinPalatiniValidateTests(SimpleTestCase):
    def test_fixture(self):
        output = validate(fixture='einstein-palatini')
        self.assertIn('affine: yes, 74 fiber coordinates, k = 4', output)


class RunnerTests(SimpleTestCase):
    @override_settings(KSYMP_RUN_SLOW_TESTS=False)
    def test_slow_excluded_by_default(self):
        self.assertIn('slow', KsympTestRunner(verbosity=0).exclude_tags)

    @override_settings(KSYMP_RUN_SLOW_TESTS=True)
    def test_slow_included_when_enabled(self):
        self.assertNotIn('slow', KsympTestRunner(verbosity=0).exclude_tags)

    @override_settings(KSYMP_RUN_SLOW_TESTS=False)
    def test_explicit_tag_wins(self):
        self.assertNotIn('slow', KsympTestRunner(verbosity=0, tags=['slow']).exclude_tags)

    def test_no_database_is_configured(self):
        self.assertEqual(connections['default'].settings_dict['ENGINE'], 'django.db.backends.dummy')
        self.assertIsNone(KsympTestRunner(verbosity=0).setup_databases())

    @override_settings(KSYMP_RUN_SLOW_TESTS=True)
    def test_heavy_tests_need_an_explicit_tag(self):
        self.assertIn('heavy', KsympTestRunner(verbosity=0).exclude_tags)
        self.assertNotIn('heavy', KsympTestRunner(verbosity=0, tags=['heavy']).exclude_tags)
