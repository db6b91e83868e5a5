"""
Rendering of algorithm reports as JSON documents and plain text
"""
import json

from django.conf import settings

from symbolic.printing import print_expr


def _certificate(certificate, table):
    return certificate.as_dict(table) if certificate is not None else None


def report_document(report):
    """Machine-readable mirror of an AlgorithmReport"""
    model = report.model
    table = model.table
    chart = model.chart
    grouped = {}
    for constraint, label in zip(report.constraints or (), report.labels()):
        grouped.setdefault(constraint.generation, []).append({
            'label': label,
            'expr': print_expr(constraint.expr, table),
            'class': str(constraint.constraint_class),
            'origin': constraint.origin,
        })
    generations = [
        {'generation': generation, 'constraints': constraints}
        for generation, constraints in sorted(grouped.items())
    ]
    family = []
    if report.family is not None:
        for alpha, field in enumerate(report.family, start=1):
            family.append({
                'field': alpha,
                'components': {
                    str(symbol): print_expr(field[symbol], table) for symbol in chart.all_coordinates
                },
            })
    document = {
        'model': model.name,
        'n': chart.n,
        'k': chart.k,
        'seed': report.seed,
        'status': str(report.status),
        'exit_code': report.exit_code,
        'iterations': report.iterations,
        'final_generation': report.final_generation,
        'generations': generations,
        'family': family,
        'determinations': [
            {
                'unknown': str(item.unknown),
                'value': print_expr(item.value, table),
                'step': item.step,
            }
            for item in report.determinations
        ],
        'free_atoms': [print_expr(atom, table) for atom in report.free_atoms],
        'integrability': [
            {
                'alpha': condition.alpha,
                'beta': condition.beta,
                'coordinate': str(condition.coordinate),
                'expr': print_expr(condition.expr, table),
            }
            for condition in report.integrability
        ],
        'certificates': {
            label: _certificate(certificate, table)
            for label, certificate in report.certificates.items()
        },
        'independence': _certificate(report.independence, table),
        'basis_cross_check': report.basis_cross_check,
        'projectability': report.projectability,
        'warnings': list(report.warnings),
    }
    if getattr(settings, 'KSYMP_REPORT_TIMING', False):
        document['timing'] = {key: round(value, 6) for key, value in report.timing.items()}
    return document


def render_json(report):
    return json.dumps(report_document(report), indent=2, sort_keys=True) + '\n'


def render_text(report):
    document = report_document(report)
    lines = [
        f"Model {document['model']} (n = {document['n']}, k = {document['k']}, seed {document['seed']})",
        f"Status: {document['status']} after {document['iterations']} tangency steps",
        '',
    ]
    if not document['generations']:
        lines.append('No constraints')
    for generation in document['generations']:
        lines.append(f"Generation {generation['generation']}:")
        for constraint in generation['constraints']:
            lines.append(
                f"  {constraint['label']} = {constraint['expr']}"
                f"    [{constraint['class']}; {constraint['origin']}]"
            )
    if document['determinations']:
        lines += ['', 'Determinations:']
        lines += [
            f"  {item['unknown']} = {item['value']}    (step {item['step']})"
            for item in document['determinations']
        ]
    if document['family']:
        lines += ['', 'Solution family:']
        for field in document['family']:
            for coordinate, value in field['components'].items():
                lines.append(f"  X_{field['field']}[{coordinate}] = {value}")
    if document['free_atoms']:
        lines += ['', f"Free functions: {', '.join(document['free_atoms'])}"]
    if document['integrability']:
        lines += ['', 'Integrability residuals:']
        lines += [
            f"  [X_{item['alpha']}, X_{item['beta']}]({item['coordinate']}) = {item['expr']}"
            for item in document['integrability']
        ]
    if document['projectability']:
        lines += ['', f"Projectability: {document['projectability']['verdict']}"]
    if document['warnings']:
        lines += ['', 'Warnings:']
        lines += [f'  {message}' for message in document['warnings']]
    if 'timing' in document:
        lines += ['', 'Timing (s):']
        lines += [f'  {key}: {value}' for key, value in sorted(document['timing'].items())]
    return '\n'.join(lines) + '\n'
