import os

import django
from django.conf import settings

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'ksymplectic.settings')
django.setup()


def _tags(item):
    tags = set(getattr(getattr(item, 'obj', None), 'tags', ()) or ())
    tags |= set(getattr(getattr(item, 'cls', None), 'tags', ()) or ())
    return tags


def pytest_collection_modifyitems(config, items):
    # Mirror core.runner.KsympTestRunner: 'heavy' never runs by default,
    # 'slow' only when KSYMP_RUN_SLOW_TESTS is set.
    excluded = {'heavy'}
    if not getattr(settings, 'KSYMP_RUN_SLOW_TESTS', False):
        excluded.add('slow')
    keep, drop = [], []
    for item in items:
        (drop if _tags(item) & excluded else keep).append(item)
    if drop:
        config.hook.pytest_deselected(items=drop)
        items[:] = keep
