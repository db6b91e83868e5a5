from django.conf import settings
from django.test.runner import DiscoverRunner


class KsympTestRunner(DiscoverRunner):
    """Skips tests tagged 'slow' unless KSYMP_RUN_SLOW_TESTS is set

    Tests tagged 'heavy' only run when asked for with --tag heavy.
    """

    def __init__(self, *args, tags=None, exclude_tags=None, **kwargs):
        exclude_tags = set(exclude_tags or ())
        requested = set(tags or ())
        run_slow = getattr(settings, 'KSYMP_RUN_SLOW_TESTS', False) or 'slow' in requested
        if not run_slow:
            exclude_tags.add('slow')
        if 'heavy' not in requested:
            exclude_tags.add('heavy')
        super().__init__(*args, tags=tags, exclude_tags=exclude_tags, **kwargs)

    def setup_databases(self, **kwargs):
        # SimpleTestCase only
        return None

    def teardown_databases(self, old_config, **kwargs):
        pass
