"""
Order-preserving parallel evaluation
"""
import logging
from concurrent.futures import ThreadPoolExecutor

from django.conf import settings

logger = logging.getLogger(__name__)


def worker_count():
    return max(1, int(getattr(settings, 'KSYMP_THREADS', 1)))


def parallel_map(function, items):
    """[function(item) for item in items], spread over KSYMP_THREADS workers"""
    items = list(items)
    workers = min(worker_count(), len(items))
    if workers <= 1:
        return [function(item) for item in items]
    logger.debug(f'Dispatching {len(items)} evaluations to {workers} threads')
    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(function, items))
