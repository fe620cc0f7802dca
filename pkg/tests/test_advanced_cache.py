"""
Tests du cache des tables numériques
"""
from advanced_cache import TableCache, get_table_cache


def test_lru_eviction():
    cache = TableCache(max_size=2)
    cache.set('a', 1)
    cache.set('b', 2)
    assert cache.get('a') == 1
    cache.set('c', 3)
    assert cache.get('b') is None
    assert cache.get('a') == 1
    stats = cache.get_stats()
    assert stats['evictions'] == 1
    assert stats['size'] == 2
    assert stats['hits'] == 2 and stats['misses'] == 1


def test_get_or_compute_calls_once():
    cache = TableCache()
    calls = []
    compute = lambda: calls.append(1) or 42.0
    assert cache.get_or_compute('k', compute) == 42.0
    assert cache.get_or_compute('k', compute) == 42.0
    assert len(calls) == 1


def test_tag_invalidation():
    cache = TableCache()
    cache.set('x', 1, tags={'kernel:a'})
    cache.set('y', 2, tags={'kernel:a'})
    cache.set('z', 3, tags={'kernel:b'})
    assert cache.invalidate_tag('kernel:a') == 2
    assert cache.get('x') is None and cache.get('z') == 3
    cache.clear()
    assert cache.get_stats()['size'] == 0


def test_stable_keys_and_global_instance():
    assert TableCache.make_key('m', 1.0, d=2) == TableCache.make_key('m', 1.0, d=2)
    assert TableCache.make_key('m', 1.0) != TableCache.make_key('m', 2.0)
    assert get_table_cache() is get_table_cache()
