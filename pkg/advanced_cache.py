"""
Cache des tables numériques coûteuses
- Tables d'intégrales des modules de continuité par (profil, δ)
- Valeurs de symboles obtenues par quadrature du noyau
- Éviction LRU, invalidation par tags, statistiques
"""
import hashlib
import json
import logging
import threading
from collections import OrderedDict, defaultdict
from typing import Any, Callable, Dict, Optional, Set

logger = logging.getLogger(__name__)


class CacheEntry:
    """Entrée de cache avec métadonnées"""

    def __init__(self, value: Any, tags: Set[str] = None):
        self.value = value
        self.tags = tags or set()
        self.access_count = 0

    def access(self):
        """Enregistre un accès"""
        self.access_count += 1


class TableCache:
    """
    Cache LRU thread-safe pour les tables numériques
    """

    def __init__(self, max_size: int = 256):
        """
        Initialise le cache

        Args:
            max_size: Nombre maximal de tables conservées
        """
        self.max_size = max_size
        self.cache: 'OrderedDict[str, CacheEntry]' = OrderedDict()
        self.tag_index: Dict[str, Set[str]] = defaultdict(set)
        self.lock = threading.RLock()

        self.stats = {
            'hits': 0,
            'misses': 0,
            'sets': 0,
            'evictions': 0,
            'invalidations': 0
        }

    @staticmethod
    def make_key(*args, **kwargs) -> str:
        """Génère une clé stable à partir d'arguments sérialisables"""
        key_data = json.dumps({'args': args, 'kwargs': kwargs}, sort_keys=True, default=repr)
        return hashlib.md5(key_data.encode('utf-8')).hexdigest()

    def get(self, key: str) -> Optional[Any]:
        with self.lock:
            entry = self.cache.get(key)
            if entry is None:
                self.stats['misses'] += 1
                return None
            self.cache.move_to_end(key)
            entry.access()
            self.stats['hits'] += 1
            return entry.value

    def set(self, key: str, value: Any, tags: Set[str] = None):
        with self.lock:
            if key not in self.cache and len(self.cache) >= self.max_size:
                oldest, entry = self.cache.popitem(last=False)
                for tag in entry.tags:
                    self.tag_index[tag].discard(oldest)
                self.stats['evictions'] += 1
            self.cache[key] = CacheEntry(value, tags)
            self.cache.move_to_end(key)
            for tag in tags or ():
                self.tag_index[tag].add(key)
            self.stats['sets'] += 1

    def get_or_compute(self, key: str, compute: Callable[[], Any], tags: Set[str] = None) -> Any:
        """Retourne la valeur en cache ou la calcule puis la stocke"""
        value = self.get(key)
        if value is None:
            value = compute()
            self.set(key, value, tags)
        return value

    def invalidate_tag(self, tag: str) -> int:
        """Supprime toutes les entrées portant un tag"""
        with self.lock:
            keys = self.tag_index.pop(tag, set())
            for key in keys:
                self.cache.pop(key, None)
            self.stats['invalidations'] += len(keys)
            if keys:
                logger.debug(f"{len(keys)} table(s) invalidée(s) pour le tag '{tag}'")
            return len(keys)

    def clear(self):
        with self.lock:
            self.cache.clear()
            self.tag_index.clear()

    def get_stats(self) -> Dict[str, Any]:
        with self.lock:
            total = self.stats['hits'] + self.stats['misses']
            return {
                **self.stats,
                'size': len(self.cache),
                'max_size': self.max_size,
                'hit_rate': self.stats['hits'] / total if total else 0.0
            }


# ============================================================================
# INSTANCE GLOBALE
# ============================================================================

_table_cache: Optional[TableCache] = None


def get_table_cache() -> TableCache:
    """Retourne le cache global des tables numériques"""
    global _table_cache
    if _table_cache is None:
        _table_cache = TableCache()
    return _table_cache
