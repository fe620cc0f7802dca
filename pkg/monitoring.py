"""
Monitoring des expériences
- Mesure des temps d'exécution
- Vérifications de propriétés nommées (résumé réussite/échec)
"""
import time
from datetime import datetime
from typing import Dict, Any, List, Callable, Tuple
from collections import defaultdict
from dataclasses import dataclass
import logging

logger = logging.getLogger(__name__)


@dataclass
class Metric:
    """Mesure ponctuelle"""
    name: str
    value: float
    timestamp: datetime

    def to_dict(self) -> Dict[str, Any]:
        return {
            'name': self.name,
            'value': self.value,
            'timestamp': self.timestamp.isoformat()
        }


class MetricsCollector:
    """
    Collecteur de mesures (temps d'exécution des étapes d'une expérience)
    """

    def __init__(self):
        self.metrics: Dict[str, List[Metric]] = defaultdict(list)

    def record(self, name: str, value: float):
        self.metrics[name].append(Metric(name=name, value=value, timestamp=datetime.now()))

    def timer(self, name: str) -> 'TimerContext':
        """
        Retourne un contexte manager pour mesurer le temps

        Usage:
            with metrics.timer('simulate'):
                simulate(...)
        """
        return TimerContext(self, name)

    def total(self, name: str) -> float:
        return float(sum(m.value for m in self.metrics.get(name, [])))

    def summary(self) -> Dict[str, float]:
        """Durées cumulées par nom de mesure"""
        return {name: self.total(name) for name in self.metrics}


class TimerContext:
    """Contexte manager pour mesurer le temps d'exécution"""

    def __init__(self, collector: MetricsCollector, metric_name: str):
        self.collector = collector
        self.metric_name = metric_name
        self.start_time = None
        self.elapsed = 0.0

    def __enter__(self):
        self.start_time = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.elapsed = time.perf_counter() - self.start_time
        self.collector.record(f"{self.metric_name}_duration", self.elapsed)
        return False


class PropertyChecker:
    """
    Vérificateur de propriétés: chaque vérification retourne (réussie, message)
    """

    def __init__(self):
        self.checks: Dict[str, Callable[[], Tuple[bool, str]]] = {}
        self.informational: set = set()

    def register_check(self, name: str, check_func: Callable[[], Tuple[bool, str]],
                       informational: bool = False):
        """
        Enregistre une vérification

        Args:
            name: Nom de la vérification
            check_func: Fonction qui retourne (passed, message)
            informational: Si True, le résultat n'entre pas dans le verdict global
        """
        self.checks[name] = check_func
        if informational:
            self.informational.add(name)

    def add_result(self, name: str, passed: bool, message: str = "", informational: bool = False):
        """Enregistre un résultat déjà calculé"""
        self.register_check(name, lambda: (bool(passed), message), informational)

    def check_all(self) -> Dict[str, Dict[str, Any]]:
        """
        Exécute toutes les vérifications

        Returns:
            Dictionnaire avec le résultat de chaque vérification et l'entrée '_overall'
        """
        results = {}
        overall = True

        for name, check_func in self.checks.items():
            try:
                passed, message = check_func()
            except Exception as e:
                logger.warning(f"Vérification '{name}' interrompue: {e}")
                passed, message = False, f"Erreur lors de la vérification: {e}"
            results[name] = {
                'pass': bool(passed),
                'message': message,
                'informational': name in self.informational
            }
            if not passed and name not in self.informational:
                overall = False

        results['_overall'] = {'pass': overall, 'timestamp': datetime.now().isoformat()}
        return results
