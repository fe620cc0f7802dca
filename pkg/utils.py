"""
Fonctions utilitaires pour les exports, les instantanés et l'aléa reproductible
"""
import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, Iterable, List, Tuple, Union

import numpy as np
import pandas as pd

from config import CSV_FLOAT_FORMAT
from errors import ArgumentError, ReportError

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


# ============================================================================
# EXPORTS CSV / JSON
# ============================================================================

def write_csv(rows: Union[pd.DataFrame, Iterable[Dict[str, Any]]], path: PathLike,
              columns: List[str] = None) -> Path:
    """
    Écrit un tableau en CSV avec un format flottant fixe (relances identiques bit à bit)

    Args:
        rows: DataFrame ou liste de dictionnaires
        path: Fichier de sortie
        columns: Ordre des colonnes (optionnel)
    """
    frame = rows if isinstance(rows, pd.DataFrame) else pd.DataFrame(list(rows), columns=columns)
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT)
    except OSError as e:
        raise ReportError(f"Écriture CSV impossible: {path}", path=str(path), original_exception=e)
    logger.debug(f"CSV écrit: {path} ({len(frame)} lignes)")
    return path


def _json_default(obj: Any) -> Any:
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, Path):
        return str(obj)
    if hasattr(obj, 'to_dict'):
        return obj.to_dict()
    if hasattr(obj, 'value'):
        return obj.value
    return repr(obj)


def _finite_or_label(obj: Any) -> Any:
    """Remplace inf/nan par des chaînes (JSON strict)"""
    if isinstance(obj, float) and not math.isfinite(obj):
        return 'inf' if obj > 0 else ('-inf' if obj < 0 else 'nan')
    if isinstance(obj, dict):
        return {k: _finite_or_label(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite_or_label(v) for v in obj]
    return obj


def write_json(data: Dict[str, Any], path: PathLike) -> Path:
    """Écrit un JSON UTF-8, clés triées, indentation 2"""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        payload = json.loads(json.dumps(data, default=_json_default))
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(_finite_or_label(payload), f, ensure_ascii=False, sort_keys=True, indent=2)
    except OSError as e:
        raise ReportError(f"Écriture JSON impossible: {path}", path=str(path), original_exception=e)
    return path


def read_json(path: PathLike) -> Dict[str, Any]:
    try:
        with open(path, 'r', encoding='utf-8') as f:
            return json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise ReportError(f"Lecture JSON impossible: {path}", path=str(path), original_exception=e)


# ============================================================================
# INSTANTANÉS BINAIRES
# ============================================================================

def write_snapshot(path: PathLike, d: int, N: int, values: np.ndarray) -> Path:
    """En-tête int64 petit-boutiste {d, N}, puis les valeurs float64 ligne par ligne"""
    path = Path(path)
    with open(path, 'wb') as f:
        f.write(np.array([d, N], dtype='<i8').tobytes())
        f.write(np.ascontiguousarray(values, dtype='<f8').tobytes())
    return path


def read_snapshot(path: PathLike) -> Tuple[int, int, np.ndarray]:
    try:
        raw = Path(path).read_bytes()
    except OSError as e:
        raise ReportError(f"Lecture d'instantané impossible: {path}", path=str(path), original_exception=e)
    if len(raw) < 16:
        raise ReportError(f"Instantané tronqué: {path}", path=str(path))
    d, N = (int(v) for v in np.frombuffer(raw[:16], dtype='<i8'))
    values = np.frombuffer(raw[16:], dtype='<f8')
    if values.size != N ** d:
        raise ReportError(f"Taille d'instantané incohérente: {values.size} valeurs pour d={d}, N={N}",
                          path=str(path))
    return d, N, values.reshape((N,) * d).copy()


# ============================================================================
# ALÉA REPRODUCTIBLE
# ============================================================================

def make_rng(seed: int) -> np.random.Generator:
    """Générateur 64 bits déterministe: tout l'aléa d'une exécution dérive de cette graine"""
    return np.random.Generator(np.random.PCG64(seed))


def band_limited_values(grid, rng: np.random.Generator, kmax: int = 8, amplitude: float = 1.0,
                        decay: float = 1.0) -> np.ndarray:
    """
    Valeurs d'un champ aléatoire à spectre borné (1 ≤ |k| ≤ kmax), moyenne nulle, ‖·‖∞ = amplitude

    Les amplitudes décroissent comme |k|^{−decay}; les phases sont uniformes.
    """
    if kmax < 1 or kmax > grid.N // 3:
        raise ArgumentError(f"kmax doit être dans [1, N/3] (reçu {kmax})", field='kmax')
    mask = (grid.kmag >= 1.0) & (grid.kmag <= kmax)
    weight = np.where(mask, np.maximum(grid.kmag, 1.0) ** (-decay), 0.0)
    noise = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    values = np.real(np.fft.ifftn(weight * noise))
    peak = float(np.abs(values).max())
    if peak == 0.0:
        return values
    return amplitude * values / peak
