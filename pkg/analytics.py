"""
Agrégation des manifestes d'exécutions en un rapport consolidé
"""
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import pandas as pd

from config import CSV_FLOAT_FORMAT, DIAGNOSTICS_FILE, MANIFEST_FILE
from errors import ReportError
from utils import read_json

logger = logging.getLogger(__name__)

# Colonnes exportées pour le tracé, par fichier d'artefact
PLOT_COLUMNS = {
    DIAGNOSTICS_FILE: ['t', 'linf', 'l2', 'grad_max', 'holder_beta'],
    'margin.csv': ['xi', 'margin'],
    'moc_profile.csv': ['xi', 'omega'],
    'regularity.csv': ['t', 'holder', 'holder_cap', 'obeys'],
}


def load_manifest(run_dir: str) -> Optional[Dict[str, Any]]:
    """Manifeste d'une exécution, None s'il est absent ou illisible"""
    path = Path(run_dir) / MANIFEST_FILE
    if not path.exists():
        return None
    try:
        return read_json(path)
    except ReportError as e:
        logger.warning(f"Manifeste illisible ignoré: {path} ({e.message})")
        return None


def _run_row(run_dir: str, manifest: Dict[str, Any]) -> Dict[str, Any]:
    summary = manifest.get('summary', {})
    failed = [name for name, check in summary.get('checks', {}).items()
              if name != '_overall' and isinstance(check, dict) and not check.get('pass', True)
              and not check.get('informational', False)]
    return {
        'run_dir': str(run_dir),
        'experiment': manifest.get('experiment'),
        'recipe': manifest.get('recipe'),
        'pass': bool(summary.get('pass', False)),
        'exit_code': manifest.get('exit_code'),
        'wall_time': manifest.get('wall_time'),
        'failed_checks': failed,
    }


def aggregate_runs(run_dirs: Sequence[str]) -> Dict[str, Any]:
    """
    Réussite globale sur un ensemble d'exécutions

    Un répertoire sans manifeste est listé dans 'skipped' sans faire échouer le rapport.
    Sans exécution, le résumé est vide et réussi.
    """
    runs: List[Dict[str, Any]] = []
    skipped: List[str] = []
    for run_dir in run_dirs:
        manifest = load_manifest(run_dir)
        if manifest is None:
            logger.info(f"Répertoire sans manifeste ignoré: {run_dir}")
            skipped.append(str(run_dir))
            continue
        runs.append(_run_row(run_dir, manifest))

    overall = all(run['pass'] for run in runs)
    by_recipe: Dict[str, Dict[str, int]] = {}
    if runs:
        frame = runs_frame(runs)
        grouped = frame.groupby('recipe')['pass'].agg(['count', 'sum'])
        by_recipe = {str(recipe): {'runs': int(row['count']), 'passed': int(row['sum'])}
                     for recipe, row in grouped.iterrows()}
    logger.info(f"Rapport: {len(runs)} exécution(s), {len(skipped)} ignorée(s), réussite globale={overall}")
    return {'pass': overall, 'runs': runs, 'skipped': skipped, 'by_recipe': by_recipe,
            'count': len(runs)}


def runs_frame(runs: List[Dict[str, Any]]) -> pd.DataFrame:
    frame = pd.DataFrame(runs, columns=['run_dir', 'experiment', 'recipe', 'pass', 'exit_code', 'wall_time',
                                        'failed_checks'])
    frame['failed_checks'] = frame['failed_checks'].apply(lambda names: ';'.join(names or []))
    return frame


def export_plot_data(run_dirs: Sequence[str], output_dir: str) -> List[str]:
    """
    Fichiers .dat séparés par des espaces (une colonne par grandeur) pour gnuplot

    Nom: <répertoire>_<artefact>.dat; les artefacts absents sont ignorés.
    """
    out = Path(output_dir)
    written = []
    for run_dir in run_dirs:
        base = Path(run_dir)
        for name, columns in PLOT_COLUMNS.items():
            source = base / name
            if not source.exists():
                continue
            frame = pd.read_csv(source)
            present = [c for c in columns if c in frame.columns]
            if not present:
                continue
            target = out / f"{base.name}_{Path(name).stem}.dat"
            try:
                target.parent.mkdir(parents=True, exist_ok=True)
                frame[present].to_csv(target, sep=' ', index=False, float_format=CSV_FLOAT_FORMAT)
            except OSError as e:
                raise ReportError(f"Écriture impossible: {target}", path=str(target), original_exception=e)
            written.append(str(target))
    logger.debug(f"{len(written)} fichier(s) de tracé écrits")
    return written
