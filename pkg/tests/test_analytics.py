"""
Tests de l'agrégation des manifestes
"""
import pandas as pd

from analytics import aggregate_runs, export_plot_data, load_manifest
from utils import write_csv, write_json


def _run(tmp_path, name, recipe, passed, failed_check=None):
    run_dir = tmp_path / name
    checks = {'linf': {'pass': True, 'message': '', 'informational': False},
              'positivity': {'pass': False, 'message': '', 'informational': True}}
    if failed_check:
        checks[failed_check] = {'pass': False, 'message': '', 'informational': False}
    checks['_overall'] = {'pass': passed}
    write_json({'experiment': 'simulate', 'recipe': recipe, 'exit_code': 0 if passed else 1, 'wall_time': 0.5,
                'summary': {'pass': passed, 'checks': checks}}, run_dir / 'manifest.json')
    return str(run_dir)


def test_empty_report_passes():
    summary = aggregate_runs([])
    assert summary['pass']
    assert summary['count'] == 0
    assert summary['by_recipe'] == {}


def test_directory_without_manifest_is_skipped(tmp_path):
    good = _run(tmp_path, 'a', 'stationary-moc-shape', True)
    summary = aggregate_runs([good, str(tmp_path / 'missing')])
    assert summary['pass']
    assert summary['count'] == 1
    assert summary['skipped'] == [str(tmp_path / 'missing')]


def test_failed_run_fails_report(tmp_path):
    runs = [_run(tmp_path, 'a', 'drift-diffusion-simulation', True),
            _run(tmp_path, 'b', 'drift-diffusion-simulation', False, failed_check='linf_monotone')]
    summary = aggregate_runs(runs)
    assert not summary['pass']
    assert summary['by_recipe'] == {'drift-diffusion-simulation': {'runs': 2, 'passed': 1}}
    failed = [run for run in summary['runs'] if not run['pass']][0]
    assert failed['failed_checks'] == ['linf_monotone']


def test_unreadable_manifest(tmp_path):
    run_dir = tmp_path / 'broken'
    run_dir.mkdir()
    (run_dir / 'manifest.json').write_text('{', encoding='utf-8')
    assert load_manifest(str(run_dir)) is None


def test_plot_data(tmp_path):
    run_dir = tmp_path / 'run1'
    write_csv(pd.DataFrame({'t': [0.0, 0.1], 'linf': [1.0, 0.9], 'l2': [0.7, 0.6], 'mean': [0.0, 0.0]}),
              run_dir / 'diagnostics.csv')
    written = export_plot_data([str(run_dir)], str(tmp_path / 'plot'))
    assert written == [str(tmp_path / 'plot' / 'run1_diagnostics.dat')]
    frame = pd.read_csv(written[0], sep=' ')
    assert list(frame.columns) == ['t', 'linf', 'l2']
