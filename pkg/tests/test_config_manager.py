"""
Tests du chargement et de la validation des configurations
"""
import json

import pytest

from config_manager import ConfigManager, deep_merge, load_run_config
from errors import ConfigurationError
from models import KernelCase, ProfileFamily
from validators import GridSettings, MocSettings, RunConfig

TOML = """
experiment = "simulate"
seed = 3

[profile]
family = "power"
alpha = 0.5

[grid]
N = 64

[solver]
t_end = 0.25
"""


def _write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text, encoding='utf-8')
    return str(path)


class TestLoading:

    def test_toml_file(self, tmp_path):
        cfg = load_run_config(_write(tmp_path, 'run.toml', TOML), environ={})
        assert cfg.experiment == 'simulate'
        assert cfg.seed == 3
        assert cfg.grid.N == 64
        assert cfg.solver.t_end == 0.25
        assert cfg.profile.build().family == ProfileFamily.POWER

    def test_json_file(self, tmp_path):
        path = _write(tmp_path, 'run.json', json.dumps({'experiment': 'moc_check', 'moc': {'beta': 0.6}}))
        cfg = load_run_config(path, environ={})
        assert cfg.moc.beta == 0.6
        assert cfg.kernel.build(cfg.profile.build(), 1).case == KernelCase.III

    def test_precedence(self, tmp_path):
        path = _write(tmp_path, 'run.toml', TOML)
        environ = {'SIMLAB_SEED': '7', 'SIMLAB_OUTPUT_DIR': str(tmp_path / 'env')}
        cfg = load_run_config(path, {'output_dir': str(tmp_path / 'cli'), 'seed': None}, environ=environ)
        assert cfg.seed == 7
        assert cfg.output_dir == str(tmp_path / 'cli')

    def test_invalid_environment_value(self):
        with pytest.raises(ConfigurationError) as info:
            ConfigManager(environ={'SIMLAB_SEED': 'abc'}).load({'experiment': 'simulate'})
        assert info.value.details['config_key'] == 'SIMLAB_SEED'

    def test_missing_and_unsupported_files(self, tmp_path):
        with pytest.raises(ConfigurationError):
            load_run_config(str(tmp_path / 'absent.toml'), environ={})
        with pytest.raises(ConfigurationError):
            load_run_config(_write(tmp_path, 'run.yaml', 'experiment: simulate'), environ={})

    def test_config_not_loaded(self):
        with pytest.raises(ConfigurationError):
            ConfigManager(environ={}).get_config()

    def test_deep_merge(self):
        merged = deep_merge({'grid': {'N': 64, 'd': 1}, 'seed': 1}, {'grid': {'N': 128}})
        assert merged == {'grid': {'N': 128, 'd': 1}, 'seed': 1}


class TestValidation:

    def test_errors_are_listed(self):
        with pytest.raises(ConfigurationError) as info:
            load_run_config(overrides={'experiment': 'simulate', 'grid': {'N': 100}, 'solver': {'dt': -1.0}},
                            environ={})
        problems = info.value.details['errors']
        assert len(problems) == 2
        assert any(p.startswith('grid.N') for p in problems)
        assert any(p.startswith('solver.dt') for p in problems)

    def test_unknown_keys_rejected(self):
        with pytest.raises(ConfigurationError):
            load_run_config(overrides={'experiment': 'simulate', 'grid': {'size': 64}}, environ={})

    def test_unknown_experiment(self):
        with pytest.raises(ConfigurationError):
            load_run_config(overrides={'experiment': 'train'}, environ={})

    def test_cut_only_outside_case_three(self):
        with pytest.raises(ConfigurationError):
            load_run_config(overrides={'experiment': 'kernel_lab', 'profile': {'c0': 1.0}}, environ={})
        cfg = load_run_config(overrides={'experiment': 'kernel_lab', 'profile': {'c0': 1.0},
                                         'kernel': {'case': 'II'}}, environ={})
        assert cfg.kernel.case == 'II'

    def test_model_dimension_must_match_grid(self):
        with pytest.raises(ConfigurationError):
            load_run_config(overrides={'experiment': 'simulate', 'model': {'kind': 'sqg'}}, environ={})

    def test_sections(self):
        with pytest.raises(ValueError):
            GridSettings(initial='random', N=16, kmax=8)
        with pytest.raises(ValueError):
            MocSettings(kappa=1.0)
        with pytest.raises(ValueError):
            MocSettings(fit=False)
        assert RunConfig(experiment='report', log_level='debug').log_level == 'DEBUG'

    def test_echo_is_serializable(self):
        cfg = RunConfig(experiment='moc_check')
        assert json.loads(json.dumps(cfg.echo()))['experiment'] == 'moc_check'
