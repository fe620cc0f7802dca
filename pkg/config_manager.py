"""
Gestionnaire de configuration centralisée
- Chargement depuis fichiers (TOML/JSON)
- Variables d'environnement (préfixe SIMLAB_)
- Surcharges de la ligne de commande
- Validation en RunConfig
"""
import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, Optional

from pydantic import ValidationError as PydanticValidationError

from config import ENV_PREFIX
from errors import ConfigurationError
from validators import RunConfig

logger = logging.getLogger(__name__)

try:
    import tomllib
except ImportError:
    import tomli as tomllib

# Variable d'environnement → (clé de RunConfig, conversion)
ENV_KEYS = {
    'OUTPUT_DIR': ('output_dir', str),
    'SEED': ('seed', int),
    'LOG_LEVEL': ('log_level', str),
}


def deep_merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    """Fusion récursive: override l'emporte, les sections sont fusionnées clé par clé"""
    merged = dict(base)
    for key, value in override.items():
        if key in merged and isinstance(merged[key], dict) and isinstance(value, dict):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged


class ConfigManager:
    """
    Gestionnaire de configuration: fichier < environnement < ligne de commande
    """

    def __init__(self, config_file: Optional[str] = None, environ: Optional[Dict[str, str]] = None):
        """
        Args:
            config_file: Chemin vers le fichier de configuration (optionnel)
            environ: Environnement à lire (os.environ par défaut)
        """
        self.config_file = config_file
        self.environ = os.environ if environ is None else environ
        self.config: Optional[RunConfig] = None

    def load_file(self) -> Dict[str, Any]:
        """Charge le fichier TOML ou JSON; absent du disque, c'est une erreur de configuration"""
        if not self.config_file:
            return {}
        path = Path(self.config_file)
        if not path.exists():
            raise ConfigurationError('config', f"Fichier de configuration introuvable: {path}")
        suffix = path.suffix.lower()
        try:
            if suffix == '.toml':
                with open(path, 'rb') as f:
                    return tomllib.load(f)
            if suffix == '.json':
                with open(path, 'r', encoding='utf-8') as f:
                    return json.load(f)
        except (tomllib.TOMLDecodeError, json.JSONDecodeError) as e:
            raise ConfigurationError('config', f"Fichier de configuration illisible ({path}): {e}")
        raise ConfigurationError('config', f"Format de fichier non supporté: {suffix} (.toml ou .json)")

    def load_env(self) -> Dict[str, Any]:
        """Charge les surcharges SIMLAB_* reconnues"""
        config = {}
        for suffix, (key, convert) in ENV_KEYS.items():
            raw = self.environ.get(f"{ENV_PREFIX}{suffix}")
            if raw is None or raw == '':
                continue
            try:
                config[key] = convert(raw)
            except ValueError:
                raise ConfigurationError(f"{ENV_PREFIX}{suffix}", f"Valeur invalide pour {ENV_PREFIX}{suffix}: '{raw}'")
        return config

    def load(self, overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
        """
        Fusionne fichier, environnement et surcharges puis valide

        Raises:
            ConfigurationError: listant chaque erreur de validation
        """
        merged = deep_merge(self.load_file(), self.load_env())
        merged = deep_merge(merged, {k: v for k, v in (overrides or {}).items() if v is not None})
        try:
            self.config = RunConfig.model_validate(merged)
        except PydanticValidationError as e:
            problems = [f"{'.'.join(str(p) for p in err['loc']) or 'config'}: {err['msg']}" for err in e.errors()]
            raise ConfigurationError('config', "Configuration invalide: " + "; ".join(problems),
                                     details={'errors': problems})
        logger.info(f"Configuration chargée (expérience: {self.config.experiment}, "
                    f"sortie: {self.config.output_dir})")
        return self.config

    def get_config(self) -> RunConfig:
        if self.config is None:
            raise ConfigurationError('config', "Configuration non chargée")
        return self.config


def load_run_config(config_file: Optional[str] = None, overrides: Optional[Dict[str, Any]] = None,
                    environ: Optional[Dict[str, str]] = None) -> RunConfig:
    """Raccourci: ConfigManager(config_file).load(overrides)"""
    return ConfigManager(config_file, environ).load(overrides)
