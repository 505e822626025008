"""
Fire-Sale Engine Configuration
Manages integrator tolerances, bound settings, Monte Carlo and output preferences
"""

import copy
import json
import logging
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, List, Optional

import yaml

logger = logging.getLogger(__name__)

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
PACKAGED_CONFIG_PATH = Path(__file__).resolve().parents[2] / "firesale.config.json"


class EngineConfig:
    """
    Fire-sale engine configuration manager

    Handles:
    - Integrator step, tolerances and output grid
    - Demand-curve admissibility checks
    - Bound-schedule root finding
    - Monte Carlo seed, workers and confidence level
    - Logging and output formatting
    """

    DEFAULT_CONFIG_PATH = ".firesale/engine_config.json"
    YAML_SUFFIXES = (".yaml", ".yml")

    @staticmethod
    def _builtin_config():
        """Defaults used when the packaged firesale.config.json is missing or unreadable"""
        return {
            "integrator": {
                "base_step_fraction": 1.0 / 2000.0,
                "event_tol": 1e-10,
                "constraint_tol": 1e-8,
                "output_grid": 501,
                "lambda_floor": 1e-12,
                "max_step_halvings": 6
            },
            "demand": {
                "monotonicity_grid": 10000,
                "monotonicity_tol": 1e-10
            },
            "bounds": {
                "root_tol": 1e-12
            },
            "monte_carlo": {
                "dkw_level": 0.99,
                "workers": 1,
                "seed": 20240101
            },
            "logging": {
                "level": "INFO",
                "format": LOG_FORMAT
            },
            "output": {
                "float_format": ".17g"
            }
        }

    @staticmethod
    def _get_default_config():
        """Get default configuration (fresh copy each time), packaged file over built-in values"""
        return _merge(EngineConfig._builtin_config(), _packaged_defaults(PACKAGED_CONFIG_PATH))

    def __init__(self, config_path: Optional[str] = None, project_root: str = '.'):
        """
        Initialize engine configuration

        Args:
            config_path: Path to a JSON or YAML config file (optional)
            project_root: Directory holding the .firesale folder
        """
        self.project_root = Path(project_root)
        self.config_path = Path(config_path) if config_path else self.project_root / self.DEFAULT_CONFIG_PATH
        self.config = self._load_config()

    def _is_yaml(self) -> bool:
        return self.config_path.suffix.lower() in self.YAML_SUFFIXES

    def _load_config(self) -> Dict[str, Any]:
        """Load configuration from file, falling back to defaults"""
        if self.config_path.exists():
            try:
                with open(self.config_path, 'r', encoding='utf-8') as f:
                    loaded = yaml.safe_load(f) if self._is_yaml() else json.load(f)
                logger.info(f"Loaded engine config from {self.config_path}")
                return self._merge_defaults(loaded or {})
            except Exception as e:
                logger.error(f"Failed to load config from {self.config_path}: {e}")
                return self._get_default_config()
        else:
            logger.info("No config file found, using defaults")
            return self._get_default_config()

    def _merge_defaults(self, loaded: Dict[str, Any]) -> Dict[str, Any]:
        """Fill sections and keys missing from a partial file"""
        return _merge(self._get_default_config(), loaded)

    def get_section(self, section: str) -> Dict[str, Any]:
        """Get one configuration section (defaults if absent)"""
        return self.config.get(section, self._get_default_config().get(section, {}))

    def get_value(self, section: str, key: str) -> Any:
        return self.get_section(section).get(key, self._get_default_config().get(section, {}).get(key))

    def get_integrator_settings(self) -> Dict[str, Any]:
        return self.get_section('integrator')

    def get_root_tol(self) -> float:
        return float(self.get_value('bounds', 'root_tol'))

    def get_seed(self) -> int:
        return int(self.get_value('monte_carlo', 'seed'))

    def get_workers(self) -> int:
        return int(self.get_value('monte_carlo', 'workers'))

    def get_dkw_level(self) -> float:
        return float(self.get_value('monte_carlo', 'dkw_level'))

    def get_float_format(self) -> str:
        return self.get_value('output', 'float_format')

    def get_log_level(self) -> int:
        """Logging level as a logging module constant"""
        name = str(self.get_value('logging', 'level')).upper()
        return getattr(logging, name, logging.INFO)

    def get_log_format(self) -> str:
        return self.get_value('logging', 'format')

    def config_issues(self) -> List[str]:
        """Structural and range problems of the loaded configuration (empty when valid)"""
        issues = []
        for key in self._get_default_config():
            if key not in self.config:
                issues.append(f"Missing required config key: {key}")
        if issues:
            for issue in issues:
                logger.warning(issue)
            return issues

        integrator = self.config['integrator']
        for key in ('base_step_fraction', 'event_tol', 'constraint_tol', 'lambda_floor'):
            value = integrator.get(key)
            if not isinstance(value, (int, float)) or value <= 0:
                issues.append(f"integrator.{key} must be a positive number, got {value!r}")
        if not isinstance(integrator.get('output_grid'), int) or integrator['output_grid'] < 2:
            issues.append(f"integrator.output_grid must be an integer >= 2, got {integrator.get('output_grid')!r}")
        level = self.config['monte_carlo'].get('dkw_level')
        if not isinstance(level, (int, float)) or not 0.0 < level < 1.0:
            issues.append(f"monte_carlo.dkw_level must lie in (0, 1), got {level!r}")
        workers = self.config['monte_carlo'].get('workers')
        if not isinstance(workers, int) or workers < 1:
            issues.append(f"monte_carlo.workers must be a positive integer, got {workers!r}")

        for issue in issues:
            logger.warning(issue)
        return issues

    def get_config(self) -> Dict[str, Any]:
        """Get full configuration"""
        return copy.deepcopy(self.config)


def _merge(config: Dict[str, Any], overrides: Dict[str, Any]) -> Dict[str, Any]:
    """Section-wise merge of overrides into config (in place)"""
    for section, values in overrides.items():
        if isinstance(values, dict) and isinstance(config.get(section), dict):
            config[section].update(values)
        else:
            config[section] = copy.deepcopy(values)
    return config


@lru_cache(maxsize=None)
def _read_packaged(path: Path) -> Optional[str]:
    try:
        return path.read_text(encoding="utf-8")
    except OSError as e:
        logger.warning(f"Packaged config {path} not readable: {e}")
        return None


def _packaged_defaults(path: Path) -> Dict[str, Any]:
    """Settings shipped in firesale.config.json ({} when the file is absent or broken)"""
    text = _read_packaged(path)
    if text is None:
        return {}
    try:
        loaded = json.loads(text)
    except ValueError as e:
        logger.warning(f"Packaged config {path} not used: {e}")
        return {}
    return loaded if isinstance(loaded, dict) else {}


# Singleton instance
_config_instance: Optional[EngineConfig] = None


def get_engine_config(project_root: str = '.', config_path: Optional[str] = None) -> EngineConfig:
    """Get or create engine config singleton"""
    global _config_instance

    if _config_instance is None:
        _config_instance = EngineConfig(config_path=config_path, project_root=project_root)

    return _config_instance


def reset_engine_config():
    """Drop the singleton so the next access reloads from disk"""
    global _config_instance
    _config_instance = None
