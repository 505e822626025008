"""
Fire-Sale Engine Configuration
"""

from .engine_config import EngineConfig, get_engine_config, reset_engine_config

__all__ = [
    'EngineConfig',
    'get_engine_config',
    'reset_engine_config',
]
