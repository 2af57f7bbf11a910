# sov6v/__init__.py
"""Separation of variables for the antiperiodic dynamical 6-vertex model."""

from sov6v.config import ModelParams, RunConfig, parse_config
from sov6v.errors import ConfigError, InvalidModel, Sov6vError

__all__ = ["ConfigError", "InvalidModel", "ModelParams", "RunConfig", "Sov6vError", "parse_config"]
