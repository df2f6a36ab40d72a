"""Experiment configuration: JSON files, .env defaults and command-line overrides."""
import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, Optional

from dotenv import load_dotenv
from pydantic import BaseModel, ValidationError

from app.core.errors import ConfigError
from app.models.experiment import ExperimentConfig, OutputFormat

logger = logging.getLogger(__name__)

load_dotenv()


class Settings(BaseModel):
    """Defaults taken from the environment (BETTING_* variables)."""

    seed: Optional[int] = None
    out_dir: Optional[str] = None
    workers: Optional[int] = None
    up_nodes: Optional[int] = None
    log_level: str = "INFO"

    @classmethod
    def from_env(cls) -> "Settings":
        def _int(name: str) -> Optional[int]:
            raw = os.getenv(name)
            if raw is None or raw.strip() == "":
                return None
            try:
                return int(raw)
            except ValueError as e:
                raise ConfigError(f"Environment variable {name}={raw!r} is not an integer") from e

        return cls(
            seed=_int("BETTING_SEED"),
            out_dir=os.getenv("BETTING_OUT_DIR") or None,
            workers=_int("BETTING_WORKERS"),
            up_nodes=_int("BETTING_UP_NODES"),
            log_level=os.getenv("BETTING_LOG_LEVEL", "INFO"),
        )


def _with_env_defaults(data: Dict[str, Any], settings: Settings) -> Dict[str, Any]:
    data = dict(data)
    for key in ("seed", "workers", "up_nodes"):
        value = getattr(settings, key)
        if key not in data and value is not None:
            data[key] = value
    if settings.out_dir is not None:
        outputs = dict(data.get("outputs") or {})
        outputs.setdefault("out_dir", settings.out_dir)
        data["outputs"] = outputs
    return data


def parse_config(data: Dict[str, Any], settings: Optional[Settings] = None, source: str = "<config>") -> ExperimentConfig:
    settings = settings or Settings.from_env()
    try:
        return ExperimentConfig.model_validate(_with_env_defaults(data, settings))
    except ValidationError as e:
        raise ConfigError(f"Invalid experiment config {source}: {e}") from e


def load_config(path: str, settings: Optional[Settings] = None) -> ExperimentConfig:
    """Read and validate a JSON experiment config."""
    if not os.path.exists(path):
        raise FileNotFoundError(f"Config file not found: {path}")
    if not os.access(path, os.R_OK):
        raise PermissionError(f"Cannot read config file: {path}")

    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise ConfigError(f"Config file {path} is not valid JSON: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"Config file {path} must hold a JSON object")

    config = parse_config(data, settings, source=path)
    logger.debug("Loaded config %s: %s", path, config.model_dump(mode="json", exclude_none=True))
    return config


def apply_overrides(
    config: ExperimentConfig,
    seed: Optional[int] = None,
    out_dir: Optional[str] = None,
    output_format: Optional[str] = None,
    workers: Optional[int] = None,
) -> ExperimentConfig:
    """Command-line flags win over the file and the environment."""
    outputs_update: Dict[str, Any] = {}
    if out_dir is not None:
        outputs_update["out_dir"] = out_dir
    if output_format is not None:
        try:
            outputs_update["format"] = OutputFormat(output_format)
        except ValueError as e:
            raise ConfigError(f"Unknown output format {output_format!r}") from e

    update: Dict[str, Any] = {}
    if seed is not None:
        if not 0 <= seed < 2**64:
            raise ConfigError(f"seed={seed} must be a non-negative 64-bit integer")
        update["seed"] = seed
    if workers is not None:
        if workers < 1:
            raise ConfigError(f"workers={workers} must be positive")
        update["workers"] = workers
    if outputs_update:
        update["outputs"] = config.outputs.model_copy(update=outputs_update)
    return config.model_copy(update=update) if update else config
