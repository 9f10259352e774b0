"""Configuration management for trackmine using pydantic-settings.

Settings priority (highest to lowest):
1. CLI flags (applied after TrackmineConfig creation)
2. An explicit config file passed with --config
3. Environment variables (TRACKMINE_* prefix)
4. .env file
5. trackmine.yaml project config
6. Default values
"""

import logging
from pathlib import Path
from typing import Any

import yaml
from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, PydanticBaseSettingsSource, SettingsConfigDict

from trackmine.tracking.models import PAYOFF_TERMS, LinkerConfig, MinerConfig

logger = logging.getLogger(__name__)

PROJECT_FILE = "trackmine.yaml"

# Map top-level yaml keys to TrackmineConfig field names
_YAML_TO_FIELD = {
    "output": "output_dir",
    "jobs": "jobs",
}

# Nested blocks: mining:, linking:, training:
_BLOCK_YAML_TO_FIELD = {
    "mining": {"tau0": "tau0", "tau1": "tau1", "tau2": "tau2"},
    "linking": {"tau": "tau", "window": "window", "min_track": "min_track", "terms": "terms"},
    "training": {"margin": "triplet_margin"},
}


def read_config_file(path: Path) -> dict[str, Any]:
    """Translate a trackmine YAML file into TrackmineConfig field values."""
    try:
        raw = yaml.safe_load(Path(path).read_text()) or {}
    except yaml.YAMLError as e:
        raise ValueError(f"{path}: invalid YAML: {e}") from None
    if not isinstance(raw, dict):
        raise ValueError(f"{path}: config must be a mapping, got {type(raw).__name__}")

    result: dict[str, Any] = {}
    for yaml_key, field_name in _YAML_TO_FIELD.items():
        if yaml_key in raw:
            result[field_name] = raw[yaml_key]

    for block, keys in _BLOCK_YAML_TO_FIELD.items():
        section = raw.get(block, {})
        if not isinstance(section, dict):
            continue
        for yaml_key, field_name in keys.items():
            if yaml_key in section:
                result[field_name] = section[yaml_key]

    unknown = set(raw) - set(_YAML_TO_FIELD) - set(_BLOCK_YAML_TO_FIELD)
    if unknown:
        logger.warning(f"Ignoring unknown config keys in {path}: {', '.join(sorted(unknown))}")
    return result


class _ProjectYamlSource(PydanticBaseSettingsSource):
    """Read project config from trackmine.yaml (lower priority than env vars)."""

    def get_field_value(self, field, field_name):  # type: ignore[override]
        return None, field_name, False

    def __call__(self) -> dict:
        project_file = Path(PROJECT_FILE)
        if not project_file.exists():
            return {}
        return read_config_file(project_file)


class TrackmineConfig(BaseSettings):
    """Mining, linking and training parameters.

    All environment variables are prefixed with TRACKMINE_ (e.g.
    TRACKMINE_WINDOW=8). Empty values are treated as unset.

    Example:
        >>> config = TrackmineConfig(window=8)
        >>> config.linker_config().window
        8
    """

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        env_prefix="TRACKMINE_",
        extra="ignore",
        env_ignore_empty=True,
    )

    @classmethod
    def settings_customise_sources(
        cls,
        settings_cls: type[BaseSettings],
        init_settings: PydanticBaseSettingsSource,
        env_settings: PydanticBaseSettingsSource,
        dotenv_settings: PydanticBaseSettingsSource,
        file_secret_settings: PydanticBaseSettingsSource,
    ) -> tuple[PydanticBaseSettingsSource, ...]:
        return (
            init_settings,
            env_settings,
            dotenv_settings,
            _ProjectYamlSource(settings_cls),
            file_secret_settings,
        )

    tau0: float = Field(default=10.0, ge=0.0, description="Mining: minimum margin b1 - b2 (pixels)")
    tau1: float = Field(default=10.0, ge=0.0, description="Mining: minimum overlap b1 (pixels)")
    tau2: float = Field(default=2.0, ge=0.0, description="Mining: minimum ratio b1 / r")

    tau: float = Field(default=1.0, description="Linking: maximum dissimilarity of a link")
    window: int = Field(default=12, ge=1, description="Linking: frames a track may be occluded")
    min_track: int = Field(default=5, ge=1, description="Linking: minimum segments per emitted track")
    terms: str = Field(
        default="embedding,time",
        description="Linking payoff terms, comma-separated subset of siou, embedding, time",
    )

    triplet_margin: float = Field(default=0.2, ge=0.0, description="Triplet loss margin beta")

    jobs: int = Field(default=1, ge=1, description="Sequences processed concurrently")

    output_dir: Path = Field(default=Path("output"), description="Directory for output files")

    @field_validator("terms")
    @classmethod
    def validate_terms(cls, v: str) -> str:
        terms = [t.strip() for t in v.split(",") if t.strip()]
        bad = [t for t in terms if t not in PAYOFF_TERMS]
        if not terms or bad:
            raise ValueError(
                f"Invalid payoff terms: {v!r}. Choose from: {', '.join(PAYOFF_TERMS)}"
            )
        return ",".join(terms)

    @field_validator("output_dir", mode="before")
    @classmethod
    def resolve_output_dir(cls, v: Path | str) -> Path:
        """Convert output_dir to an absolute path and create it if missing."""
        path = Path(v) if isinstance(v, str) else v
        path = path.resolve()
        path.mkdir(parents=True, exist_ok=True)
        return path

    @classmethod
    def from_file(cls, path: Path | None = None, **overrides: Any) -> "TrackmineConfig":
        """Build settings with an optional explicit config file layered on top.

        ``overrides`` with value None are ignored, so CLI flags can be passed
        straight through.
        """
        values: dict[str, Any] = read_config_file(path) if path is not None else {}
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)

    @property
    def term_list(self) -> list[str]:
        return self.terms.split(",")

    def miner_config(self) -> MinerConfig:
        return MinerConfig(tau0=self.tau0, tau1=self.tau1, tau2=self.tau2)

    def linker_config(self) -> LinkerConfig:
        return LinkerConfig.from_terms(
            self.term_list, tau=self.tau, window=self.window, min_track=self.min_track
        )
