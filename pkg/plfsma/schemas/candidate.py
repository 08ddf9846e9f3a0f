import json
from pathlib import Path
from typing import Literal

import yaml
from pydantic import BaseModel, ConfigDict, Field, TypeAdapter, ValidationError, field_validator

from plfsma.core.errors import ConfigurationError, DataFormatError


class CandidateSpec(BaseModel):
    """Which scalar columns and which transformed scores one candidate model uses."""

    model_config = ConfigDict(populate_by_name=True, frozen=True)

    z_cols: tuple[int, ...] = Field(default=(), alias="z")
    xi_cols: tuple[int, ...] = Field(..., alias="xi")
    bandwidth: float | Literal["auto"] = Field(default="auto", alias="h")

    @field_validator("z_cols")
    @classmethod
    def _check_z(cls, value):
        return _check_indices(value, "z_cols")

    @field_validator("xi_cols")
    @classmethod
    def _check_xi(cls, value):
        if len(value) == 0:
            raise ValueError("xi_cols non-empty: a candidate needs at least one score")
        return _check_indices(value, "xi_cols")

    @field_validator("bandwidth")
    @classmethod
    def _check_bandwidth(cls, value):
        if value != "auto" and not value > 0:
            raise ValueError("bandwidth must be positive or 'auto'")
        return value

    @property
    def p(self) -> int:
        return len(self.z_cols)

    @property
    def q(self) -> int:
        return len(self.xi_cols)

    @property
    def size(self) -> int:
        return self.p + self.q

    def label(self) -> str:
        z = ",".join(f"Z{j + 1}" for j in self.z_cols)
        xi = ",".join(f"xi{k + 1}" for k in self.xi_cols)
        return f"[{z}|{xi}]" if z else f"[{xi}]"


def _check_indices(value: tuple[int, ...], name: str) -> tuple[int, ...]:
    if any(index < 0 for index in value):
        raise ValueError(f"{name} indices must be non-negative")
    if len(set(value)) != len(value):
        raise ValueError(f"{name} indices must be unique")
    return tuple(value)


_spec_list = TypeAdapter(list[CandidateSpec])


def parse_candidate_specs(payload) -> list[CandidateSpec]:
    """Validate a decoded candidate list.

    Raises:
        ConfigurationError: If the payload does not follow the schema.
    """
    try:
        specs = _spec_list.validate_python(payload)
    except ValidationError as exc:
        raise ConfigurationError(f"invalid candidate specification: {exc}") from exc
    if not specs:
        raise ConfigurationError("candidate specification list is empty")
    return specs


def load_candidate_specs(path: str | Path) -> list[CandidateSpec]:
    """Read a JSON (or YAML) candidate list: ``[{"z": [...], "xi": [...], "h": "auto"}]``."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataFormatError(f"cannot read candidate file {path}: {exc}") from exc
    try:
        if path.suffix.lower() in (".yaml", ".yml"):
            payload = yaml.safe_load(text)
        else:
            payload = json.loads(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise DataFormatError(f"cannot parse candidate file {path}: {exc}") from exc
    return parse_candidate_specs(payload)


def dump_candidate_specs(specs: list[CandidateSpec], path: str | Path) -> None:
    payload = [spec.model_dump(by_alias=True, mode="json") for spec in specs]
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def max_score_count(specs: list[CandidateSpec]) -> int:
    """Number of leading scores the candidate list needs."""
    return max(max(spec.xi_cols) for spec in specs) + 1
