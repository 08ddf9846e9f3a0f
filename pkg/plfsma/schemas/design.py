import enum
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from plfsma.core import settings
from plfsma.core.errors import ConfigurationError


class CandidateSetId(str, enum.Enum):
    M15A = "M15A"
    M15B = "M15B"
    M21 = "M21"

    @classmethod
    def parse(cls, value: str) -> "CandidateSetId":
        try:
            return cls(value.upper())
        except ValueError:
            raise ConfigurationError(
                f"unknown candidate set {value!r}; expected one of m15a, m15b, m21"
            ) from None


class DesignConfig(BaseModel):
    """One simulation cell: design, sample size, target R² and candidate set."""

    model_config = ConfigDict(frozen=True)

    design: Literal[1, 2, 3]
    n: int = Field(..., ge=10)
    r2: float = Field(..., gt=0.0, lt=1.0)
    grid_size: int = Field(100, ge=4)
    reps: int = Field(default_factory=lambda: settings.DEFAULT_REPS, ge=1)
    seed: int = Field(0, ge=0, lt=2**64)
    candidate_set: CandidateSetId = CandidateSetId.M15A
    candidate_subset: tuple[int, ...] | None = None

    @field_validator("candidate_set", mode="before")
    @classmethod
    def _upper(cls, value):
        return value.upper() if isinstance(value, str) else value

    @field_validator("candidate_subset")
    @classmethod
    def _check_subset(cls, value):
        if value is not None:
            if len(value) == 0:
                raise ValueError("candidate_subset must not be empty")
            if len(set(value)) != len(value) or min(value) < 0:
                raise ValueError("candidate_subset must hold unique non-negative indices")
        return value

    @classmethod
    def build(cls, **values) -> "DesignConfig":
        """Validate keyword values, converting pydantic errors to ``ConfigurationError``."""
        try:
            return cls(**values)
        except ValidationError as exc:
            raise ConfigurationError(f"invalid design configuration: {exc}") from exc
