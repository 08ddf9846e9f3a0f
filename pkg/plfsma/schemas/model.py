"""JSON model artifact written by ``fit`` and read by ``predict``."""
import json
from pathlib import Path

from pydantic import BaseModel, ValidationError

from plfsma.core import settings
from plfsma.core.errors import DataFormatError
from plfsma.schemas.candidate import CandidateSpec

ARTIFACT_NAME = "model.json"


class TransformRecord(BaseModel):
    mean: float = 0.0
    scale: float = 1.0
    log: bool = False


class BasisRecord(BaseModel):
    grid: list[float]
    mean: list[float]
    eigenvalues: list[float]
    eigenfunctions: list[list[float]]
    presmooth_bandwidth: float
    n_scores: int


class CandidateRecord(BaseModel):
    spec: CandidateSpec
    theta: list[float]
    bandwidth: float
    trace_hat: float
    collinear: bool = False
    aic: float | None = None
    bic: float | None = None
    lambda_max: float | None = None
    xi_train: list[list[float]]
    partial_residuals: list[float]
    fitted: list[float]


class EnsembleRecord(BaseModel):
    method: str
    weights: list[float]
    criterion_value: float | None = None
    converged: bool = True
    fitted: list[float]


class ModelArtifact(BaseModel):
    version: int = settings.ARTIFACT_VERSION
    z_names: list[str]
    transforms: dict[str, TransformRecord] = {}
    basis: BasisRecord
    candidates: list[CandidateRecord]
    ensembles: list[EnsembleRecord]
    y_train: list[float]
    omega_source: int

    def write(self, directory: str | Path) -> Path:
        path = Path(directory) / ARTIFACT_NAME
        path.write_text(self.model_dump_json(by_alias=True, indent=1) + "\n", encoding="utf-8")
        return path

    @classmethod
    def read(cls, directory: str | Path) -> "ModelArtifact":
        path = Path(directory)
        if path.is_dir():
            path = path / ARTIFACT_NAME
        try:
            payload = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise DataFormatError(f"cannot read model artifact {path}: {exc}") from exc
        if payload.get("version") != settings.ARTIFACT_VERSION:
            raise DataFormatError(
                f"model artifact {path} has version {payload.get('version')}, "
                f"expected {settings.ARTIFACT_VERSION}"
            )
        try:
            return cls.model_validate(payload)
        except ValidationError as exc:
            raise DataFormatError(f"invalid model artifact {path}: {exc}") from exc
