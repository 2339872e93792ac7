"""
Data models for pipeline runs.

Uses Pydantic for validation and JSON serialization of the run manifest.
"""

from pathlib import Path
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field

from .formats import atomic_write_text


class StageRecord(BaseModel):
    """One artifact produced by a pipeline stage."""
    stage: str = Field(..., description="Stage name (propagate, pfi, kernel, gqme, memtime, compare)")
    output: str = Field(..., description="Path of the written artifact")
    fingerprint: str = Field(..., description="Fingerprint stored in the artifact header")
    input_fingerprint: Optional[str] = Field(None, description="Fingerprint of the upstream artifact")
    wall_time: float = Field(..., ge=0.0, description="Wall time of the stage in seconds")
    details: Dict[str, Any] = Field(default_factory=dict, description="Stage-specific numbers")

    class Config:
        json_schema_extra = {
            "example": {
                "stage": "kernel",
                "output": "runs/model1/kernel_Full.dat",
                "fingerprint": "9f2c...",
                "input_fingerprint": "41ab...",
                "wall_time": 12.5,
                "details": {"gqme_type": "Full", "iterations_used": 5, "residual": 3.1e-12},
            }
        }


class RunManifest(BaseModel):
    """Record of a pipeline run: configuration, artifacts and timings."""
    config_path: str = Field(..., description="Configuration file the run started from")
    model_fingerprint: str = Field(..., description="Fingerprint of the physical model and grid")
    stages: List[StageRecord] = Field(default_factory=list, description="Artifacts in production order")
    kernel_iterations: Dict[str, int] = Field(default_factory=dict, description="Volterra iterations per GQME type")
    memory_times: Dict[str, float] = Field(default_factory=dict, description="Memory times used per GQME type")
    comparisons: Dict[str, float] = Field(default_factory=dict, description="sigma_z sup-norm differences against the direct dynamics")

    class Config:
        """Pydantic configuration."""
        json_schema_extra = {
            "example": {
                "config_path": "configs/model1_desk.yaml",
                "model_fingerprint": "5be1...",
                "stages": [],
                "kernel_iterations": {"Full": 5, "PopulationsOnly": 3},
                "memory_times": {"Full": 10.0},
                "comparisons": {"Full": 2.1e-5},
            }
        }

    def add(self, record: StageRecord) -> StageRecord:
        self.stages.append(record)
        return record

    def save(self, filepath) -> Path:
        """Write the manifest as indented JSON."""
        output_path = Path(filepath)
        atomic_write_text(output_path, self.model_dump_json(indent=2) + "\n")
        return output_path

    @classmethod
    def load(cls, filepath) -> "RunManifest":
        with open(filepath, "r", encoding="utf-8") as f:
            return cls.model_validate_json(f.read())
