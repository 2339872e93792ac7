"""
Data models for the spin-boson model.

Uses Pydantic for validated, serializable run parameters and frozen
dataclasses for the numerical objects derived from them.
"""

import hashlib
import json
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field

# Parameters that identify a physical model on a time grid. Backend knobs stay out.
FINGERPRINT_KEYS = (
    "epsilon",
    "gamma",
    "beta",
    "xi",
    "omega_c",
    "omega_max",
    "n_modes",
    "dt",
    "n_fock",
)

DEFAULT_DENSE_LIMIT = 2_000_000
ELECTRONIC_DIM = 2


class Backend(str, Enum):
    """Dynamics backends for the U-series."""
    TT = "tt"
    DENSE = "dense"


class SpinBosonParams(BaseModel):
    """Physical and numerical parameters of one spin-boson run."""
    epsilon: float = Field(..., description="Energy bias between donor and acceptor (units of Gamma)")
    gamma_c: float = Field(..., alias="gamma", description="Electronic coupling Gamma")
    beta: float = Field(..., gt=0, description="Inverse temperature (units of 1/Gamma)")
    xi: float = Field(..., ge=0, description="Kondo parameter")
    omega_c: float = Field(..., gt=0, description="Ohmic cutoff frequency")
    omega_max: float = Field(..., gt=0, description="Largest sampled bath frequency")
    n_modes: int = Field(..., ge=1, description="Number of bath modes")
    dt: float = Field(..., gt=0, description="Time step (units of 1/Gamma)")
    t_final: float = Field(..., ge=0, description="Final propagation time for the dynamics stage")
    n_fock: int = Field(..., ge=2, description="Harmonic basis size per mode")

    tt_rank: int = Field(default=20, ge=1, description="Fixed TT manifold rank")
    backend: Backend = Field(default=Backend.TT, description="Dynamics backend")
    ksl_order: int = Field(default=2, ge=1, le=2, description="Splitting order of the KSL integrator")
    krylov_tol: float = Field(default=1e-12, gt=0, description="Tolerance of the local Krylov exponentials")
    dense_limit: Optional[int] = Field(default=None, ge=1, description="Largest dense state vector allowed")
    t_mem_max: Optional[float] = Field(default=None, gt=0, description="Upper end of the memory-time search")
    conv_param: float = Field(default=5e-4, gt=0, description="Memory-time convergence parameter")
    volterra_tol: float = Field(default=1e-10, gt=0, description="Volterra fixed-point tolerance")
    volterra_max_iter: int = Field(default=50, ge=1, description="Volterra iteration cap")
    gqme_t_final: Optional[float] = Field(default=None, gt=0, description="Final time of GQME propagation")
    memtime_stride: float = Field(default=0.25, gt=0, description="Coarse stride of the memory-time scan")

    class Config:
        """Pydantic configuration."""
        populate_by_name = True
        frozen = True
        extra = "forbid"
        json_schema_extra = {
            "example": {
                "epsilon": 1.0,
                "gamma": 1.0,
                "beta": 5.0,
                "xi": 0.1,
                "omega_c": 1.0,
                "omega_max": 5.0,
                "n_modes": 60,
                "dt": 1.50083e-3,
                "t_final": 15.0,
                "n_fock": 10,
                "tt_rank": 30,
                "backend": "tt",
            }
        }

    @property
    def n_steps(self) -> int:
        """Number of dynamics steps on the grid."""
        return int(round(self.t_final / self.dt))

    @property
    def effective_t_mem_max(self) -> float:
        return self.t_mem_max if self.t_mem_max is not None else self.t_final

    @property
    def effective_gqme_t_final(self) -> float:
        return self.gqme_t_final if self.gqme_t_final is not None else self.t_final

    def fingerprint(self) -> str:
        """Hex digest of the physical and grid parameters."""
        dumped = self.model_dump(mode="json", by_alias=True)
        canonical = {key: dumped[key] for key in FINGERPRINT_KEYS}
        payload = json.dumps(canonical, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class DiscretizedBath:
    """Discrete harmonic bath: frequencies, couplings and Bogoliubov angles."""
    omegas: np.ndarray
    couplings: np.ndarray
    thetas: np.ndarray

    def __post_init__(self):
        if not (len(self.omegas) == len(self.couplings) == len(self.thetas)):
            raise ValueError(
                f"bath arrays differ in length: {len(self.omegas)}, "
                f"{len(self.couplings)}, {len(self.thetas)}"
            )

    @property
    def n_modes(self) -> int:
        return len(self.omegas)

    @property
    def displacements(self) -> np.ndarray:
        """Linear coupling strengths c_k / sqrt(2 omega_k) in ladder-operator form."""
        return self.couplings / np.sqrt(2.0 * self.omegas)


@dataclass(frozen=True)
class ElectronicLiouvillian:
    """Projected Liouvillian <L> in (DD, DA, AD, AA) ordering."""
    matrix: np.ndarray

    def __post_init__(self):
        if self.matrix.shape != (4, 4):
            raise ValueError(f"Liouvillian must be 4x4, got {self.matrix.shape}")

    def restrict(self, indices: Tuple[int, ...]) -> np.ndarray:
        """Sub-block acting on the given Liouville indices."""
        idx = np.asarray(indices, dtype=int)
        return self.matrix[np.ix_(idx, idx)]


@dataclass(frozen=True)
class SpinBosonModel:
    """Physical parameters together with the discretized bath."""
    params: SpinBosonParams
    bath: DiscretizedBath

    @property
    def n_modes(self) -> int:
        return self.bath.n_modes

    @property
    def mode_dims(self) -> Tuple[int, ...]:
        """Core dimensions: electronic first, then physical/tilde pairs."""
        return (ELECTRONIC_DIM,) + (self.params.n_fock,) * (2 * self.n_modes)

    @property
    def dense_dimension(self) -> int:
        return ELECTRONIC_DIM * self.params.n_fock ** (2 * self.n_modes)

    def fingerprint(self) -> str:
        return self.params.fingerprint()
