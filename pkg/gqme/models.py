"""
Data models for the GQME stage: projection-free inputs, kernels,
inhomogeneous terms and propagation results.

All series live on a uniform grid t_i = i * dt. Liouville indices follow
the (DD, DA, AD, AA) ordering of spin_boson.liouvillian.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Optional, Tuple

import numpy as np

from spin_boson.liouvillian import LIOUVILLE_LABELS, liouville_index

POPULATION_INDICES: Tuple[int, ...] = (0, 3)


class GqmeType(str, Enum):
    """The four GQME variants, named by the density-matrix subset they keep."""
    FULL = "Full"
    POPULATIONS_ONLY = "PopulationsOnly"
    DONOR_ONLY = "DonorOnly"
    ACCEPTOR_ONLY = "AcceptorOnly"

    @property
    def labels(self) -> Tuple[str, ...]:
        return {
            GqmeType.FULL: LIOUVILLE_LABELS,
            GqmeType.POPULATIONS_ONLY: ("DD", "AA"),
            GqmeType.DONOR_ONLY: ("DD",),
            GqmeType.ACCEPTOR_ONLY: ("AA",),
        }[self]

    @property
    def subset(self) -> Tuple[int, ...]:
        """Ordered Liouville indices of the kept elements."""
        return tuple(liouville_index(label) for label in self.labels)

    @property
    def size(self) -> int:
        return len(self.labels)

    def needs_inhom(self, gamma: str = "D") -> bool:
        """True when the initial population gamma lies outside the kept subset."""
        return f"{gamma}{gamma}".upper() not in self.labels

    @classmethod
    def parse(cls, value) -> "GqmeType":
        if isinstance(value, cls):
            return value
        text = str(value).strip()
        aliases = {
            "full": cls.FULL,
            "pop": cls.POPULATIONS_ONLY,
            "populations": cls.POPULATIONS_ONLY,
            "populationsonly": cls.POPULATIONS_ONLY,
            "donor": cls.DONOR_ONLY,
            "donoronly": cls.DONOR_ONLY,
            "acceptor": cls.ACCEPTOR_ONLY,
            "acceptoronly": cls.ACCEPTOR_ONLY,
        }
        key = text.lower().replace("-", "").replace("_", "")
        if key in aliases:
            return aliases[key]
        raise ValueError(f"Unknown GQME type '{value}', expected one of {[t.value for t in cls]}")


class VolterraScheme(str, Enum):
    """Fixed-point schemes for the discretized Volterra equations."""
    MARCHING = "marching"
    PICARD = "picard"


def _ratio(numerator: float, denominator: float) -> float:
    if denominator == 0.0:
        return 0.0 if numerator == 0.0 else float("inf")
    return numerator / denominator


def _nanmax_abs(values: np.ndarray) -> float:
    values = np.abs(values)
    if values.size == 0 or np.all(np.isnan(values)):
        return 0.0
    return float(np.nanmax(values))


@dataclass(frozen=True, eq=False)
class PfiSeries:
    """Projection-free inputs F, Fdot (N, 4, 4) and Z (N, 4) for initial state gamma."""
    dt: float
    F: np.ndarray
    Fdot: np.ndarray
    Z: np.ndarray
    gamma: str = "D"
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        F = np.asarray(self.F, dtype=complex)
        Fdot = np.asarray(self.Fdot, dtype=complex)
        Z = np.asarray(self.Z, dtype=complex)
        if F.ndim != 3 or F.shape[1:] != (4, 4) or Fdot.shape != F.shape:
            raise ValueError(f"F and Fdot must share shape (N, 4, 4), got {F.shape} and {Fdot.shape}")
        if Z.shape != (F.shape[0], 4):
            raise ValueError(f"Z must have shape ({F.shape[0]}, 4), got {Z.shape}")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        object.__setattr__(self, "F", F)
        object.__setattr__(self, "Fdot", Fdot)
        object.__setattr__(self, "Z", Z)
        object.__setattr__(self, "gamma", str(self.gamma).upper())

    @property
    def n_points(self) -> int:
        return self.F.shape[0]

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.n_points)

    def restricted(self, indices: Tuple[int, ...]) -> Tuple[np.ndarray, np.ndarray]:
        """F and Fdot restricted to a Liouville subset, shape (N, s, s)."""
        idx = np.asarray(indices, dtype=int)
        return self.F[:, idx][:, :, idx], self.Fdot[:, idx][:, :, idx]

    def population_block_realness(self) -> float:
        """max |Re| / max |Im| over the population blocks of F and Fdot.

        Exact inputs give purely imaginary population blocks.
        """
        ratios = []
        for series in (self.F, self.Fdot):
            block = series[:, POPULATION_INDICES][:, :, POPULATION_INDICES]
            ratios.append(_ratio(_nanmax_abs(block.real), _nanmax_abs(block.imag)))
        return max(ratios)


@dataclass(frozen=True, eq=False)
class KernelSeries:
    """Memory kernel K(tau_i) of one GQME type, shape (N, s, s)."""
    dt: float
    gqme_type: GqmeType
    entries: np.ndarray
    iterations_used: int = 0
    residual: float = 0.0
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        gqme_type = GqmeType.parse(self.gqme_type)
        entries = np.asarray(self.entries, dtype=complex)
        size = gqme_type.size
        if entries.ndim != 3 or entries.shape[1:] != (size, size):
            raise ValueError(
                f"{gqme_type.value} kernel must have shape (N, {size}, {size}), got {entries.shape}"
            )
        object.__setattr__(self, "gqme_type", gqme_type)
        object.__setattr__(self, "entries", entries)

    @property
    def n_points(self) -> int:
        return self.entries.shape[0]

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.n_points)

    def element(self, row: str, col: str) -> np.ndarray:
        labels = self.gqme_type.labels
        return self.entries[:, labels.index(row.upper()), labels.index(col.upper())]

    def corner_ratio(self) -> float:
        """Largest population-to-population element relative to the largest element (Full only)."""
        if self.gqme_type != GqmeType.FULL:
            raise ValueError(f"corner_ratio is defined for Full kernels, got {self.gqme_type.value}")
        corners = self.entries[:, POPULATION_INDICES][:, :, POPULATION_INDICES]
        return _ratio(_nanmax_abs(corners), _nanmax_abs(self.entries))

    def imag_ratio(self) -> float:
        """max |Im K| / max |Re K|."""
        return _ratio(_nanmax_abs(self.entries.imag), _nanmax_abs(self.entries.real))


@dataclass(frozen=True, eq=False)
class InhomSeries:
    """Inhomogeneous term I(t_i) of one GQME type, shape (N, s)."""
    dt: float
    gqme_type: GqmeType
    entries: np.ndarray
    iterations_used: int = 0
    residual: float = 0.0
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        gqme_type = GqmeType.parse(self.gqme_type)
        entries = np.asarray(self.entries, dtype=complex)
        if entries.ndim != 2 or entries.shape[1] != gqme_type.size:
            raise ValueError(
                f"{gqme_type.value} inhomogeneous term must have shape (N, {gqme_type.size}), "
                f"got {entries.shape}"
            )
        object.__setattr__(self, "gqme_type", gqme_type)
        object.__setattr__(self, "entries", entries)

    @property
    def n_points(self) -> int:
        return self.entries.shape[0]

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.n_points)

    def imag_ratio(self) -> float:
        return _ratio(_nanmax_abs(self.entries.imag), _nanmax_abs(self.entries.real))


@dataclass(frozen=True, eq=False)
class GqmeResult:
    """Electronic density-matrix elements along a propagation.

    kind is a GqmeType tag, "Direct" for dynamics read straight off U(t),
    or "DonorAcceptor" for recombined single-population runs.
    """
    dt: float
    kind: str
    labels: Tuple[str, ...]
    sigma: np.ndarray
    memory_time: Optional[float] = None
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        sigma = np.asarray(self.sigma, dtype=complex)
        labels = tuple(label.upper() for label in self.labels)
        if sigma.ndim != 2 or sigma.shape[1] != len(labels):
            raise ValueError(f"sigma must have shape (N, {len(labels)}), got {sigma.shape}")
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "kind", getattr(self.kind, "value", str(self.kind)))

    @property
    def n_points(self) -> int:
        return self.sigma.shape[0]

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.n_points)

    def element(self, label: str) -> np.ndarray:
        return self.sigma[:, self.labels.index(label.upper())]

    @property
    def sigma_z(self) -> Optional[np.ndarray]:
        """sigma_DD - sigma_AA when both populations are present."""
        if "DD" not in self.labels or "AA" not in self.labels:
            return None
        return np.real(self.element("DD") - self.element("AA"))

    def trace_deviation(self) -> Optional[float]:
        if "DD" not in self.labels or "AA" not in self.labels:
            return None
        return float(np.max(np.abs(self.element("DD") + self.element("AA") - 1.0)))

    def truncated(self, n_points: int) -> "GqmeResult":
        return GqmeResult(
            dt=self.dt,
            kind=self.kind,
            labels=self.labels,
            sigma=self.sigma[:n_points],
            memory_time=self.memory_time,
            metadata=dict(self.metadata),
        )
