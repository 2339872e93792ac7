"""
Data models for the thermo-field dynamics stage.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Tuple

import numpy as np

from spin_boson.liouvillian import liouville_index, unvectorize, vectorize

INV_SQRT2 = 1.0 / np.sqrt(2.0)


class InvalidElectronicStateError(ValueError):
    """Raised for an unknown initial electronic state label."""
    pass


class ElectronicState(str, Enum):
    """Pure initial electronic states propagated by the dynamics backends."""
    D = "D"
    A = "A"
    PLUS = "PLUS"
    Y = "Y"

    @property
    def vector(self) -> np.ndarray:
        """Electronic ket in the (D, A) basis."""
        return {
            ElectronicState.D: np.array([1.0, 0.0], dtype=complex),
            ElectronicState.A: np.array([0.0, 1.0], dtype=complex),
            ElectronicState.PLUS: np.array([INV_SQRT2, INV_SQRT2], dtype=complex),
            ElectronicState.Y: np.array([INV_SQRT2, 1j * INV_SQRT2], dtype=complex),
        }[self]

    @classmethod
    def parse(cls, value) -> "ElectronicState":
        if isinstance(value, cls):
            return value
        text = str(value).strip().upper()
        aliases = {"+": "PLUS", "DONOR": "D", "ACCEPTOR": "A"}
        try:
            return cls(aliases.get(text, text))
        except ValueError:
            raise InvalidElectronicStateError(
                f"Unknown electronic state '{value}', expected one of {[s.value for s in cls]}"
            )


@dataclass(frozen=True, eq=False)
class PropagatorSeries:
    """Electronic propagator superoperator U(t_i) on a uniform grid.

    entries[i, jk, lm] in (DD, DA, AD, AA) ordering.
    """
    dt: float
    entries: np.ndarray
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=complex)
        if entries.ndim != 3 or entries.shape[1:] != (4, 4):
            raise ValueError(f"entries must have shape (N, 4, 4), got {entries.shape}")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        object.__setattr__(self, "entries", entries)

    @property
    def n_points(self) -> int:
        return self.entries.shape[0]

    @property
    def n_steps(self) -> int:
        return self.n_points - 1

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.n_points)

    def column(self, label: str) -> np.ndarray:
        """Series of the column for initial element label, shape (N, 4)."""
        return self.entries[:, :, liouville_index(label)]

    def element(self, row: str, col: str) -> np.ndarray:
        return self.entries[:, liouville_index(row), liouville_index(col)]

    def trace_deviation(self) -> float:
        """max_t |sum_j U_{jj,lm} - delta_lm| over all columns."""
        trace = self.entries[:, 0, :] + self.entries[:, 3, :]
        target = np.array([1.0, 0.0, 0.0, 1.0])
        return float(np.nanmax(np.abs(trace - target)))

    def hermiticity_deviation(self) -> float:
        """max |U_{jk,lm} - conj(U_{kj,ml})|."""
        swap = [0, 2, 1, 3]
        paired = self.entries[:, swap, :][:, :, swap].conj()
        return float(np.nanmax(np.abs(self.entries - paired)))

    def apply(self, sigma0: np.ndarray) -> np.ndarray:
        """sigma(t_i) as 2x2 matrices for an initial electronic matrix sigma0.

        Only the columns sigma0 touches are read, so partial series serve
        the states they hold.
        """
        vector = vectorize(sigma0)
        used = np.flatnonzero(vector)
        return unvectorize(self.entries[:, :, used] @ vector[used])

    def truncated(self, n_points: int) -> "PropagatorSeries":
        return PropagatorSeries(dt=self.dt, entries=self.entries[:n_points], metadata=dict(self.metadata))


@dataclass(frozen=True, eq=False)
class DenseState:
    """Dense double-space state vector with its core dimensions."""
    vector: np.ndarray
    dims: Tuple[int, ...]

    def __post_init__(self):
        vector = np.asarray(self.vector, dtype=complex).reshape(-1)
        expected = int(np.prod(self.dims, dtype=np.int64))
        if vector.size != expected:
            raise ValueError(f"Dense state has {vector.size} entries, dims {self.dims} need {expected}")
        object.__setattr__(self, "vector", vector)
        object.__setattr__(self, "dims", tuple(int(n) for n in self.dims))


def stack_columns(columns: Dict[str, np.ndarray], n_points: int) -> np.ndarray:
    """Build (N, 4, 4) entries from {label: (N, 4)} columns; absent columns are NaN."""
    entries = np.full((n_points, 4, 4), np.nan, dtype=complex)
    for label, values in columns.items():
        entries[:, :, liouville_index(label)] = values
    return entries
