"""
Tensor-train containers.

Vector cores have shape (r_left, n, r_right); operator cores have shape
(R_left, n_out, n_in, R_right). Both are immutable: operations in
tensor_train.ops return fresh trains.
"""

from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np


class TensorTrainError(ValueError):
    """Base exception for tensor-train construction and algebra."""
    pass


class DimensionMismatchError(TensorTrainError):
    """Raised when mode dimensions or ranks of two trains do not line up."""
    pass


def _freeze(cores: Sequence[np.ndarray]) -> Tuple[np.ndarray, ...]:
    frozen = []
    for core in cores:
        array = np.array(core, dtype=complex, copy=True)
        array.setflags(write=False)
        frozen.append(array)
    return tuple(frozen)


@dataclass(frozen=True, eq=False)
class TensorTrainVector:
    """A d-core tensor train representing a vector of shape mode_dims."""
    cores: Tuple[np.ndarray, ...]

    def __post_init__(self):
        cores = _freeze(self.cores)
        if not cores:
            raise TensorTrainError("A tensor train needs at least one core")
        for i, core in enumerate(cores):
            if core.ndim != 3:
                raise TensorTrainError(f"Core {i} must be 3-dimensional, got shape {core.shape}")
        if cores[0].shape[0] != 1 or cores[-1].shape[2] != 1:
            raise TensorTrainError("Boundary ranks must equal 1")
        for i in range(len(cores) - 1):
            if cores[i].shape[2] != cores[i + 1].shape[0]:
                raise DimensionMismatchError(
                    f"Rank mismatch between cores {i} and {i + 1}: "
                    f"{cores[i].shape[2]} != {cores[i + 1].shape[0]}"
                )
        object.__setattr__(self, "cores", cores)

    @property
    def d(self) -> int:
        return len(self.cores)

    @property
    def mode_dims(self) -> Tuple[int, ...]:
        return tuple(core.shape[1] for core in self.cores)

    @property
    def ranks(self) -> Tuple[int, ...]:
        return (1,) + tuple(core.shape[2] for core in self.cores)

    def element(self, index: Sequence[int]) -> complex:
        """Entry at a multi-index, contracted core by core."""
        if len(index) != self.d:
            raise DimensionMismatchError(f"Index has {len(index)} entries, train has {self.d} cores")
        row = np.ones((1,), dtype=complex)
        for core, i in zip(self.cores, index):
            row = row @ core[:, i, :]
        return complex(row[0])

    def to_dense(self) -> np.ndarray:
        """Full tensor of shape mode_dims. Only for small trains."""
        full = self.cores[0]
        for core in self.cores[1:]:
            full = np.tensordot(full, core, axes=([-1], [0]))
        return full.reshape(self.mode_dims)

    def to_vector(self) -> np.ndarray:
        """Flattened dense vector in C order (first core most significant)."""
        return self.to_dense().reshape(-1)


@dataclass(frozen=True, eq=False)
class TensorTrainOperator:
    """A d-core tensor-train operator (matrix product operator)."""
    cores: Tuple[np.ndarray, ...]

    def __post_init__(self):
        cores = _freeze(self.cores)
        if not cores:
            raise TensorTrainError("A tensor-train operator needs at least one core")
        for i, core in enumerate(cores):
            if core.ndim != 4 or core.shape[1] != core.shape[2]:
                raise TensorTrainError(f"Operator core {i} must have shape (R, n, n, R'), got {core.shape}")
        if cores[0].shape[0] != 1 or cores[-1].shape[3] != 1:
            raise TensorTrainError("Operator boundary ranks must equal 1")
        for i in range(len(cores) - 1):
            if cores[i].shape[3] != cores[i + 1].shape[0]:
                raise DimensionMismatchError(
                    f"Operator rank mismatch between cores {i} and {i + 1}"
                )
        object.__setattr__(self, "cores", cores)

    @property
    def d(self) -> int:
        return len(self.cores)

    @property
    def mode_dims(self) -> Tuple[int, ...]:
        return tuple(core.shape[1] for core in self.cores)

    @property
    def ranks(self) -> Tuple[int, ...]:
        return (1,) + tuple(core.shape[3] for core in self.cores)

    def to_dense(self) -> np.ndarray:
        """Full matrix of shape (prod(n), prod(n)). Only for small operators."""
        full = self.cores[0][0]  # (n, n, R)
        for core in self.cores[1:]:
            # (N, N, R) x (R, n, n, R') -> (N, n, N, n, R')
            full = np.einsum("ijr,rklq->ikjlq", full, core)
            rows = full.shape[0] * full.shape[1]
            cols = full.shape[2] * full.shape[3]
            full = full.reshape(rows, cols, full.shape[4])
        return full[:, :, 0]

    @classmethod
    def from_product(cls, matrices: Sequence[np.ndarray]) -> "TensorTrainOperator":
        """Rank-1 operator from one matrix per core."""
        return cls(cores=tuple(np.asarray(m, dtype=complex)[None, :, :, None] for m in matrices))

    @classmethod
    def identity(cls, mode_dims: Sequence[int]) -> "TensorTrainOperator":
        return cls.from_product([np.eye(n) for n in mode_dims])
