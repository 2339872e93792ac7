"""
U-series computation on the TT backend.

Each initial electronic state is propagated independently; at every grid
point the reduced electronic matrix sigma_jk = <P_k psi | E_kj psi> is
read off with single-core electronic transformations. Columns for
coherence initial conditions are assembled from the PLUS and Y runs.
"""

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, Iterable, Optional, Sequence, Tuple

import numpy as np

from gqme.pfi import assemble_offdiagonal_initial
from spin_boson.liouvillian import liouville_index
from spin_boson.models import Backend, SpinBosonModel
from tensor_train import (
    KslConfig,
    KslIntegrationError,
    TensorTrainOperator,
    TensorTrainVector,
    apply_single_core,
    propagate,
    tt_inner,
)

from .dense import propagate_dense
from .hamiltonian import build_theta_hamiltonian, initial_state
from .models import ElectronicState, PropagatorSeries, stack_columns

logger = logging.getLogger(__name__)

ELECTRONIC_SITE = 0
ALL_STATES: Tuple[ElectronicState, ...] = (
    ElectronicState.D,
    ElectronicState.A,
    ElectronicState.PLUS,
    ElectronicState.Y,
)


class PropagationError(RuntimeError):
    """Raised when a dynamics backend fails or produces unusable data."""
    pass


def _transition(target: int, source: int) -> np.ndarray:
    """|target><source| on the electronic core."""
    matrix = np.zeros((2, 2), dtype=complex)
    matrix[target, source] = 1.0
    return matrix


def electronic_density(psi: TensorTrainVector) -> np.ndarray:
    """Reduced electronic matrix sigma_jk = <(|k><k|) psi | (|k><j|) psi>."""
    sigma = np.zeros((2, 2), dtype=complex)
    for k in range(2):
        bra = apply_single_core(psi, ELECTRONIC_SITE, _transition(k, k))
        for j in range(2):
            ket = apply_single_core(psi, ELECTRONIC_SITE, _transition(k, j))
            sigma[j, k] = tt_inner(bra, ket)
    return sigma


def run_tt_trajectory(
    hamiltonian: TensorTrainOperator,
    psi0: TensorTrainVector,
    cfg: KslConfig,
    n_steps: int,
) -> np.ndarray:
    """Reduced electronic matrices (N, 2, 2) along one KSL trajectory."""
    sigma = np.zeros((n_steps + 1, 2, 2), dtype=complex)
    sigma[0] = electronic_density(psi0)

    def observer(step: int, psi: TensorTrainVector) -> None:
        sigma[step] = electronic_density(psi)

    propagate(psi0, hamiltonian, cfg, n_steps, observer)
    if not np.all(np.isfinite(sigma)):
        raise PropagationError("Non-finite reduced density along TT trajectory")
    return sigma


def _ksl_config(model: SpinBosonModel, rank: Optional[int]) -> KslConfig:
    params = model.params
    return KslConfig(
        dt=params.dt,
        rank=rank if rank is not None else params.tt_rank,
        order=params.ksl_order,
        krylov_tol=params.krylov_tol,
    )


def run_tt_trajectories(
    model: SpinBosonModel,
    states: Iterable[ElectronicState] = ALL_STATES,
    rank: Optional[int] = None,
    n_steps: Optional[int] = None,
    jobs: int = 1,
) -> Dict[ElectronicState, np.ndarray]:
    """Propagate the requested initial states; independent runs go to a thread pool."""
    states = [ElectronicState.parse(s) for s in states]
    n_steps = model.params.n_steps if n_steps is None else n_steps
    cfg = _ksl_config(model, rank)
    hamiltonian = build_theta_hamiltonian(model)

    def run(state: ElectronicState) -> np.ndarray:
        started = time.perf_counter()
        try:
            result = run_tt_trajectory(hamiltonian, initial_state(model, state), cfg, n_steps)
        except KslIntegrationError as e:
            raise PropagationError(f"TT propagation from state {state.value} failed: {e}")
        logger.info(
            "TT trajectory %s: %d steps at rank %d in %.2fs",
            state.value, n_steps, cfg.rank, time.perf_counter() - started,
        )
        return result

    if jobs <= 1 or len(states) <= 1:
        return {state: run(state) for state in states}
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        results = list(pool.map(run, states))
    return dict(zip(states, results))


def required_initial_states(gqme_type) -> Tuple[ElectronicState, ...]:
    """Initial electronic states a GQME type needs propagated.

    Accepts a GqmeType or its tag string.
    """
    tag = getattr(gqme_type, "value", str(gqme_type))
    table = {
        "Full": ALL_STATES,
        "PopulationsOnly": (ElectronicState.D, ElectronicState.A),
        "DonorOnly": (ElectronicState.D,),
        "AcceptorOnly": (ElectronicState.D, ElectronicState.A),
        "Direct": (ElectronicState.D,),
    }
    if tag not in table:
        raise ValueError(f"Unknown GQME type '{tag}'")
    return table[tag]


def union_of_states(types: Sequence) -> Tuple[ElectronicState, ...]:
    wanted = set()
    for gqme_type in types:
        wanted.update(required_initial_states(gqme_type))
    return tuple(state for state in ALL_STATES if state in wanted)


def series_from_densities(
    densities: Dict[ElectronicState, np.ndarray],
    dt: float,
    metadata: Optional[dict] = None,
) -> PropagatorSeries:
    """Assemble a U-series from per-state reduced densities."""
    n_points = next(iter(densities.values())).shape[0]
    columns = {}
    if ElectronicState.D in densities:
        columns["DD"] = densities[ElectronicState.D].reshape(n_points, 4)
    if ElectronicState.A in densities:
        columns["AA"] = densities[ElectronicState.A].reshape(n_points, 4)
    if all(state in densities for state in ALL_STATES):
        columns.update(
            assemble_offdiagonal_initial(
                u_dd=columns["DD"],
                u_aa=columns["AA"],
                u_plus=densities[ElectronicState.PLUS].reshape(n_points, 4),
                u_y=densities[ElectronicState.Y].reshape(n_points, 4),
            )
        )
    metadata = dict(metadata or {})
    metadata["columns"] = ",".join(label for label in ("DD", "DA", "AD", "AA") if label in columns)
    return PropagatorSeries(dt=dt, entries=stack_columns(columns, n_points), metadata=metadata)


def compute_U_series(
    model: SpinBosonModel,
    backend=None,
    states: Optional[Iterable] = None,
    rank: Optional[int] = None,
    n_steps: Optional[int] = None,
    jobs: int = 1,
) -> PropagatorSeries:
    """Electronic propagator series U(t) for a spin-boson model.

    Args:
        model: Model with discretized bath
        backend: "tt" or "dense" (default: model.params.backend)
        states: Subset of initial states for the TT backend (default: all four)
        rank: Manifold rank override for the TT backend
        n_steps: Number of steps (default: round(t_final / dt))
        jobs: Worker threads for independent trajectories

    Returns:
        PropagatorSeries; columns whose initial states were not run are NaN

    Raises:
        PropagationError: If a trajectory fails or produces non-finite values
        DenseLimitError: If the dense backend is requested beyond its limit
    """
    backend = Backend(backend) if backend is not None else model.params.backend
    if backend == Backend.DENSE:
        return propagate_dense(model, n_steps=n_steps)

    chosen = ALL_STATES if states is None else tuple(ElectronicState.parse(s) for s in states)
    effective_rank = rank if rank is not None else model.params.tt_rank
    densities = run_tt_trajectories(model, chosen, rank=effective_rank, n_steps=n_steps, jobs=jobs)
    series = series_from_densities(
        densities,
        model.params.dt,
        metadata={
            "backend": "tt",
            "model_fingerprint": model.fingerprint(),
            "rank": effective_rank,
            "n_fock": model.params.n_fock,
            "n_modes": model.n_modes,
            "epsilon": model.params.epsilon,
            "gamma": model.params.gamma_c,
        },
    )
    present = [liouville_index(label) for label in series.metadata["columns"].split(",")]
    if not np.all(np.isfinite(series.entries[:, :, present])):
        raise PropagationError("U-series contains non-finite entries")
    return series


def density_from_series(series: PropagatorSeries, sigma0: np.ndarray) -> np.ndarray:
    """sigma(t) = U(t) sigma0 as (N, 2, 2) matrices."""
    return series.apply(sigma0)


def direct_sigma_z(series: PropagatorSeries) -> np.ndarray:
    """sigma_z(t) = U_{DD,DD} - U_{AA,DD} for the system started in D."""
    sigma = density_from_series(series, np.diag([1.0, 0.0]))
    return np.real(sigma[:, 0, 0] - sigma[:, 1, 1])
