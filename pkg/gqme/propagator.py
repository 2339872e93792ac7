"""
RK4 propagation of the GQMEs:

    d sigma/dt = -i <L> sigma - int_0^{min(t, t_mem)} K(tau) sigma(t - tau) dtau + I(t)

The memory integral uses trapezoidal quadrature over the stored history on
the kernel grid. At the half-step stages it is the average of the
integrals at t_n and t_{n+1}, the latter closed with the stage estimate.
"""

import logging
from typing import Optional

import numpy as np

from spin_boson.models import ElectronicLiouvillian

from .models import GqmeResult, GqmeType, InhomSeries, KernelSeries

logger = logging.getLogger(__name__)


class GqmeIntegrationError(RuntimeError):
    """Raised when a GQME propagation cannot run or blows up."""
    pass


def default_sigma0(gqme_type, gamma: str = "D") -> np.ndarray:
    """Initial subset vector for the product state with population gamma."""
    gqme_type = GqmeType.parse(gqme_type)
    sigma0 = np.zeros(gqme_type.size, dtype=complex)
    label = f"{gamma}{gamma}".upper()
    if label in gqme_type.labels:
        sigma0[gqme_type.labels.index(label)] = 1.0
    return sigma0


def _liouvillian_block(gqme_type: GqmeType, liouvillian) -> np.ndarray:
    if liouvillian is None:
        if gqme_type == GqmeType.FULL:
            raise GqmeIntegrationError("The Full GQME needs the projected Liouvillian")
        return np.zeros((gqme_type.size, gqme_type.size), dtype=complex)
    if not isinstance(liouvillian, ElectronicLiouvillian):
        liouvillian = ElectronicLiouvillian(matrix=np.asarray(liouvillian, dtype=complex))
    return liouvillian.restrict(gqme_type.subset)


class _MemoryHistory:
    """Trapezoidal memory integrals over a sliding window of n_mem kernel steps."""

    def __init__(self, kernel: np.ndarray, n_mem: int, dt: float):
        self.kernel = kernel
        self.n_mem = n_mem
        self.dt = dt
        size = kernel.shape[1]
        # K_1 .. K_{n_mem} side by side, shape (s, n_mem * s).
        self.lagged = kernel[1:n_mem + 1].transpose(1, 0, 2).reshape(size, n_mem * size)

    def history(self, sigma: np.ndarray, n: int) -> Optional[np.ndarray]:
        """dt * sum_{m=1}^{L} w_m K_m sigma_{n-m}, L = min(n, n_mem), end weight 1/2.

        Returns None when the window is empty.
        """
        window = min(n, self.n_mem)
        if window == 0:
            return None
        size = self.kernel.shape[1]
        recent = sigma[n - window:n][::-1].reshape(window * size)
        total = self.lagged[:, :window * size] @ recent
        total -= 0.5 * self.kernel[window] @ sigma[n - window]
        return self.dt * total

    def integral(self, history: Optional[np.ndarray], newest: np.ndarray) -> np.ndarray:
        if history is None:
            return np.zeros_like(newest)
        return history + 0.5 * self.dt * self.kernel[0] @ newest


def _source(inhom: Optional[InhomSeries], n: int, size: int, warned: list) -> np.ndarray:
    if inhom is None:
        return np.zeros(size, dtype=complex)
    if n < inhom.n_points:
        return inhom.entries[n]
    if not warned:
        logger.warning(
            "Inhomogeneous term ends at t = %.6g; holding its last value beyond",
            inhom.times[-1],
        )
        warned.append(True)
    return inhom.entries[-1]


def propagate_gqme(
    kernel: KernelSeries,
    liouvillian=None,
    inhom: Optional[InhomSeries] = None,
    sigma0: Optional[np.ndarray] = None,
    t_final: Optional[float] = None,
    memory_time: Optional[float] = None,
    gqme_type=None,
    gamma: Optional[str] = None,
) -> GqmeResult:
    """Integrate one GQME with RK4 on the kernel grid.

    Args:
        kernel: Memory kernel; its type selects the equation unless gqme_type is given
        liouvillian: Projected Liouvillian (required for Full)
        inhom: Inhomogeneous term (required when the type needs one)
        sigma0: Initial subset vector (default: product state in D)
        t_final: Final time (default: end of the kernel grid)
        memory_time: Kernel truncation time (default: end of the kernel grid)
        gamma: Initial population "D" or "A" (default: the kernel's initial_state, else "D")

    Returns:
        GqmeResult with the subset elements on the grid

    Raises:
        GqmeIntegrationError: If the kernel grid is shorter than memory_time,
            a required input is missing, or the solution becomes non-finite
    """
    gqme_type = GqmeType.parse(gqme_type if gqme_type is not None else kernel.gqme_type)
    if gqme_type != kernel.gqme_type:
        raise GqmeIntegrationError(
            f"Kernel is of type {kernel.gqme_type.value}, cannot drive a {gqme_type.value} GQME"
        )
    dt = kernel.dt
    size = gqme_type.size
    grid_end = (kernel.n_points - 1) * dt

    memory_time = grid_end if memory_time is None else float(memory_time)
    n_mem = int(round(memory_time / dt))
    if n_mem > kernel.n_points - 1:
        raise GqmeIntegrationError(
            f"Kernel grid ends at {grid_end:.6g}, shorter than memory time {memory_time:.6g}"
        )
    t_final = grid_end if t_final is None else float(t_final)
    n_steps = int(round(t_final / dt))

    gamma = str(gamma or kernel.metadata.get("initial_state", "D")).upper()
    if inhom is None and gqme_type.needs_inhom(gamma):
        raise GqmeIntegrationError(f"The {gqme_type.value} GQME needs its inhomogeneous term")
    if inhom is not None and abs(inhom.dt - dt) > 1e-12 * dt:
        raise GqmeIntegrationError(f"Inhomogeneous term dt {inhom.dt} differs from kernel dt {dt}")

    generator = -1j * _liouvillian_block(gqme_type, liouvillian)
    sigma0 = default_sigma0(gqme_type, gamma) if sigma0 is None else np.asarray(sigma0, dtype=complex)
    if sigma0.shape != (size,):
        raise GqmeIntegrationError(f"sigma0 must have {size} elements for {gqme_type.value}")
    sigma = np.zeros((n_steps + 1, size), dtype=complex)
    sigma[0] = sigma0

    memory = _MemoryHistory(kernel.entries, n_mem, dt)
    warned: list = []
    history_now = memory.history(sigma, 0)
    for n in range(n_steps):
        current = sigma[n]
        source_now = _source(inhom, n, size, warned)
        source_next = _source(inhom, n + 1, size, warned)
        source_half = 0.5 * (source_now + source_next)

        history_next = memory.history(sigma, n + 1)
        memory_now = memory.integral(history_now, current)

        def rate(state, source, memory_term):
            return generator @ state - memory_term + source

        def half_memory(state):
            return 0.5 * (memory_now + memory.integral(history_next, state))

        k1 = rate(current, source_now, memory_now)
        stage = current + 0.5 * dt * k1
        k2 = rate(stage, source_half, half_memory(stage))
        stage = current + 0.5 * dt * k2
        k3 = rate(stage, source_half, half_memory(stage))
        stage = current + dt * k3
        k4 = rate(stage, source_next, memory.integral(history_next, stage))

        sigma[n + 1] = current + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(sigma[n + 1])):
            raise GqmeIntegrationError(
                f"{gqme_type.value} GQME became non-finite at t = {(n + 1) * dt:.6g}"
            )
        history_now = history_next

    logger.debug(
        "%s GQME: %d RK4 steps, memory window %d steps", gqme_type.value, n_steps, n_mem
    )
    metadata = dict(kernel.metadata)
    metadata["gqme_type"] = gqme_type.value
    metadata["initial_state"] = gamma
    return GqmeResult(
        dt=dt,
        kind=gqme_type.value,
        labels=gqme_type.labels,
        sigma=sigma,
        memory_time=n_mem * dt,
        metadata=metadata,
    )


def combine_single_population(donor: GqmeResult, acceptor: GqmeResult) -> GqmeResult:
    """Join DonorOnly and AcceptorOnly results into one (DD, AA) result.

    Each scalar equation alone does not conserve the trace; the joined
    result's trace_deviation() measures how well the pair does.
    """
    if donor.kind != GqmeType.DONOR_ONLY.value or acceptor.kind != GqmeType.ACCEPTOR_ONLY.value:
        raise GqmeIntegrationError(
            f"Expected DonorOnly and AcceptorOnly results, got {donor.kind} and {acceptor.kind}"
        )
    if abs(donor.dt - acceptor.dt) > 1e-12 * donor.dt:
        raise GqmeIntegrationError(f"Time steps differ: {donor.dt} vs {acceptor.dt}")
    n_points = min(donor.n_points, acceptor.n_points)
    sigma = np.stack([donor.element("DD")[:n_points], acceptor.element("AA")[:n_points]], axis=1)
    memory_times = [t for t in (donor.memory_time, acceptor.memory_time) if t is not None]
    metadata = {
        key: value
        for key, value in donor.metadata.items()
        if key == "model_fingerprint" or "fingerprint" not in key
    }
    metadata.update(donor_memory_time=donor.memory_time, acceptor_memory_time=acceptor.memory_time)
    combined = GqmeResult(
        dt=donor.dt,
        kind="DonorAcceptor",
        labels=("DD", "AA"),
        sigma=sigma,
        memory_time=max(memory_times) if memory_times else None,
        metadata=metadata,
    )
    logger.info("Single-population pair trace deviation %.3e", combined.trace_deviation())
    return combined
