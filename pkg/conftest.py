"""
Shared pytest fixtures.

Living at the repository root puts the packages on sys.path for the
tests under tests/.
"""

import pytest

from spin_boson import SpinBosonParams, build_model

MODEL1 = {
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
}


def make_params(**overrides) -> SpinBosonParams:
    """Model 1 parameters with selected keys replaced."""
    values = dict(MODEL1)
    values.update(overrides)
    return SpinBosonParams.model_validate(values)


@pytest.fixture
def params_factory():
    return make_params


@pytest.fixture
def rabi_model():
    """Isolated two-level system carried by one uncoupled mode."""
    return build_model(make_params(xi=0.0, n_modes=1, n_fock=4, dt=0.01, t_final=0.5, tt_rank=8))


@pytest.fixture
def one_mode_model():
    """Single coupled mode, small enough for the dense backend."""
    return build_model(make_params(xi=0.4, omega_c=2.0, omega_max=10.0, n_modes=1, n_fock=4, dt=0.01, t_final=0.4, tt_rank=16))


@pytest.fixture
def two_mode_model():
    return build_model(make_params(n_modes=2, n_fock=4, dt=0.01, t_final=0.3, tt_rank=16))


@pytest.fixture(scope="session")
def coupled_dense_inputs():
    """Dense U-series and PFIs of a strongly coupled two-mode bath."""
    from gqme import differentiate
    from spin_boson import projected_liouvillian
    from tfd import propagate_dense

    model = build_model(
        make_params(xi=0.4, omega_c=2.0, omega_max=10.0, n_modes=2, n_fock=5, dt=0.005, t_final=3.0)
    )
    series = propagate_dense(model)
    liouvillian = projected_liouvillian(model.params)
    return series, liouvillian, differentiate(series, liouvillian=liouvillian)
