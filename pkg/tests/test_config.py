from __future__ import annotations

from pathlib import Path

import pytest
import yaml

from conftest import MODEL1, make_params
from spin_boson import Backend, ConfigError, load_params, params_from_mapping, parse_override

CONFIG_DIR = Path(__file__).resolve().parents[1] / "configs"


def write_config(tmp_path, **overrides):
    values = dict(MODEL1)
    values.update(overrides)
    path = tmp_path / "model.yaml"
    path.write_text(yaml.safe_dump(values), encoding="utf-8")
    return path


def test_load_params_reads_yaml(tmp_path):
    params = load_params(write_config(tmp_path, tt_rank=12))

    assert params.epsilon == 1.0
    assert params.gamma_c == 1.0
    assert params.n_modes == 60
    assert params.tt_rank == 12
    assert params.backend == Backend.TT
    assert params.n_steps == int(round(15.0 / 1.50083e-3))


def test_overrides_apply_before_validation(tmp_path):
    params = load_params(
        write_config(tmp_path),
        overrides=["n_modes=2", "backend=dense"],
        extra={"tt_rank": 7, "backend": None},
    )

    assert params.n_modes == 2
    assert params.backend == Backend.DENSE
    assert params.tt_rank == 7


def test_missing_key_is_named(tmp_path):
    values = dict(MODEL1)
    del values["xi"]
    path = tmp_path / "model.yaml"
    path.write_text(yaml.safe_dump(values), encoding="utf-8")

    with pytest.raises(ConfigError, match="missing required config key 'xi'"):
        load_params(path)


def test_unknown_key_is_rejected(tmp_path):
    with pytest.raises(ConfigError, match="unknown config key 'temperature'"):
        load_params(write_config(tmp_path, temperature=300))


@pytest.mark.parametrize("key,value", [("beta", 0.0), ("n_fock", 1), ("dt", -1e-3), ("xi", -0.1)])
def test_invariants_are_enforced(key, value):
    values = dict(MODEL1)
    values[key] = value

    with pytest.raises(ConfigError, match=key):
        params_from_mapping(values)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_params(tmp_path / "absent.yaml")


def test_nested_values_are_rejected(tmp_path):
    path = tmp_path / "model.yaml"
    path.write_text("epsilon: [1, 2]\n", encoding="utf-8")

    with pytest.raises(ConfigError, match="scalar"):
        load_params(path)


def test_parse_override():
    assert parse_override("dt=0.01") == {"dt": 0.01}
    assert parse_override(" backend = tt") == {"backend": "tt"}
    with pytest.raises(ConfigError):
        parse_override("dt")


def test_dense_limit_from_environment(monkeypatch):
    monkeypatch.setenv("GQME_DENSE_LIMIT", "1234")

    assert params_from_mapping(MODEL1).dense_limit == 1234


def test_fingerprint_ignores_backend_knobs():
    base = make_params()

    assert make_params(tt_rank=50, backend="dense").fingerprint() == base.fingerprint()
    assert make_params(xi=0.2).fingerprint() != base.fingerprint()
    assert make_params(dt=1e-3).fingerprint() != base.fingerprint()


@pytest.mark.parametrize("name", ["model1", "model2", "model3", "model4", "model6"])
def test_shipped_models_load(name):
    params = load_params(CONFIG_DIR / f"{name}.yaml")

    assert params.n_modes == 60
    assert params.dt == pytest.approx(1.50083e-3)
    assert params.n_fock == 10


def test_model_table_values():
    model4 = load_params(CONFIG_DIR / "model4.yaml")
    model6 = load_params(CONFIG_DIR / "model6.yaml")

    assert (model4.xi, model4.omega_c, model4.omega_max) == (0.4, 2.0, 10)
    assert (model6.epsilon, model6.xi, model6.omega_c, model6.omega_max) == (0.0, 0.2, 2.5, 12)


@pytest.mark.parametrize("name", ["rabi", "dephasing", "model1_desk"])
def test_desk_configs_load(name):
    params = load_params(CONFIG_DIR / f"{name}.yaml")

    assert params.n_modes <= 8
