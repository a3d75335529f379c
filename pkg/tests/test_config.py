import numpy as np
import pytest

from heliumgl.config import ConfigError, RunConfig, load, loads, parse_field

ROOT_CONFIGS = ("default.ini", "gauge.ini", "phase_lambda05.ini", "unstable.ini")


def test_parse_field_forms():
    assert parse_field("0.25") == 0.25
    assert np.array_equal(parse_field("0.1, 0, -2"), [0.1, 0.0, -2.0])
    assert parse_field("cosine mean=0.5 amplitude=0.2") == {
        "profile": "cosine", "mean": 0.5, "amplitude": 0.2}
    with pytest.raises(ValueError):
        parse_field("1, 2")
    with pytest.raises(ValueError):
        parse_field("cosine mean")


def test_empty_config_gives_defaults():
    cfg = loads("")
    assert isinstance(cfg, RunConfig)
    assert cfg.grid.shape == (64,) and cfg.step.dt == 1e-3 and cfg.params.lam == 0.1


def test_sections_map_to_objects():
    cfg = loads("""
[params]
lambda = 0.5
g = 0, -1, 0
[grid]
dim = 2
nx = 8
ny = 4
lx = 1.0
[step]
dt = 2e-3
steps = 10
pinned = theta, p
[init]
phi = random-smooth mean=0.4
seed = 7
[output]
prefix = demo
""")
    assert cfg.params.lam == 0.5 and cfg.params.g == (0.0, -1.0, 0.0)
    assert cfg.grid.shape == (8, 4) and cfg.grid.extent == (1.0, 0.5)
    assert cfg.step.t_end == pytest.approx(0.02) and cfg.step.pinned == {"theta", "p"}
    assert cfg.init["phi"]["seed"] == 7 and cfg.prefix == "demo"


def test_unknown_keys_are_listed():
    with pytest.raises(ConfigError) as exc:
        loads("[params]\nlambada = 1\n[grid]\nnz = 3\n[extra]\na = 1\n")
    msgs = exc.value.messages
    assert any("lambada" in m for m in msgs) and any("nz" in m for m in msgs)
    assert any("[extra]" in m for m in msgs)


def test_value_errors_are_collected():
    with pytest.raises(ConfigError) as exc:
        loads("[step]\ndt = 1e-3\nsteps = 5\nt_end = 1\n[grid]\ndim = 3\n")
    assert len(exc.value.messages) == 2
    with pytest.raises(ConfigError):
        loads("[step]\npinned = phi_s\n")
    with pytest.raises(ConfigError):
        loads("[params]\nomega_bc = 1, 2\n")


@pytest.mark.parametrize("name", ROOT_CONFIGS)
def test_shipped_configs_load(name, configs_dir):
    cfg = load(configs_dir / name)
    assert cfg.source.endswith(name)
