import pytest
import yaml

from lindsector import config as cfgmod
from lindsector.config import ConfigError, RunConfig


def test_defaults_validate():
    cfg = RunConfig().validate()
    assert cfg.model.family == "btc" and cfg.model.N == 20


def test_round_trip_default_and_presets():
    for cfg in [RunConfig()] + [cfgmod.load(preset=name) for name in cfgmod.preset_names()]:
        assert cfgmod.loads(cfg.dump()) == cfg


def test_presets_available():
    assert cfgmod.preset_names() == ["fig1", "fig2", "fig3", "fig3_before", "fig4", "fig5"]
    with pytest.raises(ConfigError):
        cfgmod.preset_dict("fig9")


def test_fig1_grid_expands_to_21_points():
    cfg = cfgmod.load(preset="fig1")
    assert len(cfg.sweep.xi) == 21
    assert cfg.sweep.xi[0] == 0.5 and cfg.sweep.xi[-1] == 1.5
    assert cfg.sweep.xi[5] == 0.75


def test_layering_order(tmp_path):
    path = tmp_path / "run.yaml"
    path.write_text(yaml.safe_dump({"model": {"N": 12, "xi": 0.9}, "k_cap": 2}))
    cfg = cfgmod.load(path, preset="fig3", overrides={"model": {"N": 7}})
    assert cfg.model.N == 7  # flag beats file
    assert cfg.model.xi == 0.9  # file beats preset
    assert cfg.model.omega_c == 1.0  # preset beats default
    assert cfg.k_cap == 2


@pytest.mark.parametrize(
    "text",
    [
        "model: {family: maser}",
        "model: {xi: -1.0}",
        "model: {gamma: 0.0}",
        "model: {frame: tilted}",
        "model: {N: 0}",
        "model: {wavelength: 3}",
        "colour: red",
        "sweep: {N: []}",
        "correlate: {n_tau: 0}",
        "correlate: {kinds: [C3]}",
        "output: {format: xml}",
        "k_cap: -1",
        "workers: 0",
        "sweep: {xi: {start: 1.0, stop: 0.5, step: 0.1}}",
        "[1, 2]",
        "model: {",
    ],
)
def test_invalid_configs_rejected(text):
    with pytest.raises(ConfigError):
        cfgmod.loads(text)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        cfgmod.load(tmp_path / "absent.yaml")


def test_expand_grid_forms():
    assert cfgmod.expand_grid([1, 2]) == [1, 2]
    assert cfgmod.expand_grid(3) == [3]
    assert cfgmod.expand_grid({"start": 0, "stop": 0.2, "step": 0.1}) == [0.0, 0.1, 0.2]


def test_model_params_for_builder():
    cfg = cfgmod.loads("model: {family: scully_lamb, N: 4}")
    params = cfg.model.params()
    assert params["beta"] == 0.005 and params["N"] == 4
    assert "beta" not in RunConfig().model.params()
