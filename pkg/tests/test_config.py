import pytest

from offload_rl.config import Mode, config_from_dict, load_config, preset_names
from offload_rl.errors import ConfigError


def test_all_presets_load():
    names = preset_names()
    assert {"sweep", "heterogeneity", "bandwidth", "compare", "cross_model", "deploy"} <= set(names)
    for n in names:
        cfg = load_config(n)
        assert cfg.seeds and cfg.name == n


def test_presets_use_seeds_one_to_five():
    for n in ("heterogeneity", "bandwidth", "compare", "cross_model"):
        assert load_config(n).seeds == [1, 2, 3, 4, 5]


def test_load_from_file(tmp_path):
    f = tmp_path / "x.yaml"
    f.write_text("name: x\nmode: train\nseeds: [7]\ntrain: {rounds: 20}\nscenario: {preset: heterogeneity, rounds: 20}\n")
    cfg = load_config(f)
    assert cfg.mode is Mode.TRAIN and cfg.train.rounds == 20 and cfg.scenario.rounds == 20


@pytest.mark.parametrize("data, match", [
    ({"mode": "train"}, "name"),
    ({"name": "a", "mode": "fly"}, "mode"),
    ({"name": "a", "mode": "train", "seeds": []}, "seeds"),
    ({"name": "a", "mode": "train", "seeds": 3}, "seeds"),
    ({"name": "a", "mode": "train", "bogus": 1}, "unknown"),
    ({"name": "a", "mode": "train", "train": {"lr": 1}}, "unknown"),
    ({"name": "a", "mode": "train", "scenario": {"preset": "moon"}}, "preset"),
    ({"name": "a", "mode": "train", "scenario": {"model": "vgg19"}}, "model"),
    ({"name": "a", "mode": "compare"}, "checkpoint"),
    ({"name": "a", "mode": "cross-model", "checkpoint": "x"}, "target_model"),
    ({"name": "a", "mode": "train", "train": {"recluster": "never"}}, "recluster"),
])
def test_invalid_configs(data, match):
    with pytest.raises(ConfigError, match=match):
        config_from_dict(data)


def test_unknown_preset_and_bad_yaml(tmp_path):
    with pytest.raises(ConfigError):
        load_config("no_such_preset")
    f = tmp_path / "bad.yaml"
    f.write_text("name: [unclosed\n")
    with pytest.raises(ConfigError):
        load_config(f)


def test_overrides_and_checkpoint_paths(tmp_path):
    cfg = load_config("compare").with_overrides(seeds=["3"], output_dir=tmp_path)
    assert cfg.seeds == [3]
    assert cfg.checkpoint_path(3) == tmp_path / "heterogeneity" / "agent_seed3.npz"
    abs_cfg = cfg.with_overrides(checkpoint=str(tmp_path / "a{seed}.npz"))
    assert abs_cfg.checkpoint_path(2) == tmp_path / "a2.npz"
