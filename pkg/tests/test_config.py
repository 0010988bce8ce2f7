import pytest

from phonoinfo.config import ConfigFileError, PipelineConfig, flatten, parse_value


def test_defaults():
    cfg = PipelineConfig()
    assert cfg["mode"] == "strict" and cfg.strict
    assert cfg["surprisal.window"] == 10
    assert cfg.dsp().formant_ceiling == 5000.0
    assert cfg.model().n_layers == 12
    assert cfg.train().seed == 0


def test_load_nested_and_dotted(tmp_path):
    p = tmp_path / "c.toml"
    p.write_text('mode = "lenient"\n[paths]\naudio_dir = "wav"\n[model]\nn_layers = 2\n', encoding="utf-8")
    cfg = PipelineConfig.load(p)
    assert not cfg.strict
    assert cfg.path("paths.audio_dir") == tmp_path / "wav"
    assert cfg.model(vocab_size=7).vocab_size == 7 and cfg.model().n_layers == 2
    assert "paths.audio_dir" in cfg.explicit


def test_absolute_and_missing_paths(tmp_path):
    cfg = PipelineConfig({"paths.audio_dir": str(tmp_path)}, base_dir="/elsewhere")
    assert cfg.path("paths.audio_dir") == tmp_path
    assert cfg.path("paths.ipa_dir") is None


def test_unknown_key_and_bad_mode():
    with pytest.raises(ConfigFileError, match="bogus"):
        PipelineConfig({"bogus": 1})
    cfg = PipelineConfig({"mode": "loose"})
    with pytest.raises(ConfigFileError):
        cfg.strict


def test_bad_file(tmp_path):
    with pytest.raises(ConfigFileError):
        PipelineConfig.load(tmp_path / "none.toml")
    (tmp_path / "x.toml").write_text("a = ", encoding="utf-8")
    with pytest.raises(ConfigFileError):
        PipelineConfig.load(tmp_path / "x.toml")


def test_parse_value():
    assert parse_value("3") == 3
    assert parse_value("true") is True
    assert parse_value("[1, 2]") == [1, 2]
    assert parse_value("hello") == "hello"
    assert parse_value('"x y"') == "x y"


def test_flatten():
    assert flatten({"a": {"b": 1, "c": {"d": 2}}, "e": 3}) == {"a.b": 1, "a.c.d": 2, "e": 3}


def test_dump_round_trip(tmp_path):
    cfg = PipelineConfig({"paths.audio_dir": 'we"ird', "dsp.ceiling_grid": [4500.0, 5000.0], "jobs": 3})
    p = tmp_path / "d.toml"
    p.write_text(cfg.dump(), encoding="utf-8")
    back = PipelineConfig.load(p)
    for k, v in cfg.values.items():
        if v is not None:
            assert back[k] == (list(v) if isinstance(v, tuple) else v), k
    assert back.dsp().ceiling_grid == (4500.0, 5000.0)


def test_jobs_zero_means_all_cores():
    assert PipelineConfig({"jobs": 0}).jobs >= 1
    assert PipelineConfig({"jobs": 2}).jobs == 2
