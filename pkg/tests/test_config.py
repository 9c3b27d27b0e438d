import pytest

from dft_forge.config import CliConfig, ConfigError, read_config_file, resolve


def test_defaults():
    cfg = resolve({}, env={})
    assert cfg == CliConfig()
    assert cfg.k == 5 and cfg.equiv_stimuli == 1024 and cfg.equiv_cycles == 32


def test_precedence(tmp_path):
    path = tmp_path / "c.toml"
    path.write_text('[dft_forge]\nseed = 3\njobs = 2\nk = 4\nout_dir = "from_file"\n')
    env = {"DFT_FORGE_JOBS": "7", "DFT_FORGE_K": "6"}
    cfg = resolve({"k": 9, "seed": None}, env=env, config_path=str(path))
    assert (cfg.seed, cfg.jobs, cfg.k, cfg.out_dir) == (3, 7, 9, "from_file")


def test_config_path_from_env(tmp_path):
    path = tmp_path / "c.json"
    path.write_text('{"epochs": 12, "llm_timeout": 5}')
    cfg = resolve({}, env={"DFT_FORGE_CONFIG": str(path)})
    assert cfg.epochs == 12 and cfg.llm_timeout == 5.0


def test_token_is_never_configuration():
    cfg = resolve({}, env={"DFT_FORGE_LLM_TOKEN": "sekrit"})
    assert "sekrit" not in repr(cfg) and "sekrit" not in str(cfg.to_dict())


def test_errors(tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text("seed = 1\nwhat = 2\n")
    with pytest.raises(ConfigError, match="what"):
        read_config_file(bad)
    broken = tmp_path / "broken.toml"
    broken.write_text("seed = = 1")
    with pytest.raises(ConfigError, match="parse"):
        read_config_file(broken)
    with pytest.raises(ConfigError, match="read"):
        read_config_file(tmp_path / "absent.toml")
    with pytest.raises(ConfigError, match="seed"):
        resolve({}, env={"DFT_FORGE_SEED": "many"})
