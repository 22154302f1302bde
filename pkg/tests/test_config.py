from pathlib import Path

import pytest
import yaml

from narrative_dynamics.config import DEFAULT_THRESHOLDS, ConfigError, apply_env, normalize, validate_config


def write(tmp_path: Path, data: dict) -> Path:
    (tmp_path / "c.jsonl").write_text("", encoding="utf-8")
    path = tmp_path / "run.yaml"
    path.write_text(yaml.safe_dump(data), encoding="utf-8")
    return path


MINIMAL = {"corpus": "c.jsonl", "window": {"start_date": "2022-03-01", "num_weeks": 8}}


def test_minimal_config_gets_defaults(tmp_path):
    cfg = validate_config(write(tmp_path, MINIMAL))
    assert dict(cfg.thresholds) == DEFAULT_THRESHOLDS
    assert cfg.corpus == (tmp_path / "c.jsonl",)
    assert cfg.window.period_boundary.isoformat() == "2022-04-01"
    assert cfg.out == tmp_path / "out" and cfg.seed == 42 and cfg.threads == 1


def test_percentile_out_of_range(tmp_path):
    with pytest.raises(ConfigError) as exc:
        validate_config(write(tmp_path, {**MINIMAL, "thresholds": {"indeg_pct": 140}}))
    assert exc.value.errors == ["thresholds.indeg_pct=140: percentile out of range"]


def test_all_errors_reported(tmp_path):
    data = {**MINIMAL, "thresholds": {"close_pct": -1, "min_freq": "many"}, "tokenizer": "morse", "bogus": 1}
    with pytest.raises(ConfigError) as exc:
        validate_config(write(tmp_path, data))
    errors = exc.value.errors
    assert len(errors) == 4
    assert any("close_pct" in e for e in errors) and any("min_freq" in e for e in errors)
    assert any("tokenizer" in e for e in errors) and any("'bogus'" in e for e in errors)


def test_lax_mode_warns_on_unknown_keys(tmp_path):
    cfg = validate_config(write(tmp_path, {**MINIMAL, "extra": True}), strict=False)
    assert cfg.warnings == ("unknown key 'extra'",)


def test_missing_required_and_paths(tmp_path):
    with pytest.raises(ConfigError) as exc:
        normalize({"corpus": "nope.jsonl"}, base_dir=tmp_path)
    assert len(exc.value.errors) == 2
    with pytest.raises(ConfigError):
        validate_config(tmp_path / "absent.yaml")
    bad = tmp_path / "bad.yaml"
    bad.write_text("[1, 2", encoding="utf-8")
    with pytest.raises(ConfigError):
        validate_config(bad)


def test_env_overrides(tmp_path):
    env = {"NARRDYN_THRESHOLDS__MIN_FREQ": "4", "NARRDYN_SEED": "7", "NARRDYN_PURE_PYTHON": "1", "OTHER": "x"}
    cfg = validate_config(write(tmp_path, MINIMAL), environ=env)
    assert cfg.t("min_freq") == 4 and cfg.seed == 7
    assert apply_env({}, {"NARRDYN_WINDOW__NUM_WEEKS": "6"}) == {"window": {"num_weeks": 6}}


def test_provenance_excludes_machine_details(tmp_path):
    a = validate_config(write(tmp_path, MINIMAL), overrides={"out": "/elsewhere", "threads": 8})
    b = validate_config(write(tmp_path, MINIMAL))
    assert a.digest() == b.digest()
    assert "out" not in a.provenance() and "threads" not in a.provenance()
