"""
Unit tests for settings and run configuration
"""
import pytest
from pydantic import ValidationError
from camforge.core.config import Settings
from camforge.core.exceptions import ParseError
from camforge.cli.options import load_run_config
from camforge.models.fsl import GatingInput
from camforge.models.run_config import RunConfig


@pytest.mark.unit
def test_settings_defaults():
    """Test library defaults"""
    settings = Settings(_env_file=None)

    assert settings.MU == 2.5
    assert settings.SIGMA == 5.0
    assert settings.LAMBDA == 0.2
    assert settings.SAMPLES == 10
    assert settings.STEP_SIZE == 0.01
    assert settings.ITERATIONS == 500
    assert settings.CORPUS_COUNT == 20


@pytest.mark.unit
def test_threads_from_environment(monkeypatch):
    """Test CAMFORGE_THREADS sets the parallelism cap"""
    monkeypatch.setenv("CAMFORGE_THREADS", "4")

    assert Settings(_env_file=None).THREADS == 4


@pytest.mark.unit
def test_threads_must_be_positive(monkeypatch):
    """Test CAMFORGE_THREADS < 1 is rejected"""
    monkeypatch.setenv("CAMFORGE_THREADS", "0")

    with pytest.raises(ValidationError):
        Settings(_env_file=None)


@pytest.mark.unit
@pytest.mark.parametrize("field,value", [("lambda", 1.5), ("sigma", 0.0), ("samples", 0), ("step", 0.0)])
def test_run_config_rejects_invalid_values(field, value):
    """Test lambda outside [0, 1], sigma <= 0, N < 1 and step <= 0"""
    with pytest.raises(ValidationError):
        RunConfig.model_validate({field: value})


@pytest.mark.unit
def test_refine_config_defaults_to_binomial_gating():
    """Test refinement uses binomial gating unless told otherwise"""
    config = RunConfig()

    assert config.refine_config().params.gating_input == GatingInput.BINOMIAL
    assert config.fsl_params().gating_input == GatingInput.MAXNORM
    assert RunConfig(gating="raw").refine_config().params.gating_input == GatingInput.RAW


@pytest.mark.unit
def test_flags_override_config_file(tmp_path):
    """Test defaults <- JSON file <- flags"""
    path = tmp_path / "run.json"
    path.write_text('{"lambda": 0.4, "mu": 1.5, "samples": 3}')

    config = load_run_config(str(path), mu=3.5, samples=None)

    assert config.lam == 0.4
    assert config.mu == 3.5
    assert config.samples == 3


@pytest.mark.unit
def test_config_file_parse_error_has_offset(tmp_path):
    """Test malformed JSON reports a byte offset"""
    path = tmp_path / "broken.json"
    path.write_text('{"mu": }')

    with pytest.raises(ParseError) as exc_info:
        load_run_config(str(path))

    assert exc_info.value.offset > 0


@pytest.mark.unit
def test_unknown_config_key():
    """Test unknown keys are rejected"""
    with pytest.raises(ValidationError):
        RunConfig.model_validate({"temperature": 1.0})
