"""Unit tests for experiment configuration."""

import json
import os
from unittest.mock import patch

import pytest

from lclab.config.settings import ExperimentConfig, load_config, validate_config
from lclab.errors import ConfigError
from lclab.rmt.sampling import SamplerSpec


def _base(tmp_path, **extra):
    data = {"experiment": "mp-check", "M": 20, "N": 40, "output_dir": str(tmp_path / "out")}
    data.update(extra)
    return data


class TestValidation:
    """Cross-field validation."""

    def test_minimal_config(self, tmp_path):
        """Defaults fill everything but the experiment and dimensions."""
        config = validate_config(_base(tmp_path))
        assert config.dims == (20, 40)
        assert config.ratio == 0.5
        assert config.trials == 10
        assert config.convention == "companion"
        assert config.grid.eta_max == 1.0

    def test_y_gives_M(self, tmp_path):
        """M = round(y N) when only y is given."""
        data = _base(tmp_path, y=0.25)
        del data["M"]
        assert validate_config(data).dims == (10, 40)

    def test_unknown_key_rejected(self, tmp_path):
        """extra='forbid' turns typos into errors."""
        with pytest.raises(ConfigError) as exc:
            validate_config(_base(tmp_path, trails=5))
        assert any(problem.startswith("trails") for problem in exc.value.problems)

    def test_all_problems_reported(self, tmp_path):
        """Every violated field appears in one error."""
        with pytest.raises(ConfigError) as exc:
            validate_config(_base(tmp_path, trials=0, seed=-1, threads=0))
        joined = "\n".join(exc.value.problems)
        assert "trials" in joined
        assert "seed" in joined
        assert "threads" in joined
        assert len(exc.value.problems) == 3

    def test_square_ratio_rejected(self, tmp_path):
        """M = N is excluded."""
        with pytest.raises(ConfigError, match="M/N = 1"):
            validate_config(_base(tmp_path, M=40))

    def test_inconsistent_y(self, tmp_path):
        """M, N and y must agree."""
        with pytest.raises(ConfigError, match="disagrees"):
            validate_config(_base(tmp_path, y=0.3))

    def test_missing_dimensions(self, tmp_path):
        """N is always required."""
        data = _base(tmp_path)
        del data["N"]
        with pytest.raises(ConfigError, match="N: required"):
            validate_config(data)

    def test_short_sweep_rejected(self, tmp_path):
        """A scaling fit needs at least three sizes."""
        with pytest.raises(ConfigError, match="at least 3"):
            validate_config(_base(tmp_path, N_values=[64, 128]))

    def test_lp_sampler_needs_p(self, tmp_path):
        """lp_ball without p is reported against sampler.p."""
        with pytest.raises(ConfigError, match="sampler.p"):
            validate_config(_base(tmp_path, sampler={"kind": "lp_ball"}))

    def test_hit_and_run_burn_in_floor(self, tmp_path):
        """burn_in below floor x M is rejected."""
        with pytest.raises(ConfigError, match="burn_in"):
            validate_config(_base(tmp_path, sampler={"kind": "hit_and_run", "burn_in": 50}))

    def test_spike_threshold(self, tmp_path):
        """Spike runs need supercritical spikes and a large pilot."""
        with pytest.raises(ConfigError) as exc:
            validate_config(_base(tmp_path, experiment="spike", spikes=[0.5], pilot=100))
        joined = "\n".join(exc.value.problems)
        assert "BBP" in joined
        assert "pilot" in joined

    def test_spike_needs_a_spike(self, tmp_path):
        """An empty spike list is rejected for the spike experiment."""
        with pytest.raises(ConfigError, match="at least one d"):
            validate_config(_base(tmp_path, experiment="spike"))

    def test_output_dir_must_be_a_directory(self, tmp_path):
        """A file in place of the output directory is rejected."""
        blocker = tmp_path / "file"
        blocker.write_text("x")
        with pytest.raises(ConfigError, match="not a directory"):
            validate_config(_base(tmp_path, output_dir=str(blocker)))

    def test_phi_star_range(self, tmp_path):
        """phi* lies in (0, 2/3]."""
        with pytest.raises(ConfigError, match="phi_star"):
            validate_config(_base(tmp_path, grid={"phi_star": 0.9}))


class TestHelpers:
    """Derived views of a config."""

    def test_sampler_spec(self, tmp_path):
        """The sampler section becomes a SamplerSpec of dimension M."""
        config = validate_config(_base(tmp_path, sampler={"kind": "lp_ball", "p": 1.5}))
        spec = config.sampler_spec()
        assert isinstance(spec, SamplerSpec)
        assert spec.dimension == 20
        assert spec.p == 1.5

    def test_dims_for_keeps_ratio(self, tmp_path):
        """Other sizes keep M/N."""
        assert validate_config(_base(tmp_path)).dims_for(100) == (50, 100)

    def test_workers_from_environment(self, tmp_path):
        """LCLAB_THREADS applies when threads is unset."""
        config = validate_config(_base(tmp_path))
        with patch.dict(os.environ, {"LCLAB_THREADS": "3"}):
            assert config.workers == 3
        assert validate_config(_base(tmp_path, threads=2)).workers == 2


class TestLoadConfig:
    """Reading JSON files."""

    def test_experiment_filled_from_command(self, tmp_path):
        """A config without a name takes the command's."""
        data = _base(tmp_path)
        del data["experiment"]
        path = tmp_path / "config.json"
        path.write_text(json.dumps(data))
        config = load_config(path, experiment="rigidity", seed=11)
        assert isinstance(config, ExperimentConfig)
        assert config.experiment == "rigidity"
        assert config.seed == 11

    def test_experiment_mismatch(self, tmp_path):
        """The file and the command must name the same experiment."""
        path = tmp_path / "config.json"
        path.write_text(json.dumps(_base(tmp_path)))
        with pytest.raises(ConfigError, match="command is 'spike'"):
            load_config(path, experiment="spike")

    def test_invalid_json(self, tmp_path):
        """Malformed JSON is a configuration error."""
        path = tmp_path / "config.json"
        path.write_text("{not json")
        with pytest.raises(ConfigError, match="not valid JSON"):
            load_config(path)

    def test_missing_file(self, tmp_path):
        """Unreadable files are configuration errors."""
        with pytest.raises(ConfigError, match="cannot read"):
            load_config(tmp_path / "absent.json")

    def test_non_object(self, tmp_path):
        """The document must be a JSON object."""
        path = tmp_path / "config.json"
        path.write_text("[1, 2]")
        with pytest.raises(ConfigError, match="JSON object"):
            load_config(path)

    def test_overrides_are_validated(self, tmp_path):
        """Command-line overrides pass through validation; None leaves the file value."""
        path = tmp_path / "config.json"
        path.write_text(json.dumps(_base(tmp_path, trials=4)))
        config = load_config(path, seed=7, trials=None)
        assert config.seed == 7
        assert config.trials == 4
        with pytest.raises(ConfigError):
            load_config(path, trials=0)
