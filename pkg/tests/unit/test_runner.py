"""Unit tests for result files and the experiment runner."""

import json

import numpy as np
import pytest

from lclab.config.settings import validate_config
from lclab.runner import CSV_SCHEMA, ExperimentResult, read_csv, render_csv, render_json, run, write_csv


def _result(**overrides):
    fields = dict(
        experiment="edge-tw",
        config={"seed": 1},
        rows=[{"trial": 0, "seed": 5, "rescaled": -1.5}, {"trial": 1, "seed": 6, "rescaled": float("nan")}],
        aggregates={"ks_tw1": np.float64(0.12), "mean": float("inf")},
        verdicts={"tracy_widom": False},
        series={"rescaled": np.array([-1.5, 0.25])},
    )
    fields.update(overrides)
    return ExperimentResult(**fields)


class TestFiles:
    """CSV and JSON rendering."""

    def test_csv_header_line(self):
        """The first line names the schema, experiment and columns."""
        first = render_csv(_result()).splitlines()[0]
        assert first == f"# schema={CSV_SCHEMA} experiment=edge-tw columns=trial,seed,rescaled"

    def test_read_csv_roundtrip(self, tmp_path):
        """read_csv skips the header and keeps NaN cells."""
        frame = read_csv(write_csv(_result(), tmp_path / "results.csv"))
        assert list(frame.columns) == ["trial", "seed", "rescaled"]
        assert frame["rescaled"].iloc[0] == -1.5
        assert np.isnan(frame["rescaled"].iloc[1])

    def test_read_csv_rejects_foreign_files(self, tmp_path):
        """Files without the schema line are refused."""
        path = tmp_path / "other.csv"
        path.write_text("a,b\n1,2\n")
        with pytest.raises(ValueError, match=CSV_SCHEMA):
            read_csv(path)

    def test_json_maps_non_finite_to_null(self):
        """NaN and infinities become null; numpy scalars become plain numbers."""
        document = json.loads(render_json(_result()))
        assert document["rows"][1]["rescaled"] is None
        assert document["aggregates"] == {"ks_tw1": 0.12, "mean": None}
        assert document["series"]["rescaled"] == [-1.5, 0.25]
        assert document["passed"] is False

    def test_failed_verdicts(self):
        """passed is the conjunction of all verdicts."""
        result = _result(verdicts={"a": True, "b": False})
        assert not result.passed
        assert result.failed_verdicts == ["b"]
        assert _result(verdicts={"a": True}).passed


class TestRun:
    """End-to-end execution of a small experiment."""

    def _config(self, tmp_path, **extra):
        data = {"experiment": "mp-check", "M": 10, "N": 20, "trials": 3, "seed": 42, "output_dir": str(tmp_path)}
        data.update(extra)
        return validate_config(data)

    def test_writes_both_files(self, tmp_path):
        """results.csv and results.json land in the output directory."""
        result = run(self._config(tmp_path))
        assert sorted(p.name for p in result.files) == ["results.csv", "results.json"]
        frame = read_csv(tmp_path / "results.csv")
        assert len(frame) == 3
        assert list(frame["trial"]) == [0, 1, 2]
        document = json.loads((tmp_path / "results.json").read_text())
        assert document["experiment"] == "mp-check"
        assert set(document["verdicts"]) == {"global_law", "self_consistent", "identities", "stieltjes_inversion"}

    def test_csv_independent_of_worker_count(self, tmp_path):
        """Rows depend on the seed only, not on threads."""
        serial = render_csv(run(self._config(tmp_path, threads=1), write=False))
        parallel = render_csv(run(self._config(tmp_path, threads=3), write=False))
        assert serial == parallel

    def test_seed_changes_rows(self, tmp_path):
        """A different seed gives different draws."""
        first = run(self._config(tmp_path), write=False).rows
        second = run(self._config(tmp_path, seed=43), write=False).rows
        assert first[0]["lambda_max"] != second[0]["lambda_max"]

    def test_analytic_checks_pass(self, tmp_path):
        """The closed-form identities hold regardless of the draw."""
        verdicts = run(self._config(tmp_path), write=False).verdicts
        assert verdicts["self_consistent"]
        assert verdicts["identities"]
        assert verdicts["stieltjes_inversion"]
