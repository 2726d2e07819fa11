"""Unit tests for the TW1 oracle and table."""

import logging
import os
from unittest.mock import patch

import numpy as np
import pytest
from numpy.testing import assert_allclose

from lclab.errors import DomainError
from lclab.rmt import tw_dist
from lclab.rmt.tw_dist import (
    S_MAX,
    S_MIN,
    Tw1Table,
    build_tw1_table,
    load_tw1_table,
    read_tw1_table,
    set_tw1_table,
    tw1_cdf,
    tw1_density,
    tw1_mean,
    tw1_oracle_cdf,
    tw1_oracle_cdf_flagged,
    tw1_quantile,
    tw1_variance,
    write_tw1_table,
)

TW1_MEAN = -1.2065335745820
TW1_VARIANCE = 1.6077810345810


@pytest.fixture(scope="module")
def table():
    packaged = tw_dist._packaged_table()
    assert packaged is not None, "lclab/data/tw1_table.txt is not installed"
    loaded = read_tw1_table(packaged)
    set_tw1_table(loaded)
    yield loaded
    set_tw1_table(None)


class TestOracle:
    """Fredholm determinant evaluation."""

    def test_limits(self):
        """Both tails are below 1e-7 at the ends of the grid."""
        assert tw1_oracle_cdf(S_MIN) < 1e-7
        assert 1.0 - tw1_oracle_cdf(S_MAX) < 1e-7

    def test_tail_at_six(self):
        """1 - F1(6) is about 1.9e-6, which is why the grid runs to 8."""
        assert 1.5e-6 < 1.0 - tw1_oracle_cdf(6.0) < 2.5e-6

    def test_monotone(self):
        """F1 increases on a coarse grid."""
        values = [tw1_oracle_cdf(s) for s in np.linspace(-5.0, 3.0, 17)]
        assert np.all(np.diff(values) > 0)

    @pytest.mark.parametrize("s", [-6.0, -2.0, -1.0, 0.0, 3.0])
    def test_node_convergence(self, s):
        """Doubling the Nystrom nodes changes F1 by less than 1e-8."""
        assert abs(tw1_oracle_cdf(s, nodes=64) - tw1_oracle_cdf(s, nodes=128)) < 1e-8

    def test_out_of_range_is_flagged(self):
        """Arguments outside the table range are clamped and flagged."""
        value, clamped = tw1_oracle_cdf_flagged(12.0)
        assert clamped
        assert value == tw1_oracle_cdf_flagged(S_MAX)[0]
        assert not tw1_oracle_cdf_flagged(S_MAX)[1]

    def test_agrees_with_packaged_knots(self, table):
        """The shipped table reproduces the oracle at its knots to 1e-6."""
        for index in (0, 450, 880, 1000, 1300, len(table.knots) - 1):
            s = float(table.knots[index])
            assert_allclose(table.values[index], tw1_oracle_cdf(s), atol=1e-6)


class TestTable:
    """Interpolated lookups."""

    def test_moments(self, table):
        """Mean and variance match the known TW1 values."""
        assert_allclose(tw1_mean(), TW1_MEAN, atol=1e-6)
        assert_allclose(tw1_variance(), TW1_VARIANCE, atol=1e-6)

    def test_mass_beyond_grid_sits_at_the_ends(self):
        """F = 0.2 at 0 rising to 0.6 at 1 has mean 0.4 * 0.5 + 0.4 * 1."""
        built = Tw1Table(knots=np.array([0.0, 1.0]), values=np.array([0.2, 0.6]))
        assert built.mean() == pytest.approx(0.6)
        uniform = Tw1Table(knots=np.array([0.0, 1.0]), values=np.array([0.0, 1.0]))
        assert uniform.variance() == pytest.approx(1.0 / 12.0)

    def test_cdf_matches_oracle_between_knots(self, table):
        """Pchip interpolation tracks the oracle to 1e-7 at knot midpoints."""
        for s in (-3.375, -1.205, 0.435, 2.005):
            assert_allclose(tw1_cdf(s), tw1_oracle_cdf(s), atol=1e-7)

    def test_cdf_outside_range(self, table):
        """Zero below the grid, one above."""
        assert tw1_cdf(-20.0) == 0.0
        assert tw1_cdf(20.0) == 1.0

    def test_density_nonnegative_and_normalized(self, table):
        """The interpolant's derivative is a density."""
        grid = np.linspace(S_MIN, S_MAX, 4501)
        density = tw1_density(grid)
        assert np.all(density >= 0)
        assert_allclose(np.trapezoid(density, grid), 1.0, atol=1e-3)

    def test_quantile_inverts_cdf(self, table):
        """cdf(quantile(p)) = p."""
        for p in (0.05, 0.5, 0.95):
            assert_allclose(tw1_cdf(tw1_quantile(p)), p, atol=1e-9)

    @pytest.mark.parametrize("p", [0.0, 1.0, -0.2])
    def test_quantile_range(self, table, p):
        """Levels outside (0, 1) are rejected."""
        with pytest.raises(DomainError):
            tw1_quantile(p)

    def test_values_forced_monotone(self):
        """Tabulated values are made nondecreasing."""
        built = Tw1Table(knots=np.array([0.0, 1.0, 2.0]), values=np.array([0.1, 0.05, 0.9]))
        assert np.all(np.diff(built.values) >= 0)

    def test_knots_must_increase(self):
        """Repeated knots are rejected."""
        with pytest.raises(DomainError):
            Tw1Table(knots=np.array([0.0, 0.0, 1.0]), values=np.array([0.1, 0.2, 0.3]))


class TestPersistence:
    """Reading, writing and locating tables."""

    def test_file_keeps_values_exactly(self, table, tmp_path):
        """repr-formatted rows reload bit for bit with their header parameters."""
        path = write_tw1_table(table, tmp_path / "tw1.txt")
        loaded = read_tw1_table(path)
        assert np.array_equal(loaded.knots, table.knots)
        assert np.array_equal(loaded.values, table.values)
        assert loaded.params["format"] == "lclab-tw1/1"
        assert path.read_text().startswith("# ")

    def test_env_override_wins(self, table, tmp_path):
        """LCLAB_TW_TABLE is consulted before any other location."""
        path = write_tw1_table(table, tmp_path / "override.txt")
        with patch.dict(os.environ, {"LCLAB_TW_TABLE": str(path)}):
            loaded = load_tw1_table()
        assert np.array_equal(loaded.values, table.values)

    def test_cache_used_when_nothing_packaged(self, table, tmp_path):
        """Without an override or asset the user cache file is read."""
        cached = tmp_path / "cache.txt"
        write_tw1_table(table, cached)
        env = {k: v for k, v in os.environ.items() if k != "LCLAB_TW_TABLE"}
        with patch.dict(os.environ, env, clear=True), patch.object(
            tw_dist, "_packaged_table", return_value=None
        ), patch.object(tw_dist, "table_cache_path", return_value=cached), patch.object(
            tw_dist, "build_tw1_table"
        ) as build:
            loaded = load_tw1_table()
        build.assert_not_called()
        assert np.array_equal(loaded.knots, table.knots)

    def test_packaged_asset_ships(self):
        """The installed asset covers [-10, 8] and records how it was built."""
        path = tw_dist._packaged_table()
        assert path is not None
        shipped = read_tw1_table(path)
        assert shipped.lower == S_MIN
        assert shipped.upper == S_MAX
        assert shipped.params["format"] == "lclab-tw1/1"
        assert shipped.params["nodes"] == "128"
        assert np.all(np.diff(shipped.values) >= 0)

    def test_missing_asset_rebuilds_with_warning(self, tmp_path, caplog):
        """A broken install falls back to the oracle, warns, and fills the cache."""
        cached = tmp_path / "cache.txt"
        small = Tw1Table(knots=np.array([0.0, 1.0]), values=np.array([0.0, 1.0]))
        env = {k: v for k, v in os.environ.items() if k != "LCLAB_TW_TABLE"}
        with patch.dict(os.environ, env, clear=True), patch.object(
            tw_dist, "_packaged_table", return_value=None
        ), patch.object(tw_dist, "table_cache_path", return_value=cached), patch.object(
            tw_dist, "build_tw1_table", return_value=small
        ) as build, caplog.at_level(logging.WARNING, logger="lclab.rmt.tw_dist"):
            loaded = load_tw1_table()
        build.assert_called_once()
        assert loaded is small
        assert cached.exists()
        assert "missing" in caplog.text

    def test_small_build_is_consistent(self):
        """A coarse build over a short range lands on the oracle at its knots."""
        built = build_tw1_table(nodes=64, step=0.5, s_min=-2.0, s_max=0.0)
        assert built.knots.tolist() == [-2.0, -1.5, -1.0, -0.5, 0.0]
        assert_allclose(built.values[2], tw1_oracle_cdf(-1.0), atol=1e-8)
