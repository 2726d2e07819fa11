"""Unit tests for the column samplers."""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from lclab.config.calibration import CalibrationRecord, MemoryCalibrationCache
from lclab.errors import DomainError
from lclab.rmt.sampling import (
    BodySpec,
    HitAndRunChains,
    SamplerSpec,
    assemble_X,
    derive_seed,
    gaussian_matrix,
    interpolate,
    isotropy_scale,
    lp_ball_raw,
    sample_column,
    sample_columns,
    stream,
)


class TestStreams:
    """Counter-based seeding."""

    def test_stream_is_reproducible(self):
        """The same (seed, keys) yields the same numbers."""
        assert_allclose(stream(7, 1, 2).random(5), stream(7, 1, 2).random(5))

    def test_streams_differ_by_key(self):
        """Distinct keys give distinct substreams."""
        assert not np.array_equal(stream(7, 1).random(5), stream(7, 2).random(5))

    def test_derive_seed_range(self):
        """Child seeds are deterministic 64-bit integers."""
        child = derive_seed(123, 4)
        assert child == derive_seed(123, 4)
        assert 0 <= child < 2**64
        assert child != derive_seed(123, 5)


class TestSamplerSpec:
    """Construction-time validation."""

    @pytest.mark.parametrize("p", [0.5, float("inf"), float("nan")])
    def test_lp_exponent_rejected(self, p):
        """p < 1 and non-finite p are out of contract."""
        with pytest.raises(DomainError):
            SamplerSpec(kind="lp_ball", dimension=4, p=p)

    def test_lp_requires_p(self):
        """An lp ball needs its exponent."""
        with pytest.raises(DomainError):
            SamplerSpec(kind="lp_ball", dimension=4)

    def test_unknown_kind(self):
        """Unknown sampler kinds are rejected."""
        with pytest.raises(DomainError):
            SamplerSpec(kind="uniform_sphere", dimension=4)

    def test_hit_and_run_defaults(self):
        """Burn-in and thinning default to 50 M and 10 M."""
        spec = SamplerSpec(kind="hit_and_run", dimension=8)
        assert spec.burn_in == 400
        assert spec.thinning == 80
        assert spec.body == BodySpec()
        assert spec.is_mcmc

    def test_insufficient_burn_in(self):
        """A burn-in below the floor fails when sampling."""
        spec = SamplerSpec(kind="hit_and_run", dimension=8, burn_in=10)
        with pytest.raises(DomainError):
            sample_columns(spec, 4, stream(0), cache=MemoryCalibrationCache())

    def test_hit_and_run_key_tracks_mixing_budget(self):
        """Pilots with different burn-in or thinning are cached apart."""
        base = SamplerSpec(kind="hit_and_run", dimension=4, burn_in=200, thinning=40)
        longer = SamplerSpec(kind="hit_and_run", dimension=4, burn_in=400, thinning=40)
        sparser = SamplerSpec(kind="hit_and_run", dimension=4, burn_in=200, thinning=80)
        keys = {base.calibration_key, longer.calibration_key, sparser.calibration_key}
        assert len(keys) == 3
        assert base.calibration_key == ("hit_and_run:lp_ball:coordinate:burn200:thin40", 1.0)

    def test_cached_scale_not_reused_across_burn_in(self):
        """A record stored for one burn-in is not returned for another."""
        cache = MemoryCalibrationCache()
        base = SamplerSpec(kind="hit_and_run", dimension=3, burn_in=150, thinning=30, pilot=200)
        kind, p = base.calibration_key
        cache.put(CalibrationRecord(kind=kind, p=p, M=3, scale=42.0, pilot=200))
        assert isotropy_scale(base, cache) == 42.0
        other = SamplerSpec(kind="hit_and_run", dimension=3, burn_in=300, thinning=30, pilot=200)
        assert isotropy_scale(other, cache) != 42.0


class TestExactSamplers:
    """gaussian, laplace_product and lp_ball."""

    def test_lp_ball_draws_stay_inside(self):
        """Every draw lies in the unit lp ball."""
        rng = stream(1)
        for p in (1.0, 1.5, 2.0, 4.0):
            for _ in range(50):
                x = lp_ball_raw(p, 6, rng)
                assert np.sum(np.abs(x) ** p) <= 1.0 + 1e-12

    def test_laplace_is_isotropic(self):
        """Scale 1/sqrt(2) gives unit variance."""
        spec = SamplerSpec(kind="laplace_product", dimension=4)
        q = sample_columns(spec, 50_000, stream(2))
        assert_allclose(np.mean(q**2), 1.0, atol=0.03)

    def test_lp_ball_calibrated_to_identity_covariance(self):
        """After calibration coordinates have unit second moment and no correlation."""
        cache = MemoryCalibrationCache()
        spec = SamplerSpec(kind="lp_ball", dimension=5, p=1.0, pilot=20_000)
        q = sample_columns(spec, 40_000, stream(3), cache)
        cov = q @ q.T / q.shape[1]
        assert_allclose(np.diag(cov), np.ones(5), atol=0.05)
        assert np.abs(cov - np.diag(np.diag(cov))).max() < 0.05

    def test_calibration_is_cached(self):
        """The second lookup reuses the stored scale."""
        cache = MemoryCalibrationCache()
        spec = SamplerSpec(kind="lp_ball", dimension=3, p=2.0, pilot=2_000)
        first = isotropy_scale(spec, cache)
        assert cache.get("lp_ball", 2.0, 3) is not None
        cache.put(CalibrationRecord(kind="lp_ball", p=2.0, M=3, scale=42.0, pilot=2_000))
        assert isotropy_scale(spec, cache) == 42.0
        assert first != 42.0

    def test_gaussian_needs_no_calibration(self):
        """Gaussian and Laplace samplers are isotropic by construction."""
        cache = MemoryCalibrationCache()
        assert isotropy_scale(SamplerSpec(kind="gaussian", dimension=3), cache) == 1.0
        assert cache.storage == {}

    def test_sample_column_is_one_draw(self):
        """A single column has length M and repeats under the same stream."""
        cache = MemoryCalibrationCache()
        spec = SamplerSpec(kind="lp_ball", dimension=6, p=1.5, pilot=2_000)
        first = sample_column(spec, stream(7), cache)
        second = sample_column(spec, stream(7), cache)
        assert first.shape == (6,)
        assert np.array_equal(first, second)
        block = sample_columns(spec, 1, stream(7), cache)
        assert np.array_equal(first, block[:, 0])


class TestHitAndRun:
    """Vectorized hit-and-run chains."""

    @pytest.mark.parametrize("direction", ["coordinate", "sphere"])
    def test_lp_chain_stays_in_body(self, direction):
        """Chains never leave the l1 ball."""
        chains = HitAndRunChains(BodySpec(kind="lp_ball", p=1.0, direction=direction), 5, 20, stream(4))
        state = chains.run(200)
        assert np.all(np.sum(np.abs(state), axis=0) <= 1.0 + 1e-9)

    @pytest.mark.parametrize("direction", ["coordinate", "sphere"])
    def test_cube_chain_stays_in_body(self, direction):
        """Chains never leave the cube."""
        chains = HitAndRunChains(BodySpec(kind="cube", direction=direction), 5, 20, stream(5))
        state = chains.run(200)
        assert np.all(np.abs(state) <= 1.0 + 1e-12)

    def test_cube_coordinate_variance(self):
        """Uniform on [-1, 1] has variance 1/3."""
        chains = HitAndRunChains(BodySpec(kind="cube"), 3, 4000, stream(6))
        state = chains.run(60)
        assert_allclose(np.mean(state**2), 1.0 / 3.0, atol=0.02)


class TestAssembly:
    """Matrix assembly and interpolation."""

    def test_assemble_is_reproducible(self):
        """The same seed yields bit-identical matrices."""
        spec = SamplerSpec(kind="gaussian", dimension=6)
        first = assemble_X(spec, 10, seed=99).X
        second = assemble_X(spec, 10, seed=99).X
        assert np.array_equal(first, second)
        assert first.shape == (6, 10)

    def test_columns_come_from_own_streams(self):
        """Column j depends only on (seed, j), so widening keeps the first columns."""
        spec = SamplerSpec(kind="gaussian", dimension=4)
        narrow = assemble_X(spec, 5, seed=1).X * math.sqrt(5)
        wide = assemble_X(spec, 8, seed=1).X * math.sqrt(8)
        assert_allclose(wide[:, :5], narrow, rtol=1e-14)

    def test_gaussian_entry_variance(self):
        """Entries of X have variance 1/N."""
        X = gaussian_matrix(50, 400, seed=3)
        assert_allclose(np.var(X) * 400, 1.0, atol=0.03)

    def test_interpolation_endpoints_exact(self):
        """t = 0 and t = 1 return the inputs bit for bit."""
        X = gaussian_matrix(4, 6, seed=1)
        Xw = gaussian_matrix(4, 6, seed=2)
        assert np.array_equal(interpolate(X, Xw, 0.0), X)
        assert np.array_equal(interpolate(X, Xw, 1.0), Xw)

    def test_interpolation_midpoint(self):
        """Interior times mix with square-root weights."""
        X = gaussian_matrix(4, 6, seed=1)
        Xw = gaussian_matrix(4, 6, seed=2)
        assert_allclose(interpolate(X, Xw, 0.25), math.sqrt(0.75) * X + 0.5 * Xw)

    @pytest.mark.parametrize("t", [-0.1, 1.5])
    def test_interpolation_time_range(self, t):
        """Times outside [0, 1] are rejected."""
        X = gaussian_matrix(2, 3, seed=1)
        with pytest.raises(DomainError):
            interpolate(X, X, t)

    def test_interpolation_shape_mismatch(self):
        """Shapes must agree."""
        with pytest.raises(DomainError):
            interpolate(gaussian_matrix(2, 3, seed=1), gaussian_matrix(3, 3, seed=1), 0.5)
