"""Unit tests for matrix assembly and spectra."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from lclab.errors import DomainError, NumericalError
from lclab.rmt.ensemble import (
    SampleMeta,
    SpikeList,
    assemble_H,
    assemble_spiked,
    companion_spectrum,
    population_root,
    sample_spectrum,
    spectrum,
    trace_identity_gap,
)
from lclab.rmt.sampling import gaussian_matrix


class TestSpikeList:
    """Spike bookkeeping."""

    def test_sorted_descending(self):
        """Spikes are kept in decreasing order."""
        assert SpikeList((1.0, 3.0, 2.0)).d == (3.0, 2.0, 1.0)

    def test_singular_population_rejected(self):
        """d <= -1 would make Sigma singular."""
        with pytest.raises(DomainError):
            SpikeList((-1.0,))

    def test_too_many_spikes(self):
        """At most 16 spikes are supported."""
        with pytest.raises(DomainError):
            SpikeList(tuple(float(k + 2) for k in range(17)))

    def test_supercritical(self):
        """Outliers need d > sqrt(y) + eps."""
        SpikeList((2.0,)).require_supercritical(0.5)
        with pytest.raises(DomainError):
            SpikeList((0.6,)).require_supercritical(0.5)

    def test_gaps(self):
        """Neighbouring spikes must be separated by N^(-1/2+eps)."""
        SpikeList((3.0, 2.0)).require_gaps(100, 0.1)
        with pytest.raises(DomainError):
            SpikeList((2.0, 1.99)).require_gaps(100, 0.1)


class TestAssembly:
    """H and spiked assembly."""

    def test_assemble_H_is_symmetric(self):
        """H = XX* is exactly symmetric."""
        X = gaussian_matrix(5, 9, seed=1)
        H = assemble_H(X)
        assert np.array_equal(H, H.T)
        assert_allclose(H, X @ X.T, atol=1e-14)

    def test_population_root(self):
        """T = diag(sqrt(1 + d_i), 1, ...)."""
        assert_allclose(population_root(4, SpikeList((3.0,))), [2.0, 1.0, 1.0, 1.0])

    def test_spiked_matches_brute_force(self):
        """T X X* T agrees with a dense product."""
        X = gaussian_matrix(4, 7, seed=2)
        spikes = SpikeList((3.0, 0.5))
        T = np.diag(population_root(4, spikes))
        assert_allclose(assemble_spiked(X, spikes), T @ X @ X.T @ T, atol=1e-13)

    def test_spiked_requires_outliers_when_asked(self):
        """Subcritical spikes fail when outliers are required."""
        X = gaussian_matrix(4, 8, seed=2)
        with pytest.raises(DomainError):
            assemble_spiked(X, SpikeList((0.1,)), require_outliers=True)


class TestSpectrum:
    """Eigenvalue extraction."""

    def test_descending_and_matches_numpy(self):
        """Eigenvalues come back in descending order."""
        H = assemble_H(gaussian_matrix(6, 12, seed=3))
        sample = spectrum(H)
        assert np.all(np.diff(sample.eigenvalues) <= 0)
        assert_allclose(sample.eigenvalues, np.sort(np.linalg.eigvalsh(H))[::-1], atol=1e-12)

    def test_tiny_negative_eigenvalues_clamped(self):
        """Negatives above the floor are zeroed and counted."""
        A = np.diag([1.0, -1e-13])
        sample = spectrum(A)
        assert sample.clamped == 1
        assert sample.eigenvalues[-1] == 0.0

    def test_large_negative_eigenvalue_raises(self):
        """A clearly negative eigenvalue is a numerical failure carrying the seed."""
        with pytest.raises(NumericalError) as exc:
            spectrum(np.diag([1.0, -1e-3]), seed=17)
        assert exc.value.seed == 17

    def test_non_square_rejected(self):
        """Only square matrices have a spectrum."""
        with pytest.raises(DomainError):
            spectrum(np.ones((2, 3)))

    def test_companion_padding(self):
        """X*X has the nonzero spectrum of XX* plus N - M zeros."""
        X = gaussian_matrix(3, 5, seed=4)
        sample = spectrum(assemble_H(X))
        companion = companion_spectrum(sample, 5)
        brute = np.sort(np.linalg.eigvalsh(X.T @ X))[::-1]
        assert_allclose(companion.eigenvalues, brute, atol=1e-12)

    @pytest.mark.parametrize("M, N", [(6, 10), (10, 6)])
    def test_sample_spectrum_both_orientations(self, M, N):
        """The smaller Gram matrix gives both spectra."""
        X = gaussian_matrix(M, N, seed=5)
        full, companion = sample_spectrum(X, seed=5)
        assert len(full) == M and len(companion) == N
        assert_allclose(full.eigenvalues, np.sort(np.linalg.eigvalsh(X @ X.T))[::-1], atol=1e-12)
        assert_allclose(companion.eigenvalues, np.sort(np.linalg.eigvalsh(X.T @ X))[::-1], atol=1e-12)
        assert full.meta.N == N

    def test_sample_spectrum_with_spikes(self):
        """Spiked spectra are those of T X X* T."""
        X = gaussian_matrix(5, 20, seed=6)
        spikes = SpikeList((4.0,))
        full, _ = sample_spectrum(X, spikes=spikes)
        expected = np.sort(np.linalg.eigvalsh(assemble_spiked(X, spikes)))[::-1]
        assert_allclose(full.eigenvalues, expected, atol=1e-12)
        assert full.meta.spikes == (4.0,)

    def test_trace_identity(self):
        """Eigenvalues sum to the squared Frobenius norm."""
        X = gaussian_matrix(8, 16, seed=7)
        full, _ = sample_spectrum(X)
        assert trace_identity_gap(full, X) < 1e-12

    def test_meta_defaults(self):
        """A bare spectrum records the matrix size."""
        sample = spectrum(np.eye(3))
        assert sample.meta == SampleMeta(M=3, N=3)
        assert sample.largest == 1.0
