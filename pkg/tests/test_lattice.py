"""Unit tests for finite-chain construction, spectra, and localization."""
import dataclasses

import numpy as np
import pytest

from conftest import multiset_distance
from nhwind import (Boundary, ChainSpectrum, MatchFailure, build_chain,
                    chain_spectrum, classify, defectiveness, demo, eig_dense,
                    hk, ipr, lee, left_vectors, localization_profile,
                    spectral_gap, spectrum_scan)

# Frozen lee-default observables at 30 cells.
GAP_30 = 0.716589
MIDGAP_THRESHOLD_30 = 0.257010
MEDIAN_IPR_OPEN_30 = 0.3691
MEDIAN_IPR_PERIODIC_30 = 0.0266
MEDIAN_IPR_LEFT_OPEN_30 = 0.352743
MEDIAN_IPR_LEFT_PERIODIC_30 = 0.026588


def test_build_chain_single_cell_is_onsite_block(lee_default):
    assert np.array_equal(build_chain(lee_default, 1), lee_default.hop_zero)


def test_build_chain_demo_two_cells_open(demo_model):
    expected = np.zeros((4, 4), dtype=complex)
    expected[1, 2] = 1.0  # hop_plus block at (cell 0, cell 1)
    expected[2, 1] = 1.0  # hop_minus block at (cell 1, cell 0)
    assert np.array_equal(build_chain(demo_model, 2), expected)


def test_build_chain_periodic_wrap_accumulates(demo_model, lee_default):
    # One periodic cell carries every hopping on the same block: h(0).
    assert np.allclose(build_chain(lee_default, 1, Boundary.PERIODIC),
                       hk(lee_default, 0.0), atol=1e-15)
    # Two periodic cells: wrap and interior couplings add up.
    ring = build_chain(demo_model, 2, Boundary.PERIODIC)
    expected = np.zeros((4, 4), dtype=complex)
    expected[0, 3] = expected[3, 0] = 1.0
    expected[1, 2] = expected[2, 1] = 1.0
    assert np.array_equal(ring, expected)


def test_build_chain_validation(lee_default):
    with pytest.raises(ValueError):
        build_chain(lee_default, 0)
    with pytest.raises(ValueError):
        build_chain(lee_default, 3, "twisted")


def test_periodic_chain_matches_bloch_multiset():
    for model in (lee(), demo()):
        for n in (3, 8, 64):
            chain_vals = np.linalg.eigvals(
                build_chain(model, n, Boundary.PERIODIC))
            bloch_vals = np.linalg.eigvals(
                hk(model, 2 * np.pi * np.arange(n) / n)).ravel()
            assert multiset_distance(chain_vals, bloch_vals) < 1e-9, \
                (model.label, n)


def test_eig_dense_sorting_and_residuals(lee_default):
    h = build_chain(lee_default, 12)
    values, vectors = eig_dense(h)
    key = np.stack([values.real, values.imag])
    assert np.array_equal(np.lexsort(key[::-1]), np.arange(values.size))
    residual = np.linalg.norm(h @ vectors - vectors * values, axis=0)
    assert residual.max() <= 1e-9 * np.linalg.norm(h)


def test_eig_dense_failure_carries_diagnostics():
    bad = np.array([[np.nan, 0.0], [0.0, 1.0]])
    with pytest.raises(np.linalg.LinAlgError, match="finite: False"):
        eig_dense(bad)


def test_left_vectors_biorthonormal_where_conditioned():
    cases = [(lee(), 4, Boundary.OPEN), (lee(), 30, Boundary.PERIODIC),
             (demo(), 30, Boundary.OPEN), (lee(gamma=0.0), 30, Boundary.OPEN)]
    for model, n, bc in cases:
        spectrum = chain_spectrum(model, n, bc, with_left=True)
        product = spectrum.left_vectors @ spectrum.right_vectors
        err = np.abs(product - np.eye(2 * n)).max()
        assert err < 1e-8, (model.label, n, bc, err)


def test_left_vectors_standalone_recompute(lee_default):
    h = build_chain(lee_default, 4)
    left = left_vectors(h)
    _, right = eig_dense(h)
    assert np.abs(left @ right - np.eye(8)).max() < 1e-8


def test_left_vectors_match_failure_on_ill_conditioned_chain(lee_default):
    # The right spectrum of the open skin-effect chain is so badly
    # conditioned that left and right eigenvalues cannot be paired.
    with pytest.raises(MatchFailure):
        chain_spectrum(lee_default, 30, Boundary.OPEN, with_left=True)


def test_ipr_extremes_and_classification():
    size = 60
    uniform = np.full((size, 1), 1.0 / np.sqrt(size), dtype=complex)
    spike = np.zeros((size, 1), dtype=complex)
    spike[17, 0] = 1.0
    assert ipr(uniform)[0] == pytest.approx(1.0 / size, abs=1e-15)
    assert ipr(spike)[0] == pytest.approx(1.0, abs=1e-15)
    assert classify(float(ipr(uniform)[0]), size) == "extended"
    assert classify(float(ipr(spike)[0]), size) == "localized"
    assert classify(0.07, size) == "intermediate"


def test_similarity_invariance_of_spectrum(lee_default, rng):
    h = build_chain(lee_default, 10)
    scale = rng.uniform(0.5, 2.0, size=20)
    transformed = (scale[:, None] * h) / scale[None, :]
    assert multiset_distance(np.linalg.eigvals(h),
                             np.linalg.eigvals(transformed)) < 1e-9


def test_defectiveness_scales():
    assert defectiveness(np.eye(8)) == pytest.approx(1.0)
    _, jordan_vecs = np.linalg.eig(np.array([[0.0, 1.0], [0.0, 0.0]]))
    assert defectiveness(jordan_vecs) < 1e-8


def test_chain_spectrum_frozen_values(lee_default):
    spectrum = chain_spectrum(lee_default, 30)
    assert spectrum.size == 60
    assert spectrum.bc is Boundary.OPEN
    assert spectrum.max_abs_imag < 1e-6
    assert spectrum.gap == pytest.approx(GAP_30, abs=1e-4)
    assert spectrum.midgap_threshold == pytest.approx(MIDGAP_THRESHOLD_30,
                                                  abs=1e-4)
    assert set(spectrum.excluded) == {29, 30}
    # Nearly defective right basis, but not numerically zero.
    assert 1e-32 < spectrum.defectiveness < 1e-18
    assert defectiveness(spectrum) == spectrum.defectiveness
    assert spectrum.left_vectors is None


def test_skin_effect_median_iprs(lee_default):
    open_spectrum = chain_spectrum(lee_default, 30)
    periodic_spectrum = chain_spectrum(lee_default, 30, Boundary.PERIODIC)
    med_open = float(np.median(open_spectrum.iprs))
    med_periodic = float(np.median(periodic_spectrum.iprs))
    assert med_open == pytest.approx(MEDIAN_IPR_OPEN_30, abs=1e-3)
    assert med_periodic == pytest.approx(MEDIAN_IPR_PERIODIC_30, abs=1e-3)
    assert med_open / med_periodic > 5.0

    left_open = localization_profile(open_spectrum, side="left")
    left_periodic = localization_profile(periodic_spectrum, side="left")
    assert left_open.median_ipr == pytest.approx(MEDIAN_IPR_LEFT_OPEN_30,
                                                 abs=1e-3)
    assert left_periodic.median_ipr == pytest.approx(
        MEDIAN_IPR_LEFT_PERIODIC_30, abs=1e-3)
    assert left_open.median_ipr / left_periodic.median_ipr > 5.0


def test_hermitian_limit_has_no_skin_effect():
    med_open = float(np.median(chain_spectrum(lee(gamma=0.0), 30).iprs))
    med_periodic = float(np.median(
        chain_spectrum(lee(gamma=0.0), 30, Boundary.PERIODIC).iprs))
    assert max(med_open / med_periodic, med_periodic / med_open) < 2.0


def test_spectral_gap_empty_side_is_zero():
    values = np.array([0.5, 1.0, 2.0], dtype=complex)
    iprs = np.array([0.02, 0.02, 0.02])
    assert spectral_gap(values, iprs).gap == 0.0


def test_localization_profile_contract(lee_default):
    spectrum = chain_spectrum(lee_default, 6)
    profile = localization_profile(spectrum)
    assert profile.side == "right"
    assert profile.probabilities.shape == (12, 12)
    assert np.allclose(profile.probabilities.sum(axis=0), 1.0, atol=1e-12)
    assert np.array_equal(profile.iprs, spectrum.iprs)
    assert np.array_equal(profile.eigenvalues, spectrum.eigenvalues)
    assert all(label in {"extended", "intermediate", "localized"}
               for label in profile.labels)
    with pytest.raises(ValueError):
        localization_profile(spectrum, side="upside down")


def test_localization_profile_left_side_is_independent(lee_default):
    # Left profiles come from the transposed chain, not from pairing,
    # so they work even where left_vectors raises MatchFailure.
    profile = localization_profile(chain_spectrum(lee_default, 30),
                                   side="left")
    assert profile.side == "left"
    assert np.allclose(profile.probabilities.sum(axis=0), 1.0, atol=1e-12)


def test_chain_spectrum_validation_rejects_corrupted_data(lee_default):
    spectrum = chain_spectrum(lee_default, 4)
    with pytest.raises(ValueError):
        dataclasses.replace(spectrum, eigenvalues=np.array(spectrum.eigenvalues)[::-1])
    with pytest.raises(ValueError):
        dataclasses.replace(spectrum, iprs=np.full(8, 1.5))


def test_spectrum_scan_rows_match_single_spectra(lee_default):
    rows = spectrum_scan(lee_default, (4, 6))
    assert [row.n_cells for row in rows] == [4, 6]
    for row in rows:
        spectrum = chain_spectrum(lee_default, row.n_cells)
        assert row.bc is Boundary.OPEN
        assert np.array_equal(row.eigenvalues, spectrum.eigenvalues)
        assert row.max_abs_imag == spectrum.max_abs_imag
        assert row.gap == spectrum.gap
        assert row.median_ipr == float(np.median(spectrum.iprs))
        assert row.im_fraction == float(
            np.mean(np.abs(spectrum.eigenvalues.imag) > 1e-2))
    periodic = spectrum_scan(lee_default, (4,), Boundary.PERIODIC)
    assert periodic[0].bc is Boundary.PERIODIC
    assert periodic[0].median_ipr == pytest.approx(0.199508268584, abs=1e-9)


def test_boundary_enum_round_trip():
    assert Boundary("open") is Boundary.OPEN
    assert Boundary("periodic") is Boundary.PERIODIC
