"""Waveguide reflection spectra, drift convolution and spin contrast."""

import numpy as np
import pytest

from cqed_fom.params import SystemParams
from cqed_fom.reflection import (
    SpinConfig,
    Spectrum,
    apply_drift,
    contrast_curve,
    reflection_amplitude,
    reflectivity,
    spin_contrast,
    spin_spectra,
)
from cqed_fom.units import ghz, mhz


def _bare_cavity(kappa_wg, kappa_sc=0.0):
    return SystemParams(g=0.0, kappa_wg=kappa_wg, kappa_sc=kappa_sc, gamma=0.0)


def test_far_detuned_probe_reflects_fully():
    params = SystemParams(g=ghz(10), kappa_wg=ghz(10), gamma=mhz(100))
    r = reflection_amplitude(params, 0.0, np.array([ghz(1e6)]))
    assert abs(r[0]) ** 2 == pytest.approx(1.0, abs=1e-9)


def test_critically_coupled_cavity_dip_vanishes():
    # kappa_wg = kappa_sc: the waveguide rate matches all other loss
    params = _bare_cavity(ghz(5), ghz(5))
    r = reflection_amplitude(params, 0.0, np.array([0.0]))
    assert abs(r[0]) ** 2 <= 1e-12


def test_overcoupled_cavity_reflects_with_pi_phase():
    params = _bare_cavity(ghz(10))
    r = reflection_amplitude(params, 0.0, np.array([0.0]))
    assert abs(r[0]) ** 2 == pytest.approx(1.0, abs=1e-12)
    assert np.angle(r[0]) == pytest.approx(np.pi, abs=1e-12)


def test_amplitude_matches_inline_formula():
    # independent transcription of the input-output expression
    rng = np.random.default_rng(5)
    params = SystemParams(
        g=ghz(7), kappa_wg=ghz(6), kappa_sc=ghz(2), gamma=mhz(150), gamma_star=mhz(40)
    )
    delta_a = ghz(0.8)
    probe = ghz(40) * (rng.random(16) - 0.5)
    probe.sort()
    r = reflection_amplitude(params, delta_a, probe)
    kappa = params.kappa_wg + params.kappa_sc
    gamma_tot = params.gamma + 2.0 * params.gamma_star
    expected = 1.0 - params.kappa_wg / (
        1j * probe + kappa / 2.0 + params.g**2 / (1j * (probe - delta_a) + gamma_tot / 2.0)
    )
    np.testing.assert_allclose(r, expected, rtol=1e-12)


def test_resonant_spectrum_is_symmetric():
    params = SystemParams(g=ghz(5), kappa_wg=ghz(10), gamma=mhz(100))
    probe = np.linspace(-ghz(30), ghz(30), 401)
    spec = reflectivity(params, 0.0, probe)
    np.testing.assert_allclose(spec.values, spec.values[::-1], atol=1e-12)


def test_reflectivity_never_exceeds_unity():
    params = SystemParams(
        g=ghz(12), kappa_wg=ghz(4), kappa_sc=ghz(6), gamma=mhz(500), gamma_star=ghz(2)
    )
    probe = np.linspace(-ghz(100), ghz(100), 2001)
    spec = reflectivity(params, ghz(3), probe)
    assert spec.values.max() <= 1.0 + 1e-9
    assert spec.values.min() >= 0.0


def test_reflection_requires_waveguide_port():
    params = SystemParams(g=ghz(1), kappa_wg=0.0, kappa_sc=ghz(1), gamma=mhz(1))
    with pytest.raises(ValueError, match="kappa_wg"):
        reflection_amplitude(params, 0.0, np.array([0.0]))


def test_dip_location_takes_first_minimum_on_ties():
    spec = Spectrum(np.array([0.0, 1.0, 2.0, 3.0]), np.array([0.5, 0.1, 0.1, 0.9]))
    assert spec.dip_location() == 1.0


# --- drift convolution ------------------------------------------------------


def test_drift_of_constant_spectrum_is_identity():
    grid = np.linspace(-10.0, 10.0, 201)
    spec = Spectrum(grid, np.full(grid.size, 0.7))
    out = apply_drift(spec, drift_sigma=0.5)
    np.testing.assert_allclose(out.values, 0.7, atol=1e-14)


def test_zero_drift_returns_copy():
    grid = np.linspace(0.0, 1.0, 11)
    spec = Spectrum(grid, np.sin(grid))
    out = apply_drift(spec, 0.0)
    np.testing.assert_array_equal(out.values, spec.values)
    assert out.values is not spec.values


def test_drift_rejects_coarse_grids():
    grid = np.linspace(0.0, 10.0, 11)
    spec = Spectrum(grid, np.ones(11))
    with pytest.raises(ValueError, match="coarse"):
        apply_drift(spec, drift_sigma=1.5)  # sigma < 2*dx = 2


def test_drift_rejects_nonuniform_grids():
    grid = np.array([0.0, 1.0, 2.0, 4.0])
    with pytest.raises(ValueError, match="uniform"):
        apply_drift(Spectrum(grid, np.ones(4)), 2.5)


def test_drift_matches_fine_resolution_oracle():
    # oracle: same convolution evaluated at 10x resolution, subsampled;
    # interior points only, away from the nearest-padding boundary
    params = SystemParams(g=ghz(10), kappa_wg=ghz(10), gamma=mhz(100))
    sigma = mhz(50)
    h = sigma / 2.5
    n = 1200
    grid = (np.arange(n) - n // 2) * h
    coarse = apply_drift(reflectivity(params, 0.0, grid), sigma)

    fine_grid = (np.arange(10 * n) - (10 * n) // 2) * (h / 10.0)
    fine = apply_drift(reflectivity(params, 0.0, fine_grid), sigma)
    oracle = fine.values[::10]
    interior = slice(50, n - 50)
    np.testing.assert_allclose(
        coarse.values[interior], oracle[interior], atol=1e-4
    )


def test_drift_preserves_dip_area():
    # convolution redistributes but does not create or destroy absorption
    params = SystemParams(g=ghz(10), kappa_wg=ghz(10), gamma=mhz(100))
    sigma = mhz(80)
    h = sigma / 4.0
    grid = (np.arange(4000) - 2000) * h
    raw = reflectivity(params, 0.0, grid)
    blurred = apply_drift(raw, sigma)
    missing_raw = np.sum(1.0 - raw.values) * h
    missing_blurred = np.sum(1.0 - blurred.values) * h
    assert missing_blurred == pytest.approx(missing_raw, rel=1e-6)


# --- spin spectra and contrast ----------------------------------------------


def test_spin_spectra_swap_under_offset_exchange():
    params = SystemParams(g=ghz(10), kappa_wg=ghz(10), gamma=mhz(100), delta_ca=ghz(100))
    probe = np.linspace(-ghz(110), -ghz(90), 1501)
    split = ghz(1)
    spin = SpinConfig(zeeman_split=split, drift=mhz(50))
    down, up = spin_spectra(params, spin, probe)
    # moving the pair down by one splitting maps up onto down
    shifted = SpinConfig(
        zeeman_split=split, spin_down_offset=spin.down_offset - split, drift=mhz(50)
    )
    down2, up2 = spin_spectra(params, shifted, probe)
    np.testing.assert_allclose(up2.values, down.values, atol=1e-12)


def test_fwhm_drift_interpretation_matches_sigma():
    fwhm = mhz(100)
    sigma = fwhm / (2.0 * np.sqrt(2.0 * np.log(2.0)))
    a = SpinConfig(zeeman_split=ghz(1), drift=fwhm, drift_interpretation="fwhm")
    b = SpinConfig(zeeman_split=ghz(1), drift=sigma)
    assert a.drift_sigma == pytest.approx(b.drift_sigma, rel=1e-12)


def test_contrast_bounds_and_zero_guard():
    down = Spectrum(np.arange(3.0), np.array([0.0, 0.4, 1.0]))
    up = Spectrum(np.arange(3.0), np.array([0.0, 0.2, 0.5]))
    c = spin_contrast(down, up)
    assert c[0] == 0.0  # both dark
    assert np.all((c >= 0.0) & (c <= 1.0))


def test_dispersive_dips_track_spin_splitting():
    # deep dispersive regime: two reflection dips separated by the
    # differential Zeeman splitting, resolved to one grid step
    split = ghz(1)
    delta_ca = ghz(1500)
    params = SystemParams(
        g=ghz(10), kappa_wg=ghz(10), gamma=mhz(100), delta_ca=delta_ca
    )
    spin = SpinConfig(zeeman_split=split, drift=mhz(50))
    step = ghz(0.0125)
    probe = -delta_ca + np.arange(-160, 161) * step
    down, up = spin_spectra(params, spin, probe)
    separation = abs(down.dip_location() - up.dip_location())
    assert separation == pytest.approx(split, abs=step)


def test_contrast_curve_scans_cavity_detuning():
    params = SystemParams(g=ghz(10), kappa_wg=ghz(10), gamma=mhz(100))
    spin = SpinConfig(zeeman_split=ghz(1), drift=mhz(50))
    detunings = np.linspace(ghz(20), ghz(200), 7)
    curve = contrast_curve(params, spin, detunings)
    assert np.all((curve.contrast >= 0.0) & (curve.contrast <= 1.0))
    assert curve.optimal_detuning() == curve.cavity_detunings[np.argmax(curve.contrast)]


def test_contrast_curve_fixed_probe_policy():
    params = SystemParams(g=ghz(10), kappa_wg=ghz(10), gamma=mhz(100))
    spin = SpinConfig(zeeman_split=ghz(1), drift=mhz(50))
    detunings = np.linspace(ghz(50), ghz(100), 3)
    probe = -ghz(75)
    curve = contrast_curve(params, spin, detunings, probe_policy=probe)
    np.testing.assert_allclose(curve.best_probe, probe, atol=1e-6)
    # optimizing the probe can only help
    free = contrast_curve(params, spin, detunings)
    assert np.all(free.contrast >= curve.contrast - 1e-9)
