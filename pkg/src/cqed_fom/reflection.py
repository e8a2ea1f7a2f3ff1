"""Single-sided cavity reflection and spin-contrast spectra.

Input-output treatment of a single-sided cavity (waveguide coupling
``kappa_wg``, residual loss ``kappa_sc``) dressed by one emitter
transition. With the probe detuning ``delta = omega_probe - omega_cavity``
and the transition detuning ``delta_a = omega_transition - omega_cavity``
(both rad/s) the amplitude reflection coefficient is

    r(delta) = 1 - kappa_wg / [ i delta + kappa/2
                                + g^2 / (i (delta - delta_a) + gamma_tot/2) ]

with ``gamma_tot = gamma + 2 gamma_star``. Limits: |r| -> 1 far off
resonance, r = 0 at critical coupling (kappa_wg = kappa/2, g = 0,
delta = 0) and r = -1 for the overcoupled bare cavity (kappa_wg = kappa).

Spectral drift of the emitter is modelled as a Gaussian convolution of
the reflectivity spectrum on its (uniform) probe grid.

Spin readout: the two optical transitions of a spin-1/2 emitter sit at
``spin_down_offset`` and ``spin_down_offset + zeeman_split`` relative to
the emitter reference line; the cavity is at ``delta_ca`` above that
reference, so the transition detunings from the cavity are
``spin_down_offset - delta_ca`` and that plus the splitting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.ndimage import convolve1d

from .params import SystemParams

FWHM_TO_SIGMA = 1.0 / (2.0 * math.sqrt(2.0 * math.log(2.0)))


@dataclass(frozen=True)
class SpinConfig:
    """Spin-dependent transition layout and drift model.

    ``zeeman_split`` is the differential optical Zeeman splitting between
    the spin-up and spin-down transitions (rad/s). ``spin_down_offset``
    places the spin-down transition relative to the emitter reference
    line; None centres the pair symmetrically at -split/2. ``drift``
    is the Gaussian drift width, interpreted as a standard deviation or
    as a FWHM depending on ``drift_interpretation``.
    """

    zeeman_split: float
    spin_down_offset: float | None = None
    drift: float = 0.0
    drift_interpretation: str = "sigma"

    def __post_init__(self) -> None:
        if not np.isfinite(self.zeeman_split) or self.zeeman_split < 0.0:
            raise ValueError("zeeman_split must be finite and >= 0")
        if self.drift < 0.0 or not np.isfinite(self.drift):
            raise ValueError("drift must be finite and >= 0")
        if self.drift_interpretation not in ("sigma", "fwhm"):
            raise ValueError("drift_interpretation must be 'sigma' or 'fwhm'")

    @property
    def drift_sigma(self) -> float:
        if self.drift_interpretation == "fwhm":
            return self.drift * FWHM_TO_SIGMA
        return self.drift

    @property
    def down_offset(self) -> float:
        if self.spin_down_offset is None:
            return -0.5 * self.zeeman_split
        return self.spin_down_offset

    @property
    def up_offset(self) -> float:
        return self.down_offset + self.zeeman_split


@dataclass
class Spectrum:
    """Real reflectivity R(delta) sampled on a probe-detuning grid (rad/s)."""

    detunings: np.ndarray
    values: np.ndarray

    def dip_location(self) -> float:
        """Probe detuning of the global reflectivity minimum (first on ties)."""
        return float(self.detunings[int(np.argmin(self.values))])


def reflection_amplitude(
    params: SystemParams, atom_detuning: float, probe: np.ndarray
) -> np.ndarray:
    """Complex r(delta) on the probe grid; see the module formula."""
    probe = np.asarray(probe, dtype=float)
    kappa = params.kappa
    if params.kappa_wg <= 0.0:
        raise ValueError("reflection requires kappa_wg > 0 (no waveguide port)")
    gamma_tot = params.gamma_coherence
    cavity_term = 1j * probe + 0.5 * kappa
    if params.g > 0.0:
        dipole_denom = 1j * (probe - atom_detuning) + 0.5 * gamma_tot
        with np.errstate(divide="ignore", invalid="ignore"):
            atom_term = np.where(
                np.abs(dipole_denom) > 0.0, params.g**2 / dipole_denom, np.inf
            )
        denom = cavity_term + atom_term
        with np.errstate(invalid="ignore"):
            r = np.where(np.isfinite(denom), 1.0 - params.kappa_wg / denom, 1.0)
    else:
        r = 1.0 - params.kappa_wg / cavity_term
    return r


def reflectivity(
    params: SystemParams, atom_detuning: float, probe_grid: np.ndarray
) -> Spectrum:
    """Power reflectivity R = |r|^2; passive, so R <= 1 always."""
    probe_grid = np.asarray(probe_grid, dtype=float)
    if probe_grid.ndim != 1 or probe_grid.size < 1:
        raise ValueError("probe_grid must be a non-empty 1-d array")
    if probe_grid.size > 1 and not np.all(np.diff(probe_grid) > 0.0):
        raise ValueError("probe_grid must be strictly increasing")
    r = reflection_amplitude(params, atom_detuning, probe_grid)
    values = np.abs(r) ** 2
    if values.max() > 1.0 + 1e-9:
        raise ValueError(f"reflectivity {values.max()} exceeds 1 beyond numerical slack")
    return Spectrum(detunings=probe_grid, values=values)


def apply_drift(spectrum: Spectrum, drift_sigma: float) -> Spectrum:
    """Convolve a spectrum with a renormalized Gaussian of width drift_sigma.

    The grid must be uniform and fine enough (drift_sigma >= 2 grid steps)
    for the sampled kernel to be meaningful; the kernel is truncated at
    +-6 sigma and renormalized on the discrete grid, so a constant
    spectrum passes through unchanged. Edge handling extends the boundary
    values, which is exact when the grid spans at least ~8 sigma beyond
    the last spectral feature. drift_sigma = 0 returns a copy.
    """
    if drift_sigma < 0.0 or not np.isfinite(drift_sigma):
        raise ValueError("drift_sigma must be finite and >= 0")
    if drift_sigma == 0.0:
        return Spectrum(spectrum.detunings.copy(), spectrum.values.copy())
    grid = np.asarray(spectrum.detunings, dtype=float)
    if grid.size < 2:
        raise ValueError("cannot convolve a single-point spectrum")
    steps = np.diff(grid)
    dx = steps[0]
    if not np.allclose(steps, dx, rtol=1e-9, atol=0.0):
        raise ValueError("drift convolution requires a uniform probe grid")
    if drift_sigma < 2.0 * dx:
        raise ValueError(
            f"probe grid too coarse for drift convolution: sigma={drift_sigma:.3e}"
            f" < 2*dx={2.0 * dx:.3e}"
        )
    half = int(math.ceil(6.0 * drift_sigma / dx))
    offsets = np.arange(-half, half + 1) * dx
    kernel = np.exp(-0.5 * (offsets / drift_sigma) ** 2)
    kernel /= kernel.sum()
    blurred = convolve1d(spectrum.values, kernel, mode="nearest")
    return Spectrum(grid.copy(), blurred)


def spin_spectra(
    params: SystemParams, spin: SpinConfig, probe_grid: np.ndarray
) -> tuple[Spectrum, Spectrum]:
    """Drift-convolved reflectivity spectra for the two spin states.

    Returns ``(down, up)``; the two spectra differ only in the transition
    detuning, which changes by the differential Zeeman splitting.
    """
    down_detuning = spin.down_offset - params.delta_ca
    up_detuning = spin.up_offset - params.delta_ca
    down = reflectivity(params, down_detuning, probe_grid)
    up = reflectivity(params, up_detuning, probe_grid)
    sigma = spin.drift_sigma
    if sigma > 0.0:
        down = apply_drift(down, sigma)
        up = apply_drift(up, sigma)
    return down, up


def spin_contrast(down: Spectrum, up: Spectrum) -> np.ndarray:
    """|R_down - R_up| / (R_down + R_up), zero where both reflectivities vanish."""
    total = down.values + up.values
    diff = np.abs(down.values - up.values)
    out = np.zeros_like(total)
    ok = total >= 1e-12
    out[ok] = diff[ok] / total[ok]
    return out


# ---------------------------------------------------------------------------
# contrast optimization over cavity detuning


@dataclass
class ContrastCurve:
    """Best-probe readout contrast per cavity-emitter detuning."""

    cavity_detunings: np.ndarray
    best_probe: np.ndarray
    contrast: np.ndarray
    abs_diff: np.ndarray  # |R_down - R_up| at the best probe

    def optimal_detuning(self) -> float:
        """Cavity detuning with the highest best-probe contrast (first on ties)."""
        return float(self.cavity_detunings[int(np.argmax(self.contrast))])


def _auto_probe_grid(params: SystemParams, spin: SpinConfig) -> np.ndarray:
    """Uniform probe grid wide and fine enough for both spin spectra.

    Span covers the polariton excursions of both transitions plus loss,
    splitting and drift margins; the step resolves the splitting, the
    drift kernel (sigma >= 2.5 steps) and the cavity linewidth.
    """
    kappa, g = params.kappa, params.g
    gamma_tot = params.gamma_coherence
    sigma = spin.drift_sigma
    split = spin.zeeman_split
    reach = 0.0
    for delta_a in (spin.down_offset - params.delta_ca, spin.up_offset - params.delta_ca):
        reach = max(reach, 0.5 * abs(delta_a) + math.sqrt(g**2 + 0.25 * delta_a**2))
    margin = 5.0 * (kappa + gamma_tot) + 8.0 * sigma + split
    span = reach + margin
    steps = [kappa / 50.0]
    if sigma > 0.0:
        steps.append(sigma / 2.5)
    if split > 0.0:
        steps.append(split / 25.0)
    if gamma_tot > 0.0:
        steps.append(max(gamma_tot, sigma) / 6.0)
    h = min(steps)
    n = int(2.0 * span / h) + 1
    if n > 500_000:
        n = 500_000
    return np.linspace(-span, span, n)


def contrast_curve(
    params: SystemParams,
    spin: SpinConfig,
    cavity_detunings: np.ndarray,
    probe_policy: str | float = "max-contrast",
) -> ContrastCurve:
    """Scan the cavity-emitter detuning and report the achievable contrast.

    For every detuning the two drift-convolved spin spectra are computed
    and the probe either optimized ("max-contrast") or held at a fixed
    detuning (a float, rad/s). Points where both spin states reflect less
    than 1e-12 are excluded from the probe optimization.
    """
    cavity_detunings = np.asarray(cavity_detunings, dtype=float)
    if cavity_detunings.ndim != 1 or cavity_detunings.size < 1:
        raise ValueError("cavity_detunings must be a non-empty 1-d array")
    fixed_probe = None
    if not isinstance(probe_policy, str):
        fixed_probe = float(probe_policy)
    elif probe_policy != "max-contrast":
        raise ValueError(f"unknown probe policy {probe_policy!r}")

    best_probe = np.empty(cavity_detunings.size)
    contrast = np.empty(cavity_detunings.size)
    abs_diff = np.empty(cavity_detunings.size)
    for k, delta in enumerate(cavity_detunings):
        here = replace(params, delta_ca=float(delta))
        if fixed_probe is None:
            grid = _auto_probe_grid(here, spin)
            down, up = spin_spectra(here, spin, grid)
            c = spin_contrast(down, up)
            j = int(np.argmax(c))
            best_probe[k] = grid[j]
            contrast[k] = c[j]
            abs_diff[k] = abs(down.values[j] - up.values[j])
        else:
            sigma = spin.drift_sigma
            if sigma > 0.0:
                # local window so the fixed probe sees a converged convolution
                h = sigma / 4.0
                half = int(math.ceil(8.0 * sigma / h))
                grid = fixed_probe + np.arange(-half, half + 1) * h
                down, up = spin_spectra(here, spin, grid)
                c = spin_contrast(down, up)
                mid = half
                best_probe[k] = fixed_probe
                contrast[k] = c[mid]
                abs_diff[k] = abs(down.values[mid] - up.values[mid])
            else:
                grid = np.array([fixed_probe])
                down, up = spin_spectra(here, spin, grid)
                best_probe[k] = fixed_probe
                contrast[k] = spin_contrast(down, up)[0]
                abs_diff[k] = abs(down.values[0] - up.values[0])
    return ContrastCurve(
        cavity_detunings=cavity_detunings,
        best_probe=best_probe,
        contrast=contrast,
        abs_diff=abs_diff,
    )


__all__ = [
    "SpinConfig",
    "Spectrum",
    "reflection_amplitude",
    "reflectivity",
    "apply_drift",
    "spin_spectra",
    "spin_contrast",
    "ContrastCurve",
    "contrast_curve",
    "FWHM_TO_SIGMA",
]
