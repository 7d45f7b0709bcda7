"""Peak-candidate detection and curvature-based amplitude priors.

Candidate locations are the interior local maxima of the coarse 1-layer
prediction (discrete zeros of the first derivative with negative
curvature).  Each candidate gets an expected amplitude read off the
smoothed second derivative: a Gaussian of width sigma0 and amplitude A
has curvature -A/sigma0**2 at its top, so A_prior = -D''(E_peak)*sigma0**2,
clipped to be nonnegative.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .config import BhlConfig
from .grids import Spectrum, gaussian_smooth, second_diff

__all__ = ["PeakSet", "detect_peaks", "hessian_priors", "init_peakset", "apply_exclusions"]


@dataclass
class PeakSet:
    """Detected peak candidates with parallel per-peak arrays.

    ``included`` is the external-exclusion mask: it defaults to all-true
    and is only ever set from input data, never inferred.
    """

    sample_id: str
    bin_indices: np.ndarray
    mus: np.ndarray
    amps: np.ndarray
    sigmas: np.ndarray
    prior_amps: np.ndarray
    included: np.ndarray

    def __post_init__(self):
        self.bin_indices = np.asarray(self.bin_indices, dtype=np.intp)
        self.mus = np.asarray(self.mus, dtype=np.float64)
        self.amps = np.asarray(self.amps, dtype=np.float64)
        self.sigmas = np.asarray(self.sigmas, dtype=np.float64)
        self.prior_amps = np.asarray(self.prior_amps, dtype=np.float64)
        self.included = np.asarray(self.included, dtype=bool)
        n = len(self.bin_indices)
        for name in ("mus", "amps", "sigmas", "prior_amps", "included"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"peak arrays must share one length ({name})")
        # Value ranges (amps >= 0, sigma bounds) are deliberately not checked
        # here: the optimizer passes through out-of-range states between the
        # Adam update and the projection that restores them.
        if n and np.any(np.diff(self.bin_indices) <= 0):
            raise ValueError("bin_indices must be strictly increasing")

    def __len__(self) -> int:
        return len(self.bin_indices)

    def replace(self, **kwargs) -> "PeakSet":
        return replace(self, **kwargs)

    @classmethod
    def empty(cls, sample_id: str = "") -> "PeakSet":
        z = np.zeros(0)
        return cls(sample_id, z, z, z, np.ones(0), z, np.zeros(0, dtype=bool))


def detect_peaks(p1: Spectrum) -> np.ndarray:
    """Indices of interior local maxima of a spectrum.

    A bin qualifies when values[n-1] < values[n] >= values[n+1]; the
    left-strict / right-non-strict combination picks the leftmost bin of
    a flat plateau.  Endpoints are never candidates.
    """
    v = p1.values
    hit = (v[1:-1] > v[:-2]) & (v[1:-1] >= v[2:])
    return np.nonzero(hit)[0] + 1


def hessian_priors(
    p1: Spectrum,
    indices: np.ndarray,
    init_sigma: float,
    smooth_sigma_bins: float = 1.0,
    bin_units: bool = False,
) -> np.ndarray:
    """Curvature-implied amplitude estimates at the given interior bins.

    The second derivative of the coarse prediction is smoothed (by
    ``smooth_sigma_bins`` bins; 0 disables) and evaluated at each index:
    prior = max(0, -D''(E) * init_sigma**2).  With ``bin_units`` the raw
    bin-space second difference is used instead of the eV-scaled second
    derivative, reproducing index-space arithmetic.
    """
    indices = np.asarray(indices, dtype=np.intp)
    hess = second_diff(p1, scaled=not bin_units)
    if smooth_sigma_bins > 0:
        hess = gaussian_smooth(hess, smooth_sigma_bins)
    return np.clip(-hess.values[indices] * init_sigma**2, 0.0, None)


def init_peakset(p1: Spectrum, cfg: BhlConfig, sample_id: str = "") -> PeakSet:
    """Detect candidates on the coarse prediction and build the initial peak set.

    Amplitudes start at the (nonnegative-clamped) spectrum value at each
    peak, widths at ``cfg.init_sigma``, and the inclusion mask all-true.
    """
    idx = detect_peaks(p1)
    priors = hessian_priors(
        p1, idx, cfg.init_sigma, cfg.hessian_smooth_bins, cfg.prior_bin_units
    )
    if cfg.drop_zero_prior:
        keep = priors > 0
        idx, priors = idx[keep], priors[keep]
    return PeakSet(
        sample_id=sample_id,
        bin_indices=idx,
        mus=p1.grid.energies()[idx],
        amps=np.clip(p1.values[idx], 0.0, None),
        sigmas=np.full(len(idx), cfg.init_sigma),
        prior_amps=priors,
        included=np.ones(len(idx), dtype=bool),
    )


def apply_exclusions(peaks: PeakSet, energies, tolerance: float) -> PeakSet:
    """Clear the inclusion mask for peaks within ``tolerance`` of listed energies."""
    if len(peaks) == 0 or len(energies) == 0:
        return peaks
    excluded = np.zeros(len(peaks), dtype=bool)
    for e in energies:
        excluded |= np.abs(peaks.mus - e) <= tolerance
    return peaks.replace(included=peaks.included & ~excluded)
