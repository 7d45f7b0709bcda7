"""Hyperparameter bundle for the peak-fitting pipeline."""

from __future__ import annotations

from dataclasses import dataclass

__all__ = ["BhlConfig"]


@dataclass(frozen=True)
class BhlConfig:
    """All knobs of the enhancement fit.

    ``pseudo_sigma`` is the only value taken from reported experience
    (smoothing of 2 bins for the fitting target); the remaining defaults
    are engineering choices meant to be tuned with the sweep command.

    Attributes
    ----------
    lambda_reg : weight of the amplitude-prior penalty.
    freq_weight : weight of the Fourier-magnitude cosine term.
    curv_weight : weight of the curvature (second-difference) penalty.
    sigma_a : soft confidence width of the amplitude prior.
    init_sigma : initial Gaussian peak width, eV.
    min_sigma, max_sigma : box bounds for fitted widths, eV.
    pseudo_sigma : smoothing applied to the baseline to build the fitting
        target, in grid bins; below 0.25 bins the target is the baseline
        itself.
    fit_lr, fit_steps : Adam learning rate and iteration count.
    seed : seed for any randomized driver built on top of the fit.
    epsilon_recal : guard added to the enhanced integral when rescaling.
    hessian_smooth_bins : smoothing applied to the curvature field before
        reading amplitude priors, in grid bins (0 disables).
    drop_zero_prior : discard detected peaks whose curvature prior clips
        to zero instead of keeping them at zero initialization.
    prior_bin_units : compute priors from the raw bin-space second
        difference instead of the spacing-scaled second derivative.
    """

    lambda_reg: float = 0.1
    freq_weight: float = 0.5
    curv_weight: float = 0.01
    sigma_a: float = 0.5
    init_sigma: float = 0.15
    min_sigma: float = 0.05
    max_sigma: float = 1.0
    pseudo_sigma: float = 2.0
    fit_lr: float = 0.05
    fit_steps: int = 300
    seed: int = 0
    epsilon_recal: float = 1e-8
    hessian_smooth_bins: float = 1.0
    drop_zero_prior: bool = False
    prior_bin_units: bool = False

    def __post_init__(self):
        if not (self.min_sigma <= self.init_sigma <= self.max_sigma):
            raise ValueError(
                f"need min_sigma <= init_sigma <= max_sigma, got "
                f"{self.min_sigma}, {self.init_sigma}, {self.max_sigma}"
            )
        if min(self.lambda_reg, self.freq_weight, self.curv_weight) < 0:
            raise ValueError("loss weights must be nonnegative")
        if self.fit_steps < 1:
            raise ValueError("fit_steps must be >= 1")
        if self.sigma_a <= 0 or self.fit_lr <= 0 or self.epsilon_recal <= 0:
            raise ValueError("sigma_a, fit_lr and epsilon_recal must be positive")
        if self.pseudo_sigma < 0 or self.hessian_smooth_bins < 0:
            raise ValueError("smoothing widths must be nonnegative")
