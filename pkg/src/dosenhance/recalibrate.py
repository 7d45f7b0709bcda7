"""Ground-truth-free recalibration and per-atom normalization.

The enhanced spectrum is rescaled so its trapezoidal integral matches
the pseudo-target's; no ground truth enters.  In pDOS mode, per-atom
enhanced spectra are additionally normalized by the absolute integral
of that atom's 3-layer baseline before aggregation.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .grids import Spectrum, trapz_integral

__all__ = [
    "AtomicSpectrumSet",
    "DegenerateBaselineError",
    "gt_free_recalibrate",
    "nbhl_normalize",
    "aggregate_pdos",
]

#: Baseline integrals with absolute value at or below this are degenerate.
MIN_BASELINE_INTEGRAL = 1e-12


class DegenerateBaselineError(ValueError):
    """A per-atom baseline integrates to (numerically) zero."""


@dataclass
class AtomicSpectrumSet:
    """Per-atom baseline and enhanced spectra of one sample.

    ``atoms`` is a list of ``(atom_id, base_3layer, enhanced)`` tuples;
    all spectra must share one grid.
    """

    sample_id: str
    atoms: list

    def __post_init__(self):
        if not self.atoms:
            raise ValueError(f"sample {self.sample_id!r}: need at least one atom")
        grid = self.atoms[0][1].grid
        for atom_id, base, enh in self.atoms:
            if base.grid != grid or enh.grid != grid:
                raise ValueError(f"sample {self.sample_id!r}: atom {atom_id!r} grid mismatch")

    @property
    def grid(self):
        return self.atoms[0][1].grid


def gt_free_recalibrate(enh: Spectrum, pseudo: Spectrum, epsilon: float = 1e-8):
    """Rescale ``enh`` so its integral matches the pseudo-target's.

    Returns ``(rescaled, scale)`` with
    ``scale = I_pseudo / (I_enh + epsilon)``.  A negative enhanced
    integral is allowed (the scale then flips sign) but flagged with a
    warning, since a physical DOS should be nonnegative.
    """
    if enh.grid != pseudo.grid:
        raise ValueError("enhanced and pseudo-target live on different grids")
    i_enh = trapz_integral(enh)
    i_pseudo = trapz_integral(pseudo)
    scale = i_pseudo / (i_enh + epsilon)
    if scale < 0:
        warnings.warn(
            f"negative recalibration scale {scale:.3g}: enhanced spectrum "
            "integrates below zero",
            stacklevel=2,
        )
    return enh.with_values(enh.values * scale), scale


def nbhl_normalize(atom_set: AtomicSpectrumSet, shared_z: bool = False) -> AtomicSpectrumSet:
    """Divide each enhanced spectrum by |integral of that atom's baseline|.

    With ``shared_z`` every atom is divided by the absolute integral of
    the summed baseline instead (the alternative reading of the
    aggregate normalization).
    """
    if shared_z:
        total = sum(trapz_integral(base) for _, base, _ in atom_set.atoms)
        z_shared = abs(total)
        if z_shared <= MIN_BASELINE_INTEGRAL:
            raise DegenerateBaselineError(
                f"sample {atom_set.sample_id!r}: degenerate baseline integral "
                f"(shared Z = {z_shared:.3g})"
            )
    normalized = []
    for atom_id, base, enh in atom_set.atoms:
        z = z_shared if shared_z else abs(trapz_integral(base))
        if z <= MIN_BASELINE_INTEGRAL:
            raise DegenerateBaselineError(
                f"sample {atom_set.sample_id!r}, atom {atom_id!r}: "
                f"degenerate baseline integral (Z = {z:.3g})"
            )
        normalized.append((atom_id, base, enh.with_values(enh.values / z)))
    return AtomicSpectrumSet(atom_set.sample_id, normalized)


def aggregate_pdos(atom_set: AtomicSpectrumSet, normalized: bool = False) -> Spectrum:
    """Bin-wise sum of per-atom enhanced spectra (optionally NBHL-normalized first)."""
    if normalized:
        atom_set = nbhl_normalize(atom_set)
    total = np.zeros(atom_set.grid.n_points)
    for _, _, enh in atom_set.atoms:
        total += enh.values
    return Spectrum(atom_set.grid, total)
