"""Scattering-matrix measurement by phase-stepping against an internal reference.

The medium is probed one input mode at a time while a fixed reference
input illuminates it continuously, producing a static reference speckle
r_m at every output. Stepping the probe phase through K >= 3 equally
spaced values theta_j = 2*pi*j/K records

    I_mn(theta_j) = |r_m + exp(i theta_j) S_mn|^2

and the first discrete Fourier coefficient of that intensity sequence,

    S_hat_mn = (1/K) * sum_j I_mn(theta_j) * exp(-i theta_j),

equals conj(r_m) * S_mn exactly in the noiseless case (the DC term and
the conjugate sideband cancel over any K >= 3). Each row of the estimate
therefore carries an unknown factor conj(r_m). The factor is left in
place: phase-only conjugation masks depend only on arg of the row, where
it contributes a global per-target offset, so focusing through the
estimate matches focusing through the true matrix.

Shot noise is modeled as Poisson photon counting on every intensity
sample, with photons_per_measurement photons per unit intensity.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .errors import ConfigError, DimensionError
from .medium import ScatteringMatrix, propagate
from .slm import apply_mask, random_mask
from . import rng


@dataclass(frozen=True)
class CalibrationConfig:
    phase_steps: int = 4
    photons_per_measurement: Optional[float] = None  # None means noiseless
    reference_seed: int = 1
    noise_seed: int = 2

    def __post_init__(self):
        if self.phase_steps < 3:
            raise ConfigError(f"phase_steps must be >= 3 to separate amplitude, phase and offset, got {self.phase_steps}")
        if self.photons_per_measurement is not None and not (self.photons_per_measurement > 0):
            raise ConfigError("photons_per_measurement must be positive or None for noiseless")

    @property
    def noiseless(self) -> bool:
        return self.photons_per_measurement is None


@dataclass(frozen=True)
class SmEstimate:
    """Measured matrix, known only up to one complex factor per output row."""

    matrix: ScatteringMatrix
    row_reference_note: str
    flagged_rows: Tuple[int, ...] = ()


def reference_field(n_in: int, cfg: CalibrationConfig) -> np.ndarray:
    """The fixed unit-amplitude reference input held during probing."""
    return apply_mask(random_mask(n_in, cfg.reference_seed), 1.0)


def measure_sm(s_true: ScatteringMatrix, cfg: CalibrationConfig) -> SmEstimate:
    """Phase-step every input mode against the static reference speckle."""
    steps = cfg.phase_steps
    thetas = 2.0 * np.pi * np.arange(steps) / steps
    reference = propagate(s_true, reference_field(s_true.n_in, cfg))  # r_m per output

    gen = None if cfg.noiseless else rng.generator(cfg.noise_seed, rng.CALIBRATION_NOISE)
    estimate = np.zeros_like(s_true.matrix)
    for j, theta in enumerate(thetas):
        interfered = reference[:, None] + np.exp(1j * theta) * s_true.matrix
        intensity = np.abs(interfered) ** 2
        if gen is not None:
            ppm = cfg.photons_per_measurement
            intensity = gen.poisson(intensity * ppm) / ppm
        estimate += intensity * np.exp(-1j * theta)
    estimate /= steps

    flagged = np.nonzero(np.abs(reference) == 0.0)[0]
    if flagged.size:
        estimate[flagged, :] = 0.0
    note = "rows scaled by conj(r_m) of the internal reference speckle; arg-only consumers are unaffected"
    if flagged.size:
        note += f"; zero-reference rows zeroed: {flagged.tolist()}"
    return SmEstimate(
        matrix=ScatteringMatrix(estimate, dict(s_true.meta)),
        row_reference_note=note,
        flagged_rows=tuple(int(i) for i in flagged),
    )


def sm_fidelity(s_true: ScatteringMatrix, estimate: SmEstimate) -> np.ndarray:
    """Per-row |<est, true>| / (||est|| ||true||) in [0, 1]; zero-norm rows give 0.

    Invariant to the per-row reference factor, so 1.0 means the row was
    recovered perfectly for every purpose the estimate serves.
    """
    est = estimate.matrix.matrix
    if est.shape != s_true.matrix.shape:
        raise DimensionError(f"estimate shape {est.shape} does not match true shape {s_true.matrix.shape}")
    inner = np.abs(np.sum(est * np.conj(s_true.matrix), axis=1))
    norms = np.linalg.norm(est, axis=1) * np.linalg.norm(s_true.matrix, axis=1)
    fidelity = np.zeros(s_true.m_out)
    good = norms > 0.0
    fidelity[good] = inner[good] / norms[good]
    return np.clip(fidelity, 0.0, 1.0)


def fidelity_csv(path, fidelities: np.ndarray) -> None:
    """Row-index / correlation table for quality inspection."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("row,fidelity\n")
        for i, value in enumerate(np.asarray(fidelities, dtype=np.float64)):
            fh.write(f"{i},{float(value)!r}\n")
