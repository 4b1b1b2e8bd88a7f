"""Phase-only input masks: random baselines and conjugate focusing masks.

The modulator controls only the phase of each input mode, never its
amplitude. Focusing masks are the phase of the conjugate-transposed
matrix applied to the target weights, arg(S^H w): for a single target t
this is -arg(S[t, n]) per mode, which rotates every contribution
S[t, n] * exp(i phase[n]) onto the positive real axis so the target
amplitudes add coherently. Discarding the amplitude of S^H w costs the
usual pi/4 factor in enhancement; that penalty is part of the modeled
device, not something to correct.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .errors import ConfigError, DegenerateTargetError, DimensionError, FormatError
from .medium import ScatteringMatrix, propagate
from . import rng

TWO_PI = 2.0 * np.pi


def canonicalize_phases(phases: np.ndarray) -> np.ndarray:
    """Fold phases into [0, 2*pi); idempotent."""
    arr = np.asarray(phases, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise ConfigError("phases must be finite")
    folded = np.mod(arr, TWO_PI)
    # np.mod can round tiny negatives up to exactly 2*pi
    folded[folded >= TWO_PI] = 0.0
    return folded


@dataclass(frozen=True)
class TargetSpec:
    """Output-mode indices and complex weights defining a focus target.

    For two targets, arg(weights[1] / weights[0]) sets the relative
    phase between the focused output fields.
    """

    indices: Tuple[int, ...]
    weights: Tuple[complex, ...]

    def __post_init__(self):
        object.__setattr__(self, "indices", tuple(int(i) for i in self.indices))
        object.__setattr__(self, "weights", tuple(complex(w) for w in self.weights))
        if len(self.indices) == 0:
            raise ConfigError("target spec needs at least one target")
        if len(self.indices) != len(self.weights):
            raise ConfigError("indices and weights must have equal length")
        if len(set(self.indices)) != len(self.indices):
            raise ConfigError(f"target indices must be distinct, got {self.indices}")
        if any(i < 0 for i in self.indices):
            raise ConfigError("target indices must be nonnegative")
        if not any(w != 0 for w in self.weights):
            raise ConfigError("at least one target weight must be nonzero")
        if not all(np.isfinite(w) for w in self.weights):
            raise ConfigError("target weights must be finite")

    @classmethod
    def single(cls, index: int, weight: complex = 1.0) -> "TargetSpec":
        return cls((index,), (weight,))


def dual_target_spec(sm: ScatteringMatrix, target_a: int, target_b: int, relative_phase: float) -> TargetSpec:
    """Equal-amplitude two-target spec with a controlled relative phase.

    Weights are inverse row norms of the matrix the mask will be computed
    from, so the two focused outputs come out with (statistically) equal
    amplitude even when the rows carry different norms or unknown
    calibration factors; target A leads target B in phase by
    ``relative_phase``.
    """
    _check_target_index(sm, target_a)
    _check_target_index(sm, target_b)
    norm_a = float(np.linalg.norm(sm.matrix[target_a]))
    norm_b = float(np.linalg.norm(sm.matrix[target_b]))
    if norm_a == 0.0 or norm_b == 0.0:
        raise DegenerateTargetError("dual target rows must both carry coupling")
    w_a = 1.0 / norm_a
    w_b = np.exp(1j * relative_phase) / norm_b
    return TargetSpec((target_a, target_b), (w_a, w_b))


def random_mask(n: int, seed: int) -> np.ndarray:
    """n phases i.i.d. uniform on [0, 2*pi), deterministic per seed."""
    if n < 1:
        raise ConfigError(f"mask length must be >= 1, got {n}")
    gen = rng.generator(seed, rng.RANDOM_MASK)
    return canonicalize_phases(gen.uniform(0.0, TWO_PI, size=n))


def conjugate_mask(sm: ScatteringMatrix, spec: TargetSpec) -> np.ndarray:
    """Phase-only conjugation mask, phases[n] = arg(sum_k conj(w_k) conj(S[t_k, n]))."""
    for index in spec.indices:
        _check_target_index(sm, index)
    rows = sm.matrix[list(spec.indices), :]
    row_power = np.sum(np.abs(rows) ** 2, axis=1)
    if np.any(row_power == 0.0):
        dead = [spec.indices[k] for k in np.nonzero(row_power == 0.0)[0]]
        raise DegenerateTargetError(f"target rows {dead} have no coupling to any input mode")
    weights = np.asarray(spec.weights, dtype=np.complex128)
    superposition = np.conj(weights) @ np.conj(rows)
    if not np.any(superposition != 0.0):
        raise DegenerateTargetError("target superposition cancels on every input mode")
    return canonicalize_phases(np.angle(superposition))


def apply_mask(mask: np.ndarray, amplitude: float) -> np.ndarray:
    """Uniform-amplitude field amplitude * exp(i * mask); power = n * amplitude^2."""
    phases = np.asarray(mask, dtype=np.float64)
    if phases.ndim != 1 or phases.size == 0:
        raise ConfigError("mask must be a nonempty 1-D phase sequence")
    if not np.all(np.isfinite(phases)):
        raise ConfigError("mask phases must be finite")
    if not (amplitude > 0 and np.isfinite(amplitude)):
        raise ConfigError(f"amplitude must be a positive finite real, got {amplitude}")
    return amplitude * np.exp(1j * phases)


def enhancement(sm: ScatteringMatrix, mask: np.ndarray, target: int) -> float:
    """Target intensity over mean non-target intensity for a unit-power-per-mode input.

    Random masks give ~1; a conjugate mask on N controlled modes gives
    (pi/4)(N-1)+1 on average.
    """
    _check_target_index(sm, target)
    if sm.m_out < 2:
        raise DimensionError("enhancement needs at least two output modes for a background")
    out = propagate(sm, apply_mask(mask, 1.0))
    intensities = np.abs(out) ** 2
    background = (float(intensities.sum()) - float(intensities[target])) / (sm.m_out - 1)
    if background == 0.0:
        raise DegenerateTargetError("background intensity is exactly zero")
    return float(intensities[target]) / background


def _check_target_index(sm: ScatteringMatrix, index: int) -> None:
    if not (0 <= index < sm.m_out):
        raise DimensionError(f"target index {index} outside output range [0, {sm.m_out})")


def save_mask_csv(path, mask: np.ndarray) -> None:
    """One phase per line, radians, 17 significant digits (lossless for float64)."""
    phases = canonicalize_phases(mask)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for value in phases:
            fh.write(f"{value:.17g}\n")


def load_mask_csv(path) -> np.ndarray:
    values = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            text = line.strip()
            if not text:
                continue
            try:
                values.append(float(text))
            except ValueError as exc:
                raise FormatError(f"{path}:{line_no}: not a phase value: {text!r}") from exc
    if not values:
        raise FormatError(f"{path}: empty mask file")
    arr = np.asarray(values, dtype=np.float64)
    if np.any(arr < 0.0) or np.any(arr >= TWO_PI):
        raise FormatError(f"{path}: phases must already be canonical in [0, 2*pi)")
    return arr
