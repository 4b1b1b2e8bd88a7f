"""Fringe-scan visibility, two-mode density matrix and concurrence bounds.

The coherence d between the |01> and |10> components is not directly
countable; it is bounded through the visibility V of single-photon
interference fringes, |d| ~= V * (P01 + P10) / 2. The reduced density
matrix in the basis (|00>, |01>, |10>, |11>) is diagonal except for d at
the (|01>, |10>) positions, and the entanglement lower bound is

    C = max(2 |d| - 2 sqrt(P00 * P11), 0),

positive iff the state is certified entangled. Confidence in C > 0 uses
exact Poisson tail statistics on the triple-coincidence count, the one
number whose fluctuation can erase positivity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import pdtr

from .errors import ConfigError, DegenerateFieldError, StatisticsError
from .medium import ScatteringMatrix, propagate
from .slm import apply_mask, conjugate_mask, dual_target_spec
from .quantum import TwoModeState
from . import rng

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class FringeScan:
    """Counts at one splitter port versus the programmed relative phase."""

    phi: np.ndarray
    counts: np.ndarray
    duration: np.ndarray

    def __post_init__(self):
        phi = np.asarray(self.phi, dtype=np.float64)
        counts = np.asarray(self.counts)
        duration = np.asarray(self.duration, dtype=np.float64)
        if phi.ndim != 1 or phi.size < 5:
            raise ConfigError(f"a fringe scan needs at least 5 points, got {phi.size}")
        if counts.shape != phi.shape or duration.shape != phi.shape:
            raise ConfigError("phi, counts and duration must have identical shapes")
        if np.any(phi < 0.0) or np.any(phi > TWO_PI):
            raise ConfigError("phases must lie within [0, 2*pi]")
        if np.any(counts < 0) or not np.issubdtype(counts.dtype, np.integer):
            raise ConfigError("counts must be nonnegative integers")
        if np.any(duration <= 0.0):
            raise ConfigError("durations must be positive")
        phi.setflags(write=False)
        duration.setflags(write=False)
        counts = counts.astype(np.int64)
        counts.setflags(write=False)
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "duration", duration)


@dataclass(frozen=True)
class VisibilityFit:
    visibility: float
    visibility_err: float
    offset: float
    phase0: float
    residual_rms: float


def scan_fringes(s_true: ScatteringMatrix, s_masks: ScatteringMatrix, target_a: int, target_b: int,
                 *, n_steps: int = 21, counts_per_step: float = 4000.0, duration_per_step: float = 1.0,
                 seed: int = 0, sigma_phi: float = 0.0, background_fraction: float = 0.0,
                 sampling: str = "poisson") -> FringeScan:
    """Scan the dual-target relative phase over [0, 2*pi] and count one port.

    For each of n_steps phases phi_j = 2*pi*j/(n_steps-1) a dual-target
    mask is computed from ``s_masks`` (normally the calibration
    estimate), propagated through ``s_true``, and the two target
    amplitudes are combined on a balanced splitter. Phase jitter of
    width sigma_phi (radians) is averaged within each step, multiplying
    the interference cross term by exp(-sigma_phi^2 / 2); an unmodulated
    background of ``background_fraction`` of the scan-mean rate is added
    to the port. Expected counts are scaled so a step at the scan-mean
    total rate yields counts_per_step / 2, then Poisson sampled
    (``sampling="expected"`` keeps the rounded means, the infinite-budget
    limit).
    """
    if n_steps < 5:
        raise ConfigError(f"n_steps must be >= 5, got {n_steps}")
    if counts_per_step < 0 or not np.isfinite(counts_per_step):
        raise ConfigError("counts_per_step must be a finite nonnegative number")
    if sigma_phi < 0:
        raise ConfigError("sigma_phi must be nonnegative")
    if background_fraction < 0:
        raise ConfigError("background_fraction must be nonnegative")
    if sampling not in ("poisson", "expected"):
        raise ConfigError(f"sampling must be 'poisson' or 'expected', got {sampling!r}")
    if duration_per_step <= 0:
        raise ConfigError("duration_per_step must be positive")

    phis = TWO_PI * np.arange(n_steps) / (n_steps - 1)
    dephasing = math.exp(-0.5 * sigma_phi ** 2)
    port = np.empty(n_steps)
    total = np.empty(n_steps)
    for j, phi in enumerate(phis):
        spec = dual_target_spec(s_masks, target_a, target_b, phi)
        out = propagate(s_true, apply_mask(conjugate_mask(s_masks, spec), 1.0))
        a_a = out[target_a]
        a_b = out[target_b]
        cross = float(np.real(np.conj(a_a) * a_b))
        total[j] = abs(a_a) ** 2 + abs(a_b) ** 2
        port[j] = total[j] / 2.0 + dephasing * cross

    mean_total = float(total.mean())
    if mean_total <= 0.0:
        raise DegenerateFieldError("no power reaches either target across the scan")
    offset = background_fraction * mean_total / 2.0
    means = counts_per_step * (port + offset) / (mean_total * (1.0 + background_fraction))
    means = np.clip(means, 0.0, None)

    if sampling == "poisson":
        counts = rng.generator(seed, rng.FRINGES).poisson(means)
    else:
        counts = np.rint(means).astype(np.int64)
    durations = np.full(n_steps, float(duration_per_step))
    return FringeScan(phi=phis, counts=counts.astype(np.int64), duration=durations)


def fit_visibility(scan: FringeScan) -> VisibilityFit:
    """Poisson-weighted least-squares fit of rate = offset*(1 + V cos(phi - phase0)).

    The model is linear in (c0, c1, c2) = (offset, offset*V*cos(phase0),
    offset*V*sin(phase0)), so the weighted optimum is solved in closed
    form; visibility_err comes from the parameter covariance by the
    delta method. Visibility is clamped to [0, 1] after the error is
    computed.
    """
    counts = scan.counts.astype(np.float64)
    if counts.sum() <= 0:
        raise StatisticsError("cannot fit a fringe through all-zero counts")
    rate = counts / scan.duration
    variance = np.maximum(counts, 1.0) / scan.duration ** 2
    weights = 1.0 / variance

    design = np.column_stack([np.ones_like(scan.phi), np.cos(scan.phi), np.sin(scan.phi)])
    if design.shape[0] < design.shape[1]:
        raise StatisticsError("fewer scan points than fit parameters")
    sqrt_w = np.sqrt(weights)
    coef, *_ = np.linalg.lstsq(design * sqrt_w[:, None], rate * sqrt_w, rcond=None)
    c0, c1, c2 = (float(c) for c in coef)
    if c0 <= 0.0:
        raise StatisticsError("fitted mean rate is not positive")

    try:
        covariance = np.linalg.inv(design.T @ (weights[:, None] * design))
    except np.linalg.LinAlgError as exc:
        raise StatisticsError("fringe scan phases do not span the fit basis") from exc
    amplitude = math.hypot(c1, c2)
    visibility = amplitude / c0
    if amplitude > 0.0:
        grad = np.array([-amplitude / c0 ** 2, c1 / (amplitude * c0), c2 / (amplitude * c0)])
    else:
        # direction-free bound at the cusp of the amplitude surface
        grad = np.array([0.0, 1.0 / c0, 1.0 / c0])
    visibility_err = float(np.sqrt(max(grad @ covariance @ grad, 0.0)))

    phase0 = math.atan2(c2, c1) % TWO_PI if amplitude > 0.0 else 0.0
    residuals = rate - design @ coef
    return VisibilityFit(
        visibility=float(min(max(visibility, 0.0), 1.0)),
        visibility_err=visibility_err,
        offset=c0,
        phase0=phase0,
        residual_rms=float(np.sqrt(np.mean(residuals ** 2))),
    )


def coherence_from_visibility(visibility: float, p01: float, p10: float) -> float:
    """|d| ~= V * (p01 + p10) / 2."""
    for name, value in (("visibility", visibility), ("p01", p01), ("p10", p10)):
        if not (0.0 <= value <= 1.0):
            raise ConfigError(f"{name} must lie in [0, 1], got {value}")
    return visibility * (p01 + p10) / 2.0


def build_density_matrix(state: TwoModeState, phase_of_d: float = 0.0) -> np.ndarray:
    """4x4 density matrix in the (|00>, |01>, |10>, |11>) basis.

    Diagonal carries the occupation probabilities; the only off-diagonal
    entries are d = d_mag * exp(i phase_of_d) between |01> and |10>. The
    result is Hermitian with unit trace, and positive semidefinite
    whenever d_mag <= sqrt(p01 * p10) (guaranteed by TwoModeState).
    """
    rho = np.zeros((4, 4), dtype=np.complex128)
    rho[0, 0] = state.p00
    rho[1, 1] = state.p01
    rho[2, 2] = state.p10
    rho[3, 3] = state.p11
    d = state.d_mag * np.exp(1j * phase_of_d)
    rho[1, 2] = d
    rho[2, 1] = np.conj(d)
    eigenvalues = np.linalg.eigvalsh(rho)
    if eigenvalues.min() < -1e-9:
        raise StatisticsError(f"density matrix not positive semidefinite: min eigenvalue {eigenvalues.min()}")
    return rho


def concurrence(p00: float, p11: float, d_mag: float) -> float:
    """Entanglement lower bound max(2|d| - 2 sqrt(p00 * p11), 0)."""
    for name, value in (("p00", p00), ("p11", p11)):
        if not (0.0 <= value <= 1.0):
            raise ConfigError(f"{name} must lie in [0, 1], got {value}")
    if d_mag < 0.0:
        raise ConfigError("coherence magnitude must be nonnegative")
    return max(2.0 * d_mag - 2.0 * math.sqrt(p00 * p11), 0.0)


def poisson_upper_limit(n_obs: int, confidence: float) -> float:
    """One-sided upper limit on a Poisson mean after observing n_obs events.

    Returns the smallest mean lam such that P(Poisson(lam) <= n_obs)
    equals 1 - confidence, found by bisection to 1e-9 relative width.
    The limit grows with both n_obs and confidence. For n_obs = 0 it is
    the closed form -ln(1 - confidence).
    """
    if n_obs < 0 or int(n_obs) != n_obs:
        raise ConfigError(f"n_obs must be a nonnegative integer, got {n_obs}")
    if not (0.0 < confidence < 1.0):
        raise ConfigError(f"confidence must lie strictly inside (0, 1), got {confidence}")
    n_obs = int(n_obs)
    tail = 1.0 - confidence

    lo = 0.0
    hi = float(n_obs) + 1.0
    while pdtr(n_obs, hi) > tail:
        hi *= 2.0
    while hi - lo > 1e-9 * hi:
        mid = 0.5 * (lo + hi)
        if pdtr(n_obs, mid) > tail:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def concurrence_threshold(n_t: int, d_mag: float, p00: float) -> int:
    """Largest triple count keeping the concurrence strictly positive.

    C > 0 at p11 = N / n_T requires N < n_T * d_mag^2 / p00; the largest
    such integer is ceil(x) - 1 (exact integer boundaries excluded by
    the strict inequality). Returns -1 when no count can do it
    (d_mag = 0: concurrence never positive).
    """
    if n_t <= 0:
        raise ConfigError(f"n_t must be positive, got {n_t}")
    if not (0.0 < p00 <= 1.0):
        raise ConfigError(f"p00 must lie in (0, 1], got {p00}")
    if d_mag < 0.0:
        raise ConfigError("coherence magnitude must be nonnegative")
    if d_mag == 0.0:
        return -1
    bound = n_t * d_mag * d_mag / p00
    return math.ceil(bound) - 1


def positivity_confidence(n_obs_triples: int, threshold: int) -> float:
    """Confidence that the true triple mean keeps the concurrence positive.

    Exact Poisson tail: the largest confidence c whose upper limit on
    the triple mean stays at or below ``threshold`` is
    P(Poisson(threshold) > n_obs_triples).
    """
    if threshold < 0:
        raise ConfigError(f"threshold must be nonnegative, got {threshold}")
    if n_obs_triples < 0:
        raise ConfigError(f"n_obs_triples must be nonnegative, got {n_obs_triples}")
    return float(1.0 - pdtr(int(n_obs_triples), float(threshold)))


def fringe_csv(path, scan: FringeScan) -> None:
    """(phi, counts, duration) table suitable for external plotting."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("phi,counts,duration\n")
        for phi, count, duration in zip(scan.phi, scan.counts, scan.duration):
            fh.write(f"{float(phi)!r},{int(count)},{float(duration)!r}\n")
