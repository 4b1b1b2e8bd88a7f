import numpy as np
import pytest

from specklewalk import (
    CalibrationConfig,
    ConfigError,
    DimensionError,
    MediumConfig,
    ScatteringMatrix,
    TargetSpec,
    apply_mask,
    conjugate_mask,
    generate_medium,
    measure_sm,
    propagate,
    sm_fidelity,
)
from specklewalk.calibration import fidelity_csv, reference_field


def test_config_requires_three_steps():
    with pytest.raises(ConfigError):
        CalibrationConfig(phase_steps=2)
    with pytest.raises(ConfigError):
        CalibrationConfig(photons_per_measurement=0.0)
    assert CalibrationConfig(phase_steps=3).noiseless


def test_noiseless_rows_equal_conj_reference_times_truth():
    cfg = CalibrationConfig(phase_steps=4, reference_seed=17)
    sm = generate_medium(MediumConfig(n_in=24, m_out=12, seed=16))
    estimate = measure_sm(sm, cfg)
    reference = propagate(sm, reference_field(sm.n_in, cfg))
    expected = np.conj(reference)[:, None] * sm.matrix
    scale = np.abs(expected).max()
    np.testing.assert_allclose(estimate.matrix.matrix, expected, atol=1e-12 * scale)


def test_estimator_matches_brute_force_intensity_sequence():
    # independent oracle: evaluate the four interference intensities by hand
    # for one (m, n) pair and apply the Fourier combination directly
    cfg = CalibrationConfig(phase_steps=4, reference_seed=23)
    sm = generate_medium(MediumConfig(n_in=6, m_out=5, seed=22))
    estimate = measure_sm(sm, cfg)
    reference = propagate(sm, reference_field(sm.n_in, cfg))
    m, n = 2, 4
    acc = 0.0
    for j in range(4):
        theta = 2 * np.pi * j / 4
        intensity = abs(reference[m] + np.exp(1j * theta) * sm.matrix[m, n]) ** 2
        acc += intensity * np.exp(-1j * theta)
    oracle = acc / 4
    assert estimate.matrix.matrix[m, n] == pytest.approx(oracle, rel=1e-12)
    assert oracle == pytest.approx(np.conj(reference[m]) * sm.matrix[m, n], rel=1e-10)


@pytest.mark.parametrize("steps", [3, 4, 5, 7])
def test_fourier_estimator_exact_for_any_step_count(steps):
    cfg = CalibrationConfig(phase_steps=steps, reference_seed=29)
    sm = generate_medium(MediumConfig(n_in=16, m_out=8, seed=28))
    fidelity = sm_fidelity(sm, measure_sm(sm, cfg))
    assert np.all(fidelity >= 1 - 1e-9)


def test_zero_entry_stays_zero_noiseless():
    matrix = np.ones((2, 3), dtype=complex)
    matrix[1, 2] = 0.0
    sm = ScatteringMatrix(matrix)
    estimate = measure_sm(sm, CalibrationConfig(reference_seed=5))
    assert abs(estimate.matrix.matrix[1, 2]) < 1e-14


def test_zero_reference_row_flagged_and_zeroed():
    matrix = np.ones((3, 4), dtype=complex)
    matrix[1, :] = 0.0  # this output sees nothing, so its reference is zero
    sm = ScatteringMatrix(matrix)
    estimate = measure_sm(sm, CalibrationConfig(reference_seed=5))
    assert estimate.flagged_rows == (1,)
    assert np.all(estimate.matrix.matrix[1, :] == 0.0)
    assert "1" in estimate.row_reference_note


def test_fidelity_reference_cases():
    sm = generate_medium(MediumConfig(n_in=32, m_out=10, seed=40))
    exact = measure_sm(sm, CalibrationConfig(reference_seed=41))

    same = sm_fidelity(sm, exact)
    assert np.all(same >= 1 - 1e-9)

    # per-row phase factors leave the correlation untouched
    phased = exact.matrix.matrix * np.exp(1j * np.linspace(0, 3, 10))[:, None]
    from specklewalk.calibration import SmEstimate
    assert np.all(sm_fidelity(sm, SmEstimate(ScatteringMatrix(phased), "")) >= 1 - 1e-9)

    with pytest.raises(DimensionError):
        sm_fidelity(generate_medium(MediumConfig(n_in=8, m_out=10, seed=1)), exact)


def test_fidelity_of_unrelated_matrix_scales_like_inverse_sqrt_n():
    n = 256
    sm = generate_medium(MediumConfig(n_in=n, m_out=64, seed=50))
    other = generate_medium(MediumConfig(n_in=n, m_out=64, seed=51))
    from specklewalk.calibration import SmEstimate
    fidelity = sm_fidelity(sm, SmEstimate(other, ""))
    assert abs(np.mean(fidelity) - 1 / np.sqrt(n)) < 0.5 / np.sqrt(n)


def test_shot_noise_at_1e4_photons_keeps_rows_above_99():
    means = []
    for trial in range(10):
        sm = generate_medium(MediumConfig(n_in=64, m_out=64, seed=60 + trial))
        cfg = CalibrationConfig(photons_per_measurement=1e4, reference_seed=80 + trial, noise_seed=90 + trial)
        means.append(float(np.mean(sm_fidelity(sm, measure_sm(sm, cfg)))))
    assert np.mean(means) >= 0.99


def test_noise_monotonicity_ladder():
    ladders = []
    for ppm in (1e4, 1e3, 1e2):
        values = []
        for trial in range(10):
            sm = generate_medium(MediumConfig(n_in=64, m_out=64, seed=200 + trial))
            cfg = CalibrationConfig(photons_per_measurement=ppm, reference_seed=300 + trial, noise_seed=400 + trial)
            values.append(float(np.mean(sm_fidelity(sm, measure_sm(sm, cfg)))))
        ladders.append(np.mean(values))
    assert ladders[0] >= ladders[1] >= ladders[2]


def test_focusing_through_estimate_matches_truth():
    # the row factor conj(r_m) shifts the mask by a global phase only
    for trial in range(5):
        sm = generate_medium(MediumConfig(n_in=64, m_out=64, seed=500 + trial))
        estimate = measure_sm(sm, CalibrationConfig(reference_seed=600 + trial))
        spec = TargetSpec.single(13)
        mask_true = conjugate_mask(sm, spec)
        mask_est = conjugate_mask(estimate.matrix, spec)

        # identical up to a global phase <=> the offset phasor has unit coherence
        offset_coherence = abs(np.mean(np.exp(1j * (mask_est - mask_true))))
        assert offset_coherence > 1 - 1e-12

        i_true = abs(propagate(sm, apply_mask(mask_true, 1.0))[13]) ** 2
        i_est = abs(propagate(sm, apply_mask(mask_est, 1.0))[13]) ** 2
        assert abs(i_true - i_est) / i_true < 1e-9


def test_fidelity_csv(tmp_path):
    path = tmp_path / "fid.csv"
    fidelity_csv(path, np.array([1.0, 0.25]))
    assert path.read_text() == "row,fidelity\n0,1.0\n1,0.25\n"
