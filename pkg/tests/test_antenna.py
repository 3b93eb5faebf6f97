import numpy as np
import pytest

from satrx.antenna import (
    AntennaPattern,
    PatternFileError,
    Scenario,
    analytic_pattern,
    aperture_gain,
    beamwidth_deg,
    build_pattern,
    channel_matrix,
    export_pattern,
    load_pattern_file,
    noise_correlation,
    nominal_beamwidth_deg,
    paper_fixture_knn,
)


@pytest.fixture(scope="module")
def pattern():
    return analytic_pattern(Scenario())


def test_aperture_gain_limits():
    assert aperture_gain(0.0) == 1.0
    # first null of 2 J1(u)/u at u = 3.8317
    assert abs(aperture_gain(3.8317)) < 1e-4
    assert aperture_gain(1.6163) == pytest.approx(1 / np.sqrt(2), abs=1e-3)


def test_beamwidth_near_rule_of_thumb(pattern):
    scenario = Scenario()
    nominal = nominal_beamwidth_deg(scenario)
    assert nominal == pytest.approx(5.0)
    # half-power point of 2 J1(u)/u at u = 1.6163, u = k sin(theta)
    k = np.pi * scenario.aperture_efficiency * scenario.dish_diameter / scenario.wavelength
    airy = 2 * np.degrees(np.arcsin(1.616340 / k))
    measured = beamwidth_deg(pattern, 0)
    assert measured == pytest.approx(airy, abs=2e-3)
    assert 0.9 * nominal < measured <= nominal


def test_pattern_peaks_at_lnb_offsets(pattern):
    for m, offset in enumerate(Scenario().lnb_offsets_deg):
        peak = np.degrees(pattern.angles[np.argmax(np.abs(pattern.gains[m]))])
        assert peak == pytest.approx(offset, abs=0.01)


def test_pattern_floor_applies(pattern):
    assert np.min(np.abs(pattern.gains)) == pytest.approx(0.01)


def test_channel_matrix_shape_and_desired_gain(pattern):
    scenario = Scenario()
    a = channel_matrix(pattern, scenario)
    assert a.shape == (3, 5)
    assert a[0, 0] == pytest.approx(1.0, abs=1e-9)
    # the centre feed sees the desired satellite better than the squinted feeds
    assert np.all(np.abs(a[0, 0]) > np.abs(a[1:, 0]))


def test_channel_matrix_override_angles(pattern):
    scenario = Scenario()
    a = channel_matrix(pattern, scenario, theta_deg=[0.05, 3.0, -2.8, 5.7, -5.9])
    base = channel_matrix(pattern, scenario)
    np.testing.assert_allclose(a[:, 1:], base[:, 1:])
    assert not np.allclose(a[:, 0], base[:, 0])


def test_gaussian_overlap_oracle():
    # overlap of Gaussians separated by sqrt(2) widths is exp(-1/2)
    s = 0.02
    angles = np.linspace(-0.5, 0.5, 40001)
    gains = np.stack([np.exp(-(angles**2) / (2 * s**2)), np.exp(-((angles - np.sqrt(2) * s) ** 2) / (2 * s**2))])
    k = noise_correlation(AntennaPattern(angles, gains))
    assert k[0, 1].real == pytest.approx(np.exp(-0.5), abs=1e-9)
    np.testing.assert_allclose(np.diag(k), 1.0)


def test_noise_correlation_properties(pattern):
    k = noise_correlation(pattern)
    np.testing.assert_allclose(k, k.conj().T)
    assert np.linalg.eigvalsh(k).min() > 0
    # adjacent feeds overlap far more than the two outer feeds
    assert k[0, 1].real > 5 * abs(k[1, 2])


def test_fixture_matrix_is_psd():
    k = paper_fixture_knn()
    np.testing.assert_allclose(k, k.conj().T)
    assert np.linalg.eigvalsh(k).min() > 0
    assert k[0, 1] == 0.31 and k[0, 2] == 0.01


def test_export_round_trip(tmp_path, pattern):
    path = export_pattern(pattern, tmp_path / "p.csv", step=8)
    back = load_pattern_file(path)
    assert back.m == 3
    theta = np.radians([-10.0, -2.8, 0.0, 3.0, 5.7, 20.0])
    np.testing.assert_allclose(back.evaluate(theta), pattern.evaluate(theta), atol=2e-3)


def test_scenario_with_pattern_file(tmp_path, pattern):
    path = export_pattern(pattern, tmp_path / "p.csv", step=8)
    loaded = build_pattern(Scenario(pattern_file=str(path)))
    assert loaded.m == 3
    with pytest.raises(ValueError, match="LNBs"):
        build_pattern(Scenario(m=2, lnb_offsets_deg=(0.0, 2.9), pattern_file=str(path)))


@pytest.mark.parametrize(
    "text, message",
    [
        ("", "empty"),
        ("lnb_index,angle_deg,gain_db\n0,0,0\n", "phase"),
        ("lnb_index,angle_deg,gain_db,phase_deg\n", "no data"),
        ("lnb_index,angle_deg,gain_db,phase_deg\n0,1,0,0\n0,0,0,0\n", "non-monotone"),
        ("lnb_index,angle_deg,gain_db,phase_deg\n0,0,x,0\n", "malformed"),
        ("lnb_index,angle_deg,gain_db,phase_deg\n0,-1,-20,0\n0,0,0,0\n0,1,-20,0\n", "3-dB"),
    ],
)
def test_pattern_file_errors(tmp_path, text, message):
    path = tmp_path / "bad.csv"
    path.write_text(text)
    with pytest.raises(PatternFileError, match=message):
        load_pattern_file(path)


def test_scenario_validation():
    with pytest.raises(ValueError):
        Scenario(theta_deg=(1.0, 2.0, 3.0, 4.0))
    with pytest.raises(ValueError):
        Scenario(theta_deg=(0.0, 3.0, 3.0, 5.0))
    with pytest.raises(ValueError):
        Scenario(m=2)
    assert Scenario().overloaded


def test_evaluate_outside_grid_rejected():
    p = AntennaPattern(np.array([0.0, 0.1]), np.ones((1, 2)))
    with pytest.raises(ValueError):
        p.evaluate([0.2])
