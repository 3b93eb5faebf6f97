import numpy as np
import pytest

from satrx.antenna import paper_fixture_knn
from satrx.detectors import BleCount
from satrx.montecarlo import (
    DetectorKind,
    DetectorSpec,
    Link,
    SimConfig,
    count_errors,
    default_detectors,
    draw_correlated_noise,
    draw_frame,
    draw_pointing_error,
    frame_rng,
    measure_ledger,
    run_ber_sweep,
    run_frame,
    sigma2_from_snr,
    snr_from_sigma2,
)

SHORT = dict(symbols_per_frame=40, seed=11)


def test_sigma2_examples():
    assert sigma2_from_snr(np.ones((1, 1)), 10.0) == pytest.approx(0.1)
    assert sigma2_from_snr(2 * np.ones((1, 1)), 10.0) == pytest.approx(0.4)
    # average over M*N entries of |A|^2
    assert sigma2_from_snr(np.ones((2, 3)), 0.0) == pytest.approx(1.0)
    a = np.array([[1.0, 0.3j], [0.2, 0.8]])
    assert snr_from_sigma2(a, sigma2_from_snr(a, 17.5)) == pytest.approx(17.5)


def test_correlated_noise_statistics():
    knn = paper_fixture_knn()
    z = draw_correlated_noise(knn, 0.5, np.random.default_rng(0), 200_000)
    cov = z.T @ z.conj() / z.shape[0]
    assert np.real(np.diag(cov)) == pytest.approx([0.5, 0.5, 0.5], rel=0.02)
    corr = cov[0, 1].real / 0.5
    assert corr == pytest.approx(0.31, abs=0.02)
    assert abs(np.mean(z[:, 0] ** 2)) < 0.01  # circular symmetry


def test_pointing_error_spread():
    e = draw_pointing_error(0.1, 100_000, np.random.default_rng(1))
    assert np.std(e) == pytest.approx(0.1 / 3, rel=0.02)
    with pytest.raises(ValueError):
        draw_pointing_error(-0.1, 3, np.random.default_rng(0))


def test_zero_pointing_error_keeps_the_draw_order():
    a, b = np.random.default_rng(3), np.random.default_rng(3)
    assert np.all(draw_pointing_error(0.0, 5, a) == 0)
    draw_pointing_error(0.1, 5, b)
    assert a.integers(1 << 30) == b.integers(1 << 30)


def test_frame_rng_streams():
    x = frame_rng(1, 0, 0).standard_normal(4)
    np.testing.assert_array_equal(x, frame_rng(1, 0, 0).standard_normal(4))
    assert not np.allclose(x, frame_rng(1, 0, 1).standard_normal(4))
    assert not np.allclose(x, frame_rng(1, 1, 0).standard_normal(4))


@pytest.fixture(scope="module")
def link():
    return Link.build(SimConfig(**SHORT))


def test_frame_shapes_and_common_bits(link):
    f = draw_frame(link, 15.0, frame_rng(0, 0, 0))
    assert f.bits.shape == (5, 120)
    assert f.indices.shape == (40, 5)
    assert f.received.shape == (40, 3)
    mis = Link.build(SimConfig(pointing_error_deg=0.1, **SHORT))
    g = draw_frame(mis, 15.0, frame_rng(0, 0, 0))
    np.testing.assert_array_equal(f.bits, g.bits)
    assert not np.allclose(f.received, g.received)


def test_joint_ml_is_error_free_at_high_snr(link):
    spec = default_detectors()[0]
    errors, bits = run_frame(link, link.receiver(spec, 60.0), 60.0, frame_rng(0, 0, 0))
    assert (errors, bits) == (0, 120)


def test_count_errors_on_desired_stream_only(link):
    f = draw_frame(link, 15.0, frame_rng(0, 0, 0))
    wrong = f.indices.copy()
    wrong[:, 1:] = (wrong[:, 1:] + 1) % 8
    assert count_errors(link, f, wrong) == (0, 120)
    wrong[0, 0] = (wrong[0, 0] + 4) % 8  # opposite 8PSK point, labels differ in 2 bits
    assert count_errors(link, f, wrong)[0] == 2


def test_sweep_stops_at_error_target():
    det = (DetectorSpec("JML", DetectorKind.JML),)
    sim = SimConfig(snr_db=(0.0, 40.0), detectors=det, frames_per_point=5, min_bit_errors=30, **SHORT)
    low, high = run_ber_sweep(sim)
    assert low.bit_errors >= 30 and low.frames < 5
    assert high.frames == 5 and high.bits == 5 * 120
    assert low.ber == low.bit_errors / low.bits


def test_sweep_is_reproducible_across_workers():
    det = default_detectors()[1:]
    sim = SimConfig(snr_db=(5.0, 15.0), detectors=det, frames_per_point=3, min_bit_errors=40, **SHORT)
    assert run_ber_sweep(sim) == run_ber_sweep(sim, workers=2)


def test_measure_ledger():
    sim = SimConfig(**SHORT)
    led = measure_ledger(sim, default_detectors()[1], 20.0)
    assert led.detections == 40 and led.ble_branches == 3
    conventional = measure_ledger(sim, default_detectors()[2], 20.0)
    assert conventional.ble_branches == 5
    with pytest.raises(ValueError):
        measure_ledger(sim, default_detectors()[0], 20.0)


def test_detector_spec_sets_branch_count():
    assert DetectorSpec("a", "lgsd").lgsd.ble_count is BleCount.FULL_N
    assert DetectorSpec("b", "rc_lgsd").lgsd.ble_count is BleCount.TRUNCATED_M
    with pytest.raises(ValueError, match="unknown detector"):
        DetectorSpec("c", "mmse")


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(snr_db=()),
        dict(frames_per_point=0),
        dict(min_bit_errors=-1),
        dict(pointing_error_deg=-0.1),
        dict(symbols_per_frame=0),
        dict(detectors=(DetectorSpec("x"), DetectorSpec("x"))),
    ],
)
def test_sim_config_validation(kwargs):
    with pytest.raises(ValueError):
        SimConfig(**kwargs)


def test_guess_level_at_vanishing_snr():
    # SNR is averaged over all of |A|^2 and the desired satellite gains from
    # combining, so the guess rate is only reached well below -10 dB
    sim = SimConfig(snr_db=(-50.0,), frames_per_point=1, min_bit_errors=10**9, seed=0, symbols_per_frame=1000)
    for p in run_ber_sweep(sim):
        assert abs(p.ber - 0.5) <= 3 * np.sqrt(0.25 / p.bits), p
