import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from satrx.constellation import Kind, build_constellation, demap_hard, modulate

KINDS = ["bpsk", "qpsk", "8psk", "16apsk"]


@pytest.mark.parametrize("kind", KINDS)
def test_unit_energy_and_zero_mean(kind):
    c = build_constellation(kind)
    assert c.size == {"bpsk": 2, "qpsk": 4, "8psk": 8, "16apsk": 16}[kind]
    assert np.mean(np.abs(c.points) ** 2) == pytest.approx(1.0, abs=1e-12)
    assert abs(np.mean(c.points)) < 1e-12


def test_bpsk_is_exactly_real():
    c = build_constellation(Kind.BPSK)
    np.testing.assert_array_equal(c.points, [1.0, -1.0])


def test_apsk_ring_radii():
    c = build_constellation("16apsk")
    radii = np.unique(np.round(np.abs(c.points), 6))
    # 4 + 12 points with outer/inner ratio 2.85 and unit average energy
    np.testing.assert_allclose(radii, [0.397092, 1.131712], atol=1e-6)
    assert np.sum(np.isclose(np.abs(c.points), radii[0], atol=1e-6)) == 4


def test_apsk_radius_ratio_validated():
    with pytest.raises(ValueError):
        build_constellation("16apsk", radius_ratio=0.9)


@pytest.mark.parametrize("kind", ["qpsk", "8psk"])
def test_psk_neighbours_differ_in_one_bit(kind):
    c = build_constellation(kind)
    for i in range(c.size):
        j = (i + 1) % c.size
        assert bin(int(c.labels[i]) ^ int(c.labels[j])).count("1") == 1


def test_apsk_outer_ring_neighbours_are_gray():
    c = build_constellation("16apsk")
    outer = np.flatnonzero(np.abs(c.points) > 1.0)
    order = outer[np.argsort(np.angle(c.points[outer]) % (2 * np.pi))]
    for a, b in zip(order, np.roll(order, -1)):
        assert bin(int(c.labels[a]) ^ int(c.labels[b])).count("1") == 1


@settings(max_examples=60, deadline=None)
@given(kind=st.sampled_from(KINDS), data=st.data())
def test_bits_round_trip(kind, data):
    c = build_constellation(kind)
    q = c.bits_per_symbol
    n = data.draw(st.integers(0, 40))
    bits = np.array(data.draw(st.lists(st.integers(0, 1), min_size=n * q, max_size=n * q)), dtype=np.uint8)
    np.testing.assert_array_equal(c.indices_to_bits(c.bits_to_indices(bits)), bits)
    np.testing.assert_array_equal(demap_hard(c, modulate(c, bits)), bits)


def test_bit_string_input_and_errors():
    c = build_constellation("qpsk")
    np.testing.assert_array_equal(c.bits_to_indices("0011"), c.bits_to_indices([0, 0, 1, 1]))
    with pytest.raises(ValueError):
        c.bits_to_indices("012")
    with pytest.raises(ValueError):
        c.bits_to_indices([0, 1, 1])


def test_nearest_breaks_ties_towards_lowest_index():
    c = build_constellation("bpsk")
    assert c.nearest(0.0) == 0
    assert c.nearest(1j) == 0


def test_small_perturbations_demap_to_sent_symbol():
    rng = np.random.default_rng(1)
    c = build_constellation("8psk")
    idx = rng.integers(0, 8, 500)
    noisy = c.points[idx] + 0.05 * (rng.standard_normal(500) + 1j * rng.standard_normal(500))
    np.testing.assert_array_equal(c.nearest(noisy), idx)
