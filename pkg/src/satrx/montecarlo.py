"""Monte-Carlo BER estimation for the desired satellite.

Every frame draws its randomness from a generator derived from
``(seed, snr index, frame index)`` only, so a sweep gives the same numbers
whatever the worker count or execution order, and every detector sees the
same frames.
"""

from __future__ import annotations

import enum
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Protocol

import numpy as np

from satrx.antenna import AntennaPattern, Scenario, build_pattern, channel_matrix, noise_correlation
from satrx.complexity import ComplexityLedger
from satrx.constellation import DEFAULT_RADIUS_RATIO, Constellation, Kind, build_constellation
from satrx.detectors import BleCount, LgsdConfig, jml_detect, rc_lgsd_detect
from satrx.preprocessor import Beamformer, PreprocessorState, apply_preprocessor, build_preprocessor

log = logging.getLogger(__name__)

SYMBOLS_PER_FRAME = 1000


class DetectorKind(str, enum.Enum):
    JML = "jml"
    RC_LGSD = "rc_lgsd"
    LGSD = "lgsd"


@dataclass(frozen=True)
class DetectorSpec:
    """One receiver under test.

    ``kind`` is ``jml``, ``rc_lgsd`` (one BLE per row of the whitened,
    truncated model) or ``lgsd``. The conventional ``lgsd`` receiver treats
    the noise as white: it works on the N raw beamformer outputs
    ``W^H r = W^H A s + W^H n`` with one BLE per satellite.
    """

    name: str
    kind: DetectorKind = DetectorKind.RC_LGSD
    beamformer: Beamformer = Beamformer.SINR
    lgsd: LgsdConfig = field(default_factory=LgsdConfig)

    def __post_init__(self):
        try:
            object.__setattr__(self, "kind", DetectorKind(self.kind))
        except ValueError:
            raise ValueError(f"unknown detector type {self.kind!r}") from None
        object.__setattr__(self, "beamformer", Beamformer(self.beamformer))
        wanted = BleCount.FULL_N if self.kind == DetectorKind.LGSD else BleCount.TRUNCATED_M
        if self.lgsd.ble_count is not wanted:
            object.__setattr__(self, "lgsd", replace(self.lgsd, ble_count=wanted))


def default_detectors() -> tuple[DetectorSpec, ...]:
    return (
        DetectorSpec("JML", DetectorKind.JML, Beamformer.SINR),
        DetectorSpec("RC-LGSD(2/1/2)", DetectorKind.RC_LGSD, Beamformer.SINR),
        DetectorSpec("LGSD-MRC(2/1/2)", DetectorKind.LGSD, Beamformer.MRC),
    )


@dataclass(frozen=True)
class SimConfig:
    scenario: Scenario = field(default_factory=Scenario)
    modulation: Kind = Kind.PSK8
    snr_db: tuple[float, ...] = (10.0, 15.0, 20.0, 25.0)
    detectors: tuple[DetectorSpec, ...] = field(default_factory=default_detectors)
    frames_per_point: int = 100
    min_bit_errors: int = 200
    seed: int = 0
    pointing_error_deg: float = 0.0
    radius_ratio: float = DEFAULT_RADIUS_RATIO
    symbols_per_frame: int = SYMBOLS_PER_FRAME

    def __post_init__(self):
        object.__setattr__(self, "modulation", Kind(self.modulation))
        object.__setattr__(self, "snr_db", tuple(float(s) for s in self.snr_db))
        object.__setattr__(self, "detectors", tuple(self.detectors))
        if not self.snr_db:
            raise ValueError("snr grid must not be empty")
        if self.frames_per_point < 1:
            raise ValueError("frames_per_point must be at least 1")
        if self.min_bit_errors < 0:
            raise ValueError("min_bit_errors must be non-negative")
        if self.pointing_error_deg < 0:
            raise ValueError("pointing error must be non-negative")
        if self.symbols_per_frame < 1:
            raise ValueError("symbols_per_frame must be at least 1")
        names = [d.name for d in self.detectors]
        if len(set(names)) != len(names):
            raise ValueError("detector names must be unique")


@dataclass(frozen=True)
class BerPoint:
    detector: str
    snr_db: float
    bit_errors: int
    bits: int
    frames: int

    @property
    def ber(self) -> float:
        return self.bit_errors / self.bits


# --------------------------------------------------------------------------
# channel and noise


def sigma2_from_snr(a, snr_db: float) -> float:
    """Noise variance giving the requested average received SNR per LNB and satellite."""
    a = np.atleast_2d(a)
    power = np.linalg.norm(a) ** 2
    if power == 0:
        raise ValueError("channel matrix is zero")
    m, n = a.shape
    return float(power / (10 ** (snr_db / 10) * m * n))


def snr_from_sigma2(a, sigma2: float) -> float:
    a = np.atleast_2d(a)
    m, n = a.shape
    return float(10 * np.log10(np.linalg.norm(a) ** 2 / (sigma2 * m * n)))


def noise_coloring(knn) -> np.ndarray:
    """Square root ``C`` with ``C C^H = K`` (negative eigenvalues clipped)."""
    lam, u = np.linalg.eigh(np.atleast_2d(knn))
    return u * np.sqrt(np.clip(lam, 0.0, None))


def draw_correlated_noise(knn, sigma2: float, rng, count: int) -> np.ndarray:
    """``count`` circularly-symmetric Gaussian vectors with covariance ``sigma2*K``."""
    c = noise_coloring(knn)
    m = c.shape[0]
    w = (rng.standard_normal((count, m)) + 1j * rng.standard_normal((count, m))) / np.sqrt(2)
    return np.sqrt(sigma2) * (w @ c.T)


def draw_pointing_error(theta_e_deg: float, n: int, rng) -> np.ndarray:
    """Per-satellite look-angle errors in degrees, ``Normal(0, (theta_e/3)^2)``."""
    if theta_e_deg < 0:
        raise ValueError("error angle range must be non-negative")
    return (theta_e_deg / 3.0) * rng.standard_normal(n)


# --------------------------------------------------------------------------
# receivers


class Receiver(Protocol):
    def detect(self, received: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """Symbol index vectors ``(B, N)`` for received vectors ``(B, M)``."""


@dataclass(frozen=True)
class PreparedReceiver:
    spec: DetectorSpec
    state: PreprocessorState
    constellation: Constellation

    def run(self, received, rng) -> tuple[np.ndarray, ComplexityLedger | None]:
        """Decisions ``(B, N)`` and, for the list detectors, their ledger."""
        if self.spec.kind == DetectorKind.LGSD:
            y = apply_preprocessor(self.state, received, whiten=False)
            h = self.state.h_raw
        else:
            y = apply_preprocessor(self.state, received)
            h = self.state.h
        if self.spec.kind == DetectorKind.JML:
            s_hat, _ = jml_detect(h, y, self.constellation)
            return s_hat, None
        s_hat, _, ledger = rc_lgsd_detect(h, y, self.constellation, self.spec.lgsd, rng)
        return s_hat, ledger

    def detect(self, received, rng):
        return self.run(received, rng)[0]


@dataclass(frozen=True)
class Link:
    """Everything about the physical link that does not depend on SNR."""

    sim: SimConfig
    pattern: AntennaPattern
    a: np.ndarray
    knn: np.ndarray
    constellation: Constellation

    @classmethod
    def build(cls, sim: SimConfig) -> "Link":
        pattern = build_pattern(sim.scenario)
        return cls(
            sim,
            pattern,
            channel_matrix(pattern, sim.scenario),
            noise_correlation(pattern),
            build_constellation(sim.modulation, sim.radius_ratio),
        )

    def receiver(self, spec: DetectorSpec, snr_db: float) -> PreparedReceiver:
        sigma2 = sigma2_from_snr(self.a, snr_db)
        state = build_preprocessor(self.a, self.knn, sigma2, spec.beamformer)
        return PreparedReceiver(spec, state, self.constellation)


@dataclass(frozen=True)
class Frame:
    bits: np.ndarray
    indices: np.ndarray
    received: np.ndarray


def frame_rng(seed: int, snr_index: int, frame_index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(snr_index, frame_index)))


def draw_frame(link: Link, snr_db: float, rng) -> Frame:
    """Transmit one frame through the (possibly mis-pointed) channel.

    Draw order: pointing errors, then bits for all satellites, then noise.
    """
    sim, c = link.sim, link.constellation
    n, q, count = sim.scenario.n, c.bits_per_symbol, sim.symbols_per_frame
    offset = draw_pointing_error(sim.pointing_error_deg, n, rng)
    if sim.pointing_error_deg > 0:
        theta = np.asarray(sim.scenario.theta_deg) + offset
        a_true = channel_matrix(link.pattern, sim.scenario, theta)
    else:
        a_true = link.a
    bits = rng.integers(0, 2, size=(n, count * q), dtype=np.uint8)
    indices = np.stack([c.bits_to_indices(b) for b in bits], axis=1)
    sigma2 = sigma2_from_snr(link.a, snr_db)
    noise = draw_correlated_noise(link.knn, sigma2, rng, count)
    received = c.points[indices] @ a_true.T + noise
    return Frame(bits, indices, received)


def count_errors(link: Link, frame: Frame, s_hat) -> tuple[int, int]:
    """Bit errors and bits of the desired satellite (stream 0)."""
    decided = link.constellation.indices_to_bits(np.asarray(s_hat)[:, 0])
    return int(np.count_nonzero(decided != frame.bits[0])), int(frame.bits[0].size)


def run_frame(link: Link, receiver: Receiver, snr_db: float, rng) -> tuple[int, int]:
    frame = draw_frame(link, snr_db, rng)
    detector_rng = rng.spawn(1)[0]
    return count_errors(link, frame, receiver.detect(frame.received, detector_rng))


# --------------------------------------------------------------------------
# sweeps


@lru_cache(maxsize=4)
def _link(sim: SimConfig) -> Link:
    return Link.build(sim)


@lru_cache(maxsize=64)
def _receiver(sim: SimConfig, detector: int, snr_index: int) -> PreparedReceiver:
    return _link(sim).receiver(sim.detectors[detector], sim.snr_db[snr_index])


def _frame_block(sim: SimConfig, detector: int, snr_index: int, start: int, stop: int):
    link = _link(sim)
    receiver = _receiver(sim, detector, snr_index)
    snr = sim.snr_db[snr_index]
    return [run_frame(link, receiver, snr, frame_rng(sim.seed, snr_index, f)) for f in range(start, stop)]


def _sweep_point(sim: SimConfig, detector: int, snr_index: int, pool) -> BerPoint:
    wave = 1 if pool is None else pool._max_workers
    errors = bits = frames = 0
    next_frame = 0
    while next_frame < sim.frames_per_point:
        stop = min(next_frame + wave, sim.frames_per_point)
        if pool is None:
            results = _frame_block(sim, detector, snr_index, next_frame, stop)
        else:
            futures = [
                pool.submit(_frame_block, sim, detector, snr_index, f, f + 1)
                for f in range(next_frame, stop)
            ]
            results = [r for fut in futures for r in fut.result()]
        for e, nb in results:
            errors += e
            bits += nb
            frames += 1
            if errors >= sim.min_bit_errors:
                break
        if errors >= sim.min_bit_errors:
            break
        next_frame = stop
    return BerPoint(sim.detectors[detector].name, sim.snr_db[snr_index], errors, bits, frames)


def run_ber_sweep(sim: SimConfig, workers: int = 1, progress=None) -> list[BerPoint]:
    """BER of every detector at every SNR, ordered by detector then SNR.

    Each point accumulates whole frames until ``min_bit_errors`` errors are
    seen or ``frames_per_point`` frames have run.
    """
    if not sim.detectors:
        raise ValueError("no detectors configured")
    points = []
    pool = ProcessPoolExecutor(workers) if workers > 1 else None
    try:
        for d in range(len(sim.detectors)):
            for s in range(len(sim.snr_db)):
                point = _sweep_point(sim, d, s, pool)
                log.info(
                    "%s @ %.1f dB: %d/%d errors, %d frames",
                    point.detector, point.snr_db, point.bit_errors, point.bits, point.frames,
                )
                if progress is not None:
                    progress(point)
                points.append(point)
    finally:
        if pool is not None:
            pool.shutdown()
    return points


def measure_ledger(sim: SimConfig, spec: DetectorSpec, snr_db: float, frames: int = 1) -> ComplexityLedger:
    """Operation counts of a list detector over ``frames`` simulated frames."""
    if spec.kind == DetectorKind.JML:
        raise ValueError("the joint ML detector keeps no ledger")
    link = _link(sim)
    receiver = link.receiver(spec, snr_db)
    total = ComplexityLedger()
    for f in range(frames):
        rng = frame_rng(sim.seed, 0, f)
        frame = draw_frame(link, snr_db, rng)
        _, ledger = receiver.run(frame.received, rng.spawn(1)[0])
        total = total.merge(ledger)
    return total
