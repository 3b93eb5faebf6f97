"""LNB radiation patterns, the satellite-to-LNB channel matrix and the
pattern-overlap noise correlation matrix.

Angles are in degrees at the public surface (scenario, CSV files) and in
radians on the sampling grid.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import j1

# Magnitude floor of every pattern, relative to the boresight peak (-40 dB).
PATTERN_FLOOR = 0.01

# Edge-tapered feeds illuminate less than the full reflector; 0.9 keeps the
# Airy main lobe within the usual 70*lambda/D rule of thumb.
DEFAULT_APERTURE_EFFICIENCY = 0.9

# 2**16 intervals over [-pi, pi]
DEFAULT_GRID_POINTS = 65537

PATTERN_COLUMNS = ("lnb_index", "angle_deg", "gain_db", "phase_deg")

DEFAULT_THETA_DEG = (0.0, 3.0, -2.8, 5.7, -5.9)
DEFAULT_LNB_OFFSETS_DEG = (0.0, 2.9, -2.9)


class PatternFileError(ValueError):
    pass


@dataclass(frozen=True)
class Scenario:
    theta_deg: tuple[float, ...] = DEFAULT_THETA_DEG
    m: int = 3
    dish_diameter: float = 0.35
    wavelength: float = 0.025
    lnb_offsets_deg: tuple[float, ...] = DEFAULT_LNB_OFFSETS_DEG
    pattern_file: str | None = None
    aperture_efficiency: float = DEFAULT_APERTURE_EFFICIENCY

    def __post_init__(self):
        object.__setattr__(self, "theta_deg", tuple(float(t) for t in self.theta_deg))
        object.__setattr__(self, "lnb_offsets_deg", tuple(float(t) for t in self.lnb_offsets_deg))
        if self.m < 1:
            raise ValueError("at least one LNB is required")
        if not self.theta_deg:
            raise ValueError("at least one satellite is required")
        if self.theta_deg[0] != 0.0:
            raise ValueError("theta_deg[0] must be 0 (the desired satellite)")
        if len(set(self.theta_deg)) != len(self.theta_deg):
            raise ValueError("theta_deg entries must be pairwise distinct")
        if len(self.lnb_offsets_deg) != self.m:
            raise ValueError(f"expected {self.m} LNB offsets, got {len(self.lnb_offsets_deg)}")
        if self.dish_diameter <= 0 or self.wavelength <= 0:
            raise ValueError("dish diameter and wavelength must be positive")
        if not 0 < self.aperture_efficiency <= 1:
            raise ValueError("aperture efficiency must lie in (0, 1]")

    @property
    def n(self) -> int:
        return len(self.theta_deg)

    @property
    def overloaded(self) -> bool:
        return self.n > self.m


@dataclass(frozen=True)
class AntennaPattern:
    """Complex amplitude patterns of all LNBs on a shared uniform grid.

    ``gains[m, k]`` is the square root of LNB ``m``'s radiation pattern at
    ``angles[k]`` radians.
    """

    angles: np.ndarray
    gains: np.ndarray

    def __post_init__(self):
        angles = np.asarray(self.angles, dtype=float)
        gains = np.atleast_2d(np.asarray(self.gains, dtype=complex))
        if gains.shape[1] != angles.size or angles.size < 2:
            raise ValueError("gains must have one column per grid angle")
        if np.any(np.diff(angles) <= 0):
            raise ValueError("pattern grid must be strictly increasing")
        angles.setflags(write=False)
        gains.setflags(write=False)
        object.__setattr__(self, "angles", angles)
        object.__setattr__(self, "gains", gains)

    @property
    def m(self) -> int:
        return self.gains.shape[0]

    @property
    def resolution(self) -> float:
        return float(self.angles[1] - self.angles[0])

    def evaluate(self, theta_rad) -> np.ndarray:
        """Linearly interpolated gains, shape ``(m, len(theta_rad))``."""
        theta = np.atleast_1d(np.asarray(theta_rad, dtype=float))
        lo, hi = self.angles[0], self.angles[-1]
        if np.any((theta < lo - 1e-12) | (theta > hi + 1e-12)):
            raise ValueError(
                f"angle outside the pattern grid [{np.degrees(lo):.4f}, {np.degrees(hi):.4f}] deg"
            )
        return np.stack(
            [
                np.interp(theta, self.angles, g.real) + 1j * np.interp(theta, self.angles, g.imag)
                for g in self.gains
            ]
        )


def aperture_gain(u) -> np.ndarray:
    """Amplitude pattern 2*J1(u)/u of a uniformly illuminated circular aperture."""
    u = np.asarray(u, dtype=float)
    small = np.abs(u) < 1e-8
    safe = np.where(small, 1.0, u)
    return np.where(small, 1.0 - u**2 / 8.0, 2.0 * j1(safe) / safe)


def analytic_pattern(scenario: Scenario, grid_points: int = DEFAULT_GRID_POINTS) -> AntennaPattern:
    """Sample the Airy pattern of each squinted LNB beam over [-pi, pi].

    The rear hemisphere of each beam and every null are held at the -40 dB
    floor; sign is preserved so sidelobe phase reversals survive.
    """
    if scenario.pattern_file is not None:
        raise ValueError("scenario uses a pattern file; load it with load_pattern_file")
    angles = np.linspace(-np.pi, np.pi, grid_points)
    k = np.pi * scenario.aperture_efficiency * scenario.dish_diameter / scenario.wavelength
    gains = np.empty((scenario.m, grid_points))
    for i, offset in enumerate(np.radians(scenario.lnb_offsets_deg)):
        off_axis = np.angle(np.exp(1j * (angles - offset)))
        g = aperture_gain(k * np.sin(off_axis))
        g = np.where(np.abs(off_axis) > np.pi / 2, PATTERN_FLOOR, g)
        gains[i] = np.where(g < 0, -1.0, 1.0) * np.maximum(np.abs(g), PATTERN_FLOOR)
    return AntennaPattern(angles, gains.astype(complex))


def nominal_beamwidth_deg(scenario: Scenario) -> float:
    """Rule-of-thumb reflector 3-dB beamwidth, 70*lambda/D degrees."""
    return 70.0 * scenario.wavelength / scenario.dish_diameter


def beamwidth_deg(pattern: AntennaPattern, lnb: int = 0) -> float:
    """Measured 3-dB width of the main lobe of one LNB, in degrees."""
    power = np.abs(pattern.gains[lnb]) ** 2
    peak = int(np.argmax(power))
    half = power[peak] / 2.0
    lo = peak
    while lo > 0 and power[lo - 1] >= half:
        lo -= 1
    hi = peak
    while hi < power.size - 1 and power[hi + 1] >= half:
        hi += 1
    a = pattern.angles

    def crossing(i, j):
        # linear interpolation of the half-power crossing between samples i and j
        if power[i] == power[j]:
            return a[i]
        return a[i] + (half - power[i]) * (a[j] - a[i]) / (power[j] - power[i])

    left = crossing(lo - 1, lo) if lo > 0 else a[0]
    right = crossing(hi, hi + 1) if hi < power.size - 1 else a[-1]
    return float(np.degrees(right - left))


def load_pattern_file(path) -> AntennaPattern:
    """Read a pattern CSV (``lnb_index,angle_deg,gain_db,phase_deg``).

    Each LNB is resampled onto a common uniform grid spanning the angular range
    covered by every LNB, at the finest spacing present in the file.
    Magnitude (dB) and unwrapped phase are interpolated separately.
    """
    path = Path(path)
    try:
        fh = path.open(newline="")
    except OSError as err:
        raise PatternFileError(f"cannot read pattern file {path}: {err.strerror}") from None
    with fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise PatternFileError(f"{path}: empty pattern file") from None
        for name in PATTERN_COLUMNS:
            if name not in header:
                label = name.removesuffix("_deg").removesuffix("_db").removesuffix("_index")
                raise PatternFileError(f"{path}: missing {label} column ({name!r})")
        cols = [header.index(name) for name in PATTERN_COLUMNS]
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                rows.append([float(row[c]) for c in cols])
            except (ValueError, IndexError):
                raise PatternFileError(f"{path}:{lineno}: malformed row") from None
    if not rows:
        raise PatternFileError(f"{path}: no data rows")
    data = np.array(rows)

    lnbs = []
    for idx in dict.fromkeys(data[:, 0]):
        block = data[data[:, 0] == idx]
        if np.any(np.diff(block[:, 1]) <= 0):
            raise PatternFileError(f"{path}: non-monotone angle grid for LNB {idx:g}")
        if block.shape[0] < 2:
            raise PatternFileError(f"{path}: LNB {idx:g} has fewer than 2 rows")
        lnbs.append(block)
    if list(dict.fromkeys(data[:, 0])) != sorted(set(data[:, 0])):
        raise PatternFileError(f"{path}: rows must be sorted by lnb_index")

    for block in lnbs:
        gain = block[:, 2]
        peak = int(np.argmax(gain))
        inside = gain >= gain[peak] - 10 * np.log10(2)
        lo, hi = peak, peak
        while lo > 0 and inside[lo - 1]:
            lo -= 1
        while hi < gain.size - 1 and inside[hi + 1]:
            hi += 1
        if hi - lo + 1 < 2:
            raise PatternFileError(
                f"{path}: LNB {block[0, 0]:g} has fewer than 2 samples per 3-dB beamwidth"
            )

    start = max(np.radians(b[0, 1]) for b in lnbs)
    stop = min(np.radians(b[-1, 1]) for b in lnbs)
    if stop <= start:
        raise PatternFileError(f"{path}: LNB patterns share no common angular range")
    step = min(np.min(np.diff(np.radians(b[:, 1]))) for b in lnbs)
    count = int(np.round((stop - start) / step)) + 1
    grid = np.linspace(start, stop, max(count, 2))

    gains = []
    for block in lnbs:
        ang = np.radians(block[:, 1])
        db = np.interp(grid, ang, block[:, 2])
        phase = np.interp(grid, ang, np.unwrap(np.radians(block[:, 3])))
        gains.append(10 ** (db / 20) * np.exp(1j * phase))
    gains = np.array(gains)
    gains /= np.max(np.abs(gains[0]))
    return AntennaPattern(grid, gains)


def export_pattern(pattern: AntennaPattern, path, step: int = 1) -> Path:
    """Write ``pattern`` in the CSV schema read by :func:`load_pattern_file`.

    ``step`` keeps every ``step``-th grid sample (the last one is always kept).
    """
    path = Path(path)
    keep = np.arange(0, pattern.angles.size, step)
    if keep[-1] != pattern.angles.size - 1:
        keep = np.append(keep, pattern.angles.size - 1)
    angles = np.degrees(pattern.angles[keep])
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(PATTERN_COLUMNS)
        for m in range(pattern.m):
            g = pattern.gains[m, keep]
            db = 20 * np.log10(np.abs(g))
            phase = np.degrees(np.angle(g))
            for a, d, p in zip(angles, db, phase):
                writer.writerow([m, repr(float(a)), repr(float(d)), repr(float(p))])
    return path


def build_pattern(scenario: Scenario) -> AntennaPattern:
    if scenario.pattern_file is None:
        return analytic_pattern(scenario)
    pattern = load_pattern_file(scenario.pattern_file)
    if pattern.m != scenario.m:
        raise ValueError(f"pattern file has {pattern.m} LNBs, scenario expects {scenario.m}")
    return pattern


def channel_matrix(pattern: AntennaPattern, scenario: Scenario, theta_deg=None) -> np.ndarray:
    """M x N complex gains of every LNB towards every satellite.

    ``theta_deg`` overrides the scenario's satellite angles (used for
    pointing-error perturbations).
    """
    theta = scenario.theta_deg if theta_deg is None else theta_deg
    return pattern.evaluate(np.radians(theta))


def noise_correlation(pattern: AntennaPattern) -> np.ndarray:
    """Normalised overlap integrals of the LNB amplitude patterns.

    Trapezoidal quadrature over the pattern grid; the diagonal is exactly one.
    """
    dx = np.diff(pattern.angles)
    w = np.zeros(pattern.angles.size)
    w[:-1] += dx / 2
    w[1:] += dx / 2
    p = pattern.gains
    overlap = (p * w) @ p.conj().T
    energy = np.real(np.diag(overlap))
    if np.any(energy <= 0):
        raise ValueError("pattern with zero energy cannot be normalised")
    k = overlap / np.sqrt(np.outer(energy, energy))
    k = (k + k.conj().T) / 2
    np.fill_diagonal(k, 1.0)
    return k


def paper_fixture_knn() -> np.ndarray:
    """The 3x3 correlation matrix reported for the 35-cm, three-LNB dish.

    Rows are ordered side, centre, side.
    """
    return np.array(
        [
            [1.0, 0.31, 0.01],
            [0.31, 1.0, 0.31],
            [0.01, 0.31, 1.0],
        ],
        dtype=complex,
    )
