"""Oracle equivalence checks runnable from the command line.

Three independent minimisers are compared on random small problems: a plain
Python loop over every symbol vector, the vectorised joint ML search, and the
list detector configured to be exhaustive (one group, ``L = K**N``).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from satrx.constellation import build_constellation
from satrx.detectors import LgsdConfig, jml_detect, rc_lgsd_detect


def brute_force(h, y, points) -> tuple[tuple[int, ...], float]:
    """Loop over every index vector; ties keep the first (lexicographic) one."""
    h = np.asarray(h)
    best, best_d = None, np.inf
    for idx in itertools.product(range(len(points)), repeat=h.shape[1]):
        s = np.array([points[i] for i in idx])
        d = float(np.sum(np.abs(y - h @ s) ** 2))
        if round(d, 12) < round(best_d, 12):
            best, best_d = idx, d
    return best, best_d


def exhaustive_config(k: int, n: int) -> LgsdConfig:
    return LgsdConfig(list_size=k**n, iglb=1, ible=1, iglo=1, group_sizes=(n,), reshuffle=False)


def random_instance(rng):
    kind = ("bpsk", "qpsk")[rng.integers(2)]
    c = build_constellation(kind)
    n = int(rng.integers(1, 4))
    m = int(rng.integers(1, 4))
    h = (rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n))) / np.sqrt(2)
    s = rng.integers(0, c.size, n)
    sigma = 10 ** rng.uniform(-2, 0)
    y = h @ c.points[s] + sigma * (rng.standard_normal(m) + 1j * rng.standard_normal(m)) / np.sqrt(2)
    return c, h, y


@dataclass
class SelftestReport:
    lines: list[str] = field(default_factory=list)
    passed: bool = True


def run_selftest(instances: int = 200, seed: int = 0) -> SelftestReport:
    rng = np.random.default_rng(seed)
    report = SelftestReport()
    jml_vs_loop = list_vs_jml = 0
    for _ in range(instances):
        c, h, y = random_instance(rng)
        s_jml, _ = jml_detect(h, y, c)
        s_loop, _ = brute_force(h, y, c.points)
        s_list, _, _ = rc_lgsd_detect(h, y, c, exhaustive_config(c.size, h.shape[1]), rng)
        jml_vs_loop += tuple(s_jml.tolist()) != s_loop
        list_vs_jml += not np.array_equal(s_list, s_jml)
    for name, bad in (("joint ML vs loop", jml_vs_loop), ("exhaustive list vs joint ML", list_vs_jml)):
        status = "PASS" if bad == 0 else "FAIL"
        report.lines.append(f"{status} {name}: {instances - bad}/{instances} identical")
        report.passed &= bad == 0
    return report
