"""Joint ML detection and the list-based group-wise search detector.

Both detectors operate on the preprocessed model ``y = H s + z``. Symbol
vectors are carried as integer index arrays into the constellation. All
routines accept a single observation ``y`` of shape ``(R,)`` or a batch of
shape ``(B, R)`` that shares one ``H``; list-valued state is batched as
``(B, L, N)`` index arrays with ``(B, L)`` scores, where an infinite score
marks an empty slot.

Ranking is by score rounded to 1e-12, then lexicographically by symbol
indices, so results are reproducible bit for bit.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from satrx.complexity import ComplexityLedger
from satrx.constellation import Constellation

DEFAULT_JML_CAP = 10**7
SCORE_DECIMALS = 12
# Upper bound on complex temporaries per chunk in the exhaustive searches.
_CHUNK_ELEMENTS = 1 << 21


class BleCount(str, enum.Enum):
    TRUNCATED_M = "truncated_m"
    FULL_N = "full_n"


@dataclass(frozen=True)
class GroupPartition:
    groups: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        groups = tuple(tuple(int(i) for i in g) for g in self.groups)
        object.__setattr__(self, "groups", groups)
        flat = [i for g in groups for i in g]
        if any(len(g) == 0 for g in groups):
            raise ValueError("groups must be non-empty")
        if sorted(flat) != list(range(len(flat))):
            raise ValueError("groups must be a disjoint cover of 0..N-1")

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(len(g) for g in self.groups)

    @property
    def n(self) -> int:
        return sum(self.sizes)

    def as_perm(self) -> np.ndarray:
        return np.array([i for g in self.groups for i in g], dtype=np.int64)

    @classmethod
    def from_perm(cls, perm, sizes) -> "GroupPartition":
        bounds = np.cumsum([0, *sizes])
        return cls(tuple(tuple(sorted(perm[a:b])) for a, b in zip(bounds[:-1], bounds[1:])))


@dataclass(frozen=True)
class LgsdConfig:
    """Settings of the list detector.

    ``groups_initial`` is either a :class:`GroupPartition` used for the first
    global iteration, or ``None`` to group the strongest columns of ``H``
    first using ``group_sizes``.
    """

    list_size: int = 8
    iglb: int = 2
    ible: int = 1
    iglo: int = 2
    group_sizes: tuple[int, ...] = (3, 2)
    groups_initial: GroupPartition | None = None
    reshuffle: bool = True
    rng_seed: int = 0
    ble_count: BleCount = BleCount.TRUNCATED_M

    def __post_init__(self):
        object.__setattr__(self, "group_sizes", tuple(int(g) for g in self.group_sizes))
        object.__setattr__(self, "ble_count", BleCount(self.ble_count))
        if self.list_size < 1:
            raise ValueError("list size must be at least 1")
        if min(self.iglb, self.ible, self.iglo) < 1:
            raise ValueError("iteration counts must be at least 1")
        if not self.group_sizes or min(self.group_sizes) < 1:
            raise ValueError("group sizes must be positive")
        if self.groups_initial is not None and self.groups_initial.sizes != self.group_sizes:
            raise ValueError("initial grouping does not match group_sizes")

    @property
    def iterations(self) -> tuple[int, int, int]:
        return (self.iglb, self.ible, self.iglo)


@dataclass(frozen=True)
class CandidateList:
    """Ranked candidate vectors with their scores (best first)."""

    vectors: np.ndarray
    scores: np.ndarray

    def __len__(self):
        return self.vectors.shape[-2]

    @property
    def head(self) -> np.ndarray:
        return self.vectors[..., 0, :]

    def valid(self) -> np.ndarray:
        return np.isfinite(self.scores)

    def entry(self, b: int = 0) -> "CandidateList":
        """Filled slots of one observation of a batched list."""
        keep = np.isfinite(self.scores[b])
        return CandidateList(self.vectors[b][keep], self.scores[b][keep])


@dataclass
class _Partitions:
    """Per-observation grouping stored as a permutation split by ``sizes``."""

    perm: np.ndarray
    sizes: tuple[int, ...]
    bounds: list[tuple[int, int]] = field(init=False)

    def __post_init__(self):
        edges = np.cumsum([0, *self.sizes])
        self.bounds = list(zip(edges[:-1].tolist(), edges[1:].tolist()))

    def __iter__(self):
        for a, b in self.bounds:
            yield self.perm[:, a:b]


# --------------------------------------------------------------------------
# shared numerics


@lru_cache(maxsize=None)
def enumerate_indices(k: int, n: int) -> np.ndarray:
    """All ``k**n`` index vectors in lexicographic order."""
    if n == 0:
        return np.zeros((1, 0), dtype=np.int64)
    grid = np.indices((k,) * n).reshape(n, -1).T
    grid = np.ascontiguousarray(grid, dtype=np.int64)
    grid.setflags(write=False)
    return grid


def _keys(vectors: np.ndarray, k: int) -> np.ndarray:
    n = vectors.shape[-1]
    weights = k ** np.arange(n - 1, -1, -1, dtype=np.int64)
    return vectors @ weights


def _predict(h: np.ndarray, x: np.ndarray) -> np.ndarray:
    """``H x`` for symbol arrays ``x[..., N]``; returns ``[..., R]``.

    Accumulated column by column so a given vector yields identical bits
    wherever it appears in a batch.
    """
    out = np.zeros(x.shape[:-1] + (h.shape[0],), dtype=complex)
    for j in range(h.shape[1]):
        out += x[..., j, None] * h[:, j]
    return out


def _distance(y: np.ndarray, pred: np.ndarray) -> np.ndarray:
    d = y - pred
    return np.sum(d.real**2 + d.imag**2, axis=-1)


def full_mse(h, y, vectors, c: Constellation) -> np.ndarray:
    """``||y - H s||^2`` for index vectors ``vectors[B, P, N]`` and ``y[B, R]``."""
    return _distance(y[:, None, :], _predict(h, c.points[vectors]))


def _round(scores: np.ndarray) -> np.ndarray:
    return np.round(scores, SCORE_DECIMALS)


def _rank(vectors, scores, size: int, k: int, dedup: bool) -> CandidateList:
    """Order each row by (rounded score, lexicographic vector), keep ``size``.

    With ``dedup`` repeated vectors are dropped first. Rows with fewer than
    ``size`` candidates are padded with empty (infinite score) slots.
    """
    b, p, n = vectors.shape
    scores = np.asarray(scores, dtype=float).copy()
    keys = _keys(vectors, k)
    if dedup and p > 1:
        invalid = ~np.isfinite(scores)
        order = np.lexsort((invalid, keys), axis=-1)
        sorted_keys = np.take_along_axis(keys, order, 1)
        repeat = np.zeros((b, p), dtype=bool)
        repeat[:, 1:] = sorted_keys[:, 1:] == sorted_keys[:, :-1]
        mask = np.zeros((b, p), dtype=bool)
        np.put_along_axis(mask, order, repeat, 1)
        scores[mask] = np.inf
    order = np.lexsort((keys, _round(scores)), axis=-1)[:, :size]
    out_v = np.take_along_axis(vectors, order[..., None], 1)
    out_s = np.take_along_axis(scores, order, 1)
    if out_v.shape[1] < size:
        pad = size - out_v.shape[1]
        out_v = np.concatenate([out_v, np.repeat(out_v[:, :1], pad, axis=1)], axis=1)
        out_s = np.concatenate([out_s, np.full((b, pad), np.inf)], axis=1)
    return CandidateList(out_v, out_s)


def _first_occurrence(keys: np.ndarray, valid: np.ndarray) -> np.ndarray:
    """Mask of the first valid occurrence of each key along the last axis."""
    b, p = keys.shape
    order = np.lexsort((np.arange(p)[None, :].repeat(b, 0), ~valid, keys), axis=-1)
    sk = np.take_along_axis(keys, order, 1)
    sv = np.take_along_axis(valid, order, 1)
    first = sv.copy()
    first[:, 1:] &= sk[:, 1:] != sk[:, :-1]
    out = np.zeros((b, p), dtype=bool)
    np.put_along_axis(out, order, first, 1)
    return out


def _as_batch(h, y):
    h = np.atleast_2d(np.asarray(h, dtype=complex))
    y = np.asarray(y, dtype=complex)
    single = y.ndim == 1
    y = np.atleast_2d(y)
    if y.shape[1] != h.shape[0]:
        raise ValueError(f"observation length {y.shape[1]} != {h.shape[0]} rows of H")
    return h, y, single


# --------------------------------------------------------------------------
# joint ML


def jml_detect(h, y, c: Constellation, cap: int = DEFAULT_JML_CAP):
    """Exhaustive minimiser of ``||y - H s||^2`` over all ``K**N`` vectors.

    Returns ``(indices, mse)``; ties resolve to the lexicographically
    smallest index vector.
    """
    h, y, single = _as_batch(h, y)
    k, n = c.size, h.shape[1]
    if k**n > cap:
        raise ValueError(f"JML search space {k}**{n} exceeds the cap of {cap}")
    omega = enumerate_indices(k, n)
    pred = _predict(h, c.points[omega])
    chunk = max(1, _CHUNK_ELEMENTS // omega.shape[0])
    best = np.empty(y.shape[0], dtype=np.int64)
    mse = np.empty(y.shape[0])
    for start in range(0, y.shape[0], chunk):
        d = _distance(y[start : start + chunk, None, :], pred[None])
        i = np.argmin(_round(d), axis=1)
        best[start : start + chunk] = i
        mse[start : start + chunk] = d[np.arange(i.size), i]
    s_hat = omega[best]
    if single:
        return s_hat[0], float(mse[0])
    return s_hat, mse


# --------------------------------------------------------------------------
# group partitions


def random_partition(sizes: Sequence[int], rng=None, strengths=None) -> GroupPartition:
    """Split ``0..N-1`` into groups of the given sizes.

    With ``strengths`` (e.g. column norms of H) the strongest indices fill the
    first group, the next strongest the second, and so on. Otherwise the
    membership is a uniformly random permutation drawn from ``rng``.
    """
    sizes = [int(s) for s in sizes]
    if strengths is not None:
        strengths = np.asarray(strengths, dtype=float)
        if sum(sizes) != strengths.size:
            raise ValueError(f"group sizes sum to {sum(sizes)}, expected {strengths.size}")
        perm = np.argsort(-strengths, kind="stable")
    else:
        if rng is None:
            raise ValueError("a random generator is required for a shuffled partition")
        perm = rng.permutation(sum(sizes))
    return GroupPartition.from_perm(perm, sizes)


def _initial_partitions(h, config: LgsdConfig, batch: int) -> _Partitions:
    n = h.shape[1]
    if sum(config.group_sizes) != n:
        raise ValueError(f"group sizes sum to {sum(config.group_sizes)}, expected N = {n}")
    part = config.groups_initial
    if part is None:
        part = random_partition(config.group_sizes, strengths=np.linalg.norm(h, axis=0))
    return _Partitions(np.tile(part.as_perm(), (batch, 1)), config.group_sizes)


# --------------------------------------------------------------------------
# list detector stages


def initial_candidates(
    h, y, c: Constellation, config: LgsdConfig, rng, exhaustive: bool = False
) -> CandidateList:
    """Starting list: ``L`` vectors drawn uniformly from all of ``omega^N``.

    ``exhaustive`` fills the list with every vector instead (requires
    ``L == K**N``).
    """
    h, y, _ = _as_batch(h, y)
    k, n, b = c.size, h.shape[1], y.shape[0]
    if exhaustive:
        omega = enumerate_indices(k, n)
        if omega.shape[0] != config.list_size:
            raise ValueError("exhaustive fill needs list_size == K**N")
        vectors = np.broadcast_to(omega, (b,) + omega.shape).copy()
    else:
        vectors = rng.integers(0, k, size=(b, config.list_size, n))
    return _rank(vectors, full_mse(h, y, vectors, c), config.list_size, k, dedup=False)


def ble_run(
    m: int,
    h,
    y,
    best,
    partitions,
    config: LgsdConfig,
    ledger: ComplexityLedger,
    c: Constellation,
) -> CandidateList:
    """Branch list estimator for row ``m`` of the model.

    For every group the other groups are cancelled from ``y[m]`` using the
    current best vector, every sub-vector of the group is scored on that
    row, and the ``L`` best are written back into the best vector. The pooled
    candidates are ranked on row ``m`` and the list head seeds the next of
    ``I_BLE`` iterations.
    """
    h, y, _ = _as_batch(h, y)
    best = np.atleast_2d(best)
    if isinstance(partitions, GroupPartition):
        partitions = _Partitions(np.tile(partitions.as_perm(), (y.shape[0], 1)), partitions.sizes)
    k, size = c.size, config.list_size
    row = h[m]
    current = best
    for _ in range(config.ible):
        x = c.points[current]
        pool = []
        for idx in partitions:
            g = idx.shape[1]
            subs = enumerate_indices(k, g)
            others = x.copy()
            np.put_along_axis(others, idx, 0, 1)
            target = y[:, m] - others @ row
            hu = row[idx]
            cand = np.zeros((y.shape[0], subs.shape[0]), dtype=complex)
            for j in range(g):
                cand += hu[:, j, None] * c.points[subs[:, j]]
            err = target[:, None] - cand
            err = err.real**2 + err.imag**2
            ledger.add_ble(2 * subs.shape[0] * y.shape[0])
            keep = min(size, subs.shape[0])
            sel = np.argsort(_round(err), axis=1, kind="stable")[:, :keep]
            full = np.repeat(current[:, None, :], keep, axis=1)
            where = np.broadcast_to(idx[:, None, :], (idx.shape[0], keep, g))
            np.put_along_axis(full, where, subs[sel], 2)
            pool.append(full)
        pool = np.concatenate(pool, axis=1)
        scores = full_mse(h[m : m + 1], y[:, m : m + 1], pool, c)
        branch = _rank(pool, scores, size, k, dedup=False)
        current = branch.head
    return branch


def _restricted_rows(h, idx) -> np.ndarray:
    """Per observation, the ``|group|`` rows with most energy in the group's columns."""
    energy = np.abs(h) ** 2
    per_row = energy[:, idx].sum(axis=2).T
    r = min(idx.shape[1], h.shape[0])
    return np.argsort(-per_row, axis=1, kind="stable")[:, :r]


def glo_run(
    h,
    y,
    branch_lists: Sequence[CandidateList],
    partitions,
    config: LgsdConfig,
    ledger: ComplexityLedger,
    c: Constellation,
    incumbent: CandidateList | None = None,
    trace: list | None = None,
) -> CandidateList:
    """Global list optimiser.

    Merges the branch lists (and the incumbent list, which is never lost),
    keeps the ``L`` best distinct vectors by full MSE, then runs ``I_GLO``
    refinement rounds. In a round, each group is re-searched exhaustively on
    its strongest rows once per context, where the contexts are the
    highest-ranked list entries with distinct symbols outside the group. The
    number of contexts is the ``L_v`` recorded in the ledger. New candidates
    are merged, rescored and truncated to ``L``.
    """
    h, y, _ = _as_batch(h, y)
    if isinstance(partitions, GroupPartition):
        partitions = _Partitions(np.tile(partitions.as_perm(), (y.shape[0], 1)), partitions.sizes)
    k, size, b = c.size, config.list_size, y.shape[0]

    major = np.concatenate([bl.vectors for bl in branch_lists], axis=1)
    major_valid = np.concatenate([bl.valid() for bl in branch_lists], axis=1)
    unique = _first_occurrence(_keys(major, k), major_valid)
    ledger.start_global(int(unique.sum()))

    pool, valid = major, unique
    if incumbent is not None:
        pool = np.concatenate([major, incumbent.vectors], axis=1)
        valid = np.concatenate([unique, incumbent.valid()], axis=1)
    scores = np.where(valid, full_mse(h, y, pool, c), np.inf)
    current = _rank(pool, scores, size, k, dedup=True)
    if trace is not None:
        trace.append(current.scores[:, 0].copy())

    for _ in range(config.iglo):
        ledger.start_glo_iteration()
        fresh, fresh_valid = [], []
        x = c.points[current.vectors]
        for idx in partitions:
            g = idx.shape[1]
            subs = enumerate_indices(k, g)
            # the search result depends only on the other groups' symbols, so
            # contexts are the distinct complements of the group in the list
            outside = current.vectors.copy()
            np.put_along_axis(outside, np.broadcast_to(idx[:, None, :], (b, size, g)), 0, 2)
            contexts = _first_occurrence(_keys(outside, k), current.valid())
            lv = int(contexts.sum())
            rows = _restricted_rows(h, idx)
            r = rows.shape[1]
            ledger.record_lv(lv)
            ledger.add_glo(2 * r * subs.shape[0] * lv)

            # context residual on the selected rows with the group's symbols removed
            others = x.copy()
            np.put_along_axis(others, np.broadcast_to(idx[:, None, :], (b, size, g)), 0, 2)
            base = np.take_along_axis(y, rows, 1)[:, None, :] - np.take_along_axis(
                _predict(h, others), rows[:, None, :], 2
            )
            hv = h[rows[:, :, None], idx[:, None, :]]
            term = np.zeros((b, r, subs.shape[0]), dtype=complex)
            for j in range(g):
                term += hv[:, :, j, None] * c.points[subs[:, j]]

            choice = np.empty((b, size), dtype=np.int64)
            chunk = max(1, _CHUNK_ELEMENTS // (size * subs.shape[0]))
            for s in range(0, b, chunk):
                d = np.zeros((min(chunk, b - s), size, subs.shape[0]))
                for q in range(r):
                    e = base[s : s + chunk, :, q, None] - term[s : s + chunk, None, q, :]
                    d += e.real**2 + e.imag**2
                choice[s : s + chunk] = np.argmin(_round(d), axis=2)
            cand = current.vectors.copy()
            np.put_along_axis(
                cand, np.broadcast_to(idx[:, None, :], (b, size, g)), subs[choice], 2
            )
            fresh.append(cand)
            fresh_valid.append(contexts)

        pool = np.concatenate([current.vectors, *fresh], axis=1)
        valid = np.concatenate([current.valid(), *fresh_valid], axis=1)
        scores = np.where(valid, full_mse(h, y, pool, c), np.inf)
        current = _rank(pool, scores, size, k, dedup=True)
        if trace is not None:
            trace.append(current.scores[:, 0].copy())
    return current


def rc_lgsd_detect(h, y, c: Constellation, config: LgsdConfig, rng=None, trace: list | None = None):
    """List-based group-wise search detection.

    One BLE runs per row of ``h``: pass the truncated model for the reduced
    complexity detector and the full N-row model for the conventional one.
    Returns ``(s_hat, final_list, ledger)``.

    Random draws, in order: the groupings of global iterations 2.. (when
    reshuffling), then the initial candidate list. ``rng`` defaults to a
    generator seeded with ``config.rng_seed``.
    """
    h, y, single = _as_batch(h, y)
    if rng is None:
        rng = np.random.default_rng(config.rng_seed)
    b, n = y.shape[0], h.shape[1]
    ledger = ComplexityLedger(detections=b, ble_branches=h.shape[0])

    partitions = [_initial_partitions(h, config, b)]
    for _ in range(1, config.iglb):
        if config.reshuffle:
            perm = rng.permuted(np.tile(np.arange(n), (b, 1)), axis=1)
            partitions.append(_Partitions(perm, config.group_sizes))
        else:
            partitions.append(partitions[0])

    current = initial_candidates(h, y, c, config, rng)
    for part in partitions:
        best = current.head
        branches = [ble_run(m, h, y, best, part, config, ledger, c) for m in range(h.shape[0])]
        current = glo_run(h, y, branches, part, config, ledger, c, incumbent=current, trace=trace)

    if single:
        return current.head[0], current.entry(0), ledger
    return current.head, current, ledger
