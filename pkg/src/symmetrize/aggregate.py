"""Aggregation of per-variant statistics: componentwise averaging and plurality voting."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .simulate import Histogram, ShotList, bitstring, parse_bitstring, shots_to_histogram, stream_rng

DEFAULT_SCRAMBLES = 10


class AggregationError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class VariantBatch:
    """Statistics of ``m`` variants of one computation, all over the same ``n_bits``."""

    shots: tuple[ShotList, ...] | None = None
    histograms: tuple[Histogram, ...] | None = None

    def __post_init__(self):
        if self.shots is not None:
            object.__setattr__(self, "shots", tuple(self.shots))
        if self.histograms is not None:
            object.__setattr__(self, "histograms", tuple(self.histograms))
        if not self.shots and not self.histograms:
            raise AggregationError("empty variant batch")
        if self.shots and len({len(s) for s in self.shots}) != 1:
            raise AggregationError("variants have different shot counts")
        bits = {x.n_bits for x in (self.shots or ()) + (self.histograms or ())}
        if len(bits) != 1:
            raise AggregationError(f"variants disagree on outcome width: {sorted(bits)}")

    @classmethod
    def from_shots(cls, shots: Sequence[ShotList]) -> VariantBatch:
        return cls(shots=tuple(shots))

    @property
    def m(self) -> int:
        return len(self.shots) if self.shots else len(self.histograms)

    @property
    def n_bits(self) -> int:
        return (self.shots or self.histograms)[0].n_bits

    def variant_histograms(self) -> tuple[Histogram, ...]:
        if self.histograms:
            return self.histograms
        return tuple(shots_to_histogram(s) for s in self.shots)

    def shot_matrix(self) -> np.ndarray:
        if not self.shots:
            raise AggregationError("plurality voting needs shot-level data")
        return np.stack([s.outcomes for s in self.shots])


@dataclass(frozen=True)
class VoteConfig:
    initial_threshold: int | None = None  # None: ceil(m/2) + 1, clipped to m
    scrambles: int = DEFAULT_SCRAMBLES
    seed: int = 0
    scramble: bool = True  # False keeps the recorded shot order (scrambles must be 1)

    def threshold_for(self, m: int) -> int:
        t0 = default_threshold(m) if self.initial_threshold is None else self.initial_threshold
        if not 2 <= t0 <= max(m, 2):
            raise AggregationError(f"initial threshold {t0} outside [2, {m}]")
        return t0


def default_threshold(m: int) -> int:
    return max(2, min(m, math.ceil(m / 2) + 1))


@dataclass(frozen=True)
class AggregationResult:
    histogram: Histogram
    method: str  # "average", "vote", "vote-fallback-average"
    threshold: int | None = None
    winner_count: int = 0

    @property
    def method_used(self) -> str:
        return f"vote(threshold={self.threshold})" if self.method == "vote" else self.method


def average_histograms(batch: VariantBatch) -> AggregationResult:
    """Entrywise arithmetic mean of the variant histograms."""
    hists = batch.variant_histograms()
    acc: dict[int, list[float]] = {}
    for h in hists:
        for k, v in h.entries.items():
            acc.setdefault(k, []).append(v)
    mean = {k: math.fsum(vs) / len(hists) for k, vs in acc.items()}
    return AggregationResult(Histogram(batch.n_bits, mean).normalized(), "average")


def group_pluralities(groups: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per row of ``groups``: (unique most frequent value or -1, its multiplicity).

    A row whose maximal multiplicity is shared by two values has no winner.
    """
    g = np.sort(groups, axis=1)
    n_rows, width = g.shape
    starts = np.ones_like(g, dtype=bool)
    starts[:, 1:] = g[:, 1:] != g[:, :-1]
    run_id = np.cumsum(starts, axis=1) - 1
    counts = np.zeros((n_rows, width), dtype=np.int64)
    np.add.at(counts, (np.repeat(np.arange(n_rows), width), run_id.ravel()), 1)
    best = counts.max(axis=1)
    n_best = (counts == best[:, None]).sum(axis=1)
    best_run = counts.argmax(axis=1)
    # value of the run: first element whose run id equals best_run
    first = np.argmax(run_id == best_run[:, None], axis=1)
    winners = g[np.arange(n_rows), first]
    winners = np.where(n_best == 1, winners, -1)
    return winners, best


def _scrambled(shots: np.ndarray, cfg: VoteConfig) -> list[np.ndarray]:
    if not cfg.scramble:
        return [shots]
    out = []
    for r in range(cfg.scrambles):
        # one sub-stream per (scramble, variant): independent of evaluation order
        out.append(
            np.stack(
                [stream_rng(cfg.seed, "scramble", r, v).permutation(row) for v, row in enumerate(shots)]
            )
        )
    return out


def plurality_vote(batch: VariantBatch, cfg: VoteConfig = VoteConfig()) -> AggregationResult:
    """Shot-group plurality vote with threshold decay and averaging fallback.

    Shot j of every variant forms one group of m bitstrings. A group votes for
    its unique most frequent bitstring if that occurs at least t times. Groups
    are re-formed over ``cfg.scrambles`` independent per-variant shuffles and
    the winners of all of them are pooled. t starts at the initial threshold and
    drops by one while no group anywhere produced a winner; below 2 the
    componentwise average is returned.
    """
    if cfg.scrambles < 1:
        raise AggregationError("need at least one scramble")
    shots = batch.shot_matrix()
    m = shots.shape[0]
    t0 = cfg.threshold_for(m)
    winners_all, mult_all = [], []
    for arrangement in _scrambled(shots, cfg):
        w, c = group_pluralities(arrangement.T)
        winners_all.append(w)
        mult_all.append(c)
    winners = np.concatenate(winners_all)
    mult = np.concatenate(mult_all)
    for t in range(t0, 1, -1):
        ok = (winners >= 0) & (mult >= t)
        n_win = int(ok.sum())
        if n_win:
            values, counts = np.unique(winners[ok], return_counts=True)
            hist = Histogram(batch.n_bits, {int(v): c / n_win for v, c in zip(values, counts)})
            return AggregationResult(hist, "vote", t, n_win)
    avg = average_histograms(batch)
    return AggregationResult(avg.histogram, "vote-fallback-average", None, 0)


def mix_depolarizing(h: Histogram, eps: float, exclude_target: int | None = None) -> Histogram:
    """(1 - eps) h + eps * uniform.

    With ``exclude_target`` the eps mass is spread only over the other outcomes,
    which for a point mass gives target 1 - eps and eps / (2^n - 1) elsewhere.
    """
    if not 0.0 <= eps <= 1.0:
        raise AggregationError(f"eps must lie in [0, 1], got {eps}")
    size = 1 << h.n_bits
    probs = (1.0 - eps) * h.to_array()
    if exclude_target is None:
        probs += eps / size
    else:
        if size == 1:
            raise AggregationError("no off-target outcomes to mix into")
        spread = np.full(size, eps / (size - 1))
        spread[exclude_target] = 0.0
        probs += spread
    return Histogram.from_array(probs, h.n_bits)


# ---------------------------------------------------------------------------
# text interchange

def format_shot_blocks(shots: Sequence[ShotList]) -> str:
    """One bitstring per line; variants separated by a blank line."""
    blocks = ["\n".join(bitstring(int(o), s.n_bits) for o in s.outcomes) for s in shots]
    return "\n\n".join(blocks) + "\n"


def parse_shot_blocks(text: str) -> tuple[ShotList, ...]:
    blocks: list[list[str]] = [[]]
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            if blocks[-1]:
                blocks.append([])
            continue
        blocks[-1].append(line)
    blocks = [b for b in blocks if b]
    if not blocks:
        raise AggregationError("no shot data")
    out = []
    for i, block in enumerate(blocks):
        widths = {len(b) for b in block}
        if len(widths) != 1:
            raise AggregationError(f"variant block {i} mixes bitstring widths {sorted(widths)}")
        try:
            values = [parse_bitstring(b) for b in block]
        except ValueError as exc:
            raise AggregationError(f"variant block {i}: {exc}") from None
        out.append(ShotList(widths.pop(), np.array(values, dtype=np.int64)))
    return tuple(out)


def histogram_csv(h: Histogram) -> str:
    lines = ["bitstring,frequency"]
    lines += [f"{bitstring(k, h.n_bits)},{v!r}" for k, v in h.entries.items()]
    return "\n".join(lines) + "\n"


def parse_histogram_csv(text: str) -> Histogram:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or [c.strip() for c in rows[0]] != ["bitstring", "frequency"]:
        raise AggregationError("histogram CSV must start with 'bitstring,frequency'")
    entries: dict[int, float] = {}
    width = None
    for row in rows[1:]:
        if not row:
            continue
        bits, freq = row[0].strip(), float(row[1])
        width = len(bits) if width is None else width
        if len(bits) != width:
            raise AggregationError("histogram CSV mixes bitstring widths")
        entries[parse_bitstring(bits)] = freq
    if width is None:
        raise AggregationError("empty histogram CSV")
    return Histogram(width, entries)
