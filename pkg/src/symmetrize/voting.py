"""Exact single-draw plurality-vote model and its brute-force oracle.

For ``m`` variants each producing one draw from ``h``, ``G_i(m, t)`` is the
probability that state ``i`` is the unique most frequent draw and appears at
least ``t`` times. The aggregated distribution is ``g_i = G_i / sum_j G_j``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Sequence

import numpy as np

BRUTE_FORCE_LIMIT = 10**7
SUM_TOL = 1e-12


class VotingModelError(ValueError):
    pass


@dataclass(frozen=True)
class VotingModel:
    h: tuple[float, ...]
    m: int
    t: int

    def __post_init__(self):
        h = tuple(float(x) for x in self.h) if not _is_exact(self.h) else tuple(self.h)
        object.__setattr__(self, "h", h)
        if not h:
            raise VotingModelError("empty distribution")
        if any(x < 0 for x in h):
            raise VotingModelError("probabilities must be non-negative")
        if abs(float(sum(h)) - 1.0) > SUM_TOL * max(1, len(h)):
            raise VotingModelError(f"probabilities sum to {float(sum(h))}, not 1")
        if self.m < 1 or not 1 <= self.t <= self.m:
            raise VotingModelError(f"need 1 <= t <= m, got m={self.m}, t={self.t}")

    @property
    def r(self) -> int:
        return len(self.h)


def _is_exact(h: Sequence) -> bool:
    return all(isinstance(x, (Fraction, int)) for x in h)


def multinomial_prob(m: int, counts: Sequence[int], h: Sequence[float]) -> float:
    """(m choose x_1..x_r) * prod h_j^x_j, evaluated in log space."""
    if len(counts) != len(h):
        raise VotingModelError("counts and h differ in length")
    if any(x < 0 for x in counts) or sum(counts) != m:
        raise VotingModelError(f"counts {tuple(counts)} do not sum to m={m}")
    log_p = math.lgamma(m + 1)
    for x, p in zip(counts, h):
        if x == 0:
            continue
        if p == 0:
            return 0.0
        log_p += x * math.log(p) - math.lgamma(x + 1)
    return math.exp(log_p)


def _capped_poly(others: Sequence, cap: int, degree: int, one):
    """Coefficients c[n] = sum over (x_k < cap, sum x_k = n) of prod h_k^x_k / x_k!."""
    poly = [one] + [one * 0] * degree
    for p in others:
        terms = [one] + [one * 0] * min(cap - 1, degree)
        for x in range(1, len(terms)):
            terms[x] = terms[x - 1] * p / x
        nxt = [one * 0] * (degree + 1)
        for n, a in enumerate(poly):
            if not a:
                continue
            for x, b in enumerate(terms):
                if n + x > degree:
                    break
                nxt[n + x] += a * b
        poly = nxt
    return poly


def big_G(i: int, model: VotingModel) -> float:
    """P(state i is the unique plurality among m draws with multiplicity >= t).

    For each multiplicity x of state i, the remaining m - x draws are spread
    over the other states with every count below x; that constrained sum is a
    truncated-exponential polynomial product, built one state at a time.
    """
    h, m = model.h, model.m
    exact = _is_exact(h)
    one = Fraction(1) if exact else 1.0
    hi = h[i]
    if hi == 0:
        return one * 0
    others = [p for k, p in enumerate(h) if k != i]
    terms = []
    for x in range(model.t, m + 1):
        rest = m - x
        poly = _capped_poly(others, x, rest, one)
        if not poly[rest]:
            continue
        if exact:
            terms.append(Fraction(math.factorial(m), math.factorial(x)) * hi**x * poly[rest])
        else:
            log_head = math.lgamma(m + 1) - math.lgamma(x + 1) + x * math.log(hi)
            terms.append(math.exp(log_head) * poly[rest])
    if exact:
        return sum(terms, Fraction(0))
    return math.fsum(terms)


def small_g(model: VotingModel) -> tuple:
    """Aggregated distribution g = G / sum(G)."""
    G = [big_G(i, model) for i in range(model.r)]
    total = sum(G) if _is_exact(model.h) else math.fsum(G)
    if total <= 0:
        raise VotingModelError(f"degenerate model: no state can win (m={model.m}, t={model.t})")
    return tuple(x / total for x in G)


def brute_force_G(model: VotingModel) -> np.ndarray:
    """Enumerate all r^m draw tuples; returns G_i for every state."""
    r, m = model.r, model.m
    if r**m > BRUTE_FORCE_LIMIT:
        raise VotingModelError(f"r^m = {r**m} exceeds the enumeration limit {BRUTE_FORCE_LIMIT}")
    h = np.asarray([float(x) for x in model.h])
    draws = np.array(list(product(range(r), repeat=m)), dtype=np.int64).reshape(-1, m)
    weights = np.prod(h[draws], axis=1)
    counts = np.stack([(draws == k).sum(axis=1) for k in range(r)], axis=1)
    best = counts.max(axis=1)
    unique = (counts == best[:, None]).sum(axis=1) == 1
    winner = counts.argmax(axis=1)
    ok = unique & (best >= model.t)
    G = np.zeros(r)
    np.add.at(G, winner[ok], weights[ok])
    return G


def brute_force_g(model: VotingModel) -> tuple[float, ...]:
    G = brute_force_G(model)
    total = G.sum()
    if total <= 0:
        raise VotingModelError("degenerate model: no state can win")
    return tuple(float(x) for x in G / total)


# ---------------------------------------------------------------------------
# statement checks

@dataclass(frozen=True)
class PairMargin:
    smaller: int
    larger: int
    margin: float  # h_s/h_l - g_s/g_l; positive when the vote suppresses the smaller state

    @property
    def ok(self) -> bool:
        return self.margin > 0


@dataclass(frozen=True)
class SuppressionReport:
    g: tuple[float, ...]
    margins: tuple[PairMargin, ...]

    @property
    def violations(self) -> tuple[PairMargin, ...]:
        return tuple(p for p in self.margins if not p.ok)


def check_ratio_suppression(h: Sequence[float], m: int, t: int) -> SuppressionReport:
    """Check g_i/g_j < h_i/h_j for every pair with 0 < h_i < h_j < 1."""
    model = VotingModel(tuple(h), m, t)
    g = small_g(model)
    margins = []
    for i, hi in enumerate(model.h):
        for j, hj in enumerate(model.h):
            if 0 < hi < hj < 1:
                ratio_g = g[i] / g[j] if g[j] else math.inf
                margins.append(PairMargin(i, j, float(hi / hj - ratio_g)))
    return SuppressionReport(tuple(float(x) for x in g), tuple(margins))


@dataclass(frozen=True)
class ImbalanceCase:
    kind: str
    d: float
    h: tuple[float, ...]
    ratio_h: float  # larger / smaller of the perturbed pair
    ratio_g: float

    @property
    def ok(self) -> bool:
        return self.ratio_g > self.ratio_h


def imbalance_distribution(kind: str, l: int, d: float) -> tuple[tuple[float, ...], int, int]:
    """Perturbed uniform-over-l distribution; returns (h, larger index, smaller index).

    ``"leak"`` moves ``d`` from one support state onto a zero state, ``"shift"``
    moves ``d`` between two support states.
    """
    if l < 1:
        raise VotingModelError("l must be >= 1")
    if kind == "leak":
        if not 0 < d < 1 / (2 * l):
            raise VotingModelError(f"d must lie in (0, 1/(2l)) = (0, {1 / (2 * l)}), got {d}")
        h = [1 / l] * l + [0.0]
        h[0] -= d
        h[l] = d
        return tuple(h), 0, l
    if kind == "shift":
        if l < 2:
            raise VotingModelError("l must be >= 2 to move weight between support states")
        if not 0 < d < 1 / l:
            raise VotingModelError(f"d must lie in (0, 1/l) = (0, {1 / l}), got {d}")
        h = [1 / l] * l
        h[0] -= d
        h[1] += d
        return tuple(h), 1, 0
    raise VotingModelError(f"unknown imbalance kind {kind!r}; use 'leak' or 'shift'")


def check_imbalance(l: int, d: float, m: int, t: int, kind: str) -> ImbalanceCase:
    """Voting must amplify the larger state of the perturbed pair relative to the smaller one."""
    h, big, small = imbalance_distribution(kind, l, d)
    g = small_g(VotingModel(h, m, t))
    ratio_g = g[big] / g[small] if g[small] else math.inf
    return ImbalanceCase(kind, d, h, h[big] / h[small], ratio_g)


def g_table_csv(h: Sequence[float], m: int, t_values: Sequence[int]) -> str:
    """CSV with one row per state: state,h,g(t=...) columns."""
    cols = [small_g(VotingModel(tuple(h), m, t)) for t in t_values]
    lines = ["state,h," + ",".join(f"g_t{t}" for t in t_values)]
    for i, hi in enumerate(h):
        lines.append(f"{i},{float(hi):.12g}," + ",".join(f"{float(c[i]):.12g}" for c in cols))
    return "\n".join(lines) + "\n"
