"""Row-subset samplers.

Two exact volume samplers built on reverse iterative removal -- a
deterministic-runtime one that maintains every removal weight
(``reg_vol_sample``) and a rejection-sampling accelerated one
(``fast_reg_vol_sample``) -- plus the i.i.d. leverage-score baseline and
closed-form marginals.

Both volume samplers start from the full index set and repeatedly remove
one row i with probability proportional to

    h_i = 1 - x_i' (X_S'X_S + lam*I)^{-1} x_i,

which is the ratio of the regularized subset volumes after and before the
removal.  For lam=0 the resulting size-s law is
P(S) = det(X_S'X_S) / (C(n-d, s-d) det(X'X)).

RNG contract: a seeded numpy Generator (PCG64).  reg_vol_sample draws one
uniform per removal (cumulative-sum inversion); fast_reg_vol_sample draws
one integer per proposal and one uniform per Bernoulli accept; leverage
sampling draws its s indices in a single choice call.  Identical seeds give
identical samples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import linalg
from .errors import (AllWeightsZero, InvalidConfig, NotPositiveDefinite,
                     SingularDowndate)
from .linalg import WEIGHT_ZERO_TOL

ALGORITHMS = ("regvol", "fastregvol", "leverage")


@dataclass(frozen=True)
class SamplerConfig:
    """Target size, ridge parameter, seed, and algorithm choice."""

    s: int
    lam: float = 0.0
    seed: int = 0
    algorithm: str = "regvol"

    def validate(self, n: int, d: int) -> None:
        if self.algorithm not in ALGORITHMS:
            raise InvalidConfig(f"unknown algorithm {self.algorithm!r}")
        if self.lam < 0:
            raise InvalidConfig("lam must be nonnegative")
        if not (0 <= self.seed < 2**64):
            raise InvalidConfig("seed must fit in 64 unsigned bits")
        if self.algorithm == "leverage":
            if self.s < 0:
                raise InvalidConfig("leverage sampling needs s >= 0")
            return
        if self.lam == 0.0:
            if not d <= self.s <= n:
                raise InvalidConfig(
                    f"unregularized volume sampling needs d <= s <= n, "
                    f"got s={self.s}, d={d}, n={n}"
                )
        elif not 1 <= self.s <= n:
            raise InvalidConfig(f"need 1 <= s <= n, got s={self.s}, n={n}")


@dataclass(frozen=True)
class SubsetSample:
    """A sampled index set plus provenance."""

    indices: tuple[int, ...]
    s: int
    lam: float
    algorithm: str
    seed: Optional[int]
    rejection_trials: Optional[int] = None
    removal_order: Optional[tuple[int, ...]] = None
    multiset: bool = False
    importance_weights: Optional[tuple[float, ...]] = None

    def __post_init__(self):
        if len(self.indices) != self.s:
            raise InvalidConfig("indices length must equal s")


@dataclass
class DowndateState:
    """Live state of reverse iterative removal (caller-owned, mutable).

    ``active[:size]`` are the remaining row indices in removal-stream
    order, and ``rows[:size]`` holds the corresponding rows of the design
    matrix (kept packed so the weight update touches contiguous memory).
    ``Z`` is the inverse of the remaining rows' regularized Gram matrix.
    ``h[:size]`` are the maintained removal weights, aligned with
    ``active``; the fast sampler runs without them.
    """

    active: np.ndarray
    size: int
    rows: np.ndarray
    Z: np.ndarray
    lam: float
    h: Optional[np.ndarray]
    downdates_since_refresh: int = 0
    refresh_every: int = field(default=64)

    @property
    def indices(self) -> list[int]:
        return sorted(int(i) for i in self.active[: self.size])

    def copy(self) -> "DowndateState":
        return DowndateState(
            active=self.active.copy(),
            size=self.size,
            rows=self.rows.copy(),
            Z=self.Z.copy(),
            lam=self.lam,
            h=None if self.h is None else self.h.copy(),
            downdates_since_refresh=self.downdates_since_refresh,
            refresh_every=self.refresh_every,
        )


def _clamp_weights(h: np.ndarray) -> np.ndarray:
    np.clip(h, 0.0, 1.0, out=h)
    h[h < WEIGHT_ZERO_TOL] = 0.0
    return h


def init_downdate_state(X, lam: float = 0.0, track_weights: bool = True) -> DowndateState:
    X = linalg.as_matrix(X)
    n, d = X.shape
    Z = linalg.inv_spd(linalg.gram(X, lam))
    h = None
    if track_weights:
        h = _clamp_weights(1.0 - linalg.quad_forms(X, Z))
    return DowndateState(
        active=np.arange(n, dtype=np.intp),
        size=n,
        rows=np.array(X, dtype=np.float64, copy=True),
        Z=Z,
        lam=lam,
        h=h,
        refresh_every=linalg.refresh_interval(d),
    )


def removal_weights(state: DowndateState, X) -> np.ndarray:
    """Fresh removal weights 1 - x_i'Zx_i over the active rows, clamped.

    Normalizing by the sum gives the conditional removal distribution.
    Raises AllWeightsZero when the sum is below tolerance (a volume-0
    frontier at lam=0); callers fall back to uniform removal.
    """
    act = state.active[: state.size]
    h = _clamp_weights(1.0 - linalg.quad_forms(X[act], state.Z))
    if h.sum() <= WEIGHT_ZERO_TOL:
        raise AllWeightsZero(f"all {state.size} removal weights vanished")
    return h


def _refresh(state: DowndateState) -> None:
    k = state.size
    state.Z = linalg.inv_spd(linalg.gram(state.rows[:k], state.lam))
    if state.h is not None:
        state.h[:k] = _clamp_weights(1.0 - linalg.quad_forms(state.rows[:k], state.Z))
    state.downdates_since_refresh = 0


def _swap_out(state: DowndateState, pos: int) -> int:
    """Move the active row at ``pos`` past the end of the prefix."""
    k = state.size - 1
    act = state.active
    i = int(act[pos])
    act[pos], act[k] = act[k], act[pos]
    state.rows[[pos, k]] = state.rows[[k, pos]]
    if state.h is not None:
        state.h[pos], state.h[k] = state.h[k], state.h[pos]
    state.size = k
    return i


def remove_row(state: DowndateState, pos: int, h_i: Optional[float] = None) -> int:
    """Remove the active row at position ``pos`` and downdate Z (and h).

    ``h_i`` is the removal weight of that row; it is looked up from the
    maintained weights when not supplied.  Returns the removed row index.
    Periodically recomputes Z from scratch to stop floating-point drift
    over long removal chains.
    """
    if h_i is None:
        if state.h is None:
            raise ValueError("h_i required when weights are not tracked")
        h_i = float(state.h[pos])
    if h_i <= WEIGHT_ZERO_TOL:
        raise SingularDowndate(f"removal weight {h_i:.3e} below tolerance")
    x_i = state.rows[pos].copy()
    Zx = state.Z @ x_i
    i = _swap_out(state, pos)
    k = state.size

    v = Zx / math.sqrt(h_i)
    if state.h is not None:
        t = state.rows[:k] @ v
        np.multiply(t, t, out=t)
        hk = state.h[:k]
        np.subtract(hk, t, out=hk)
        # roundoff can push weights a hair negative; sub-tolerance dust is
        # screened out again at selection time
        np.maximum(hk, 0.0, out=hk)
    state.Z = state.Z + v[:, None] * v
    state.downdates_since_refresh += 1
    if state.downdates_since_refresh >= state.refresh_every:
        _refresh(state)
    return i


def _pick_weighted(h_act: np.ndarray, rng: np.random.Generator) -> int:
    """Cumulative-sum inversion over the active order; one uniform draw.

    Exact-zero weights are never selected.  Returns -1 when the total
    weight is below tolerance (caller switches to uniform removal).
    """
    c = np.cumsum(h_act)
    total = c[-1]
    if total <= WEIGHT_ZERO_TOL:
        return -1
    u = rng.random() * total
    pos = int(np.searchsorted(c, u, side="right"))
    if h_act[pos] < WEIGHT_ZERO_TOL:
        # roundoff dust landed under the cursor; take the heaviest row
        pos = int(np.argmax(h_act))
    return pos


def _try_refresh(state: DowndateState) -> bool:
    try:
        _refresh(state)
        return True
    except NotPositiveDefinite:
        if state.h is not None:
            state.h[: state.size] = 0.0
        return False


def _regvol_loop(s: int, state: DowndateState, rng: np.random.Generator) -> list[int]:
    removed = []
    degenerate = False
    while state.size > s:
        pos = -1 if degenerate else _pick_weighted(state.h[: state.size], rng)
        if pos < 0:
            # volume-0 frontier: all weights vanished, remove uniformly;
            # the rank-one downdate is invalid there, so rebuild instead
            pos = int(rng.integers(state.size))
            removed.append(_swap_out(state, pos))
            degenerate = not _try_refresh(state)
            continue
        removed.append(remove_row(state, pos))
    return removed


def _rng_for(cfg: SamplerConfig, rng: Optional[np.random.Generator]) -> np.random.Generator:
    return rng if rng is not None else np.random.default_rng(cfg.seed)


def reg_vol_sample(X, cfg: SamplerConfig, rng: Optional[np.random.Generator] = None,
                   _state: Optional[DowndateState] = None) -> SubsetSample:
    """Volume-sample a size-s subset by weighted reverse iterative removal.

    Maintains all removal weights, updating each by h_j -= (x_j'v)^2 after
    a removal (v = Zx_i/sqrt(h_i)), so a step over t active rows costs
    O(t*d).  Deterministic given (X, cfg.seed).
    """
    X = linalg.as_matrix(X)
    n, d = X.shape
    cfg.validate(n, d)
    rng = _rng_for(cfg, rng)
    state = _state if _state is not None else init_downdate_state(X, cfg.lam)
    removed = _regvol_loop(cfg.s, state, rng)
    return SubsetSample(
        indices=tuple(state.indices),
        s=cfg.s,
        lam=cfg.lam,
        algorithm="regvol",
        seed=cfg.seed,
        removal_order=tuple(removed),
    )


def fast_reg_vol_sample(X, cfg: SamplerConfig, rng: Optional[np.random.Generator] = None,
                        _state: Optional[DowndateState] = None) -> SubsetSample:
    """Same law as reg_vol_sample via per-step rejection sampling.

    While more than max(s, 2d) rows remain, proposes a row uniformly,
    computes only its weight, and accepts with that probability (weights
    are <= 1, and the mean weight stays >= 1/2 above 2d rows).  The tail
    of the removal chain is handed to the weighted sampler.  Records the
    total number of proposal trials.
    """
    X = linalg.as_matrix(X)
    n, d = X.shape
    cfg.validate(n, d)
    rng = _rng_for(cfg, rng)
    state = _state if _state is not None else init_downdate_state(X, cfg.lam,
                                                                  track_weights=False)
    cutoff = max(cfg.s, 2 * d)
    trials = 0
    removed = []
    while state.size > cutoff:
        while True:
            trials += 1
            pos = int(rng.integers(state.size))
            x_i = state.rows[pos]
            h_i = 1.0 - float(x_i @ state.Z @ x_i)
            h_i = min(max(h_i, 0.0), 1.0)
            if h_i < WEIGHT_ZERO_TOL:
                h_i = 0.0
            if rng.random() < h_i:
                break
        removed.append(remove_row(state, pos, h_i=h_i))

    if state.size > cfg.s:
        # weighted tail: the maintained inverse already covers the
        # remaining rows, only their weights need computing
        k = state.size
        state.h = np.empty(k)
        state.h[:k] = _clamp_weights(1.0 - linalg.quad_forms(state.rows[:k], state.Z))
        removed.extend(_regvol_loop(cfg.s, state, rng))
    return SubsetSample(
        indices=tuple(state.indices),
        s=cfg.s,
        lam=cfg.lam,
        algorithm="fastregvol",
        seed=cfg.seed,
        rejection_trials=trials,
        removal_order=tuple(removed),
    )


def leverage_iid_sample(X, s: int, lam: float = 0.0,
                        rng: Optional[np.random.Generator] = None,
                        seed: int = 0) -> SubsetSample:
    """Draw s rows i.i.d. proportionally to their leverage scores.

    Returns a multiset (with replacement) and the importance weights
    1/sqrt(s*P(i)) used to rescale the subproblem.
    """
    X = linalg.as_matrix(X)
    n, _ = X.shape
    if s < 0:
        raise InvalidConfig("s must be nonnegative")
    rng = rng if rng is not None else np.random.default_rng(seed)
    scores = linalg.leverage_scores(X, lam)
    p = scores / scores.sum()
    idx = np.sort(rng.choice(n, size=s, replace=True, p=p)) if s > 0 else np.array([], dtype=int)
    weights = tuple(1.0 / np.sqrt(s * p[i]) for i in idx) if s > 0 else ()
    return SubsetSample(
        indices=tuple(int(i) for i in idx),
        s=s,
        lam=lam,
        algorithm="leverage",
        seed=seed,
        multiset=True,
        importance_weights=weights,
    )


def marginal_probabilities(X, s: int) -> np.ndarray:
    """P(i in S) under size-s volume sampling, for every row i.

    Closed form: (s-d)/(n-d) + (n-s)/(n-d) * leverage_i, with the s=n
    limit giving 1.
    """
    X = linalg.as_matrix(X)
    n, d = X.shape
    if not d <= s <= n:
        raise InvalidConfig(f"need d <= s <= n, got s={s}")
    if s == n:
        return np.ones(n)
    lev = linalg.leverage_scores(X, 0.0)
    return (s - d) / (n - d) + (n - s) / (n - d) * lev


def marginal_probability(X, s: int, i: int) -> float:
    return float(marginal_probabilities(X, s)[i])


def sample(X, cfg: SamplerConfig, rng: Optional[np.random.Generator] = None) -> SubsetSample:
    """Dispatch on cfg.algorithm."""
    if cfg.algorithm == "regvol":
        return reg_vol_sample(X, cfg, rng)
    if cfg.algorithm == "fastregvol":
        return fast_reg_vol_sample(X, cfg, rng)
    if cfg.algorithm == "leverage":
        return leverage_iid_sample(X, cfg.s, cfg.lam, rng, seed=cfg.seed)
    raise InvalidConfig(f"unknown algorithm {cfg.algorithm!r}")
