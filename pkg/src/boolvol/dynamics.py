"""Continuous-time p-biased refresh walk on {0,1}^n.

Each bit is refreshed at the times of its own rate-1 Poisson clock and
resampled Bernoulli(p). Refreshes that redraw the old value are invisible, so
the walk is generated flip by flip: zeros turn on at total rate
``(n - w) p``, ones turn off at total rate ``w (1 - p)``, and the flipping bit
is uniform on its side. Per bit this is the two-state chain with exit rates
``p`` and ``1 - p``, the same law as the refresh construction.
"""
from __future__ import annotations

import math
import random
from typing import Callable, NamedTuple, Optional

import numpy as np

from .boolfn import EvalState, FunctionSpec, Tribes, evaluate
from .hypercube import HypercubeState, use_sparse

__all__ = [
    "RngStream",
    "FlipEvent",
    "HypercubeState",
    "TrajectoryResult",
    "CENSORED",
    "RejectionBudgetExceeded",
    "derive_seed",
    "sample_stationary",
    "run_trajectory",
    "transition_sample",
    "count_changes",
    "first_exit_time",
]

_U64 = 1 << 64

#: value returned by :func:`first_exit_time` when the horizon is reached first
CENSORED = math.inf


class RejectionBudgetExceeded(RuntimeError):
    pass


class RngStream(random.Random):
    """Mersenne Twister (period 2**19937 - 1) keyed by ``(seed, stream)``.

    The key is expanded through :class:`numpy.random.SeedSequence` with
    ``stream`` as spawn key, so neighbouring stream ids get unrelated
    generator states. The same key always replays the same draws.
    """

    def __new__(cls, seed: int, stream: int = 0):
        return super().__new__(cls)

    def __init__(self, seed: int, stream: int = 0):
        if not (0 <= seed < _U64 and 0 <= stream < _U64):
            raise ValueError("seed and stream must be unsigned 64-bit integers")
        self.seed_value = seed
        self.stream = stream
        words = np.random.SeedSequence(seed, spawn_key=(stream,)).generate_state(8, np.uint32)
        super().__init__(int.from_bytes(words.tobytes(), "little"))

    def __reduce__(self):
        return (self.__class__, (self.seed_value, self.stream))


def derive_seed(seed: int, *keys: int) -> int:
    """A 64-bit seed for a sub-experiment identified by ``keys``."""
    state = np.random.SeedSequence(seed, spawn_key=tuple(keys)).generate_state(2, np.uint32)
    return int(state[0]) | (int(state[1]) << 32)


class FlipEvent(NamedTuple):
    time: float
    bit: int
    new_value: int


class TrajectoryResult(NamedTuple):
    state: HypercubeState
    events: int


def sample_stationary(n: int, p: float, rng: random.Random, sparse: Optional[bool] = None) -> HypercubeState:
    """I.i.d. Bernoulli(p) bits, generated by geometric gaps between the ones."""
    if not 0 <= p <= 1:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    if sparse is None:
        sparse = use_sparse(n, p)
    if p == 0:
        ones = []
    elif p == 1:
        ones = range(n)
    else:
        ones = []
        lq = math.log1p(-p)
        rand = rng.random
        log = math.log
        i = -1
        while True:
            i += 1 + int(log(1.0 - rand()) / lq)
            if i >= n:
                break
            ones.append(i)
    return HypercubeState(n, ones, sparse=sparse)


def run_trajectory(
    x0: HypercubeState,
    p: float,
    horizon: float,
    rng: random.Random,
    observer: Optional[Callable[[FlipEvent], None]] = None,
) -> TrajectoryResult:
    """Advance ``x0`` in place over ``[0, horizon)``; ``observer`` sees each flip in order."""
    n = x0.n
    q = 1.0 - p
    rand = rng.random
    randrange = rng.randrange
    log = math.log
    t = 0.0
    events = 0
    while True:
        w = x0.weight
        up = (n - w) * p
        total = up + w * q
        if total <= 0.0:
            break
        t -= log(1.0 - rand()) / total
        if t >= horizon:
            break
        if rand() * total < up:
            i = x0.raise_random_zero(randrange)
            b = 1
        else:
            i = x0.lower_random_one(randrange)
            b = 0
        events += 1
        if observer is not None:
            observer(FlipEvent(t, i, b))
    return TrajectoryResult(x0, events)


def _evolve(x: HypercubeState, p: float, horizon: float, rng: random.Random, es: EvalState, stop=None):
    """The loop of :func:`run_trajectory` fused with ``es``; draws are consumed identically.

    Returns ``(changes, events, stop_time)``. With ``stop`` set the walk halts at
    the first flip where the value becomes ``stop``, and ``stop_time`` is that
    time (None if it never happened before ``horizon``).
    """
    n = x.n
    q = 1.0 - p
    rand = rng.random
    randrange = rng.randrange
    log = math.log
    observe = es.observe
    raise_zero = x.raise_random_zero
    lower_one = x.lower_random_one
    value = es.value
    t = 0.0
    events = 0
    changes = 0
    while True:
        w = x.weight
        up = (n - w) * p
        total = up + w * q
        if total <= 0.0:
            break
        t -= log(1.0 - rand()) / total
        if t >= horizon:
            break
        if rand() * total < up:
            v = observe(raise_zero(randrange), 1)
        else:
            v = observe(lower_one(randrange), 0)
        events += 1
        if v != value:
            changes += 1
            value = v
            if v == stop:
                return changes, events, t
    return changes, events, None


def transition_sample(x0: HypercubeState, t: float, p: float, rng: random.Random) -> HypercubeState:
    """Endpoint of the walk after time ``t``, drawn bit by bit.

    Each bit keeps its value with probability ``exp(-t)`` and is otherwise
    resampled Bernoulli(p). Dense states are processed literally; sparse
    states equivalently, by geometric skipping over the bits that change.
    """
    if t < 0:
        raise ValueError(f"t must be nonnegative, got {t}")
    n = x0.n
    keep = math.exp(-t)
    rand = rng.random
    if t == 0:
        return x0.copy()
    if not x0.sparse:
        bits = x0.to_bits()
        for i in range(n):
            if rand() >= keep:
                bits[i] = 1 if rand() < p else 0
        return HypercubeState.from_bits(bits)
    # a one survives w.p. keep + (1-keep) p; a zero turns on w.p. (1-keep) p
    old = set(x0.ones())
    stay = keep + (1 - keep) * p
    ones = [i for i in sorted(old) if rand() < stay]
    s = (1 - keep) * p
    if s > 0:
        if s >= 1:
            ones.extend(i for i in range(n) if i not in old)
        else:
            ls = math.log1p(-s)
            i = -1
            while True:
                i += 1 + int(math.log(1.0 - rand()) / ls)
                if i >= n:
                    break
                if i not in old:
                    ones.append(i)
    return HypercubeState(n, ones, sparse=True)


def count_changes(spec: FunctionSpec, p: float, rng: random.Random, horizon: float = 1.0) -> int:
    """Number of times ``f(X_t)`` changes for ``0 < t < horizon`` from a stationary start."""
    x = sample_stationary(spec.n, p, rng)
    es = EvalState(spec, x)
    changes, _, _ = _evolve(x, p, horizon, rng, es)
    return changes


def _sample_convinced(spec: Tribes, p: float, rng: random.Random, max_attempts: int) -> HypercubeState:
    for _ in range(max_attempts):
        x = sample_stationary(spec.n, p, rng)
        if evaluate(spec, x):
            return x
    raise RejectionBudgetExceeded(
        f"no configuration with g = 1 in {max_attempts} stationary draws (p={p}, spec={spec})"
    )


def first_exit_time(
    spec: Tribes,
    p: float,
    rng: random.Random,
    t_max: float,
    max_attempts: int = 10_000,
) -> float:
    """First ``t > 0`` with ``g(X_t) = 0`` for a stationary start conditioned on ``g(X_0) = 1``.

    Returns :data:`CENSORED` if ``g`` stays 1 throughout ``[0, t_max]``.
    """
    if not isinstance(spec, Tribes):
        raise TypeError("first_exit_time expects a Tribes spec")
    x = _sample_convinced(spec, p, rng, max_attempts)
    es = EvalState(spec, x)
    _, _, t_exit = _evolve(x, p, t_max, rng, es, stop=0)
    return CENSORED if t_exit is None else t_exit
