"""Boolean functions on {0,1}^n: direct, exhaustive and incremental evaluation.

Bits are indexed ``0 .. n-1``. Tribe ``j`` of a tribes-based function is the
contiguous block ``j*ell .. (j+1)*ell - 1``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .hypercube import HypercubeState

__all__ = [
    "Dictator",
    "Parity",
    "Majority",
    "Tribes",
    "Threshold",
    "Counterexample",
    "FunctionSpec",
    "spec_from_dict",
    "evaluate",
    "evaluate_all",
    "EvalState",
    "incremental_new",
    "incremental_flip",
    "PermutationWitness",
    "transitive_witness",
]


@dataclass(frozen=True)
class Dictator:
    n: int

    def __post_init__(self):
        _check_n(self.n)


@dataclass(frozen=True)
class Parity:
    """1 iff the number of zero bits is even."""

    n: int

    def __post_init__(self):
        _check_n(self.n)


@dataclass(frozen=True)
class Majority:
    """1 iff more than half of the bits are one; ``n`` must be odd."""

    n: int

    def __post_init__(self):
        _check_n(self.n)
        if self.n % 2 == 0:
            raise ValueError(f"majority needs odd n, got {self.n}")


@dataclass(frozen=True)
class Tribes:
    """Easily convinced tribes: 1 iff some tribe of ``ell`` bits holds at least ``r`` ones."""

    ell: int
    k: int
    r: int

    def __post_init__(self):
        _check_tribes(self.ell, self.k, self.r)

    @property
    def n(self) -> int:
        return self.ell * self.k


@dataclass(frozen=True)
class Threshold:
    """1 iff the Hamming weight is at least ``H`` (``H`` stays real)."""

    n: int
    H: float

    def __post_init__(self):
        _check_n(self.n)
        if not 0 <= self.H <= self.n:
            raise ValueError(f"threshold needs 0 <= H <= n, got H={self.H}, n={self.n}")


@dataclass(frozen=True)
class Counterexample:
    """``g(x) [|x| < H-1] + [|x| >= H]`` with ``g`` the tribes function.

    Weights in the band ``H-1 <= |x| < H`` evaluate to 0.
    """

    ell: int
    k: int
    r: int
    H: float

    def __post_init__(self):
        _check_tribes(self.ell, self.k, self.r)
        if not 0 < self.H <= self.n:
            raise ValueError(f"counterexample needs 0 < H <= n, got H={self.H}, n={self.n}")

    @property
    def n(self) -> int:
        return self.ell * self.k

    @property
    def tribes(self) -> Tribes:
        return Tribes(self.ell, self.k, self.r)

    @property
    def threshold(self) -> Threshold:
        return Threshold(self.n, self.H)


FunctionSpec = Union[Dictator, Parity, Majority, Tribes, Threshold, Counterexample]

_NAMES = {
    Dictator: "dictator",
    Parity: "parity",
    Majority: "majority",
    Tribes: "tribes",
    Threshold: "threshold",
    Counterexample: "counterexample",
}
_BY_NAME = {v: k for k, v in _NAMES.items()}


def _check_n(n):
    if not (isinstance(n, (int, np.integer)) and n >= 1):
        raise ValueError(f"n must be a positive integer, got {n!r}")


def _check_tribes(ell, k, r):
    if ell < 2 or k < 1 or r < 2:
        raise ValueError(f"tribes need ell >= 2, k >= 1, r >= 2; got ell={ell}, k={k}, r={r}")


def spec_to_dict(spec: FunctionSpec) -> dict:
    d = {"variant": _NAMES[type(spec)], "n": spec.n}
    for name in ("ell", "k", "r", "H"):
        if hasattr(spec, name):
            d[name] = getattr(spec, name)
    return d


def spec_from_dict(d: dict) -> FunctionSpec:
    cls = _BY_NAME[d["variant"]]
    if cls in (Dictator, Parity, Majority):
        return cls(int(d["n"]))
    if cls is Threshold:
        return cls(int(d["n"]), float(d["H"]))
    if cls is Tribes:
        spec = cls(int(d["ell"]), int(d["k"]), int(d["r"]))
    else:
        spec = cls(int(d["ell"]), int(d["k"]), int(d["r"]), float(d["H"]))
    if "n" in d and int(d["n"]) != spec.n:
        raise ValueError(f"n={d['n']} inconsistent with ell*k={spec.n}")
    return spec


def _ones_and_n(x) -> tuple[list[int], int]:
    if isinstance(x, HypercubeState):
        return x.ones(), x.n
    bits = list(x)
    return [i for i, b in enumerate(bits) if b], len(bits)


def evaluate(spec: FunctionSpec, x: Union[HypercubeState, Sequence[int]]) -> int:
    """Evaluate ``spec`` at ``x`` from scratch."""
    ones, n = _ones_and_n(x)
    if n != spec.n:
        raise ValueError(f"configuration has length {n}, function expects {spec.n}")
    w = len(ones)
    if isinstance(spec, Dictator):
        return 1 if ones and ones[0] == 0 else 0
    if isinstance(spec, Parity):
        return 1 if (n - w) % 2 == 0 else 0
    if isinstance(spec, Majority):
        return 1 if 2 * w > n else 0
    if isinstance(spec, Threshold):
        return 1 if w >= spec.H else 0
    if isinstance(spec, Counterexample):
        if w >= spec.H:
            return 1
        if w >= spec.H - 1:
            return 0
        return _tribes_value(ones, spec.ell, spec.r)
    if isinstance(spec, Tribes):
        return _tribes_value(ones, spec.ell, spec.r)
    raise TypeError(f"unknown function spec {spec!r}")


def _tribes_value(ones, ell, r) -> int:
    counts: dict[int, int] = {}
    for i in ones:
        j = i // ell
        c = counts.get(j, 0) + 1
        if c >= r:
            return 1
        counts[j] = c
    return 0


def evaluate_all(spec: FunctionSpec) -> np.ndarray:
    """Truth table over all ``2**n`` configurations; bit ``i`` of the index is ``x(i)``."""
    n = spec.n
    if n > 26:
        raise ValueError(f"exhaustive evaluation refused for n={n} > 26")
    idx = np.arange(1 << n, dtype=np.uint32)
    w = np.bitwise_count(idx).astype(np.int64)
    if isinstance(spec, Dictator):
        out = idx & 1
    elif isinstance(spec, Parity):
        out = ((n - w) % 2 == 0)
    elif isinstance(spec, Majority):
        out = 2 * w > n
    elif isinstance(spec, Threshold):
        out = w >= spec.H
    elif isinstance(spec, (Tribes, Counterexample)):
        mask = np.uint32((1 << spec.ell) - 1)
        g = np.zeros(idx.shape, dtype=bool)
        for j in range(spec.k):
            g |= np.bitwise_count((idx >> np.uint32(j * spec.ell)) & mask) >= spec.r
        if isinstance(spec, Counterexample):
            out = (g & (w < spec.H - 1)) | (w >= spec.H)
        else:
            out = g
    else:
        raise TypeError(f"unknown function spec {spec!r}")
    return np.asarray(out, dtype=np.uint8)


class EvalState:
    """Running value of ``spec`` along a sequence of single-bit flips.

    Holds the tracked configuration ``x`` together with its weight, the
    nonzero per-tribe one-counts, and the number of tribes holding at least
    ``r`` ones.  :meth:`observe` accounts for a flip already applied to ``x``;
    :meth:`flip` applies it first.
    """

    def __init__(self, spec: FunctionSpec, x: HypercubeState):
        if x.n != spec.n:
            raise ValueError(f"configuration has length {x.n}, function expects {spec.n}")
        self.spec = spec
        self.x = x
        self.weight = x.weight
        self.tribe_counts: dict[int, int] = {}
        self.convinced = 0
        if isinstance(spec, (Tribes, Counterexample)):
            self._ell, self._r = spec.ell, spec.r
            for i in x.ones():
                j = i // spec.ell
                self.tribe_counts[j] = self.tribe_counts.get(j, 0) + 1
            self.convinced = sum(1 for c in self.tribe_counts.values() if c >= spec.r)
        if isinstance(spec, (Threshold, Counterexample)):
            self._H = spec.H
            self._H1 = spec.H - 1
        self.observe = getattr(self, "_observe_" + _NAMES[type(spec)])
        self.value = evaluate(spec, x)

    def flip(self, i: int, new_bit: int) -> int:
        """Set bit ``i`` of ``x`` to ``new_bit`` (must be a change) and return the new value."""
        self.x.set(i, new_bit)
        return self.observe(i, new_bit)

    def _observe_dictator(self, i, b):
        self.weight += 1 if b else -1
        if i == 0:
            self.value = b
        return self.value

    def _observe_parity(self, i, b):
        self.weight += 1 if b else -1
        self.value ^= 1
        return self.value

    def _observe_majority(self, i, b):
        self.weight += 1 if b else -1
        self.value = 1 if 2 * self.weight > self.spec.n else 0
        return self.value

    def _observe_threshold(self, i, b):
        w = self.weight = self.weight + (1 if b else -1)
        self.value = 1 if w >= self._H else 0
        return self.value

    def _count(self, i, b):
        j = i // self._ell
        counts = self.tribe_counts
        if b:
            c = counts.get(j, 0) + 1
            counts[j] = c
            if c == self._r:
                self.convinced += 1
            self.weight += 1
        else:
            c = counts[j] - 1
            if c:
                counts[j] = c
            else:
                del counts[j]
            if c == self._r - 1:
                self.convinced -= 1
            self.weight -= 1

    def _observe_tribes(self, i, b):
        self._count(i, b)
        self.value = 1 if self.convinced else 0
        return self.value

    def _observe_counterexample(self, i, b):
        self._count(i, b)
        w = self.weight
        if w >= self._H:
            v = 1
        elif w >= self._H1:
            v = 0
        else:
            v = 1 if self.convinced else 0
        self.value = v
        return v


def incremental_new(spec: FunctionSpec, x) -> EvalState:
    if not isinstance(x, HypercubeState):
        x = HypercubeState.from_bits(list(x))
    return EvalState(spec, x)


def incremental_flip(state: EvalState, i: int, new_bit: int) -> int:
    return state.flip(i, new_bit)


@dataclass(frozen=True)
class PermutationWitness:
    """An involution ``sigma`` of ``range(n)`` with ``f(x o sigma) = f(x)``.

    ``kind`` is ``"identity"``, ``"transposition"`` (swap ``i`` and ``j``) or
    ``"blockswap"`` (swap tribe ``m`` with tribe ``m2`` pairing ``i`` with
    ``j`` and the remaining members in increasing order).
    """

    kind: str
    n: int
    i: int
    j: int
    ell: int = 0

    def __call__(self, k: int) -> int:
        if self.kind == "identity":
            return k
        if self.kind == "transposition":
            return self.j if k == self.i else self.i if k == self.j else k
        ell = self.ell
        m, m2 = self.i // ell, self.j // ell
        b = k // ell
        if b != m and b != m2:
            return k
        if k == self.i:
            return self.j
        if k == self.j:
            return self.i
        # rank among the block members other than i (resp. j), then map to the same rank
        src_skip, dst_base, dst_skip = (
            (self.i, m2 * ell, self.j) if b == m else (self.j, m * ell, self.i)
        )
        t = k - b * ell
        if k > src_skip:
            t -= 1
        out = dst_base + t
        if out >= dst_skip:
            out += 1
        return out

    @property
    def blocks(self) -> tuple[int, int]:
        return (self.i // self.ell, self.j // self.ell) if self.kind == "blockswap" else (-1, -1)

    def expand(self) -> list[int]:
        return [self(k) for k in range(self.n)]

    def apply_ones(self, ones) -> list[int]:
        """Ones of ``x o sigma`` given the ones of ``x`` (sigma is an involution)."""
        return sorted(self(i) for i in ones)


def transitive_witness(spec: FunctionSpec, i: int, j: int) -> PermutationWitness:
    """A permutation ``sigma`` with ``sigma(i) = j`` that leaves ``spec`` invariant."""
    n = spec.n
    if not (0 <= i < n and 0 <= j < n):
        raise IndexError(f"indices {i}, {j} out of range for n={n}")
    if isinstance(spec, Dictator):
        raise ValueError("the dictator function is not transitive")
    if i == j:
        return PermutationWitness("identity", n, i, j)
    if isinstance(spec, (Threshold, Parity, Majority)):
        return PermutationWitness("transposition", n, i, j)
    ell = spec.ell
    if i // ell == j // ell:
        return PermutationWitness("transposition", n, i, j)
    return PermutationWitness("blockswap", n, i, j, ell)


def threshold_integer(H: float) -> int:
    """Smallest integer weight with ``w >= H``."""
    return math.ceil(H)
