"""Configurations on {0,1}^n with O(1) flips and uniform selection of a one or a zero."""
from __future__ import annotations

from typing import Iterable, Sequence

# sparse storage is used when p <= SPARSE_MAX_P and n > SPARSE_MIN_N
SPARSE_MAX_P = 0.25
SPARSE_MIN_N = 2**16


def use_sparse(n: int, p: float) -> bool:
    return p <= SPARSE_MAX_P and n > SPARSE_MIN_N


class HypercubeState:
    """A point ``x`` of the hypercube, indices ``0 .. n-1``.

    Dense mode keeps a permutation ``_items`` of ``range(n)`` whose first
    ``weight`` entries are the ones, plus the inverse ``_slot``; flips are
    swaps across the boundary, so uniform ones and zeros are both O(1).

    Sparse mode keeps only the ones (``_items``) and a dict from each one to
    its position. A uniform zero is found by rejection from ``range(n)``,
    which takes ``n / (n - weight)`` draws on average.
    """

    __slots__ = ("n", "weight", "sparse", "_items", "_slot")

    def __init__(self, n: int, ones: Iterable[int] = (), sparse: bool = False):
        if n < 1:
            raise ValueError(f"n must be positive, got {n}")
        self.n = n
        self.sparse = sparse
        if sparse:
            items = []
            slot = {}
            for i in ones:
                if not 0 <= i < n:
                    raise IndexError(f"bit index {i} out of range for n={n}")
                if i in slot:
                    continue
                slot[i] = len(items)
                items.append(i)
            self._items, self._slot = items, slot
            self.weight = len(items)
        else:
            items = list(range(n))
            slot = items[:]
            w = 0
            for i in ones:
                if not 0 <= i < n:
                    raise IndexError(f"bit index {i} out of range for n={n}")
                j = slot[i]
                if j < w:
                    continue
                other = items[w]
                items[w], items[j] = i, other
                slot[i], slot[other] = w, j
                w += 1
            self._items, self._slot = items, slot
            self.weight = w

    @classmethod
    def from_bits(cls, bits: Sequence[int], sparse: bool = False) -> "HypercubeState":
        return cls(len(bits), [i for i, b in enumerate(bits) if b], sparse=sparse)

    def copy(self) -> "HypercubeState":
        new = HypercubeState.__new__(HypercubeState)
        new.n, new.weight, new.sparse = self.n, self.weight, self.sparse
        new._items, new._slot = self._items[:], self._slot.copy()
        return new

    def bit(self, i: int) -> int:
        if self.sparse:
            return 1 if i in self._slot else 0
        return 1 if self._slot[i] < self.weight else 0

    __getitem__ = bit

    def __len__(self) -> int:
        return self.n

    def ones(self) -> list[int]:
        """Indices holding a one, sorted."""
        return sorted(self._items[: self.weight])

    def to_bits(self) -> list[int]:
        bits = [0] * self.n
        for i in self._items[: self.weight]:
            bits[i] = 1
        return bits

    def set(self, i: int, b: int) -> None:
        """Set bit ``i`` to ``b``; raises if that is not a change."""
        if not 0 <= i < self.n:
            raise IndexError(f"bit index {i} out of range for n={self.n}")
        if self.bit(i) == b:
            raise ValueError(f"bit {i} already holds {b}")
        if b:
            self._raise(i)
        else:
            self._lower(i)

    def _raise(self, i: int) -> None:
        w = self.weight
        if self.sparse:
            self._slot[i] = w
            self._items.append(i)
        else:
            items, slot = self._items, self._slot
            j = slot[i]
            other = items[w]
            items[w], items[j] = i, other
            slot[i], slot[other] = w, j
        self.weight = w + 1

    def _lower(self, i: int) -> None:
        w = self.weight - 1
        items, slot = self._items, self._slot
        if self.sparse:
            j = slot.pop(i)
            last = items.pop()
            if last != i:
                items[j] = last
                slot[last] = j
        else:
            j = slot[i]
            other = items[w]
            items[w], items[j] = i, other
            slot[i], slot[other] = w, j
        self.weight = w

    def raise_random_zero(self, randrange) -> int:
        """Turn a uniformly chosen zero into a one; returns its index."""
        n = self.n
        if self.sparse:
            slot = self._slot
            i = randrange(n)
            while i in slot:
                i = randrange(n)
        else:
            i = self._items[self.weight + randrange(n - self.weight)]
        self._raise(i)
        return i

    def lower_random_one(self, randrange) -> int:
        """Turn a uniformly chosen one into a zero; returns its index."""
        i = self._items[randrange(self.weight)]
        self._lower(i)
        return i

    def __eq__(self, other) -> bool:
        if not isinstance(other, HypercubeState):
            return NotImplemented
        return self.n == other.n and self.weight == other.weight and self.ones() == other.ones()

    def __repr__(self) -> str:
        mode = "sparse" if self.sparse else "dense"
        if self.n <= 64:
            body = "".join(map(str, self.to_bits()))
        else:
            body = f"{self.weight} ones"
        return f"HypercubeState(n={self.n}, {mode}, {body})"
