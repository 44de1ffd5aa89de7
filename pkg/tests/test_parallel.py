import functools

import pytest

from boolvol.parallel import THREADS_ENV, _chunks, map_replicas, resolve_threads


def _square_chunk(offset, lo, hi):
    return [(i + offset) ** 2 for i in range(lo, hi)]


def test_chunks_partition():
    for count in (1, 7, 100):
        for parts in (1, 3, 64):
            b = _chunks(count, parts)
            assert b[0][0] == 0 and b[-1][1] == count
            assert all(x[1] == y[0] for x, y in zip(b, b[1:]))


def test_map_independent_of_threads():
    fn = functools.partial(_square_chunk, 3)
    ref = [(i + 3) ** 2 for i in range(37)]
    assert map_replicas(fn, 37, 1) == ref
    assert map_replicas(fn, 37, 2) == ref
    assert map_replicas(fn, 0, 2) == []


def test_resolve_threads(monkeypatch):
    monkeypatch.setenv(THREADS_ENV, "3")
    assert resolve_threads(None) == 3
    assert resolve_threads(5) == 5
    monkeypatch.delenv(THREADS_ENV)
    assert resolve_threads(None) >= 1
    with pytest.raises(ValueError):
        resolve_threads(0)
