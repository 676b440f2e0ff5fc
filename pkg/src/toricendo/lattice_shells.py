"""Sup-norm shell enumeration of integer points, in fixed deterministic blocks.

Shell s of Z^d is {x : max|x_i| = s}; shell s of the positive orthant N^d
(entries >= 1) is {x : x_i >= 1, max x_i = s}.  Points inside a shell come in
a fixed order, and shells are grouped into blocks whose boundaries depend only
on (d, radius, index), never on how many workers consume them.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterator

import numpy as np

BLOCK_TARGET = 1 << 16


def shell_count(d: int, s: int, index: str = "Z") -> int:
    if d == 0:
        return 0
    if index == "N":
        return s ** d - (s - 1) ** d if s >= 1 else 0
    if s == 0:
        return 1
    return (2 * s + 1) ** d - (2 * s - 1) ** d


def shell_points(d: int, s: int, index: str = "Z") -> np.ndarray:
    """All points of shell s as an (n, d) int64 array."""
    if d == 0 or s < 1:
        return np.zeros((0, d), dtype=np.int64)
    parts = []
    for i in range(d):
        if index == "N":
            inner = np.arange(1, s, dtype=np.int64)
            outer = np.arange(1, s + 1, dtype=np.int64)
            tops = np.array([s], dtype=np.int64)
        else:
            inner = np.arange(-(s - 1), s, dtype=np.int64)
            outer = np.arange(-s, s + 1, dtype=np.int64)
            tops = np.array([-s, s], dtype=np.int64)
        axes = [inner] * i + [tops] + [outer] * (d - i - 1)
        if any(a.size == 0 for a in axes):
            continue
        grids = np.meshgrid(*axes, indexing="ij")
        parts.append(np.stack([g.ravel() for g in grids], axis=1))
    if not parts:
        return np.zeros((0, d), dtype=np.int64)
    return np.concatenate(parts, axis=0)


def shell_blocks(d: int, radius: int, index: str = "Z") -> list[tuple[int, int]]:
    """Inclusive shell ranges (s0, s1) covering shells 1..radius."""
    blocks = []
    s0 = 1
    acc = 0
    for s in range(1, radius + 1):
        acc += shell_count(d, s, index)
        if acc >= BLOCK_TARGET:
            blocks.append((s0, s))
            s0, acc = s + 1, 0
    if s0 <= radius:
        blocks.append((s0, radius))
    return blocks


def block_points(d: int, block: tuple[int, int], index: str = "Z") -> np.ndarray:
    s0, s1 = block
    if d == 1:
        s = np.arange(s0, s1 + 1, dtype=np.int64)
        if index == "N":
            return s[:, None]
        return np.stack([-s, s], axis=1).reshape(-1, 1)
    pts = [shell_points(d, s, index) for s in range(s0, s1 + 1)]
    return np.concatenate(pts, axis=0) if pts else np.zeros((0, d), dtype=np.int64)


def primitive_mask(points: np.ndarray) -> np.ndarray:
    if points.shape[1] == 0:
        return np.zeros(points.shape[0], dtype=bool)
    return np.gcd.reduce(np.abs(points), axis=1) == 1


def block_map(d: int, radius: int, fn: Callable[[np.ndarray], tuple], workers: int = 1,
              index: str = "Z") -> list[tuple]:
    """Apply ``fn`` to each block's points; results come back in block order."""
    blocks = shell_blocks(d, radius, index)
    work = lambda b: fn(block_points(d, b, index))  # noqa: E731
    if workers <= 1 or len(blocks) <= 1:
        return [work(b) for b in blocks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(work, blocks))


def fsum_columns(rows: list[tuple]) -> tuple:
    """Correctly rounded column sums of per-block partial sums."""
    if not rows:
        return ()
    return tuple(math.fsum(r[i] for r in rows) for i in range(len(rows[0])))


def iter_box(d: int, radius: int, index: str = "Z") -> Iterator[tuple[int, ...]]:
    """Nonzero points with sup norm <= radius, shell by shell."""
    for s in range(1, radius + 1):
        for row in shell_points(d, s, index):
            yield tuple(int(x) for x in row)
