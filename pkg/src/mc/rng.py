"""
计数器型随机数流

每个 (seed, stream, chunk, role) 对应一个独立的 Philox 生成器，
第 i 条路径只依赖它所在的块，与路径总数和线程数无关。
"""
from __future__ import annotations

from typing import Iterator, Literal, NamedTuple

import numpy as np

Role = Literal["noise", "marks", "exp", "coupling"]
ROLES: dict[str, int] = {"noise": 0, "marks": 1, "exp": 2, "coupling": 3}


def generator(seed: int, stream: int, chunk: int, role: Role) -> np.random.Generator:
    if role not in ROLES:
        raise KeyError(f"未知的随机数用途 '{role}'")
    sequence = np.random.SeedSequence(int(seed), spawn_key=(int(stream), int(chunk), ROLES[role]))
    return np.random.Generator(np.random.Philox(sequence))


class Chunk(NamedTuple):
    index: int
    start: int
    stop: int

    @property
    def size(self) -> int:
        return self.stop - self.start


def chunks(n_paths: int, chunk_size: int) -> Iterator[Chunk]:
    """把 n_paths 条路径切成固定大小的块，最后一块可以不满"""
    if n_paths < 1:
        raise ValueError(f"路径数必须为正，实际 {n_paths}")
    for index, start in enumerate(range(0, n_paths, chunk_size)):
        yield Chunk(index, start, min(start + chunk_size, n_paths))


__all__ = ["Chunk", "ROLES", "Role", "chunks", "generator"]
