"""Rectangular core grid and its 4-neighbor adjacency."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch


@dataclass(frozen=True)
class FloorplanConfig:
    """Core grid laid out row-major: core i sits at (i // cols, i % cols)."""

    rows: int
    cols: int
    core_pitch_m: float = 0.004  # informational only

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise DimensionMismatch(f"floorplan {self.rows}x{self.cols} has no cores")

    @property
    def core_count(self) -> int:
        return self.rows * self.cols

    def neighbors(self, core: int) -> list[int]:
        """4-neighbors of a core (2 for corners, 3 for edges, 4 interior)."""
        r, c = divmod(core, self.cols)
        out = []
        if r > 0:
            out.append(core - self.cols)
        if r < self.rows - 1:
            out.append(core + self.cols)
        if c > 0:
            out.append(core - 1)
        if c < self.cols - 1:
            out.append(core + 1)
        return out

    def adjacency(self) -> np.ndarray:
        """Symmetric 0/1 adjacency matrix, zero diagonal."""
        n = self.core_count
        adj = np.zeros((n, n), dtype=np.int64)
        for i in range(n):
            for j in self.neighbors(i):
                adj[i, j] = 1
        return adj
