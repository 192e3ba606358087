"""Uniform symmetric grids on [-L, L]."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Grid:
    """Uniform grid with n cells (n + 1 nodes) on [-L, L], n even so that
    y = 0 is a node."""

    L: float
    n: int
    _y: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.L <= 0:
            raise ValueError(f"grid half-length must be positive, got {self.L}")
        if self.n < 16 or self.n % 2:
            raise ValueError(f"grid cell count must be even and >= 16, got {self.n}")
        y = np.linspace(-self.L, self.L, self.n + 1)
        y.setflags(write=False)
        object.__setattr__(self, "_y", y)

    @property
    def y(self) -> np.ndarray:
        return self._y

    @property
    def h(self) -> float:
        return 2.0 * self.L / self.n

    @property
    def i_zero(self) -> int:
        """Index of the node at y = 0."""
        return self.n // 2

    def refined(self, factor: int) -> "Grid":
        return Grid(self.L, self.n * factor)
