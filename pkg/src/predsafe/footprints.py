"""Sparse footprint storage shared by the ensemble generator and the metric engine."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import ShapeError
from .occupancy import GridSpec


@dataclass(frozen=True, eq=False)
class Footprints:
    """Footprint cell sets for ``B`` trajectories over ``S`` steps.

    Footprint ``(b, s)`` lives on time slice ``s + 1`` of the occupancy grid
    and owns entries ``ptr[b*S + s] : ptr[b*S + s + 1]`` of ``cells`` (flat
    indices into the (T, A, C) grid) and ``frac`` (coverage fractions).
    ``reach`` is the (B, S) reach-weight matrix.
    """

    ptr: np.ndarray
    cells: np.ndarray
    frac: np.ndarray
    reach: np.ndarray
    spec: GridSpec

    def __post_init__(self) -> None:
        reach = np.asarray(self.reach, dtype=np.float64)
        if reach.ndim != 2:
            raise ShapeError("reach weights must be a (B, S) matrix")
        b, s = reach.shape
        if s > self.spec.n_steps:
            raise ShapeError(f"{s} footprint steps exceed the grid's {self.spec.n_steps}")
        ptr = np.asarray(self.ptr, dtype=np.intp)
        if ptr.shape != (b * s + 1,):
            raise ShapeError("footprint pointer array does not match the reach matrix")
        cells = np.asarray(self.cells, dtype=np.intp)
        if cells.size and (cells.min() < 0 or cells.max() >= int(np.prod(self.spec.shape))):
            raise IndexError("footprint cell outside the occupancy grid")
        if np.any(reach < 0):
            raise ValueError("reach weights must be non-negative")
        object.__setattr__(self, "ptr", ptr)
        object.__setattr__(self, "cells", cells)
        object.__setattr__(self, "frac", np.asarray(self.frac, dtype=np.float64))
        object.__setattr__(self, "reach", reach)

    @property
    def n_beelines(self) -> int:
        return self.reach.shape[0]

    @property
    def n_steps(self) -> int:
        return self.reach.shape[1]

    def with_reach(self, reach) -> "Footprints":
        return Footprints(self.ptr, self.cells, self.frac, reach, self.spec)

    def footprint(self, b: int, s: int) -> dict[tuple[int, int, int], float]:
        """Cells of one footprint as ``{(time, along, cross): fraction}``."""
        i = b * self.n_steps + s
        lo, hi = self.ptr[i], self.ptr[i + 1]
        idx = np.unravel_index(self.cells[lo:hi], self.spec.shape)
        return {(int(t), int(a), int(c)): float(f) for t, a, c, f in zip(*idx, self.frac[lo:hi])}

    @classmethod
    def from_cell_lists(
        cls,
        cells: Sequence[Sequence[Mapping[tuple[int, int], float]]],
        reach,
        spec: GridSpec,
    ) -> "Footprints":
        """Build from ``cells[b][s] = {(along, cross): fraction}``; step ``s`` uses slice ``s + 1``."""
        reach = np.asarray(reach, dtype=np.float64)
        plane = spec.n_along * spec.n_cross
        ptr = [0]
        flat, frac = [], []
        for b, seq in enumerate(cells):
            if len(seq) != reach.shape[1]:
                raise ShapeError(f"trajectory {b} has {len(seq)} footprints, expected {reach.shape[1]}")
            for s, fp in enumerate(seq):
                for (i, j), f in fp.items():
                    if not (0 <= i < spec.n_along and 0 <= j < spec.n_cross):
                        raise IndexError(f"cell {(i, j)} outside the grid")
                    flat.append((s + 1) * plane + i * spec.n_cross + j)
                    frac.append(f)
                ptr.append(len(flat))
        return cls(np.array(ptr), np.array(flat, dtype=np.intp), np.array(frac, dtype=np.float64), reach, spec)
