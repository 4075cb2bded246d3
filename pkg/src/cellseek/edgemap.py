"""Edge-pixel container: ordered point vector plus O(1) membership mask."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .imaging import BinaryImage


@dataclass(frozen=True)
class EdgeMap:
    """Edge pixels of an image.

    points: (N, 2) int array of (x, y) in row-major scan order.
    mask:   (height, width) bool array, True exactly at the points.
    """

    points: np.ndarray
    mask: np.ndarray

    @classmethod
    def from_mask(cls, mask: np.ndarray) -> "EdgeMap":
        m = np.asarray(mask, dtype=bool)
        ys, xs = np.nonzero(m)  # C order == row-major scan
        return cls(points=np.column_stack([xs, ys]).astype(np.int64), mask=m.copy())

    @classmethod
    def from_binary_image(cls, img: BinaryImage) -> "EdgeMap":
        return cls.from_mask(img.bits)

    @property
    def width(self) -> int:
        return self.mask.shape[1]

    @property
    def height(self) -> int:
        return self.mask.shape[0]

    def __len__(self) -> int:
        return self.points.shape[0]

    def to_binary_image(self) -> BinaryImage:
        return BinaryImage(self.mask)

    def without(self, kill: np.ndarray) -> "EdgeMap":
        """New EdgeMap with every pixel under `kill` removed."""
        return EdgeMap.from_mask(self.mask & ~kill)
