"""Edge-coverage objective for candidate ellipses.

A candidate is five 1-based indices into the edge vector.  Its score is one
minus the fraction of rasterized perimeter pixels that coincide with edge
pixels, so 0 is a perfect fit and 1 a complete miss.  Any failure while
decoding the candidate (index out of range, degenerate conic, non-ellipse,
oversized or frame-missing perimeter) yields the PENALTY value instead of an
error: the evolution engine needs a total function.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .edgemap import EdgeMap

if TYPE_CHECKING:
    from .de import Candidate
from .geometry import DegenerateConic, Ellipse, NotAnEllipse, conic_from_5_points, ellipse_params
from .raster import EmptyPerimeter, rasterize

PENALTY = 2.0


@dataclass(frozen=True)
class FitnessValue:
    """j = 1 - matched/n_s for scored candidates; j = PENALTY otherwise."""

    j: float
    matched: int = 0
    n_s: int = 0

    @property
    def is_penalty(self) -> bool:
        return self.j == PENALTY


PENALTY_VALUE = FitnessValue(PENALTY)


def edge_hit(em: EdgeMap, x: int, y: int) -> int:
    """1 if (x, y) is an edge pixel, 0 otherwise (out of bounds counts as 0)."""
    if 0 <= x < em.width and 0 <= y < em.height:
        return int(em.mask[y, x])
    return 0


def _dilate_chebyshev(mask: np.ndarray, radius: int) -> np.ndarray:
    out = mask.copy()
    h, w = mask.shape
    padded = np.pad(mask, radius, mode="constant", constant_values=False)
    for dy in range(2 * radius + 1):
        for dx in range(2 * radius + 1):
            out |= padded[dy : dy + h, dx : dx + w]
    return out


class EdgeObjective:
    """Callable scoring candidates against one edge map.

    dilate > 0 widens the membership test by a Chebyshev radius for noisy
    edges; the default of 0 counts exact coincidences only.  max_radius
    rejects absurd near-degenerate fits cheaply and defaults to the larger
    frame dimension.
    """

    def __init__(self, em: EdgeMap, max_radius: float | None = None, dilate: int = 0):
        self.em = em
        self.n_edges = len(em)
        self.max_radius = float(max_radius) if max_radius is not None else float(max(em.width, em.height))
        mask = _dilate_chebyshev(em.mask, dilate) if dilate > 0 else em.mask
        self._membership = np.ascontiguousarray(mask)
        self._frame = (em.width, em.height)
        self._px = em.points[:, 0].tolist()
        self._py = em.points[:, 1].tolist()

    def decode(self, genes: tuple[int, ...]) -> Ellipse | None:
        """Candidate genes -> ellipse, or None when any chain step fails."""
        n = self.n_edges
        if len(set(genes)) != 5:
            return None
        pts = []
        for g in genes:
            if not 1 <= g <= n:
                return None
            pts.append((float(self._px[g - 1]), float(self._py[g - 1])))
        try:
            e = ellipse_params(conic_from_5_points(*pts))
        except (DegenerateConic, NotAnEllipse):
            return None
        if e.r_max > self.max_radius or e.r_min < 1.0:
            return None
        return e

    def __call__(self, candidate: "Candidate") -> FitnessValue:
        e = self.decode(candidate.genes)
        if e is None:
            return PENALTY_VALUE
        try:
            perim = rasterize(e, self._frame)
        except EmptyPerimeter:
            return PENALTY_VALUE
        pts = perim.points
        matched = int(np.count_nonzero(self._membership[pts[:, 1], pts[:, 0]]))
        n_s = pts.shape[0]
        return FitnessValue(1.0 - matched / n_s, matched, n_s)


def evaluate(candidate: "Candidate", em: EdgeMap, max_radius: float | None = None, dilate: int = 0) -> FitnessValue:
    """One-shot scoring; build an EdgeObjective for repeated evaluation."""
    return EdgeObjective(em, max_radius=max_radius, dilate=dilate)(candidate)
