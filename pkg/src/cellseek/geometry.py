"""Conic fitting through five points and conic-to-ellipse conversion.

A conic is stored as the coefficients of

    a*x^2 + 2*h*x*y + b*y^2 + 2*g*x + 2*f*y + 1 = 0

i.e. with the constant term normalized to one.  This representation cannot
express conics passing through the origin; such five-point sets make the
linear system singular and are reported as degenerate, which callers treat
as a rejected candidate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

COND_LIMIT = 1e12
RESIDUAL_LIMIT = 1e-9
_MIN_DISCRIMINANT = 1e-12


class DegenerateConic(ValueError):
    """Five points do not determine a usable conic."""


class NotAnEllipse(ValueError):
    """Conic exists but is not a real ellipse."""


@dataclass(frozen=True)
class Conic:
    a: float
    h: float
    b: float
    g: float
    f: float

    def value_at(self, x: float, y: float) -> float:
        return (
            self.a * x * x
            + 2.0 * self.h * x * y
            + self.b * y * y
            + 2.0 * self.g * x
            + 2.0 * self.f * y
            + 1.0
        )


@dataclass(frozen=True)
class Ellipse:
    """Geometric ellipse: center, semi-axes (r_max >= r_min > 0), orientation.

    theta is the direction of the major axis in radians, normalized to
    [-pi/2, pi/2).  For circles theta is reported as 0.
    """

    x0: float
    y0: float
    r_max: float
    r_min: float
    theta: float

    def point_at(self, t: float) -> tuple[float, float]:
        """Parametric perimeter point at angle t."""
        ct, st = math.cos(self.theta), math.sin(self.theta)
        px = self.r_max * math.cos(t)
        py = self.r_min * math.sin(t)
        return (self.x0 + px * ct - py * st, self.y0 + px * st + py * ct)


def _solve5(m: list[list[float]], rhs: list[float]) -> list[float]:
    """Gaussian elimination with partial pivoting on a 5x5 system.

    Rows are equilibrated to unit max magnitude first so the pivot-ratio
    condition estimate is insensitive to coordinate scale.  Raises
    DegenerateConic when a pivot vanishes or the estimate exceeds COND_LIMIT.
    """
    n = 5
    for i in range(n):
        s = max(abs(v) for v in m[i])
        if s == 0.0:
            raise DegenerateConic("zero row in five-point system")
        inv = 1.0 / s
        m[i] = [v * inv for v in m[i]]
        rhs[i] *= inv

    max_pivot = 0.0
    min_pivot = math.inf
    for col in range(n):
        piv_row = max(range(col, n), key=lambda r: abs(m[r][col]))
        piv = abs(m[piv_row][col])
        if piv == 0.0:
            raise DegenerateConic("singular five-point system")
        if piv_row != col:
            m[col], m[piv_row] = m[piv_row], m[col]
            rhs[col], rhs[piv_row] = rhs[piv_row], rhs[col]
        max_pivot = max(max_pivot, piv)
        min_pivot = min(min_pivot, piv)
        mc = m[col]
        for r in range(col + 1, n):
            factor = m[r][col] / mc[col]
            if factor != 0.0:
                mr = m[r]
                for c in range(col, n):
                    mr[c] -= factor * mc[c]
                rhs[r] -= factor * rhs[col]
    if max_pivot > COND_LIMIT * min_pivot:
        raise DegenerateConic("ill-conditioned five-point system")

    x = [0.0] * n
    for i in range(n - 1, -1, -1):
        acc = rhs[i]
        mi = m[i]
        for c in range(i + 1, n):
            acc -= mi[c] * x[c]
        x[i] = acc / mi[i]
    return x


def conic_from_5_points(
    p1: tuple[float, float],
    p2: tuple[float, float],
    p3: tuple[float, float],
    p4: tuple[float, float],
    p5: tuple[float, float],
) -> Conic:
    """Fit the unique conic with unit constant term through five points.

    Raises DegenerateConic for collinear/repeated points, for ill-conditioned
    systems, and whenever the fitted coefficients fail to reproduce the input
    points to within RESIDUAL_LIMIT relative residual.
    """
    pts = (p1, p2, p3, p4, p5)
    if len({(float(x), float(y)) for x, y in pts}) != 5:
        raise DegenerateConic("points must be distinct")

    m = []
    for x, y in pts:
        m.append([x * x, 2.0 * x * y, y * y, 2.0 * x, 2.0 * y])
    sol = _solve5([row[:] for row in m], [-1.0] * 5)
    if not all(math.isfinite(v) for v in sol):
        raise DegenerateConic("non-finite solution")
    conic = Conic(*sol)
    if conic.a == 0.0 and conic.h == 0.0 and conic.b == 0.0:
        raise DegenerateConic("no quadratic part")

    for (x, y), row in zip(pts, m):
        scale = 1.0 + sum(abs(c * v) for c, v in zip(row, sol))
        if abs(conic.value_at(x, y)) > RESIDUAL_LIMIT * scale:
            raise DegenerateConic("residual too large")
    return conic


def _normalize_half_pi(theta: float) -> float:
    """Map an angle to [-pi/2, pi/2) modulo pi."""
    t = math.remainder(theta, math.pi)
    if t >= math.pi / 2.0:
        t -= math.pi
    return t


def ellipse_params(c: Conic) -> Ellipse:
    """Convert a conic to center/semi-axes/orientation.

    Validity is decided purely from the discriminant C = a*b - h^2 and the
    positivity of both axis radicands; anything else is NotAnEllipse.  The
    orientation uses theta = atan2(2h, a-b)/2, which resolves the pi/2
    ambiguity of the single-argument arctangent; the branch produced by the
    formula tracks the (a+b+R) axis, so it is shifted by pi/2 when that axis
    turns out to be the minor one.
    """
    a, h, b, g, f = c.a, c.h, c.b, c.g, c.f
    disc = a * b - h * h
    # the discriminant scales with the square of the coefficients, so the
    # near-zero test must be relative or distant ellipses get rejected
    scale2 = max(a * a, h * h, b * b)
    if not math.isfinite(disc) or disc <= 0.0 or abs(disc) < _MIN_DISCRIMINANT * scale2:
        raise NotAnEllipse("discriminant does not indicate an ellipse")

    x0 = (h * f - b * g) / disc
    y0 = (g * h - a * f) / disc
    if not (math.isfinite(x0) and math.isfinite(y0)):
        raise NotAnEllipse("non-finite center")

    r_big = math.hypot(a - b, 2.0 * h)
    det3 = a * (b - f * f) - h * (h - f * g) + g * (h * f - b * g)
    denom_lo = disc * (a + b - r_big)
    denom_hi = disc * (a + b + r_big)
    if denom_lo == 0.0 or denom_hi == 0.0:
        raise NotAnEllipse("degenerate axis denominator")
    q_lo = -2.0 * det3 / denom_lo
    q_hi = -2.0 * det3 / denom_hi
    if q_lo <= 0.0 or q_hi <= 0.0 or not (math.isfinite(q_lo) and math.isfinite(q_hi)):
        raise NotAnEllipse("axis radicand not positive")

    axis_lo = math.sqrt(q_lo)  # along the (a+b-R) eigendirection
    axis_hi = math.sqrt(q_hi)  # along the (a+b+R) direction, the atan2 branch
    theta_f = 0.5 * math.atan2(2.0 * h, a - b)
    if axis_lo == axis_hi:
        return Ellipse(x0, y0, axis_lo, axis_hi, 0.0)
    if axis_lo >= axis_hi:
        return Ellipse(x0, y0, axis_lo, axis_hi, _normalize_half_pi(theta_f + math.pi / 2.0))
    return Ellipse(x0, y0, axis_hi, axis_lo, _normalize_half_pi(theta_f))


def ellipse_from_5_points(points: list[tuple[float, float]]) -> Ellipse:
    """Convenience chain: five points -> conic -> ellipse."""
    if len(points) != 5:
        raise ValueError("need exactly five points")
    return ellipse_params(conic_from_5_points(*points))
