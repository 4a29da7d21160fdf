"""Coefficient magnitudes, concurrence bounds and jump-concurrence detection.

Only |c_ij| are available from per-state probabilities, so the concurrence
is bracketed by its extremes over the unknown phases.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import contourpy
import numpy as np
from scipy import ndimage

BELL_TOL = 1e-10
# set-2/set-1 ratio below which a simultaneous extremum counts as a jump
JUMP_RATIO = 0.05
# set-2 <= PLANAR_EPS * set-1 marks a maximal (Bell) jump
PLANAR_EPS = 1e-6
MAX_STEP = math.pi / 180

# path code contourpy uses to terminate a closed loop
_CLOSEPOLY = 79


class AllNonPositive(ValueError):
    pass


class GridTooCoarse(ValueError):
    pass


class ContourNotClosed(ValueError):
    pass


@dataclass(frozen=True)
class CoefficientMagnitudes:
    c11: float
    c12: float
    c21: float
    c22: float
    clamped: bool = False

    def __array__(self, dtype=None, copy=None):
        return np.array([self.c11, self.c12, self.c21, self.c22], dtype=dtype or float)


@dataclass(frozen=True)
class ConcurrenceReport:
    C_max: float
    C_min: float
    is_bell: bool


class JumpKind(Enum):
    CONE_STRONG = "ConeStrong"
    PLANAR_MAXIMAL = "PlanarMaximal"


@dataclass(frozen=True)
class JumpPoint:
    theta_e: float
    theta_ph: float
    kind: JumpKind
    set1_value: float
    set2_value: float

    def as_dict(self) -> dict:
        return {
            "theta_e": self.theta_e,
            "theta_ph": self.theta_ph,
            "kind": self.kind.value,
            "set1_value": self.set1_value,
            "set2_value": self.set2_value,
        }


@dataclass(frozen=True)
class StateGrid:
    """Set-1 / set-2 values on a (theta_e, theta_ph) grid; NaN marks holes.

    Rows follow `theta_e`, columns follow `theta_ph`.
    """

    theta_e: np.ndarray
    theta_ph: np.ndarray
    set1: np.ndarray
    set2: np.ndarray

    def __post_init__(self):
        shape = (len(self.theta_e), len(self.theta_ph))
        if np.shape(self.set1) != shape or np.shape(self.set2) != shape:
            raise ValueError(f"value grids must have shape {shape}")


def quad_to_coefficients(q) -> CoefficientMagnitudes:
    """|c_ij| = sqrt(max(q_i, 0) / sum max(q, 0)) in the order (upR, upL, downR, downL)."""
    v = np.asarray(q, dtype=float)
    clipped = np.maximum(v, 0.0)
    total = clipped.sum()
    if not total > 0:
        raise AllNonPositive(f"no positive entry in {v.tolist()}")
    c = np.sqrt(clipped / total)
    return CoefficientMagnitudes(*(float(x) for x in c), clamped=bool(np.any(v < 0)))


def concurrence_bounds(c: CoefficientMagnitudes, tol: float = BELL_TOL) -> ConcurrenceReport:
    diag, off = c.c11 * c.c22, c.c12 * c.c21
    c_max, c_min = 2 * (diag + off), 2 * abs(diag - off)
    return ConcurrenceReport(c_max, c_min, c_max >= 1 - tol and c_min >= 1 - tol)


def _check_resolution(grid: StateGrid, max_step: float):
    for axis in (grid.theta_e, grid.theta_ph):
        if len(axis) < 2 or np.max(np.diff(axis)) > max_step * (1 + 1e-9):
            raise GridTooCoarse(f"grid spacing exceeds {max_step:.6g} rad")


def find_jump_points(
    grid: StateGrid,
    ratio: float = JUMP_RATIO,
    planar_eps: float = PLANAR_EPS,
    max_step: float = MAX_STEP,
) -> list[JumpPoint]:
    """Points where set-1 peaks while set-2 dips, over the 8-neighbourhood.

    Candidates must have a complete neighbourhood (no holes, not on the
    border). Plateaus of candidates are merged: each 8-connected cluster
    reports its lowest set-2/set-1 ratio, ties going to smaller theta_e and
    then smaller theta_ph. Output is sorted by (theta_e, theta_ph).
    """
    _check_resolution(grid, max_step)
    s1 = np.maximum(np.asarray(grid.set1, float), 0.0)
    s2 = np.maximum(np.asarray(grid.set2, float), 0.0)
    n, m = s1.shape
    if n < 3 or m < 3:
        return []

    core = (slice(1, n - 1), slice(1, m - 1))
    finite = np.isfinite(s1) & np.isfinite(s2)
    ok = finite[core].copy()
    is_max = np.ones_like(ok)
    is_min = np.ones_like(ok)
    not_flat = np.zeros_like(ok)
    c1, c2 = s1[core], s2[core]
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di == dj == 0:
                continue
            nb = (slice(1 + di, n - 1 + di), slice(1 + dj, m - 1 + dj))
            ok &= finite[nb]
            with np.errstate(invalid="ignore"):
                is_max &= c1 >= s1[nb]
                is_min &= c2 <= s2[nb]
                not_flat |= (c1 > s1[nb]) | (c2 < s2[nb])
    with np.errstate(invalid="ignore", divide="ignore"):
        rel = np.where(c1 > 0, c2 / c1, np.inf)
    cand = ok & is_max & is_min & not_flat & (c1 > 0) & (rel < ratio)

    labels, count = ndimage.label(cand, structure=np.ones((3, 3)))
    points = []
    for lab in range(1, count + 1):
        ii, jj = np.nonzero(labels == lab)
        order = np.lexsort((jj, ii, rel[ii, jj]))
        i, j = ii[order[0]] + 1, jj[order[0]] + 1
        kind = JumpKind.PLANAR_MAXIMAL if s2[i, j] <= planar_eps * s1[i, j] else JumpKind.CONE_STRONG
        points.append(JumpPoint(float(grid.theta_e[i]), float(grid.theta_ph[j]), kind, float(s1[i, j]), float(s2[i, j])))
    points.sort(key=lambda p: (p.theta_e, p.theta_ph))
    return points


def _polygon_area(poly: np.ndarray) -> float:
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def _contains(poly: np.ndarray, x: float, y: float) -> bool:
    # even-odd ray casting along +x
    inside = False
    xs, ys = poly[:, 0], poly[:, 1]
    for i in range(len(poly) - 1):
        x1, y1, x2, y2 = xs[i], ys[i], xs[i + 1], ys[i + 1]
        if (y1 > y) != (y2 > y):
            x_cross = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
            if x_cross > x:
                inside = not inside
    return inside


def zero_concurrence_contour(grid: StateGrid, jump: JumpPoint) -> np.ndarray:
    """Closed set-1 = set-2 level line around `jump`, as (theta_e, theta_ph) rows.

    Extracted by marching squares (linear interpolation on grid edges) over
    set-1 - set-2 with holes masked. The tightest closed loop enclosing the
    jump is returned, first point repeated at the end.
    """
    diff = np.maximum(np.asarray(grid.set1, float), 0.0) - np.maximum(np.asarray(grid.set2, float), 0.0)
    z = np.ma.masked_invalid(diff)
    gen = contourpy.contour_generator(
        x=np.asarray(grid.theta_ph, float),
        y=np.asarray(grid.theta_e, float),
        z=z,
        line_type=contourpy.LineType.SeparateCode,
    )
    lines, codes = gen.lines(0.0)
    loops = []
    for pts, code in zip(lines, codes):
        if len(pts) < 4 or code[-1] != _CLOSEPOLY:
            continue
        poly = np.column_stack([pts[:, 1], pts[:, 0]])
        if not np.allclose(poly[0], poly[-1]):
            poly = np.vstack([poly, poly[:1]])
        if _contains(poly, jump.theta_e, jump.theta_ph):
            loops.append(poly)
    if not loops:
        raise ContourNotClosed(
            f"no closed set1 = set2 contour encloses ({jump.theta_e:.6g}, {jump.theta_ph:.6g})"
        )
    return min(loops, key=_polygon_area)
