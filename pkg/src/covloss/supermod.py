"""Numerical certificates for supermodularity and componentwise monotonicity.

A function on R^n has increasing differences when every mixed second
difference

    f(x_i', x_j') - f(x_i, x_j') - f(x_i', x_j) + f(x_i, x_j) >= 0
    for all coordinate pairs i < j and steps x_i <= x_i', x_j <= x_j'

is nonnegative; on finite product grids this is equivalent to
supermodularity. The checks evaluate the function exhaustively on a grid
and scan all coordinate pairs and all ordered step pairs (not only adjacent
ones), returning a witness rectangle on failure rather than a bare boolean.

The second difference is computed as the difference of two first
differences along axis i, ((hi,hi) - (lo,hi)) - ((hi,lo) - (lo,lo)). For
piecewise-constant functions of threshold indicators this makes every
mathematically-zero case cancel exactly in floating point, so a zero
tolerance is meaningful there; smooth functions on currency scales should
use ``default_float_tol``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .loss import allocation_coefficient

EVALUATION_GUARD = 10_000_000


class GridTooLargeError(ValueError):
    """Grid would require more than EVALUATION_GUARD function evaluations."""


class NonStraddlingGridError(ValueError):
    """A grid axis never crosses its default threshold."""


@dataclass(frozen=True)
class GridSpec:
    """Product grid given by per-coordinate sample points, sorted ascending."""

    axes: tuple[tuple[float, ...], ...]

    def __post_init__(self) -> None:
        if len(self.axes) == 0:
            raise ValueError("grid needs at least one axis")
        canon = []
        for k, axis in enumerate(self.axes):
            pts = tuple(float(v) for v in axis)
            if len(pts) < 2:
                raise ValueError(f"axis {k} needs at least two points")
            if any(b <= a for a, b in zip(pts, pts[1:])):
                raise ValueError(f"axis {k} must be strictly increasing")
            canon.append(pts)
        object.__setattr__(self, "axes", tuple(canon))
        if self.size > EVALUATION_GUARD:
            raise GridTooLargeError(
                f"grid holds {self.size} points, guard is {EVALUATION_GUARD}"
            )

    @property
    def n(self) -> int:
        return len(self.axes)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(len(a) for a in self.axes)

    @property
    def size(self) -> int:
        return math.prod(len(a) for a in self.axes)

    def points(self) -> np.ndarray:
        """All grid points as a (size, n) array, axis-0-major order."""
        mesh = np.meshgrid(*(np.asarray(a) for a in self.axes), indexing="ij")
        return np.stack(mesh, axis=-1).reshape(-1, self.n)


def evaluate_on_grid(f: Callable, grid: GridSpec, vectorized: bool = False) -> np.ndarray:
    """Evaluate ``f`` at every grid point, returned with the grid's shape.

    With ``vectorized`` the function receives all points at once as a
    (size, n) array and must return (size,) values; otherwise it is called
    point by point on length-n vectors.
    """
    pts = grid.points()
    if vectorized:
        vals = np.asarray(f(pts), dtype=float)
        if vals.shape != (pts.shape[0],):
            raise ValueError(f"vectorized f returned shape {vals.shape}, expected ({pts.shape[0]},)")
    else:
        vals = np.array([float(f(p)) for p in pts])
    return vals.reshape(grid.shape)


def default_float_tol(values) -> float:
    """Tolerance for float-valued grids: 1e-12 times the value scale."""
    scale = float(np.max(np.abs(values))) if np.size(values) else 0.0
    return 1e-12 * max(1.0, scale)


@dataclass(frozen=True)
class PairResult:
    """Worst mixed second difference found for one coordinate pair."""

    pair: tuple[int, int]
    min_diff: float
    witness: dict


@dataclass(frozen=True)
class IncDiffReport:
    """Outcome of an increasing-differences scan."""

    pair_results: dict
    tol: float
    passed: bool
    worst: PairResult

    def __bool__(self) -> bool:
        return self.passed


def _pair_scan(values: np.ndarray, grid: GridSpec, i: int, j: int) -> PairResult:
    """Minimum mixed second difference of precomputed grid values over (i, j)."""
    g = np.moveaxis(values, (i, j), (0, 1))
    ki, kj = g.shape[0], g.shape[1]
    rest_axes = [k for k in range(grid.n) if k not in (i, j)]
    best = math.inf
    best_witness: dict = {}
    for a, a2 in itertools.combinations(range(ki), 2):
        for b, b2 in itertools.combinations(range(kj), 2):
            diff = (g[a2, b2] - g[a, b2]) - (g[a2, b] - g[a, b])
            m = float(np.min(diff))
            if m < best:
                best = m
                if np.ndim(diff) == 0:
                    rest_idx: tuple[int, ...] = ()
                else:
                    rest_idx = np.unravel_index(int(np.argmin(diff)), diff.shape)
                best_witness = {
                    "axes": (i, j),
                    "low": (grid.axes[i][a], grid.axes[j][b]),
                    "high": (grid.axes[i][a2], grid.axes[j][b2]),
                    "others": {
                        axis: grid.axes[axis][idx] for axis, idx in zip(rest_axes, rest_idx)
                    },
                }
    return PairResult(pair=(i, j), min_diff=best, witness=best_witness)


def check_increasing_differences(
    f: Callable, grid: GridSpec, tol: float = 0.0, vectorized: bool = False
) -> IncDiffReport:
    """Scan all coordinate pairs and step pairs for increasing differences.

    Passes when every mixed second difference is >= -tol. The report carries
    the minimum difference per pair and a witness rectangle for the worst
    one. Requires n >= 2 coordinates.
    """
    if grid.n < 2:
        raise ValueError("increasing differences need at least two coordinates")
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    values = evaluate_on_grid(f, grid, vectorized=vectorized)
    results = {}
    for i, j in itertools.combinations(range(grid.n), 2):
        results[(i, j)] = _pair_scan(values, grid, i, j)
    worst = min(results.values(), key=lambda r: r.min_diff)
    return IncDiffReport(
        pair_results=results, tol=tol, passed=worst.min_diff >= -tol, worst=worst
    )


@dataclass(frozen=True)
class AxisResult:
    """Worst increment found along one coordinate axis."""

    axis: int
    min_increment: float
    witness: dict


@dataclass(frozen=True)
class MonotoneReport:
    """Outcome of a componentwise-nondecreasing scan."""

    axis_results: dict
    tol: float
    passed: bool
    worst: AxisResult

    def __bool__(self) -> bool:
        return self.passed


def check_nondecreasing(
    f: Callable, grid: GridSpec, tol: float = 0.0, vectorized: bool = False
) -> MonotoneReport:
    """Check that ``f`` is nondecreasing along every coordinate.

    Consecutive grid steps suffice: larger steps telescope. Passes when
    every increment is >= -tol.
    """
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    values = evaluate_on_grid(f, grid, vectorized=vectorized)
    results = {}
    for axis in range(grid.n):
        inc = np.diff(values, axis=axis)
        flat_idx = int(np.argmin(inc))
        idx = np.unravel_index(flat_idx, inc.shape)
        point_low = list(idx)
        point_high = list(idx)
        point_high[axis] += 1
        results[axis] = AxisResult(
            axis=axis,
            min_increment=float(inc[idx]),
            witness={
                "axis": axis,
                "from": tuple(grid.axes[k][p] for k, p in enumerate(point_low)),
                "to": tuple(grid.axes[k][p] for k, p in enumerate(point_high)),
            },
        )
    worst = min(results.values(), key=lambda r: r.min_increment)
    return MonotoneReport(
        axis_results=results, tol=tol, passed=worst.min_increment >= -tol, worst=worst
    )


def check_ccp_allocation_supermodular(
    betas, thresholds, member_index: int, grid: GridSpec, tol: float = 0.0
) -> IncDiffReport:
    """Certify increasing differences of one allocation coefficient.

    The grid must straddle every member's threshold (at least one point
    strictly below and one at or above), otherwise the indicator structure
    is never exercised and the certificate would be vacuous.
    """
    betas = np.asarray(betas, dtype=float)
    thresholds = np.asarray(thresholds, dtype=float)
    if betas.ndim != 1 or thresholds.shape != betas.shape:
        raise ValueError("betas and thresholds must be vectors of equal length")
    if np.any(betas < 0):
        raise ValueError("betas must be nonnegative")
    if grid.n != betas.shape[0]:
        raise ValueError(f"grid has {grid.n} axes, expected {betas.shape[0]}")
    for k, axis in enumerate(grid.axes):
        below = any(v < thresholds[k] for v in axis)
        above = any(v >= thresholds[k] for v in axis)
        if not (below and above):
            raise NonStraddlingGridError(
                f"axis {k} never crosses its threshold {thresholds[k]}"
            )

    def f(pts: np.ndarray) -> np.ndarray:
        return allocation_coefficient(member_index, pts, betas, thresholds)

    return check_increasing_differences(f, grid, tol=tol, vectorized=True)


def check_ccp_loss_supermodular(
    betas, thresholds, collateral, grid: GridSpec, tol: float | None = None
) -> IncDiffReport:
    """Certify increasing differences of the whole member-loss function.

    The grid has 2n axes: the first n are latent credit coordinates (each
    must straddle its threshold), the last n are exposure coordinates. The
    loss re-sums currency-scale terms, so unlike the pure-indicator
    allocation check a zero tolerance is not meaningful here; ``tol=None``
    picks ``default_float_tol`` of the evaluated values.
    """
    betas = np.asarray(betas, dtype=float)
    thresholds = np.asarray(thresholds, dtype=float)
    collateral = np.asarray(collateral, dtype=float)
    n = betas.shape[0]
    if betas.ndim != 1 or thresholds.shape != betas.shape or collateral.shape != betas.shape:
        raise ValueError("betas, thresholds and collateral must be vectors of equal length")
    if np.any(betas < 0):
        raise ValueError("betas must be nonnegative")
    if grid.n != 2 * n:
        raise ValueError(f"grid has {grid.n} axes, expected {2 * n} (x axes then y axes)")
    for k in range(n):
        below = any(v < thresholds[k] for v in grid.axes[k])
        above = any(v >= thresholds[k] for v in grid.axes[k])
        if not (below and above):
            raise NonStraddlingGridError(
                f"axis {k} never crosses its threshold {thresholds[k]}"
            )

    def f(pts: np.ndarray) -> np.ndarray:
        x = pts[:, :n]
        shortfall = np.maximum(pts[:, n:] - collateral[None, :], 0.0)
        total = np.zeros(pts.shape[0])
        for i in range(n):
            total += allocation_coefficient(i, x, betas, thresholds) * shortfall[:, i]
        return total

    if tol is None:
        tol = default_float_tol(evaluate_on_grid(f, grid, vectorized=True))
    return check_increasing_differences(f, grid, tol=tol, vectorized=True)
