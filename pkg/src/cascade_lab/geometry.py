"""Grids, box regions and a billiard-ray check of the geometric control condition.

Domains are open intervals (0, L) or axis-aligned rectangles (0, Lx) x (0, Ly).
Regions are finite unions of open boxes with a constant amplitude per box; that
covers every coupling / control geometry used here (disjoint interior patches,
boundary bands, full domain) while keeping indicator evaluation exact.

The geometric control condition (GCC) is tested by sampling: speed-one rays with
specular wall reflection are launched from a deterministic lattice of starting
positions and directions, and a region passes at horizon T when every ray enters
it at some sampled time <= T. Axis-parallel directions are always part of the
lattice because they are the canonical counterexamples (strips). Ray positions
are evaluated in closed form by unfolding the billiard (a tent map per axis), so
reflections introduce no drift.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import StepTooCoarseError
from .util import thread_map

_MEASURE_EPS = 1e-12


class EmptySupportWarning(UserWarning):
    """Region contains no grid node; legal but almost surely a config mistake."""


# ---------------------------------------------------------------------------
# grid
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Grid:
    """Uniform interior grid on an interval or rectangle with Dirichlet walls.

    Only interior nodes are stored: along axis a they sit at i*h[a] for
    i = 1..n[a], with h[a] = extents[a] / (n[a] + 1).
    """

    extents: tuple
    n: tuple

    @property
    def dim(self):
        return len(self.extents)

    @property
    def h(self):
        return tuple(L / (m + 1) for L, m in zip(self.extents, self.n))

    @property
    def n_total(self):
        out = 1
        for m in self.n:
            out *= m
        return out

    @property
    def hvol(self):
        """Quadrature weight of one node, prod(h); discrete L2 is hvol * sum."""
        out = 1.0
        for s in self.h:
            out *= s
        return out

    def axis_nodes(self, a):
        return self.h[a] * np.arange(1, self.n[a] + 1)

    def node_coords(self):
        """Interior node coordinates, shape (n_total, dim), C-order flattening."""
        axes = [self.axis_nodes(a) for a in range(self.dim)]
        if self.dim == 1:
            return axes[0][:, None]
        X, Y = np.meshgrid(axes[0], axes[1], indexing="ij")
        return np.column_stack([X.ravel(), Y.ravel()])


def build_grid(extents, n):
    """Build a Grid, validating positive lengths and at least 2 nodes per axis."""
    extents = tuple(float(L) for L in np.atleast_1d(extents))
    n = tuple(int(m) for m in np.atleast_1d(n))
    if len(extents) != len(n) or len(extents) not in (1, 2):
        raise ValueError("extents and n must both have length 1 or 2")
    if any(L <= 0 for L in extents):
        raise ValueError("domain lengths must be positive")
    if any(m < 2 for m in n):
        raise ValueError("need at least 2 interior nodes per axis")
    return Grid(extents, n)


# ---------------------------------------------------------------------------
# regions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Box:
    """Open axis-aligned box, one (lo, hi) pair per axis."""

    lo: tuple
    hi: tuple

    def __post_init__(self):
        if len(self.lo) != len(self.hi):
            raise ValueError("box lo/hi dimension mismatch")
        if any(b <= a for a, b in zip(self.lo, self.hi)):
            raise ValueError(f"box has non-positive side: {self.lo}..{self.hi}")

    @property
    def dim(self):
        return len(self.lo)

    def clipped(self, extents):
        """Intersection with the open domain, or None when it has no measure."""
        lo = tuple(max(a, 0.0) for a in self.lo)
        hi = tuple(min(b, L) for b, L in zip(self.hi, extents))
        if any(b - a <= _MEASURE_EPS for a, b in zip(lo, hi)):
            return None
        return Box(lo, hi)

    def min_side(self):
        return min(b - a for a, b in zip(self.lo, self.hi))


@dataclass(frozen=True)
class Region:
    """Union of open boxes with one nonnegative constant amplitude per box.

    Where boxes overlap the amplitude is the max over covering boxes, so the
    value at a point never depends on box order.
    """

    parts: tuple
    amplitudes: tuple
    label: str = ""

    def __post_init__(self):
        if not self.parts:
            raise ValueError("region needs at least one part")
        if len(self.parts) != len(self.amplitudes):
            raise ValueError("one amplitude per part required")
        if any(a < 0 for a in self.amplitudes):
            raise ValueError("region amplitudes must be nonnegative")
        dims = {p.dim for p in self.parts}
        if len(dims) != 1:
            raise ValueError("all parts must share one dimension")

    @property
    def dim(self):
        return self.parts[0].dim

    def clipped(self, extents):
        parts, amps = [], []
        for box, amp in zip(self.parts, self.amplitudes):
            cb = box.clipped(extents)
            if cb is None:
                raise ValueError(
                    f"region part {box.lo}..{box.hi} has no measure inside the domain"
                )
            parts.append(cb)
            amps.append(amp)
        return Region(tuple(parts), tuple(amps), self.label)

    def min_part_width(self):
        return min(p.min_side() for p in self.parts)

    def amplitude_at(self, coords):
        """Amplitude field at points, shape (m, dim) -> (m,); 0 outside."""
        coords = np.asarray(coords, dtype=float)
        out = np.zeros(coords.shape[0])
        for box, amp in zip(self.parts, self.amplitudes):
            inside = np.ones(coords.shape[0], dtype=bool)
            for a in range(self.dim):
                inside &= (coords[:, a] > box.lo[a]) & (coords[:, a] < box.hi[a])
            np.maximum(out, np.where(inside, amp, 0.0), out=out)
        return out

    def contains_tracks(self, axes_positions):
        """Membership for per-axis position arrays of a common shape."""
        shape = axes_positions[0].shape
        out = np.zeros(shape, dtype=bool)
        for box in self.parts:
            inside = np.ones(shape, dtype=bool)
            for a in range(self.dim):
                inside &= (axes_positions[a] > box.lo[a]) & (axes_positions[a] < box.hi[a])
            out |= inside
        return out


def region_from_bounds(bounds, amplitude=1.0, label=""):
    """Convenience constructor.

    ``bounds`` is a list of parts, each part a list of per-axis (lo, hi) pairs;
    a single part may be passed directly. ``amplitude`` is a scalar applied to
    every part or a sequence with one value per part.
    """
    if bounds and np.isscalar(bounds[0][0]):
        bounds = [bounds]
    parts = tuple(Box(tuple(float(a) for a, _ in p), tuple(float(b) for _, b in p)) for p in bounds)
    if np.isscalar(amplitude):
        amps = tuple(float(amplitude) for _ in parts)
    else:
        amps = tuple(float(a) for a in amplitude)
    return Region(parts, amps, label)


def indicator_vector(region, grid, taper=0.0, warn=True):
    """Amplitude-weighted indicator of a region sampled at grid nodes.

    Returns the nodal field amplitude(x) * 1_region(x). When ``taper`` > 0 the
    box edges are replaced by linear ramps of that width (an optional smoothing
    of the sharp multiplier; no claims are attached to it). Empty nodal support
    raises EmptySupportWarning but still returns the all-zero field.
    """
    region = region.clipped(grid.extents)
    coords = grid.node_coords()
    if taper <= 0.0:
        values = region.amplitude_at(coords)
    else:
        values = np.zeros(coords.shape[0])
        for box, amp in zip(region.parts, region.amplitudes):
            ramp = np.ones(coords.shape[0])
            for a in range(region.dim):
                left = (coords[:, a] - box.lo[a]) / taper
                right = (box.hi[a] - coords[:, a]) / taper
                ramp *= np.clip(np.minimum(left, right), 0.0, 1.0)
            np.maximum(values, amp * ramp, out=values)
    if warn and not np.any(values > 0):
        warnings.warn(
            f"region {region.label or region.parts} has no positive support on the grid",
            EmptySupportWarning,
            stacklevel=2,
        )
    return values


# ---------------------------------------------------------------------------
# billiard rays / GCC
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RayState:
    """Speed-one billiard ray sample: position, unit direction, elapsed time."""

    position: tuple
    direction: tuple
    elapsed: float

    def __post_init__(self):
        speed = math.sqrt(sum(d * d for d in self.direction))
        if abs(speed - 1.0) > 1e-12:
            raise ValueError(f"ray direction must be unit length, got |d|={speed!r}")


@dataclass
class GccReport:
    """Outcome of a sampled GCC check for one region."""

    region_label: str
    horizon: float
    dt_ray: float
    rays_total: int
    rays_hit: int
    rays_resampled: int
    min_hit_time: float | None
    max_hit_time_among_hitters: float | None
    worst_ray: RayState | None
    verdict: bool

    def to_dict(self):
        return {
            "region": self.region_label,
            "horizon": self.horizon,
            "dt_ray": self.dt_ray,
            "rays_total": self.rays_total,
            "rays_hit": self.rays_hit,
            "rays_resampled": self.rays_resampled,
            "min_hit_time": self.min_hit_time,
            "max_hit_time_among_hitters": self.max_hit_time_among_hitters,
            "worst_ray_position": list(self.worst_ray.position) if self.worst_ray else None,
            "worst_ray_direction": list(self.worst_ray.direction) if self.worst_ray else None,
            "verdict": "pass" if self.verdict else "fail",
        }


def fold_positions(start, velocity, times, length):
    """Exact billiard positions on [0, L]: tent map of the free flight."""
    q = np.mod(start + velocity * times, 2.0 * length)
    return np.where(q <= length, q, 2.0 * length - q)


def _axis_directions(dim):
    if dim == 1:
        return [(-1.0,), (1.0,)]
    return [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)]


def _ray_lattice(extents, n_rays):
    """Deterministic starting lattice: positions x directions.

    1D: endpoint-including uniform positions (ceil(n_rays/2) of them) crossed
    with both directions.  2D: strictly interior uniform positions, m per axis
    with m = round(sqrt(n_rays / 8)), crossed with 8 equispaced directions
    (multiples of pi/4, so the axis-parallel directions are always present).
    Interior 2D starts avoid rays that glide along a wall and can never enter
    an open region touching that wall.
    """
    dim = len(extents)
    if dim == 1:
        L = extents[0]
        n_pos = max(2, int(math.ceil(n_rays / 2)))
        xs = np.linspace(0.0, L, n_pos)
        positions = [(x,) for x in xs]
        dirs = _axis_directions(1)
        return [(p, d) for p in positions for d in dirs]
    n_dir = 8
    n_pos = max(2, int(round(math.sqrt(max(n_rays, n_dir) / n_dir))))
    axes = [L * np.arange(1, n_pos + 1) / (n_pos + 1) for L in extents]
    positions = [(x, y) for x in axes[0] for y in axes[1]]
    dirs = []
    for q in range(n_dir):
        ang = 2.0 * math.pi * q / n_dir
        dx, dy = math.cos(ang), math.sin(ang)
        # snap the axis-parallel directions to exact unit vectors
        if abs(dx) < 1e-15:
            dx = 0.0
            dy = math.copysign(1.0, dy)
        if abs(dy) < 1e-15:
            dy = 0.0
            dx = math.copysign(1.0, dx)
        dirs.append((dx, dy))
    return [(p, d) for p in positions for d in dirs]


def _wall_times(x0, v, length, horizon):
    """Times in (0, horizon] at which the unfolded coordinate meets a wall."""
    if v == 0.0:
        return np.empty(0)
    # walls of the unfolded line sit at integer multiples of length
    first = x0 / -v if v < 0 else (length - x0) / v
    period = length / abs(v)
    if first <= 0:
        first += period
    k = int(math.floor((horizon - first) / period))
    if k < 0:
        return np.empty(0)
    return first + period * np.arange(k + 1)


def _hits_corner(position, direction, extents, horizon, tol):
    """True when both axes reflect within tol of the same instant."""
    tx = _wall_times(position[0], direction[0], extents[0], horizon)
    ty = _wall_times(position[1], direction[1], extents[1], horizon)
    if tx.size == 0 or ty.size == 0:
        return False
    gaps = np.abs(tx[:, None] - ty[None, :])
    return bool(np.min(gaps) < tol)


def _rotate(direction, angle):
    c, s = math.cos(angle), math.sin(angle)
    dx, dy = direction
    return (c * dx - s * dy, s * dx + c * dy)


def gcc_check(region, extents, T, n_rays, dt_ray):
    """Sampled geometric-control-condition check for one region.

    Traces the deterministic ray lattice over [0, T] with sampling step
    ``dt_ray`` and reports first-entry times. Requires dt_ray smaller than the
    thinnest region part so a transversal crossing cannot be skipped. Rays that
    would strike a corner exactly are replaced by slightly rotated ones (they
    are counted in ``rays_resampled``); corner dynamics is out of scope.
    """
    extents = tuple(float(L) for L in np.atleast_1d(extents))
    if T <= 0:
        raise ValueError("horizon T must be positive")
    if n_rays < 1:
        raise ValueError("need at least one ray")
    if dt_ray <= 0:
        raise ValueError("dt_ray must be positive")
    region_c = region.clipped(extents)
    width = region_c.min_part_width()
    if dt_ray >= width:
        raise StepTooCoarseError(dt_ray, width)

    rays = _ray_lattice(extents, n_rays)
    dim = len(extents)
    resampled = 0
    if dim == 2:
        fixed = []
        for pos, d in rays:
            attempt = 0
            while attempt < 4 and _hits_corner(pos, d, extents, T, tol=1e-9):
                d = _rotate(d, 1e-3 * (attempt + 1))
                attempt += 1
            if attempt:
                resampled += 1
            fixed.append((pos, d))
        rays = fixed

    n_steps = int(math.ceil(T / dt_ray))
    times = dt_ray * np.arange(n_steps + 1)
    pos_arr = np.array([p for p, _ in rays])
    dir_arr = np.array([d for _, d in rays])

    def trace(chunk):
        lo, hi = chunk
        tracks = [
            fold_positions(pos_arr[lo:hi, a : a + 1], dir_arr[lo:hi, a : a + 1], times[None, :], extents[a])
            for a in range(dim)
        ]
        inside = region_c.contains_tracks(tracks)
        any_hit = inside.any(axis=1)
        first_idx = np.where(any_hit, inside.argmax(axis=1), -1)
        return any_hit, first_idx

    chunks = [(i, min(i + 256, len(rays))) for i in range(0, len(rays), 256)]
    results = thread_map(trace, chunks)
    any_hit = np.concatenate([r[0] for r in results])
    first_idx = np.concatenate([r[1] for r in results])

    hit_times = first_idx[any_hit] * dt_ray
    rays_hit = int(any_hit.sum())
    worst = None
    if rays_hit < len(rays):
        miss = int(np.argmin(any_hit))
        worst = RayState(tuple(pos_arr[miss]), tuple(dir_arr[miss]), 0.0)
    return GccReport(
        region_label=region.label or "region",
        horizon=float(T),
        dt_ray=float(dt_ray),
        rays_total=len(rays),
        rays_hit=rays_hit,
        rays_resampled=resampled,
        min_hit_time=float(hit_times.min()) if rays_hit else None,
        max_hit_time_among_hitters=float(hit_times.max()) if rays_hit else None,
        worst_ray=worst,
        verdict=rays_hit == len(rays),
    )


def interval_entry_time(region, length):
    """Exact worst first-entry time of a 1D region: 2*max(a_first, L - b_last).

    The slowest ray starts at an outer edge of the region heading away from it;
    gaps between parts are always reached faster than the outer sweeps.
    """
    region = region.clipped((float(length),))
    a_first = min(p.lo[0] for p in region.parts)
    b_last = max(p.hi[0] for p in region.parts)
    return 2.0 * max(a_first, length - b_last)


def default_horizon(regions, extents):
    """Default control horizon: 1.5 x the summed per-region worst entry times.

    In 2D each region contributes the max over the per-axis projected sweep
    times; this is only a heuristic default for configs that leave T unset.
    """
    total = 0.0
    for region in regions:
        if len(extents) == 1:
            total += interval_entry_time(region, extents[0])
        else:
            per_axis = []
            for a, L in enumerate(extents):
                r = region.clipped(tuple(extents))
                lo = min(p.lo[a] for p in r.parts)
                hi = max(p.hi[a] for p in r.parts)
                per_axis.append(2.0 * max(lo, L - hi))
            total += max(per_axis)
    return 1.5 * total
