"""Manhattan-grid mobility and the zone partition behind RB allocation.

Vehicle pairs ride lanes of a toroidal road grid.  The receiver is held
rigidly 50 m behind its transmitter in the same lane, so the pair state is
the transmitter's (axis, road, direction, along-coordinate) tuple and the
receiver is derived.  Turns fire when the along-coordinate crosses a
perpendicular road; on a turn the whole pair frame rotates onto the new
lane, which keeps the co-lane and gap invariants exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

TURN_LEFT_P = 0.25
TURN_RIGHT_P = 0.25


class GridError(ValueError):
    """Grid or zone configuration that cannot host the model."""


@dataclass(frozen=True)
class GridSpec:
    side_m: float = 250.0
    blocks: int = 3
    lane_width_m: float = 4.0
    lanes_per_direction: int = 1

    def __post_init__(self):
        if self.side_m <= 0 or self.blocks < 1:
            raise GridError("side_m must be positive and blocks >= 1")
        if self.lane_width_m <= 0 or self.lanes_per_direction < 1:
            raise GridError("lane geometry must be positive")

    @property
    def road_spacing_m(self) -> float:
        return self.side_m / self.blocks

    @property
    def lane_offset_m(self) -> float:
        # centerline to lane centerline, right-hand traffic
        return self.lane_width_m / 2.0

    def road_coords(self) -> np.ndarray:
        return np.arange(self.blocks) * self.road_spacing_m


@dataclass
class MobilityState:
    """Struct-of-arrays pair kinematics; all arrays are length U.

    axis: 0 rides a horizontal road (moves along x), 1 a vertical one.
    road: index of the road being ridden.  direction: +1/-1 along the axis.
    along: transmitter coordinate on the travel axis, wrapped to [0, side).
    """

    grid: GridSpec
    axis: np.ndarray
    road: np.ndarray
    direction: np.ndarray
    along: np.ndarray
    speed_mps: np.ndarray
    gap_m: float = 50.0

    @property
    def n_pairs(self) -> int:
        return self.along.shape[0]

    def road_m(self) -> np.ndarray:
        return self.road * self.grid.road_spacing_m

    def _positions(self, along: np.ndarray) -> np.ndarray:
        # right-hand lane: offset -2 m for eastbound, +2 m for northbound
        off = self.grid.lane_offset_m * self.direction
        fixed = self.road_m()
        pos = np.empty((self.n_pairs, 2))
        horiz = self.axis == 0
        pos[horiz, 0] = along[horiz]
        pos[horiz, 1] = fixed[horiz] - off[horiz]
        vert = ~horiz
        pos[vert, 0] = fixed[vert] + off[vert]
        pos[vert, 1] = along[vert]
        return pos

    def tx_pos(self) -> np.ndarray:
        return self._positions(self.along)

    def rx_pos(self) -> np.ndarray:
        behind = np.mod(self.along - self.gap_m * self.direction, self.grid.side_m)
        return self._positions(behind)

    def copy(self) -> "MobilityState":
        return replace(
            self,
            axis=self.axis.copy(),
            road=self.road.copy(),
            direction=self.direction.copy(),
            along=self.along.copy(),
            speed_mps=self.speed_mps.copy(),
        )


def init_fleet(
    n_pairs: int,
    grid: GridSpec,
    rng: np.random.Generator,
    speed_mps: float = 60.0 / 3.6,
    gap_m: float = 50.0,
) -> MobilityState:
    """Pairs uniform over lanes and along-road positions."""
    if n_pairs < 0:
        raise GridError("n_pairs must be nonnegative")
    return MobilityState(
        grid=grid,
        axis=rng.integers(0, 2, size=n_pairs).astype(np.int8),
        road=rng.integers(0, grid.blocks, size=n_pairs),
        direction=rng.choice(np.array([-1, 1], dtype=np.int8), size=n_pairs),
        along=rng.uniform(0.0, grid.side_m, size=n_pairs),
        speed_mps=np.full(n_pairs, float(speed_mps)),
        gap_m=float(gap_m),
    )


def step_mobility(state: MobilityState, dt: float, rng: np.random.Generator) -> MobilityState:
    """Advance dt seconds in place: ride the lane, maybe turn, wrap.

    Turns happen when the transmitter's along-coordinate crosses a
    perpendicular road: left/right/straight with probabilities 0.25/0.25/0.5.
    A step may cross at most one road, which bounds speed*dt below the
    road spacing.
    """
    if dt < 0:
        raise ValueError("dt must be nonnegative")
    if dt == 0 or state.n_pairs == 0:
        return state
    g = state.grid.road_spacing_m
    delta = state.speed_mps * dt
    if delta.max() >= g:
        raise GridError("speed*dt must stay below the road spacing")

    d = state.direction.astype(float)
    raw = state.along + d * delta
    # mirror so motion always increases, making crossings floor events
    m_old = d * state.along
    m_new = d * raw
    cell_old = np.floor(m_old / g)
    cell_new = np.floor(m_new / g)
    crossed = cell_new > cell_old

    if crossed.any():
        idx = np.flatnonzero(crossed)
        boundary = (cell_old[idx] + 1.0) * g
        leftover = m_new[idx] - boundary
        cross_along = d[idx] * boundary
        cross_road = np.mod(np.rint(cross_along / g), state.grid.blocks).astype(int)
        u = rng.uniform(size=idx.size)
        for k, i in enumerate(idx):
            if u[k] >= TURN_LEFT_P + TURN_RIGHT_P:
                continue
            left = u[k] < TURN_LEFT_P
            old_axis = state.axis[i]
            old_dir = int(state.direction[i])
            if old_axis == 0:
                new_dir = old_dir if left else -old_dir
            else:
                new_dir = -old_dir if left else old_dir
            new_road = cross_road[k]
            start = state.road[i] * g
            state.axis[i] = 1 - old_axis
            state.direction[i] = new_dir
            state.road[i] = new_road
            raw[i] = start + new_dir * leftover[k]

    state.along = np.mod(raw, state.grid.side_m)
    return state


@dataclass(frozen=True)
class ZoneMap:
    """Checkerboard cells with per-color disjoint RB sets."""

    side_m: float
    cell_m: float
    cells_per_axis: int
    colors: np.ndarray
    rb_sets: tuple = field(default=())

    def cell_index(self, positions: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        pos = np.mod(np.asarray(positions, dtype=float), self.side_m)
        ix = np.minimum((pos[..., 0] // self.cell_m).astype(int), self.cells_per_axis - 1)
        iy = np.minimum((pos[..., 1] // self.cell_m).astype(int), self.cells_per_axis - 1)
        return ix, iy

    def zone_of(self, positions: np.ndarray) -> np.ndarray:
        ix, iy = self.cell_index(positions)
        return iy * self.cells_per_axis + ix

    def color_of(self, positions: np.ndarray) -> np.ndarray:
        ix, iy = self.cell_index(positions)
        return self.colors[iy, ix]

    def rbs_of_color(self, color: int) -> np.ndarray:
        return self.rb_sets[color]


def assign_zones(
    grid: GridSpec,
    n_rb_total: int = 60,
    reuse: int = 2,
    cell_m: float = 125.0,
) -> ZoneMap:
    """Partition the area into square cells and split the RBs across colors.

    reuse=1 gives every cell the full RB set.  reuse=2 colors the cells as a
    checkerboard and halves the RBs, so adjacent cells are orthogonal; the
    toroidal wrap requires an even cell count per axis.
    """
    if n_rb_total < 1:
        raise GridError("need at least one RB")
    if reuse not in (1, 2):
        raise GridError("reuse factor must be 1 or 2")
    if n_rb_total % reuse:
        raise GridError("n_rb_total must divide evenly across the reuse colors")
    cells = int(round(grid.side_m / cell_m))
    if cells < 1 or abs(cells * cell_m - grid.side_m) > 1e-9:
        raise GridError("cell size must tile the area side exactly")
    if reuse == 2 and cells % 2:
        raise GridError("reuse-2 checkerboard needs an even cell count per axis")
    iy, ix = np.indices((cells, cells))
    if reuse == 1:
        colors = np.zeros((cells, cells), dtype=int)
        rb_sets = (np.arange(n_rb_total),)
    else:
        colors = (ix + iy) % 2
        half = n_rb_total // 2
        rb_sets = (np.arange(half), np.arange(half, n_rb_total))
    return ZoneMap(
        side_m=grid.side_m,
        cell_m=cell_m,
        cells_per_axis=cells,
        colors=colors,
        rb_sets=rb_sets,
    )
