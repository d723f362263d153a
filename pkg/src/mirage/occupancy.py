"""2-D occupancy mapping with height-threshold ground segmentation.

Points at or below the ground height threshold contribute free-space
evidence to their cell; higher points accumulate occupied evidence,
integrated over the trailing window of frames.  A cell turns occupied once
its integrated count reaches the configured threshold; cells with only
ground evidence are free; everything else stays unknown.  Counting is
binary (no log-odds), which is enough for the qualitative grid signatures
this package reproduces.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from mirage.fileio import FileFormatError, g9

FREE = 0
OCCUPIED = 1
UNKNOWN = 2
_CELL_CHARS = {FREE: "F", OCCUPIED: "O", UNKNOWN: "U"}
_CHAR_CELLS = {v: k for k, v in _CELL_CHARS.items()}


@dataclass
class GridConfig:
    cell_size: float = 0.2
    origin_x: float = -10.0
    origin_y: float = -10.0
    extent_x: float = 20.0
    extent_y: float = 20.0
    ground_threshold: float = 0.15   # world height [m] separating ground hits
    occupied_count: int = 3          # integrated points needed per cell
    integration_frames: int = 5      # trailing frames accumulated
    sensor_height: float = 2.2       # converts sensor-frame z to world height

    def __post_init__(self):
        if self.cell_size <= 0:
            raise ValueError("cell size must be positive")
        if self.occupied_count <= 0 or self.integration_frames <= 0:
            raise ValueError("thresholds must be positive")
        for extent in (self.extent_x, self.extent_y):
            n = extent / self.cell_size
            if extent <= 0 or abs(n - round(n)) > 1e-9:
                raise ValueError("extent must be a positive multiple of cell size")

    @property
    def shape(self):
        return (int(round(self.extent_y / self.cell_size)),
                int(round(self.extent_x / self.cell_size)))


@dataclass
class OccupancyGrid:
    cells: np.ndarray  # (rows, cols) uint8 of FREE/OCCUPIED/UNKNOWN
    config: GridConfig

    def cell_index(self, x, y):
        cfg = self.config
        col = int(np.floor((x - cfg.origin_x) / cfg.cell_size))
        row = int(np.floor((y - cfg.origin_y) / cfg.cell_size))
        return row, col

    def state_at(self, x, y):
        row, col = self.cell_index(x, y)
        if 0 <= row < self.cells.shape[0] and 0 <= col < self.cells.shape[1]:
            return int(self.cells[row, col])
        return UNKNOWN

    def occupied_in_box(self, x_min, x_max, y_min, y_max):
        """Occupied-cell count among cells whose centers fall in the box."""
        cfg = self.config
        rows, cols = self.cells.shape
        xs = cfg.origin_x + (np.arange(cols) + 0.5) * cfg.cell_size
        ys = cfg.origin_y + (np.arange(rows) + 0.5) * cfg.cell_size
        sel = np.ix_((ys >= y_min) & (ys <= y_max), (xs >= x_min) & (xs <= x_max))
        return int(np.count_nonzero(self.cells[sel] == OCCUPIED))


def build_grid(frames, config=GridConfig()):
    """Integrate point-cloud frames into an occupancy grid.

    Only the trailing `integration_frames` frames contribute.  Determinism:
    identical frames and config give identical grids.
    """
    if not frames:
        raise ValueError("need at least one frame")
    rows, cols = config.shape
    occupied_counts = np.zeros((rows, cols), dtype=np.int64)
    free_counts = np.zeros((rows, cols), dtype=np.int64)
    for cloud in frames[-config.integration_frames:]:
        if len(cloud) == 0:
            continue
        xyz = cloud.xyz
        height = xyz[:, 2] + config.sensor_height
        col = np.floor((xyz[:, 0] - config.origin_x) / config.cell_size).astype(np.int64)
        row = np.floor((xyz[:, 1] - config.origin_y) / config.cell_size).astype(np.int64)
        inside = (row >= 0) & (row < rows) & (col >= 0) & (col < cols)
        high = height > config.ground_threshold
        np.add.at(occupied_counts, (row[inside & high], col[inside & high]), 1)
        low = inside & ~high
        np.add.at(free_counts, (row[low], col[low]), 1)
    cells = np.full((rows, cols), UNKNOWN, dtype=np.uint8)
    cells[free_counts > 0] = FREE
    cells[occupied_counts >= config.occupied_count] = OCCUPIED
    return OccupancyGrid(cells=cells, config=config)


def occupied_area(grid):
    """Total area marked occupied [m^2]."""
    return float(np.count_nonzero(grid.cells == OCCUPIED)) * grid.config.cell_size**2


def write_grid(path, grid):
    """ASCII grid dump: header lines, then one character per cell (rows from
    origin_y upward), suitable for golden-file diffing."""
    cfg = grid.config
    rows, cols = grid.cells.shape
    with open(path, "w", newline="\n") as fh:
        fh.write(f"width {cols}\n")
        fh.write(f"height {rows}\n")
        fh.write(f"resolution {g9(cfg.cell_size)}\n")
        fh.write(f"origin {g9(cfg.origin_x)} {g9(cfg.origin_y)}\n")
        for row in range(rows):
            fh.write("".join(_CELL_CHARS[int(c)] for c in grid.cells[row]) + "\n")


def read_grid(path):
    with open(path) as fh:
        lines = fh.read().splitlines()
    try:
        width = int(lines[0].split()[1])
        height = int(lines[1].split()[1])
        resolution = float(lines[2].split()[1])
        ox, oy = (float(v) for v in lines[3].split()[1:3])
    except (IndexError, ValueError) as exc:
        raise FileFormatError(f"bad grid header: {exc}", path=path) from None
    if len(lines) < 4 + height:
        raise FileFormatError(f"expected {height} cell rows, found "
                              f"{len(lines) - 4}", path=path)
    cells = np.full((height, width), UNKNOWN, dtype=np.uint8)
    for row in range(height):
        line = lines[4 + row]
        if len(line) != width:
            raise FileFormatError(f"row has {len(line)} cells, expected {width}",
                                  path=path, line=5 + row)
        for col, ch in enumerate(line):
            if ch not in _CHAR_CELLS:
                raise FileFormatError(f"bad cell character {ch!r}", path=path,
                                      line=5 + row)
            cells[row, col] = _CHAR_CELLS[ch]
    config = GridConfig(cell_size=resolution, origin_x=ox, origin_y=oy,
                        extent_x=width * resolution, extent_y=height * resolution)
    return OccupancyGrid(cells=cells, config=config)
