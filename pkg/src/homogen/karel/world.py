"""Karel grid worlds: bounded rectangular grids holding walls, marker piles
and the agent's pose, plus JSON round-tripping and grid-level features.

Cells are (i, j) with i the column (0..width-1, growing east) and j the row
(0..height-1, growing south). Marker piles hold 1..9 markers; a cell never
holds both a wall and markers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

MIN_SIDE = 2
MAX_SIDE = 16
MAX_MARKERS = 9

DIRECTIONS = ("N", "E", "S", "W")
DIR_DELTA = {"N": (0, -1), "E": (1, 0), "S": (0, 1), "W": (-1, 0)}
LEFT_OF = {"N": "W", "W": "S", "S": "E", "E": "N"}
RIGHT_OF = {"N": "E", "E": "S", "S": "W", "W": "N"}

Cell = tuple[int, int]


@dataclass(frozen=True)
class KarelGrid:
    width: int
    height: int
    walls: frozenset[Cell] = frozenset()
    markers: dict[Cell, int] = field(default_factory=dict)
    karel_pos: Cell = (0, 0)
    karel_dir: str = "E"

    def __post_init__(self) -> None:
        object.__setattr__(self, "walls", frozenset(tuple(c) for c in self.walls))
        object.__setattr__(
            self, "markers", {tuple(c): n for c, n in dict(self.markers).items()}
        )
        object.__setattr__(self, "karel_pos", tuple(self.karel_pos))
        if not (MIN_SIDE <= self.width <= MAX_SIDE and MIN_SIDE <= self.height <= MAX_SIDE):
            raise ValueError(f"grid sides must be in {MIN_SIDE}..{MAX_SIDE}")
        for cell in self.walls:
            if not self.in_bounds(cell):
                raise ValueError(f"wall {cell} is out of bounds")
        for cell, count in self.markers.items():
            if not self.in_bounds(cell):
                raise ValueError(f"markers at {cell} are out of bounds")
            if not (isinstance(count, int) and 1 <= count <= MAX_MARKERS):
                raise ValueError(f"marker count at {cell} must be in 1..{MAX_MARKERS}")
            if cell in self.walls:
                raise ValueError(f"cell {cell} holds both a wall and markers")
        if not self.in_bounds(self.karel_pos):
            raise ValueError(f"agent position {self.karel_pos} is out of bounds")
        if self.karel_pos in self.walls:
            raise ValueError(f"agent stands on a wall at {self.karel_pos}")
        if self.karel_dir not in DIRECTIONS:
            raise ValueError(f"unknown direction {self.karel_dir!r}")

    def in_bounds(self, cell: Cell) -> bool:
        i, j = cell
        return 0 <= i < self.width and 0 <= j < self.height

    def marker_count(self, cell: Cell) -> int:
        return self.markers.get(cell, 0)


def grid_to_json(grid: KarelGrid) -> dict[str, Any]:
    """JSON-ready dict with a fixed key order and sorted cell lists."""
    return {
        "w": grid.width,
        "h": grid.height,
        "walls": [list(c) for c in sorted(grid.walls)],
        "markers": [[i, j, n] for (i, j), n in sorted(grid.markers.items())],
        "karel": {"pos": list(grid.karel_pos), "dir": grid.karel_dir},
    }


def grid_from_json(obj: dict[str, Any]) -> KarelGrid:
    try:
        return KarelGrid(
            width=obj["w"],
            height=obj["h"],
            walls=frozenset((i, j) for i, j in obj["walls"]),
            markers={(i, j): n for i, j, n in obj["markers"]},
            karel_pos=tuple(obj["karel"]["pos"]),
            karel_dir=obj["karel"]["dir"],
        )
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed grid object: {exc}") from None


def grid_salients(grid: KarelGrid) -> dict[str, Any]:
    """Width, height, marker/wall cell ratios, and the marker pile histogram.

    Ratios divide by the full cell count; the histogram maps pile size to
    how many cells hold exactly that many markers (absent sizes omitted).
    """
    cells = grid.width * grid.height
    histogram: dict[int, int] = {}
    for count in grid.markers.values():
        histogram[count] = histogram.get(count, 0) + 1
    return {
        "width": grid.width,
        "height": grid.height,
        "marker_ratio": len(grid.markers) / cells,
        "wall_ratio": len(grid.walls) / cells,
        "marker_count_histogram": dict(sorted(histogram.items())),
    }
