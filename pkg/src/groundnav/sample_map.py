"""Built-in 80-area office floor plan used by the demos and benchmarks.

An 8-row x 10-column tiling of 5x4 rectangles inside a 50x32 boundary.
Most tiles are general working areas; overrides place meeting rooms,
phone rooms, exits, printers, and named areas so the stock phrases
("room 124", "the meeting room near the north exit", "the printer to the
west of the golden gate meeting room") have unambiguous answers.
"""

from __future__ import annotations

import json

from .mapmodel import Area, AreaMap

ROWS, COLS = 8, 10
CELL_W, CELL_H = 5.0, 4.0
RESOLUTION = 0.5  # 100 x 64 raster cells

# index = row * COLS + col, row 0 at the south edge
_OVERRIDES = {
    # north exit, unique exit on the north edge; "124" sits right below it
    75: ("exit", None, "north"),
    2: ("exit", None, "south"),
    # meeting rooms
    65: ("room", "meeting", None),       # id "124"
    37: ("room", "meeting", "golden gate"),
    12: ("room", "meeting", "yosemite"),
    50: ("room", "meeting", "tahoe"),
    78: ("room", "meeting", "shasta"),
    # phone rooms
    21: ("room", "phone", None),
    44: ("room", "phone", None),
    70: ("room", "phone", "denali"),
    # printers; only index 33 lies west of the golden gate meeting room
    33: ("printer", None, None),
    58: ("printer", None, None),
    9: ("printer", None, None),
    # designated areas
    30: ("area", "entertainment", None),
    55: ("area", "working", "hardware"),
    18: ("area", "working", "sequoia"),
}

# the meeting room below the north exit keeps the classic id "124"
_ID_SWAPS = {65: "124", 24: "165"}


def build_office_map() -> AreaMap:
    areas = []
    for idx in range(ROWS * COLS):
        row, col = divmod(idx, COLS)
        x0, y0 = col * CELL_W, row * CELL_H
        polygon = [
            (x0, y0),
            (x0 + CELL_W, y0),
            (x0 + CELL_W, y0 + CELL_H),
            (x0, y0 + CELL_H),
        ]
        category, subcategory, name = _OVERRIDES.get(idx, ("area", "working", None))
        areas.append(
            Area.create(
                _ID_SWAPS.get(idx, str(100 + idx)),
                category,
                polygon,
                subcategory=subcategory,
                name=name,
            )
        )
    boundary = [(0, 0), (COLS * CELL_W, 0), (COLS * CELL_W, ROWS * CELL_H), (0, ROWS * CELL_H)]
    return AreaMap(boundary, areas, RESOLUTION)


def write_office_map(path):
    with open(path, "w") as f:
        json.dump(build_office_map().to_document(), f, indent=1)


if __name__ == "__main__":
    import sys

    write_office_map(sys.argv[1] if len(sys.argv) > 1 else "office80.json")
