"""Wafer layouts of junction test structures.

Three families are supported: a planar 100-mm wafer carrying both junction
variants in two 2x4 die arrays with 17 4x4 sub-arrays per die, a cleaved
70x70 mm via-integrated wafer with one 2x4 die array of 17 5x5 sub-arrays
(structures overlapping a via are flagged excluded), and planar 35x35
uniform-design grids.  Sub-array placement, group assignment and the
reference via positions are data files, not code; bundled defaults live in
jjshadow/data/.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

from .errors import DataError
from .geometry import (
    DOLAN_OVERLAP_LENGTH_NM,
    SQUARE_HALF_MM,
    WAFER_RADIUS_MM,
    JunctionDesign,
    Variant,
    WaferPoint,
)

DIE_PITCH_MM = 13.0
SUBARRAY_CELL_PITCH_MM = 0.45
STRUCTURE_HALF_MM = 0.03          # 60 um square probing footprint
MANHATTAN_FIXED_TOP_NM = 160.0
UNIFORM_WIDTH_NM = 200.0

# Variable-electrode width sweeps (nm).  The exact values are free layout
# parameters chosen so pair conductances land in the measurable few-tens to
# few-hundreds uS window under the default synthetic conductivity; override
# with a sweep file for other regimes.
PLANAR_SWEEPS = {
    "l": tuple(150.0 + 12.0 * k for k in range(16)),
    "m": tuple(360.0 + 12.0 * k for k in range(16)),
    "h": tuple(570.0 + 12.0 * k for k in range(16)),
}
TSV_SWEEP = tuple(150.0 + 25.0 * k for k in range(25))


class LayoutKind(str, Enum):
    PLANAR_17Q = "planar17q"
    TSV_17Q_DOLAN = "tsv17q-dolan"
    TSV_17Q_MANHATTAN = "tsv17q-manhattan"
    PLANAR_35X35_NBTIN = "planar35x35-nbtin"
    PLANAR_35X35_TIN = "planar35x35-tin"
    PLANAR_35X35_AL = "planar35x35-al"
    CUSTOM = "custom"           # loaded from a user file, not builder-validated


class WaferShape(str, Enum):
    ROUND_100MM = "round100mm"
    SQUARE_70MM = "square70mm"


@dataclass(frozen=True)
class TestStructureSpec:
    """One positioned two-junction (or single-junction) test pad."""

    structure_id: str
    die_index: tuple[int, int]
    subarray_index: int
    cell_index: tuple[int, int]
    position: WaferPoint
    design: JunctionDesign
    a_overlap_designed_um2: float
    group: str
    excluded: bool = False
    junction_count: int = 2
    exclusion_reason: str = ""


@dataclass(frozen=True)
class WaferLayout:
    kind: LayoutKind
    structures: tuple[TestStructureSpec, ...]
    die_pitch_mm: float = DIE_PITCH_MM
    wafer_shape: WaferShape = WaferShape.ROUND_100MM

    def viable(self) -> tuple[TestStructureSpec, ...]:
        return tuple(s for s in self.structures if not s.excluded)


@dataclass(frozen=True)
class SubarraySite:
    """Placement of one sub-array inside a die: offset from die centre."""

    index: int
    dx_mm: float
    dy_mm: float
    group: str


def _data_path(name: str):
    return resources.files("jjshadow.data").joinpath(name)


def load_subarray_sites(path: str | Path | None = None) -> tuple[SubarraySite, ...]:
    """Read sub-array placements (sub_index,x_mm,y_mm,group) for one die."""
    src = Path(path) if path is not None else _data_path("surface17_subarrays.csv")
    try:
        text = src.read_text()
    except OSError as exc:
        raise DataError(f"cannot read sub-array file {src}: {exc}") from exc
    sites = []
    for row in csv.DictReader(text.splitlines()):
        try:
            sites.append(SubarraySite(int(row["sub_index"]), float(row["x_mm"]),
                                      float(row["y_mm"]), row["group"].strip()))
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"malformed sub-array row {row!r}") from exc
    if len(sites) != 17 or sorted(s.index for s in sites) != list(range(17)):
        raise DataError(f"sub-array file must define indices 0..16, got {len(sites)} rows")
    return tuple(sorted(sites, key=lambda s: s.index))


def load_tsv_file(path: str | Path | None = None) -> tuple[tuple[WaferPoint, float], ...]:
    """Read via positions (x_mm,y_mm,diameter_um) in wafer coordinates."""
    src = Path(path) if path is not None else _data_path("tsv_vias.csv")
    try:
        text = src.read_text()
    except OSError as exc:
        raise DataError(f"cannot read TSV file {src}: {exc}") from exc
    vias = []
    for row in csv.DictReader(text.splitlines()):
        try:
            vias.append((WaferPoint(float(row["x_mm"]), float(row["y_mm"])),
                         float(row["diameter_um"])))
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"malformed via row {row!r}") from exc
    return tuple(vias)


def load_sweep_file(path: str | Path) -> dict[str, tuple[float, ...]]:
    """Read width sweeps (group,w_nm), ordered within each group."""
    sweeps: dict[str, list[float]] = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise DataError(f"cannot read sweep file {path}: {exc}") from exc
    for row in csv.DictReader(text.splitlines()):
        try:
            sweeps.setdefault(row["group"].strip(), []).append(float(row["w_nm"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"malformed sweep row {row!r}") from exc
    if not sweeps:
        raise DataError(f"sweep file {path} is empty")
    return {g: tuple(v) for g, v in sweeps.items()}


def _check_on_wafer(p: WaferPoint, shape: WaferShape, who: str) -> None:
    if shape is WaferShape.ROUND_100MM:
        if p.radius_mm() > WAFER_RADIUS_MM:
            raise DataError(f"{who} at ({p.x_mm}, {p.y_mm}) mm is off the round wafer")
    else:
        if abs(p.x_mm) > SQUARE_HALF_MM or abs(p.y_mm) > SQUARE_HALF_MM:
            raise DataError(f"{who} at ({p.x_mm}, {p.y_mm}) mm is off the square wafer")


def _die_centre(ix: int, iy: int) -> tuple[float, float]:
    # Signed die indices skip 0 so the wafer centre falls between dies.
    return ((ix - math.copysign(0.5, ix)) * DIE_PITCH_MM,
            (iy - math.copysign(0.5, iy)) * DIE_PITCH_MM)


def _design_for(variant: Variant, w_variable_nm: float) -> JunctionDesign:
    if variant is Variant.MANHATTAN:
        return JunctionDesign(variant, w_bottom_nm=w_variable_nm,
                              w_top_nm=MANHATTAN_FIXED_TOP_NM)
    return JunctionDesign(variant, w_bottom_nm=3.0 * w_variable_nm,
                          w_top_nm=w_variable_nm)


def _cell_structures(variant: Variant, die: tuple[int, int],
                     site: SubarraySite, n: int, sweep: Sequence[float],
                     shape: WaferShape) -> list[TestStructureSpec]:
    if len(sweep) != n * n:
        raise DataError(f"sweep for group {site.group!r} has {len(sweep)} values, need {n * n}")
    if any(b >= a for a, b in zip(sweep[1:], sweep)):
        raise DataError(f"sweep for group {site.group!r} is not strictly increasing")
    cx, cy = _die_centre(*die)
    code = "M" if variant is Variant.MANHATTAN else "D"
    half = (n - 1) / 2.0
    out = []
    for row in range(n):
        for col in range(n):
            cell = row * n + col
            pos = WaferPoint(cx + site.dx_mm + (col - half) * SUBARRAY_CELL_PITCH_MM,
                             cy + site.dy_mm + (row - half) * SUBARRAY_CELL_PITCH_MM)
            _check_on_wafer(pos, shape, "test structure")
            design = _design_for(variant, sweep[cell])
            out.append(TestStructureSpec(
                structure_id=f"{code}{die[0]:+d}{die[1]:+d}s{site.index:02d}c{cell:02d}",
                die_index=die,
                subarray_index=site.index,
                cell_index=(row, col),
                position=pos,
                design=design,
                a_overlap_designed_um2=design.designed_area_um2(),
                group=site.group,
            ))
    return out


def build_planar_17q(sweeps: dict[str, Sequence[float]] | None = None,
                     sites: Sequence[SubarraySite] | None = None) -> WaferLayout:
    """Planar 100-mm wafer: 8 Dolan dies (top half) + 8 Manhattan dies.

    Each die holds 17 4x4 sub-arrays; the sub-array's group selects which
    of the l/m/h width sweeps its 16 cells step through.
    """
    sweeps = dict(PLANAR_SWEEPS) if sweeps is None else dict(sweeps)
    sites = load_subarray_sites() if sites is None else tuple(sites)
    missing = {s.group for s in sites} - set(sweeps)
    if missing:
        raise DataError(f"sweep table lacks groups {sorted(missing)}")
    structures: list[TestStructureSpec] = []
    for variant, die_ys in ((Variant.DOLAN, (1, 2)), (Variant.MANHATTAN, (-1, -2))):
        for iy in die_ys:
            for ix in (-2, -1, 1, 2):
                for site in sites:
                    structures.extend(_cell_structures(
                        variant, (ix, iy), site, 4,
                        sweeps[site.group], WaferShape.ROUND_100MM))
    return WaferLayout(LayoutKind.PLANAR_17Q, tuple(structures))


def _via_overlaps(pos: WaferPoint, via: WaferPoint, diameter_um: float) -> bool:
    # Circle vs the structure's square footprint: clamp the centre to the box.
    r_mm = diameter_um / 2000.0
    nx = min(max(via.x_mm, pos.x_mm - STRUCTURE_HALF_MM), pos.x_mm + STRUCTURE_HALF_MM)
    ny = min(max(via.y_mm, pos.y_mm - STRUCTURE_HALF_MM), pos.y_mm + STRUCTURE_HALF_MM)
    return math.hypot(via.x_mm - nx, via.y_mm - ny) <= r_mm


def build_tsv_17q(variant: Variant,
                  tsv_positions: Iterable[tuple[WaferPoint, float]] | None = None,
                  sweep: Sequence[float] | None = None,
                  sites: Sequence[SubarraySite] | None = None) -> WaferLayout:
    """Via-integrated 70x70 mm wafer: one 2x4 die array, 17 5x5 sub-arrays.

    All sub-arrays step through the same 25-value sweep.  Structures whose
    footprint intersects a via circle are fabricated but flagged excluded.
    """
    if tsv_positions is None:
        tsv_positions = load_tsv_file()
    vias = tuple(tsv_positions)         # empty is valid: nothing gets excluded
    sweep = TSV_SWEEP if sweep is None else tuple(sweep)
    sites = load_subarray_sites() if sites is None else tuple(sites)
    structures: list[TestStructureSpec] = []
    for iy in (1, 2):
        for ix in (-2, -1, 1, 2):
            for site in sites:
                cells = _cell_structures(
                    variant, (ix, iy), site, 5,
                    sweep, WaferShape.SQUARE_70MM)
                for s in cells:
                    hit = any(_via_overlaps(s.position, v, d) for v, d in vias)
                    structures.append(
                        replace(s, excluded=True, exclusion_reason="tsv_overlap")
                        if hit else s)
    kind = (LayoutKind.TSV_17Q_MANHATTAN if variant is Variant.MANHATTAN
            else LayoutKind.TSV_17Q_DOLAN)
    return WaferLayout(kind, tuple(structures), wafer_shape=WaferShape.SQUARE_70MM)


_PAD_CODE = {"nbtin": "N", "tin": "T", "al": "A"}
_GRID_35 = 35
_PITCH_35_MM = 2.0


def build_35x35(pad_kind: str, omitted_rows: Sequence[int] = ()) -> WaferLayout:
    """Planar 35x35 grid of identical 200x200 nm crossed junctions.

    pad_kind selects the probing-pad process ('nbtin', 'tin', 'al'); the
    all-aluminium wafer carries single junctions instead of pairs.  Rows in
    omitted_rows are flagged excluded (skipped during data acquisition).
    """
    pad_kind = pad_kind.lower()
    if pad_kind not in _PAD_CODE:
        raise DataError(f"pad kind must be one of {sorted(_PAD_CODE)}, got {pad_kind!r}")
    omitted = set(omitted_rows)
    if not omitted.issubset(range(_GRID_35)):
        raise DataError(f"omitted rows out of range 0..34: {sorted(omitted)}")
    design = JunctionDesign(Variant.MANHATTAN, UNIFORM_WIDTH_NM, UNIFORM_WIDTH_NM)
    count = 1 if pad_kind == "al" else 2
    code = _PAD_CODE[pad_kind]
    half = (_GRID_35 - 1) / 2.0
    structures = []
    for row in range(_GRID_35):
        for col in range(_GRID_35):
            pos = WaferPoint((col - half) * _PITCH_35_MM, (row - half) * _PITCH_35_MM)
            _check_on_wafer(pos, WaferShape.ROUND_100MM, "test structure")
            structures.append(TestStructureSpec(
                structure_id=f"{code}r{row:02d}c{col:02d}",
                die_index=(0, 0),
                subarray_index=0,
                cell_index=(row, col),
                position=pos,
                design=design,
                a_overlap_designed_um2=design.designed_area_um2(),
                group="uniform",
                excluded=row in omitted,
                junction_count=count,
                exclusion_reason="omitted_row" if row in omitted else "",
            ))
    kind = LayoutKind(f"planar35x35-{pad_kind}")
    return WaferLayout(kind, tuple(structures))
