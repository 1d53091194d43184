"""Layout builders: reference structure counts, uniqueness, determinism."""

import math
from collections import Counter

import pytest

from jjshadow.errors import DataError
from jjshadow.geometry import Variant, WaferPoint
from jjshadow.layout import (
    PLANAR_SWEEPS,
    build_35x35,
    build_planar_17q,
    build_tsv_17q,
    load_subarray_sites,
    load_tsv_file,
)


@pytest.fixture(scope="module")
def planar():
    return build_planar_17q()


@pytest.fixture(scope="module")
def tsv_manhattan():
    return build_tsv_17q(Variant.MANHATTAN)


class TestPlanar17Q:
    def test_counts_per_variant(self, planar):
        counts = Counter(s.design.variant for s in planar.structures)
        assert counts[Variant.DOLAN] == 2176
        assert counts[Variant.MANHATTAN] == 2176

    def test_counts_per_die(self, planar):
        per_die = Counter((s.design.variant, s.die_index) for s in planar.structures)
        assert set(per_die.values()) == {272}          # 17 sub-arrays x 16 cells
        assert len(per_die) == 16

    def test_dolan_width_ratio(self, planar):
        for s in planar.structures:
            if s.design.variant is Variant.DOLAN:
                assert s.design.w_bottom_nm == pytest.approx(3 * s.design.w_top_nm)

    def test_manhattan_fixed_top(self, planar):
        tops = {s.design.w_top_nm for s in planar.structures
                if s.design.variant is Variant.MANHATTAN}
        assert tops == {160.0}

    def test_unique_ids_and_cells(self, planar):
        ids = [s.structure_id for s in planar.structures]
        assert len(set(ids)) == len(ids)
        keys = [(s.design.variant, s.die_index, s.subarray_index, s.cell_index)
                for s in planar.structures]
        assert len(set(keys)) == len(keys)

    def test_positions_on_round_wafer(self, planar):
        assert all(s.position.radius_mm() <= 50.0 for s in planar.structures)

    def test_area_consistent_with_design(self, planar):
        for s in planar.structures[::97]:
            if s.design.variant is Variant.MANHATTAN:
                expect = s.design.w_bottom_nm * s.design.w_top_nm / 1e6
            else:
                expect = s.design.w_top_nm * 200.0 / 1e6
            assert s.a_overlap_designed_um2 == pytest.approx(expect)

    def test_subarray_sweep_strictly_monotone(self, planar):
        by_subarray = {}
        for s in planar.structures:
            key = (s.design.variant, s.die_index, s.subarray_index)
            by_subarray.setdefault(key, []).append(
                (s.cell_index, s.a_overlap_designed_um2))
        for cells in by_subarray.values():
            areas = [a for _, a in sorted(cells)]
            assert all(a < b for a, b in zip(areas, areas[1:]))

    def test_rebuild_is_identical(self, planar):
        assert build_planar_17q() == planar

    def test_missing_sweep_group_rejected(self):
        with pytest.raises(DataError):
            build_planar_17q(sweeps={"l": PLANAR_SWEEPS["l"]})

    def test_malformed_sweep_rejected(self):
        bad = dict(PLANAR_SWEEPS)
        bad["m"] = bad["m"][:10]                      # wrong length
        with pytest.raises(DataError):
            build_planar_17q(sweeps=bad)
        bad["m"] = tuple(reversed(PLANAR_SWEEPS["m"]))  # not increasing
        with pytest.raises(DataError):
            build_planar_17q(sweeps=bad)


class TestTsv17Q:
    def test_total_fabricated(self, tsv_manhattan):
        assert len(tsv_manhattan.structures) == 3400   # 8 x 17 x 25

    def test_viable_per_die_is_378(self, tsv_manhattan):
        per_die = Counter(s.die_index for s in tsv_manhattan.viable())
        assert set(per_die.values()) == {378}

    def test_total_viable(self, tsv_manhattan):
        assert len(tsv_manhattan.viable()) == 3024

    def test_empty_via_list_excludes_nothing(self):
        layout = build_tsv_17q(Variant.MANHATTAN, ())
        per_die = Counter(s.die_index for s in layout.viable())
        assert set(per_die.values()) == {425}

    def test_exclusion_reason_recorded(self, tsv_manhattan):
        excluded = [s for s in tsv_manhattan.structures if s.excluded]
        assert excluded and all(s.exclusion_reason == "tsv_overlap" for s in excluded)

    def test_identical_sweep_in_every_subarray(self, tsv_manhattan):
        sweeps = {}
        for s in tsv_manhattan.structures:
            key = (s.die_index, s.subarray_index)
            sweeps.setdefault(key, []).append((s.cell_index, s.design.w_bottom_nm))
        reference = sorted(sweeps[(1, 1), 0] if ((1, 1), 0) in sweeps
                           else next(iter(sweeps.values())))
        for cells in sweeps.values():
            assert sorted(cells) == reference

    def test_dolan_wafer(self):
        layout = build_tsv_17q(Variant.DOLAN)
        assert len(layout.viable()) == 3024
        assert all(s.design.variant is Variant.DOLAN for s in layout.structures)

    def test_positions_on_square_wafer(self, tsv_manhattan):
        for s in tsv_manhattan.structures:
            assert abs(s.position.x_mm) <= 35.0
            assert abs(s.position.y_mm) <= 35.0
            assert s.position.radius_mm() <= 35.0 * math.sqrt(2.0)

    def test_upper_half_only(self, tsv_manhattan):
        assert all(s.position.y_mm > 0 for s in tsv_manhattan.structures)

    def test_via_coverage_near_paper_density(self):
        vias = load_tsv_file()
        per_die_area = sum(math.pi * (d / 2000.0) ** 2 for _, d in vias) / 8.0
        assert per_die_area / 169.0 == pytest.approx(0.017, abs=0.002)


class TestPlanar35x35:
    def test_count(self):
        assert len(build_35x35("nbtin").structures) == 1225

    def test_uniform_design(self):
        layout = build_35x35("tin")
        assert {(s.design.w_bottom_nm, s.design.w_top_nm)
                for s in layout.structures} == {(200.0, 200.0)}
        assert {s.junction_count for s in layout.structures} == {2}

    def test_al_single_junctions_with_omitted_rows(self):
        layout = build_35x35("al", omitted_rows=(33, 34))
        assert {s.junction_count for s in layout.structures} == {1}
        assert len(layout.structures) == 1225
        assert len(layout.viable()) == 1155

    def test_bad_pad_kind(self):
        with pytest.raises(DataError):
            build_35x35("cu")

    def test_bad_omitted_rows(self):
        with pytest.raises(DataError):
            build_35x35("al", omitted_rows=(35,))

    def test_grid_positions(self):
        layout = build_35x35("nbtin")
        xs = sorted({s.position.x_mm for s in layout.structures})
        assert xs[0] == -34.0 and xs[-1] == 34.0 and len(xs) == 35
        assert max(s.position.radius_mm() for s in layout.structures) <= 50.0


def test_subarray_reference_file():
    sites = load_subarray_sites()
    assert len(sites) == 17
    assert Counter(s.group for s in sites) == {"m": 9, "l": 4, "h": 4}
