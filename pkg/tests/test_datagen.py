import numpy as np
import pytest

from deformspace import datagen
from deformspace.errors import InputError

# chi-square critical value, 9 degrees of freedom, 99% confidence
CHI2_9_99 = 21.666


class TestTable:
    def test_default_symmetry_exact(self):
        shape = datagen.gen_table(datagen.default_params("table"), 128, seed=0)
        legs = [p for p, label in zip(shape.parts, shape.labels) if label.startswith("leg")]
        assert len(legs) == 4
        exts = np.stack([p.extents for p in legs])
        assert np.all(exts == exts[0])
        xy = np.stack([np.abs(p.center[:2]) for p in legs])
        assert np.all(xy == xy[0])

    def test_same_seed_bit_identical(self):
        p = datagen.default_params("table")
        a = datagen.gen_table(p, 128, seed=3)
        b = datagen.gen_table(p, 128, seed=3)
        assert np.array_equal(a.cloud.points, b.cloud.points)

    def test_top_flush_with_legs(self):
        rng = np.random.default_rng(0)
        for _ in range(5):
            params = {
                k: float(rng.uniform(lo, hi)) for k, (lo, hi) in datagen.TABLE_RANGES.items()
            }
            shape = datagen.gen_table(params, 64, seed=1)
            top = shape.parts[shape.labels.index("top")]
            underside = top.center[2] - top.extents[2]
            for part, label in zip(shape.parts, shape.labels):
                if label.startswith("leg"):
                    leg_top = part.center[2] + part.extents[2]
                    assert abs(underside - leg_top) < 1e-12

    def test_out_of_range_rejected(self):
        params = datagen.default_params("table")
        params["leg_height"] = 0.9
        with pytest.raises(InputError):
            datagen.gen_table(params, 64, seed=0)

    def test_inside_unit_cube(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            params = {
                k: float(rng.uniform(lo, hi)) for k, (lo, hi) in datagen.TABLE_RANGES.items()
            }
            shape = datagen.gen_table(params, 64, seed=2)
            assert np.abs(shape.cloud.points).max() <= 0.5 + 1e-9


class TestChair:
    def test_part_count_varies_with_arms(self):
        p = datagen.default_params("chair")
        p["with_arms"] = False
        assert len(datagen.gen_chair(p, 128, seed=0).parts) == 6
        p["with_arms"] = True
        assert len(datagen.gen_chair(p, 128, seed=0).parts) == 8

    def test_handle_count_varies(self):
        p = datagen.default_params("chair")
        p["with_arms"] = False
        no_arms = datagen.gen_chair(p, 128, seed=0)
        p["with_arms"] = True
        arms = datagen.gen_chair(p, 128, seed=0)
        assert no_arms.handle_space.m == 36
        assert arms.handle_space.m == 48

    def test_deterministic(self):
        p = datagen.default_params("chair")
        a = datagen.gen_chair(p, 96, seed=4)
        b = datagen.gen_chair(p, 96, seed=4)
        assert np.array_equal(a.cloud.points, b.cloud.points)

    def test_points_inside_their_boxes(self):
        rng = np.random.default_rng(1)
        params = {k: float(rng.uniform(lo, hi)) for k, (lo, hi) in datagen.CHAIR_RANGES.items()}
        params["with_arms"] = True
        shape = datagen.gen_chair(params, 256, seed=3)
        for part in shape.parts:
            local = (shape.cloud.points[part.point_ids] - part.center) @ part.axes.T
            assert np.all(np.abs(local) <= part.extents + 1e-9)


class TestHinge:
    def test_flat_carton_at_zero(self):
        params = {f"angle_{i}": 0.0 for i in range(4)}
        shape = datagen.gen_hinge(params, 128, seed=0)
        flaps = [p for p, l in zip(shape.parts, shape.labels) if l.startswith("flap")]
        hinge_z = datagen.HINGE_BASE_Z + datagen.HINGE_BASE["height"]
        for flap in flaps:
            assert np.abs(flap.axes - np.eye(3)).max() < 1e-12
            pts = shape.cloud.points[flap.point_ids]
            assert np.all(pts[:, 2] >= hinge_z - 1e-9)
            assert np.all(pts[:, 2] <= hinge_z + datagen.HINGE_BASE["flap_thickness"] + 1e-9)

    def test_perpendicular_at_right_angle(self):
        params = {f"angle_{i}": 0.0 for i in range(4)}
        params["angle_0"] = np.pi / 2
        shape = datagen.gen_hinge(params, 128, seed=0)
        flap = shape.parts[shape.labels.index("flap_xp")]
        # local x axis rotated into the vertical
        assert abs(abs(flap.axes[0] @ np.array([0, 0, 1.0])) - 1.0) < 1e-10

    def test_flap_points_travel_on_circles(self):
        base = {f"angle_{i}": 0.2 for i in range(4)}
        other = dict(base)
        other["angle_0"] = 1.3
        a = datagen.gen_hinge(base, 256, seed=5)
        b = datagen.gen_hinge(other, 256, seed=5)
        flap_idx = a.labels.index("flap_xp")
        ids = a.parts[flap_idx].point_ids
        bw = datagen.HINGE_BASE["width"]
        hinge_z = datagen.HINGE_BASE_Z + datagen.HINGE_BASE["height"]
        # distance to the hinge line (x = bw/2, z = hinge_z) is preserved
        for pts in (a.cloud.points[ids], b.cloud.points[ids]):
            r = np.hypot(pts[:, 0] - bw / 2, pts[:, 2] - hinge_z)
            if not hasattr(TestHinge, "_r_ref"):
                TestHinge._r_ref = r
        assert np.abs(
            np.hypot(a.cloud.points[ids, 0] - bw / 2, a.cloud.points[ids, 2] - hinge_z)
            - np.hypot(b.cloud.points[ids, 0] - bw / 2, b.cloud.points[ids, 2] - hinge_z)
        ).max() < 1e-10

    def test_angle_out_of_range(self):
        params = {f"angle_{i}": 0.0 for i in range(4)}
        params["angle_2"] = 2.0
        with pytest.raises(InputError):
            datagen.gen_hinge(params, 64, seed=0)


class TestDataset:
    def test_split_sizes_200(self):
        splits = datagen.split_indices(200)
        assert splits.count("train") == 170
        assert splits.count("val") == 10
        assert splits.count("test") == 20

    def test_splits_disjoint_and_deterministic(self):
        a = datagen.split_indices(64)
        b = datagen.split_indices(64)
        assert a == b
        assert len(a) == 64

    def test_parameter_histograms_uniform(self):
        shapes, _ = datagen.gen_dataset("table", 2000, 8, seed=77)
        for key, (lo, hi) in datagen.TABLE_RANGES.items():
            values = np.array([s.params[key] for s in shapes])
            counts, _ = np.histogram(values, bins=10, range=(lo, hi))
            expected = len(values) / 10
            chi2 = float(np.square(counts - expected).sum() / expected)
            assert chi2 < CHI2_9_99, f"{key}: chi2={chi2:.1f}"

    def test_correspondence_by_part_id(self):
        shapes, _ = datagen.gen_dataset("table", 6, 128, seed=9)
        ref = shapes[0].part_ids
        for s in shapes[1:]:
            assert np.array_equal(s.part_ids, ref)

    def test_chair_correspondence_within_structure(self):
        shapes, _ = datagen.gen_dataset("chair", 24, 128, seed=9)
        with_arms = [s for s in shapes if s.params["with_arms"]]
        without = [s for s in shapes if not s.params["with_arms"]]
        assert with_arms and without
        for group in (with_arms, without):
            ref = group[0].part_ids
            for s in group[1:]:
                assert np.array_equal(s.part_ids, ref)

    def test_correspondences_are_affine_consistent(self):
        shapes, _ = datagen.gen_dataset("table", 4, 96, seed=3)
        # same face coordinates: each part's points map through the box affine
        for s in shapes:
            for part in s.parts:
                local = (s.cloud.points[part.point_ids] - part.center) @ part.axes.T
                on_face = np.isclose(np.abs(local), part.extents, atol=1e-9).any(axis=1)
                assert np.all(on_face)

    def test_roundtrip_save_load(self, tmp_path):
        shapes, manifest = datagen.gen_dataset("chair", 8, 64, seed=21)
        datagen.save_dataset(tmp_path, shapes, manifest)
        loaded, manifest2 = datagen.load_dataset(tmp_path)
        assert manifest2["count"] == 8
        for a, b in zip(shapes, loaded):
            assert a.id == b.id and a.split == b.split
            assert np.array_equal(a.cloud.points, b.cloud.points)
            assert np.abs(a.handle_space.basis - b.handle_space.basis).max() == 0.0
            assert np.array_equal(a.handle_space.defaults, b.handle_space.defaults)

    def test_count_too_small(self):
        with pytest.raises(InputError):
            datagen.gen_dataset("table", 1, 32, seed=0)

    def test_handle_spaces_valid_for_all_families(self):
        for family in datagen.FAMILIES:
            shapes, _ = datagen.gen_dataset(family, 3, 64, seed=13)
            for s in shapes:
                rest = s.handle_space.rest_cloud().points
                assert np.abs(rest - s.cloud.points).max() < 1e-10
