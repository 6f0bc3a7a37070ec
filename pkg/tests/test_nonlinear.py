import numpy as np
import pytest

from deformspace import nets, nonlinear
from deformspace.errors import ShapeError, UsageError
from deformspace.geometry import PointCloud
from deformspace.nonlinear import CircularDictionary, circular_offset, deform_circular
from deformspace.spaces import LatentDelta
from tests.conftest import make_tiny_model, random_cloud


def taylor_exp_so3(w, terms=20):
    """Matrix exponential of [w]x by truncated series; converges for |w| < 1."""
    kx = np.array([[0, -w[2], w[1]], [w[2], 0, -w[0]], [-w[1], w[0], 0.0]])
    out = np.eye(3)
    acc = np.eye(3)
    for i in range(1, terms):
        acc = acc @ kx / i
        out = out + acc
    return out


class TestCircularOffset:
    def test_zero_angle(self, rng):
        off = circular_offset(rng.normal(size=3), rng.normal(size=3), 0.0, rng.normal(size=3))
        assert np.all(off == 0.0)

    def test_quarter_turn(self):
        off = circular_offset([0.0, 0.0, 1.0], [0.0, 0.0, 0.0], np.pi / 2, [1.0, 0.0, 0.0])
        assert np.abs(off - [-1.0, 1.0, 0.0]).max() < 1e-12

    @pytest.mark.parametrize("seed", range(6))
    def test_matches_taylor_series(self, seed):
        r = np.random.default_rng(seed)
        rv = r.normal(size=3)
        rv /= max(1.0, 1.2 * np.linalg.norm(rv))  # keep |t rv| < 1
        t = float(r.uniform(-0.9, 0.9))
        center, p = r.normal(size=3), r.normal(size=3)
        want = (taylor_exp_so3(t * rv) - np.eye(3)) @ (p - center)
        got = circular_offset(rv, center, t, p)
        assert np.abs(got - want).max() < 1e-8

    def test_radius_preserved(self, rng):
        rv, center, p = rng.normal(size=3), rng.normal(size=3), rng.normal(size=3)
        off = circular_offset(rv, center, 0.7, p)
        before = np.linalg.norm(p - center)
        after = np.linalg.norm(p + off - center)
        assert abs(before - after) < 1e-10


class TestDeformCircular:
    def _dict(self, rng, n, k):
        rv = rng.normal(size=(n, k, 3))
        rv /= np.linalg.norm(rv, axis=2, keepdims=True)
        return CircularDictionary(rv, rng.normal(size=(n, k, 3)) * 0.2, normalized=True)

    def test_free_action(self, rng):
        x = random_cloud(rng, 12)
        cd = self._dict(rng, 12, 3)
        out = deform_circular(x, cd, LatentDelta(np.zeros(3)))
        assert np.array_equal(out.points, x.points)

    def test_rigid_rotation_single_hinge(self, rng):
        x = random_cloud(rng, 20)
        axis = np.array([0.0, 0.0, 1.0])
        hinge = np.array([0.1, -0.2, 0.0])
        rv = np.broadcast_to(axis, (20, 1, 3)).copy()
        cv = np.broadcast_to(hinge, (20, 1, 3)).copy()
        cd = CircularDictionary(rv, cv, normalized=True)
        angle = 0.8
        out = deform_circular(x, cd, LatentDelta(np.array([angle])))
        rot = nonlinear.rotation_matrix(axis * angle)
        want = (x.points - hinge) @ rot.T + hinge
        assert np.abs(out.points - want).max() < 1e-10

    def test_matches_pointwise_offsets(self, rng):
        x = random_cloud(rng, 9)
        cd = self._dict(rng, 9, 4)
        v = rng.normal(size=4) * 0.5
        out = deform_circular(x, cd, LatentDelta(v))
        for i in [0, 4, 8]:
            manual = x.points[i].copy()
            for j in range(4):
                manual += circular_offset(cd.rot_vectors[i, j], cd.centers[i, j], v[j], x.points[i])
            assert np.abs(out.points[i] - manual).max() < 1e-12

    def test_dimension_checks(self, rng):
        cd = self._dict(rng, 9, 4)
        with pytest.raises(ShapeError):
            deform_circular(random_cloud(rng, 8), cd, LatentDelta(np.zeros(4)))
        with pytest.raises(ShapeError):
            deform_circular(random_cloud(rng, 9), cd, LatentDelta(np.zeros(3)))


class TestPredictCircular:
    def test_normalized_rotation_vectors(self, rng):
        model = make_tiny_model(variant="circular")
        cd = nets.predict_circular(model, random_cloud(rng, 16))
        norms = np.linalg.norm(cd.rot_vectors, axis=2)
        assert np.abs(norms - 1.0).max() < 1e-6
        assert cd.normalized

    def test_unnormalized_variant(self, rng):
        model = make_tiny_model(variant="circular", normalize_rotations=False)
        cd = nets.predict_circular(model, random_cloud(rng, 16))
        norms = np.linalg.norm(cd.rot_vectors, axis=2)
        assert not np.allclose(norms, 1.0)

    def test_duplicate_points_identical_predictions(self, rng):
        model = make_tiny_model(variant="circular")
        pts = rng.uniform(-0.4, 0.4, size=(16, 3))
        pts[5] = pts[2]
        cd = nets.predict_circular(model, PointCloud(pts))
        assert np.array_equal(cd.rot_vectors[2], cd.rot_vectors[5])
        assert np.array_equal(cd.centers[2], cd.centers[5])

    def test_assembly_matches_manual_bookkeeping(self, rng):
        from tests.test_nets import straight_line_dictionary_raw

        model = make_tiny_model(variant="circular", normalize_rotations=False)
        pc = random_cloud(rng, 16)
        cd = nets.predict_circular(model, pc)
        raw = straight_line_dictionary_raw(model, pc.points)  # (n, 6k)
        k = model.k
        for i in range(16):
            per = raw[i].reshape(k, 6)
            assert np.abs(cd.rot_vectors[i] - per[:, 0:3]).max() < 1e-6
            assert np.abs(cd.centers[i] - per[:, 3:6]).max() < 1e-6

    def test_wrong_variant(self, rng, tiny_model):
        with pytest.raises(UsageError):
            nets.predict_circular(tiny_model, random_cloud(rng, 16))


class TestElementAnimation:
    def test_frames_and_identity_middle(self, rng):
        x = random_cloud(rng, 10)
        rv = rng.normal(size=(10, 2, 3))
        rv /= np.linalg.norm(rv, axis=2, keepdims=True)
        cd = CircularDictionary(rv, np.zeros((10, 2, 3)), normalized=True)
        frames = nonlinear.element_animation(x, cd, element=1, max_angle=0.5, steps=5)
        assert len(frames) == 5
        assert np.array_equal(frames[2].points, x.points)  # t = 0 in the middle
