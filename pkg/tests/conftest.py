import numpy as np
import pytest

from deformspace import datagen, nets
from deformspace.nets import NetWidths

TINY_WIDTHS = NetWidths(enc_point=(8, 8, 16), enc_head=(16,), dict_point=(8, 16), dict_mix=(16,))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_tiny_model(n=16, k=4, variant="standard", seed=3, normalize_rotations=True):
    return nets.init_model(
        n=n, k=k, variant=variant, widths=TINY_WIDTHS, seed=seed,
        normalize_rotations=normalize_rotations,
    )


def random_cloud(rng, n=16, scale=0.4):
    from deformspace.geometry import PointCloud

    return PointCloud(rng.uniform(-scale, scale, size=(n, 3)))


@pytest.fixture
def tiny_model():
    return make_tiny_model()


@pytest.fixture
def table_shape():
    return datagen.gen_table(datagen.default_params("table"), 96, seed=11)


def fd_scalar(f, x: np.ndarray, indices, eps=1e-6) -> np.ndarray:
    """Central finite differences of scalar f at selected flat indices of x."""
    grads = np.zeros(len(indices))
    flat = x.reshape(-1)
    for out_i, i in enumerate(indices):
        old = flat[i]
        flat[i] = old + eps
        up = f()
        flat[i] = old - eps
        down = f()
        flat[i] = old
        grads[out_i] = (up - down) / (2 * eps)
    return grads
