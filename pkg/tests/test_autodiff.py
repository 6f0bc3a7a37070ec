import numpy as np
import pytest

from deformspace import autodiff as ad
from deformspace.errors import UsageError
from tests.conftest import fd_scalar


def check_grad(build, x, tol=1e-7, eps=1e-6, n_checks=12):
    """Compare analytic gradients of build(Var(x)) against central differences."""
    var = ad.Var(x.copy())
    loss = build(var)
    ad.backward(loss)
    rng = np.random.default_rng(0)
    idx = rng.choice(x.size, size=min(n_checks, x.size), replace=False)
    xx = var.data  # perturb the live buffer the graph builder reads
    fd = fd_scalar(lambda: float(build(ad.Var(xx)).data), xx, idx, eps=eps)
    analytic = var.grad.reshape(-1)[idx]
    assert np.abs(fd - analytic).max() < tol * max(1.0, np.abs(fd).max())


def test_arithmetic_chain(rng):
    x = rng.normal(size=(4, 5))
    w = rng.normal(size=(5, 3))

    def build(v):
        h = ad.relu(ad.matmul(v, w))
        return ad.vsum(ad.mul(h, h))

    check_grad(build, x)


def test_broadcast_add_and_div(rng):
    x = rng.normal(size=(3, 4)) + 3.0
    b = rng.normal(size=(4,))

    def build(v):
        return ad.vsum(ad.div(ad.add(v, b), ad.sqrt(v)))

    check_grad(build, x)


def test_trig_ops(rng):
    x = rng.normal(size=(6,))

    def build(v):
        return ad.vsum(ad.add(ad.sin(v), ad.mul(ad.cos(v), 0.5)))

    check_grad(build, x)


def test_max_routing(rng):
    x = rng.normal(size=(3, 7))

    def build(v):
        return ad.vsum(ad.vmax(v, axis=1))

    var = ad.Var(x.copy())
    loss = build(var)
    ad.backward(loss)
    # gradient is one-hot per row at the argmax
    idx = x.argmax(axis=1)
    expected = np.zeros_like(x)
    expected[np.arange(3), idx] = 1.0
    assert np.array_equal(var.grad, expected)


def test_gather_scatter(rng):
    x = rng.normal(size=(5, 3))
    idx = np.array([0, 0, 4, 2])

    def build(v):
        g = ad.gather_points(v, idx)
        return ad.vsum(ad.mul(g, g))

    check_grad(build, x)


def test_gather_batched(rng):
    x = rng.normal(size=(2, 5, 3))
    idx = np.array([[0, 1, 1], [4, 4, 2]])

    def build(v):
        g = ad.gather_points(v, idx)
        return ad.vsum(ad.mul(g, g))

    check_grad(build, x)


def test_cross_product_grads(rng):
    a = rng.normal(size=(4, 3))
    b = rng.normal(size=(4, 3))

    def build_a(v):
        return ad.vsum(ad.mul(ad.cross(v, b), np.arange(12).reshape(4, 3) * 0.1))

    check_grad(build_a, a)

    def build_b(v):
        return ad.vsum(ad.mul(ad.cross(ad.Var(a), v), np.arange(12).reshape(4, 3) * 0.1))

    check_grad(build_b, b)


def test_concat_slice_reshape_transpose(rng):
    x = rng.normal(size=(2, 3, 4))

    def build(v):
        left = ad.slice_axis(v, 2, 0, 2)
        right = ad.slice_axis(v, 2, 2, 4)
        merged = ad.concat([right, left], axis=2)
        t = ad.transpose(merged, (0, 2, 1))
        flat = ad.reshape(t, (2, 12))
        return ad.vsum(ad.mul(flat, flat))

    check_grad(build, x)


def test_select_masks_gradient(rng):
    x = rng.normal(size=(5,))
    mask = np.array([True, False, True, False, True])

    def build(v):
        return ad.vsum(ad.select(mask, ad.mul(v, 2.0), ad.mul(v, -1.0)))

    var = ad.Var(x)
    ad.backward(build(var))
    assert np.array_equal(var.grad, np.where(mask, 2.0, -1.0))


def test_mean_and_sum_axis(rng):
    x = rng.normal(size=(3, 4, 2))

    def build(v):
        return ad.vsum(ad.vmean(ad.vsum(ad.mul(v, v), axis=2), axis=1))

    check_grad(build, x)


def test_shared_subexpression_accumulates(rng):
    x = rng.normal(size=(3,))

    def build(v):
        h = ad.mul(v, v)
        return ad.add(ad.vsum(h), ad.vsum(ad.mul(h, 2.0)))

    var = ad.Var(x)
    ad.backward(build(var))
    assert np.allclose(var.grad, 6.0 * x)


def test_backward_requires_scalar(rng):
    v = ad.Var(rng.normal(size=(3,)))
    with pytest.raises(UsageError):
        ad.backward(v)


def test_matmul_batched(rng):
    x = rng.normal(size=(2, 4, 3))
    w = rng.normal(size=(3, 5))

    def build(v):
        return ad.vsum(ad.matmul(v, w))

    check_grad(build, x)
    # also the weight side with a batched left operand
    wvar = ad.Var(w.copy())
    loss = ad.vsum(ad.matmul(ad.Var(x), wvar))
    ad.backward(loss)
    expected = np.einsum("bij,bik->jk", x, np.ones((2, 4, 5)))
    assert np.allclose(wvar.grad, expected)
