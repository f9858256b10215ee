import numpy as np
import pytest

from mfpred import nn
from mfpred.nn import Tensor

from conftest import assert_grads_close, numeric_grad


def check_op(build, arrays, rel=1e-4):
    """FD-check every input array of a tensor expression.

    Tensor shares the input buffer, so perturbing the array in place and
    re-running the expression yields the numeric derivative.
    """
    tensors = [Tensor(a, requires_grad=True) for a in arrays]
    out = build(*tensors)
    out.backward()
    grads = [t.grad.copy() for t in tensors]
    for a, g in zip(arrays, grads):
        numeric = numeric_grad(lambda: float(build(*tensors).data), a)
        assert_grads_close(g, numeric, rel=rel)


BINARY_OPS = [
    lambda a, b: nn.tsum(a + b),
    lambda a, b: nn.tsum(a - b),
    lambda a, b: nn.tsum(a * b),
    lambda a, b: nn.tsum(a / b),
]


@pytest.mark.parametrize("op_idx", range(len(BINARY_OPS)))
@pytest.mark.parametrize("seed", range(5))
def test_binary_ops_match_finite_differences(op_idx, seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(3, 4))
    b = rng.normal(size=(3, 4)) + 2.0  # keep divisors away from zero
    check_op(BINARY_OPS[op_idx], [a, b])


@pytest.mark.parametrize("seed", range(5))
def test_broadcast_grads(seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(3, 4))
    b = rng.normal(size=(4,)) + 2.0
    check_op(lambda x, y: nn.tsum(x * y + y), [a, b])
    check_op(lambda x, y: nn.tsum(x / y), [a, b])


@pytest.mark.parametrize("seed", range(5))
def test_matmul_grads(seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(3, 4))
    b = rng.normal(size=(4, 2))
    check_op(lambda x, y: nn.tsum(x @ y), [a, b])


def test_matmul_shape_mismatch_raises():
    with pytest.raises(ValueError, match="mismatch"):
        nn.matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((2, 3))))


@pytest.mark.parametrize("seed", range(5))
def test_unary_ops_match_finite_differences(seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(2, 5))
    for op in (nn.tanh, nn.sigmoid, lambda t: nn.leaky_relu(t, 0.1)):
        check_op(lambda x, op=op: nn.tsum(op(x)), [a])
    check_op(lambda x: nn.tsum(nn.tensor.exp(x)), [a])
    check_op(lambda x: nn.tsum(nn.tensor.log(x)), [np.abs(a) + 0.5])


@pytest.mark.parametrize("seed", range(3))
def test_structural_ops_grads(seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(3, 4))
    b = rng.normal(size=(3, 2))
    check_op(lambda x, y: nn.tsum(nn.concat([x, y], axis=1) * 1.5), [a, b])
    check_op(lambda x: nn.tsum(nn.narrow(x, 1, 1, 2) * 3.0), [a])
    check_op(lambda x: nn.tsum(nn.reshape(x, (4, 3)) * 2.0), [a])
    check_op(lambda x: nn.tsum(nn.cumsum(x, axis=1) * 0.5), [a])
    check_op(lambda x: nn.tsum(nn.repeat_interleave(x, 3, axis=0) * 0.7), [a])
    check_op(lambda x: nn.tsum(nn.gather_rows(x, np.array([0, 2, 2, 1]))), [a])
    check_op(lambda x: nn.tmean(x), [a])
    check_op(lambda x: nn.tsum(nn.tsum(x, axis=0)), [a])


@pytest.mark.parametrize("seed", range(3))
def test_grid_scatter_grads(seed):
    rng = np.random.default_rng(seed)
    enc = rng.normal(size=(4, 3))
    batch = np.array([0, 0, 1, 1])
    rows = np.array([1, 2, 0, 4])
    cols = np.array([0, 2, 1, 1])
    check_op(lambda e: nn.tsum(nn.grid_scatter(e, batch, rows, cols, (2, 3, 5, 3)) * 2.0), [enc])


def test_no_grad_suppresses_graph():
    a = Tensor(np.ones(3), requires_grad=True)
    with nn.no_grad():
        out = nn.tsum(a * 2.0)
    assert not out.requires_grad
    out2 = nn.tsum(a * 2.0)
    assert out2.requires_grad


def test_forward_is_deterministic():
    rng = np.random.default_rng(7)
    a = rng.normal(size=(6, 6))
    w = rng.normal(size=(6, 4))
    r1 = (Tensor(a) @ Tensor(w)).data
    r2 = (Tensor(a) @ Tensor(w)).data
    assert np.array_equal(r1, r2)


def test_backward_requires_scalar():
    t = Tensor(np.ones(3), requires_grad=True)
    with pytest.raises(ValueError, match="scalar"):
        (t * 2.0).backward()


def test_grad_accumulates_across_reuse():
    x = Tensor(np.array([3.0]), requires_grad=True)
    y = nn.tsum(x * x + x)  # dy/dx = 2x + 1 = 7
    y.backward()
    assert np.allclose(x.grad, [7.0])
