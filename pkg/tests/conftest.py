import numpy as np
import pytest


def numeric_grad(fn, arr, step=1e-6):
    """Central finite differences of a scalar-valued fn wrt a numpy array."""
    grad = np.zeros_like(arr)
    flat = arr.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        old = flat[i]
        flat[i] = old + step
        f_plus = fn()
        flat[i] = old - step
        f_minus = fn()
        flat[i] = old
        gflat[i] = (f_plus - f_minus) / (2.0 * step)
    return grad


def assert_grads_close(analytic, numeric, rel=1e-4, abs_floor=1e-6):
    diff = np.abs(analytic - numeric)
    bound = np.maximum(rel * np.maximum(np.abs(analytic), np.abs(numeric)), abs_floor)
    worst = (diff - bound).max()
    assert np.all(diff <= bound), f"gradient mismatch, worst excess {worst:.3e}"


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
