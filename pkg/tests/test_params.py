import numpy as np
import pytest

from mfpred.nn import (
    ParameterStore,
    load_checkpoint,
    save_checkpoint,
)


def make_store(rng):
    store = ParameterStore()
    store.add("enc.w", rng.normal(size=(7, 3)))
    store.add("enc.b", rng.normal(size=3))
    store.add("head.w", rng.normal(size=(3, 5)))
    return store


def test_roundtrip_is_bit_exact(tmp_path, rng):
    store = make_store(rng)
    path = tmp_path / "ckpt.npz"
    save_checkpoint(store, path)
    loaded = load_checkpoint(path)
    assert loaded.names() == store.names()
    for name, t in store.items():
        assert np.array_equal(loaded[name].data, t.data)
        assert loaded[name].data.dtype == np.float64


def test_missing_version_header_rejected(tmp_path):
    path = tmp_path / "bad.npz"
    np.savez(path, w=np.ones(3))
    with pytest.raises(ValueError, match="version"):
        load_checkpoint(path)


def test_duplicate_name_rejected():
    store = ParameterStore()
    store.add("w", np.ones(2))
    with pytest.raises(KeyError):
        store.add("w", np.ones(2))


def test_gradients_default_to_zeros(rng):
    store = make_store(rng)
    grads = store.gradients()
    for name, t in store.items():
        assert grads[name].shape == t.data.shape
        assert not grads[name].any()


def test_content_hash_tracks_values(rng):
    store = make_store(rng)
    h1 = store.content_hash()
    assert h1 == store.content_hash()
    store["enc.w"].data[0, 0] += 1.0
    assert store.content_hash() != h1


def test_copy_values_from_overwrites_matching_names(rng):
    a = make_store(rng)
    b = make_store(np.random.default_rng(99))
    b.copy_values_from(a, names=["enc.w"])
    assert np.array_equal(b["enc.w"].data, a["enc.w"].data)
    assert not np.array_equal(b["head.w"].data, a["head.w"].data)
