"""Named parameter storage and the on-disk checkpoint format.

Checkpoints are uncompressed ``.npz`` archives holding one float64 array per
parameter name plus a reserved ``__format_version__`` entry. Arrays are
written verbatim, so a save/load round trip is bit-exact.
"""

from __future__ import annotations

import hashlib
import io
from pathlib import Path

import numpy as np

from .tensor import Tensor

CHECKPOINT_FORMAT_VERSION = 1
_VERSION_KEY = "__format_version__"


class ParameterStore:
    """Ordered map of parameter name -> trainable Tensor."""

    def __init__(self):
        self._params: dict[str, Tensor] = {}

    def add(self, name: str, values: np.ndarray) -> Tensor:
        if name in self._params:
            raise KeyError(f"duplicate parameter name {name!r}")
        t = Tensor(np.asarray(values, dtype=np.float64), requires_grad=True)
        self._params[name] = t
        return t

    def __getitem__(self, name: str) -> Tensor:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __len__(self) -> int:
        return len(self._params)

    def names(self) -> list[str]:
        return sorted(self._params)

    def items(self):
        return ((n, self._params[n]) for n in self.names())

    def zero_grad(self):
        for t in self._params.values():
            t.grad = None

    def gradients(self) -> dict[str, np.ndarray]:
        """Snapshot of current gradients; missing gradients come back as zeros."""
        out = {}
        for name, t in self.items():
            out[name] = np.zeros_like(t.data) if t.grad is None else t.grad.copy()
        return out

    def copy_values_from(self, other: "ParameterStore", names=None):
        """Overwrite matching parameters with values from another store."""
        for name in (names if names is not None else other.names()):
            if name in self._params:
                dst = self._params[name]
                src = other[name].data
                if dst.data.shape != src.shape:
                    raise ValueError(f"shape mismatch for {name}: {dst.data.shape} vs {src.shape}")
                dst.data = src.copy()

    def state_bytes(self) -> bytes:
        buf = io.BytesIO()
        save_checkpoint(self, buf)
        return buf.getvalue()

    def content_hash(self) -> str:
        return hashlib.sha256(self.state_bytes()).hexdigest()


def save_checkpoint(store: ParameterStore, path) -> None:
    arrays = {name: t.data for name, t in store.items()}
    arrays[_VERSION_KEY] = np.array([CHECKPOINT_FORMAT_VERSION], dtype=np.int64)
    if isinstance(path, (str, Path)):
        with open(path, "wb") as fh:
            np.savez(fh, **arrays)
    else:
        np.savez(path, **arrays)


def load_checkpoint(path) -> ParameterStore:
    with np.load(path, allow_pickle=False) as data:
        if _VERSION_KEY not in data:
            raise ValueError("not a parameter checkpoint: missing format version entry")
        version = int(data[_VERSION_KEY][0])
        if version != CHECKPOINT_FORMAT_VERSION:
            raise ValueError(f"unsupported checkpoint format version {version}")
        store = ParameterStore()
        for name in data.files:
            if name != _VERSION_KEY:
                store.add(name, data[name])
    return store


def file_hash(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
