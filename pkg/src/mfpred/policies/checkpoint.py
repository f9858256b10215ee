"""Bundled checkpoint holding both trained policies in one file."""

from __future__ import annotations

from ..nn import ParameterStore, load_checkpoint, save_checkpoint

_PREFIXES = ("csp/", "fccsp/")


def save_policy_checkpoint(path, csp_store: ParameterStore, fccsp_store: ParameterStore) -> None:
    combined = ParameterStore()
    for prefix, store in zip(_PREFIXES, (csp_store, fccsp_store)):
        for name, t in store.items():
            combined.add(prefix + name, t.data)
    save_checkpoint(combined, path)


def load_policy_checkpoint(path) -> tuple[ParameterStore, ParameterStore]:
    combined = load_checkpoint(path)
    stores = (ParameterStore(), ParameterStore())
    for name, t in combined.items():
        for prefix, store in zip(_PREFIXES, stores):
            if name.startswith(prefix):
                store.add(name[len(prefix):], t.data)
                break
        else:
            raise ValueError(f"unexpected checkpoint entry {name!r}")
    if not len(stores[0]) or not len(stores[1]):
        raise ValueError("checkpoint does not contain both policies")
    return stores
