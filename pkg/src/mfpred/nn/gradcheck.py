"""Central finite-difference verification of analytic gradients."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .params import ParameterStore


@dataclass
class GradCheckEntry:
    name: str
    max_rel_error: float
    checked: int
    failed_indices: list[int] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failed_indices


@dataclass
class GradCheckReport:
    entries: list[GradCheckEntry]
    tolerance: float
    step: float

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    @property
    def max_rel_error(self) -> float:
        return max((e.max_rel_error for e in self.entries), default=0.0)

    def summary(self) -> str:
        lines = [f"gradient check: step={self.step:g} tolerance={self.tolerance:g}"]
        for e in self.entries:
            status = "ok" if e.passed else f"FAIL ({len(e.failed_indices)} entries)"
            lines.append(f"  {e.name}: max rel err {e.max_rel_error:.3e} over {e.checked} entries {status}")
        return "\n".join(lines)


def finite_difference_check(fn, store: ParameterStore, tolerance: float = 1e-4,
                            step: float = 1e-5, abs_floor: float = 1e-6,
                            max_entries_per_param: int | None = None,
                            rng: np.random.Generator | None = None) -> GradCheckReport:
    """Compare analytic gradients of ``fn`` against central differences.

    ``fn`` takes no arguments, reads the store's current values, and returns
    a scalar Tensor. Each checked entry passes when
    |analytic - numeric| <= max(tolerance * max(|analytic|, |numeric|), abs_floor).
    Large parameter arrays can be subsampled with ``max_entries_per_param``.
    """
    store.zero_grad()
    loss = fn()
    loss.backward()
    analytic = store.gradients()
    rng = rng or np.random.default_rng(0)

    entries = []
    for name, param in store.items():
        flat = param.data.reshape(-1)
        n = flat.size
        if max_entries_per_param is not None and n > max_entries_per_param:
            check_idx = np.sort(rng.choice(n, size=max_entries_per_param, replace=False))
        else:
            check_idx = np.arange(n)
        a_flat = analytic[name].reshape(-1)
        max_rel = 0.0
        failed = []
        for i in check_idx:
            original = flat[i]
            flat[i] = original + step
            f_plus = float(fn().data)
            flat[i] = original - step
            f_minus = float(fn().data)
            flat[i] = original
            numeric = (f_plus - f_minus) / (2.0 * step)
            a = float(a_flat[i])
            diff = abs(a - numeric)
            denom = max(abs(a), abs(numeric), abs_floor)
            rel = diff / denom
            max_rel = max(max_rel, rel)
            if diff > max(tolerance * max(abs(a), abs(numeric)), abs_floor):
                failed.append(int(i))
        entries.append(GradCheckEntry(name=name, max_rel_error=max_rel,
                                      checked=len(check_idx), failed_indices=failed))
    return GradCheckReport(entries=entries, tolerance=tolerance, step=step)
