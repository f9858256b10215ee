"""Published full-scale reference RMSE values bundled for comparison.

These numbers come from the original full-scale highway-data evaluation.
Desk-scale runs train on far less data and are not expected to match them;
every report produced here says so explicitly. All values are in meters.
"""

from __future__ import annotations

from .metrics import RmseTable

REFERENCE_HORIZONS_S = (1.0, 2.0, 3.0, 4.0, 5.0)

# column key -> (display name, per-horizon RMSE in meters at 1..5 s)
REFERENCE_RESULTS: dict[str, tuple[str, tuple[float, ...]]] = {
    "cspdag": ("CSP (published)", (0.62, 1.29, 2.13, 3.20, 4.52)),
    "cspstar": ("CSP (reimplementation)", (0.54, 1.20, 2.03, 3.09, 4.39)),
    "l1rbp": ("L1-RBP", (0.53, 1.19, 1.95, 2.87, 3.97)),
    "l1mfrbp": ("L1-MFRBP", (0.54, 1.20, 1.99, 2.97, 4.16)),
    "planning": ("L1-MFRBP (planning)", (0.54, 1.19, 1.95, 2.88, 4.01)),
}

DISCLAIMER = (
    "Reference values are full-scale highway-data results; desk-scale runs "
    "are not expected to match them numerically."
)
UNITS_NOTE = "All RMSE values are reported in meters."


def reference_table(column: str) -> RmseTable:
    if column not in REFERENCE_RESULTS:
        raise KeyError(f"unknown reference column {column!r}; "
                       f"choose from {sorted(REFERENCE_RESULTS)}")
    _, values = REFERENCE_RESULTS[column]
    return RmseTable(REFERENCE_HORIZONS_S, values, (1,) * len(values))


def reference_compare(table: RmseTable, column: str) -> str:
    """Side-by-side report of a measured table against a reference column."""
    name, ref_values = REFERENCE_RESULTS.get(column, (None, None))
    if name is None:
        raise KeyError(f"unknown reference column {column!r}; "
                       f"choose from {sorted(REFERENCE_RESULTS)}")
    lines = [
        f"RMSE comparison against reference column: {name}",
        UNITS_NOTE,
        DISCLAIMER,
        f"{'horizon_s':>9} {'measured':>10} {'reference':>10} {'delta':>10} {'count':>8}",
    ]
    for (h, r, c) in table.rows():
        if h not in REFERENCE_HORIZONS_S:
            continue
        ref = ref_values[REFERENCE_HORIZONS_S.index(h)]
        lines.append(f"{h:9.1f} {r:10.4f} {ref:10.4f} {r - ref:+10.4f} {c:8d}")
    return "\n".join(lines)
