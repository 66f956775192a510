"""Predicted-versus-observed comparison tables.

Errors are absolute differences of means. TCT statistics are reported in
units of 100 ms, fixation counts in counts.
"""
import csv

import numpy as np

from .simulator import BehaviorSummary

TCT_UNIT_MS = 100.0
CONDITIONS = ("all", "abs", "pre")
_STATISTICS = (
    ("tct_mean", "100ms", TCT_UNIT_MS),
    ("tct_std", "100ms", TCT_UNIT_MS),
    ("n_fixations_mean", "count", 1.0),
)


def comparison_rows(observed, predicted):
    """One row per (condition, statistic) present in both summaries."""
    rows = []
    for cond in CONDITIONS:
        if cond not in observed or cond not in predicted:
            continue
        o, p = observed[cond], predicted[cond]
        for stat, unit, scale in _STATISTICS:
            ov = getattr(o, stat) / scale
            pv = getattr(p, stat) / scale
            rows.append({"condition": cond, "statistic": stat, "unit": unit,
                         "observed": ov, "predicted": pv, "abs_error": abs(pv - ov)})
    return rows


def histogram_rows(observed, predicted):
    """Fixation-duration histogram bins side by side, one row per bin."""
    rows = []
    for cond in CONDITIONS:
        ho = observed[cond].fixation_duration_histogram if cond in observed else None
        hp = predicted[cond].fixation_duration_histogram if cond in predicted else None
        ref = ho or hp
        if ref is None:
            continue
        if ho and hp and ho["edges_ms"] != hp["edges_ms"]:
            raise ValueError(f"histogram bins differ for condition {cond!r}")
        edges = ref["edges_ms"]
        for i, lo in enumerate(edges):
            hi = edges[i + 1] if i + 1 < len(edges) else float("inf")
            rows.append({"condition": cond, "bin_lo_ms": lo, "bin_hi_ms": hi,
                         "observed_mass": ho["mass"][i] if ho else "",
                         "predicted_mass": hp["mass"][i] if hp else ""})
    return rows


def _write(rows, path, columns):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=columns)
        w.writeheader()
        for r in rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})


def write_report(observed, predicted, report_path, histogram_path=None):
    """Write ``report.csv`` (and optionally the histogram CSV); returns the rows."""
    if isinstance(observed, (str, bytes)) or hasattr(observed, "__fspath__"):
        observed = BehaviorSummary.from_json(observed)
    if isinstance(predicted, (str, bytes)) or hasattr(predicted, "__fspath__"):
        predicted = BehaviorSummary.from_json(predicted)
    rows = comparison_rows(observed, predicted)
    _write(rows, report_path,
           ["condition", "statistic", "unit", "observed", "predicted", "abs_error"])
    if histogram_path is not None:
        _write(histogram_rows(observed, predicted), histogram_path,
               ["condition", "bin_lo_ms", "bin_hi_ms", "observed_mass", "predicted_mass"])
    return rows


def max_error(rows):
    return max((r["abs_error"] for r in rows), default=0.0)


def recovery(names, truth, estimate):
    """Signed and absolute estimate errors per parameter."""
    est = np.asarray(estimate, dtype=float)
    out = {}
    for n, t, e in zip(names, truth, est):
        out[n] = {"truth": float(t), "estimate": float(e),
                  "error": float(e - t), "abs_error": float(abs(e - t))}
    return out
