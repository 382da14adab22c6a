"""Figure rendering for the report paths.

Every command that writes a delimited report also renders the matching
matplotlib figure next to it.  Rendering is headless and byte-stable:
fixed dpi, fixed PNG metadata, no timestamps.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

_PNG_METADATA = {"Software": "sbic"}
_DPI = 150


def _save(fig, path) -> None:
    fig.savefig(path, dpi=_DPI, metadata=_PNG_METADATA)
    plt.close(fig)


def save_error_curves(path, curves: dict, bounds: dict | None = None, title: str | None = None):
    """Semilog error-vs-R curves with confidence bars, bounds as dotted overlays.

    ``curves`` maps a label to a list of CurvePoints; ``bounds`` maps a
    label to an (r_grid, values) pair.
    """
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    for label, points in curves.items():
        r = [p.R for p in points]
        err = [p.error_mean for p in points]
        yerr = [
            [p.error_mean - p.ci_low for p in points],
            [p.ci_high - p.error_mean for p in points],
        ]
        ax.errorbar(r, err, yerr=yerr, marker="o", markersize=3, capsize=2, label=label)
    if bounds:
        for label, (r_grid, values) in bounds.items():
            ax.plot(r_grid, values, linestyle=":", label=label)
    ax.set_yscale("log")
    ax.set_xlabel("Number of labels per task")
    ax.set_ylabel("Prediction error")
    ax.grid(True, which="major", alpha=0.4)
    ax.legend(fontsize=8)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    _save(fig, path)


def save_bound_curve(path, r_grid, values, label: str):
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    ax.plot(r_grid, values, linestyle=":", color="tab:red", label=label)
    ax.set_yscale("log")
    ax.set_xlabel("Number of labels per task")
    ax.set_ylabel("Error bound")
    ax.grid(True, which="major", alpha=0.4)
    ax.legend(fontsize=8)
    fig.tight_layout()
    _save(fig, path)


def save_timing(path, rows, title: str | None = None):
    """Semilog per-run wall time; ``rows`` are (R, algo, mean_ms, std_ms) tuples."""
    by_algo: dict[str, list[tuple[int, float, float]]] = {}
    for r_value, algo, mean_ms, std_ms in rows:
        by_algo.setdefault(algo, []).append((r_value, mean_ms, std_ms))
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    for algo, series in by_algo.items():
        series.sort()
        r = [s[0] for s in series]
        mean = [s[1] for s in series]
        std = [s[2] for s in series]
        ax.errorbar(r, mean, yerr=std, marker="o", markersize=3, capsize=2, label=algo)
    ax.set_yscale("log")
    ax.set_xlabel("Number of labels per task")
    ax.set_ylabel("Time (ms)")
    ax.grid(True, which="major", alpha=0.4)
    ax.legend(fontsize=8)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    _save(fig, path)


def save_error_histogram(path, errors, label: str):
    """Distribution of per-repeat error rates from an inference report."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.hist(errors, bins=20, color="tab:blue", alpha=0.8)
    ax.set_xlabel("Prediction error")
    ax.set_ylabel("Repeats")
    ax.set_title(label)
    fig.tight_layout()
    _save(fig, path)
