"""Figure rendering for benchmark reports (written next to the JSON/CSV).

Two views: the error-versus-budget curve for both methods, and a prediction
overlay showing truth against both surrogates.  For scalar fields (length-1
responses) the overlay runs over the control parameter; for vector fields it
shows a handful of representative response histories.
"""

from __future__ import annotations

import logging
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np

from .bench import BenchReport

log = logging.getLogger(__name__)


def error_curve_figure(report: BenchReport):
    """Best-seed max relative error of both methods against realized budget."""
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    for method, marker in (("adaptive", "o"), ("uniform", "s")):
        ms, errs = [], []
        for target in report.sizes:
            try:
                row = report.best_row(method, target)
            except Exception:
                continue
            ms.append(row.m)
            errs.append(row.max_rel_error)
        ax.semilogy(ms, errs, marker=marker, label=method)
    ax.set_xlabel("training samples")
    ax.set_ylabel("max relative error")
    ax.set_title(f"{report.problem}: error vs. sample budget")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    return fig


def _best_curve(report: BenchReport):
    """Curve payload of the best adaptive run at the largest interesting size."""
    if not report.curves:
        return None
    best_key, best_err = None, None
    for (target, seed), payload in report.curves.items():
        row = next(
            (r for r in report.rows
             if r.method == "adaptive" and r.target_m == target and r.seed == seed),
            None,
        )
        if row is None:
            continue
        if best_err is None or row.max_rel_error < best_err:
            best_key, best_err = (target, seed), row.max_rel_error
    return report.curves.get(best_key)


def overlay_figure(report: BenchReport):
    """Truth vs. both surrogates for the best-scoring adaptive run."""
    payload = _best_curve(report)
    if payload is None:
        return None
    queries = payload["queries"]
    truth = payload["truth"]
    n = truth.shape[0]
    if n == 1:
        fig, ax = plt.subplots(figsize=(7.0, 4.2))
        ax.plot(queries, truth[0], "k-", lw=1.8, label="reference")
        ax.plot(queries, payload["adaptive"][0], "--", lw=1.2, label="adaptive")
        ax.plot(queries, payload["uniform"][0], ":", lw=1.2, label="uniform")
        ax.plot(
            payload["training_inputs"],
            np.interp(payload["training_inputs"], queries, truth[0]),
            "r.", ms=5, label=f"training samples (m={payload['m']})",
        )
        ax.set_xlabel("control parameter")
        ax.set_ylabel("response")
    else:
        # Vector fields: show a few spread-out query cases as histories.
        picks = np.unique(np.linspace(0, queries.size - 1, 4).astype(int))
        fig, axes = plt.subplots(
            len(picks), 1, figsize=(7.0, 2.2 * len(picks)), sharex=True
        )
        axes = np.atleast_1d(axes)
        steps = np.arange(n)
        for ax, j in zip(axes, picks):
            ax.plot(steps, truth[:, j], "k-", lw=1.6, label="reference")
            ax.plot(steps, payload["adaptive"][:, j], "--", lw=1.1, label="adaptive")
            ax.plot(steps, payload["uniform"][:, j], ":", lw=1.1, label="uniform")
            ax.set_ylabel(f"chi = {queries[j]:.4g}")
            ax.grid(alpha=0.3)
        axes[-1].set_xlabel("field index")
        axes[0].legend(loc="upper right", fontsize=8)
        fig.suptitle(f"{report.problem}: predicted vs. reference fields")
        fig.tight_layout()
        return fig
    ax.set_title(f"{report.problem}: predicted vs. reference (m={payload['m']})")
    ax.grid(alpha=0.3)
    ax.legend()
    fig.tight_layout()
    return fig


def render_report_figures(report: BenchReport, out_dir, stem: str) -> list[Path]:
    """Write the report figures as PNGs; returns the created paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    fig = error_curve_figure(report)
    path = out_dir / f"{stem}_errors.png"
    fig.savefig(path, dpi=130)
    plt.close(fig)
    written.append(path)
    fig = overlay_figure(report)
    if fig is not None:
        path = out_dir / f"{stem}_overlay.png"
        fig.savefig(path, dpi=130)
        plt.close(fig)
        written.append(path)
    log.info("figures written: %s", ", ".join(str(p) for p in written))
    return written
