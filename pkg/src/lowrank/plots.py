"""Figure rendering for the experiment reports.

Each experiment mode has a matching renderer that turns the rows written to
CSV into a PNG saved next to the delimited output.  Rendering is headless
(Agg backend) and optional at the CLI level.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _new_axes(title, xlabel, ylabel):
    fig, ax = plt.subplots(figsize=(6.4, 4.2), dpi=130)
    ax.set_title(title)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(True, which="both", alpha=0.3)
    return fig, ax


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def error_curve_figure(rows, path):
    """Optimal, actual, and estimated error against the sample count."""
    ell = np.array([r["ell"] for r in rows])
    fig, ax = _new_axes("Range approximation errors", "samples", "error")
    ax.semilogy(ell, [max(r["sigma_opt"], 1e-18) for r in rows], "r-", label="optimal")
    ax.semilogy(ell, [max(r["err_actual"], 1e-18) for r in rows], "g-", label="actual")
    ax.semilogy(ell, [max(r["err_estimate"], 1e-18) for r in rows], "b--", label="estimate")
    ax.legend()
    return _save(fig, path)


def error_hist_figure(rows, path):
    """Per-sketch-kind empirical densities of the approximation error."""
    kinds = sorted({r["kind"] for r in rows})
    fig, ax = _new_axes("Error distribution by sketch kind", "error", "density")
    for kind in kinds:
        vals = np.array([r["err"] for r in rows if r["kind"] == kind])
        ax.hist(vals, bins=min(40, max(8, len(vals) // 20)), density=True,
                histtype="step", label=kind)
    ax.legend()
    return _save(fig, path)


def power_curve_figure(rows, path):
    """Median error (with quartile band) against the power exponent."""
    qs = sorted({r["q"] for r in rows})
    med, lo, hi = [], [], []
    for q in qs:
        vals = np.array([r["err"] for r in rows if r["q"] == q])
        med.append(np.median(vals))
        lo.append(np.quantile(vals, 0.25))
        hi.append(np.quantile(vals, 0.75))
    fig, ax = _new_axes("Power-scheme error vs exponent", "q", "error")
    ax.set_yscale("log")
    ax.plot(qs, med, "o-", label="median")
    ax.fill_between(qs, lo, hi, alpha=0.25, label="interquartile")
    ax.legend()
    return _save(fig, path)


def bounds_figure(rows, path):
    """Monte Carlo means against the matching bound evaluators."""
    names = [r["name"] for r in rows]
    x = np.arange(len(names))
    fig, ax = _new_axes("Monte Carlo means vs bound evaluators", "", "value")
    ax.set_yscale("log")
    ax.bar(x - 0.18, [r["monte_carlo_mean"] for r in rows], width=0.36, label="mean")
    ax.bar(x + 0.18, [r["bound"] for r in rows], width=0.36, label="bound")
    ax.set_xticks(x)
    ax.set_xticklabels(names, rotation=30, ha="right", fontsize=7)
    ax.legend()
    return _save(fig, path)


def bench_figure(rows, path):
    """Wall-clock comparison of the factorization paths (non-normative)."""
    fig, ax = _new_axes("Factorization timings (hardware-dependent)", "samples", "seconds")
    ax.set_yscale("log")
    ns = sorted({r["n"] for r in rows})
    for n in ns:
        sub = [r for r in rows if r["n"] == n]
        ells = [r["ell"] for r in sub]
        ax.plot(ells, [r["t_gauss"] for r in sub], "o-", label=f"gauss n={n}")
        ax.plot(ells, [r["t_srft"] for r in sub], "s--", label=f"srft n={n}")
        ax.plot(ells, [r["t_full_svd"] for r in sub], ":", label=f"full svd n={n}")
    ax.legend(fontsize=7)
    return _save(fig, path)
