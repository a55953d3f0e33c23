"""Figure rendering for sweep reports (log-log defect plots, decay tables)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def plot_loglog(records, xkey, ykey, path, fit=None, title=None,
                group_key=None):
    """Log-log scatter of ykey vs xkey, optionally grouped and with a fitted
    power law overlaid."""
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    groups = {}
    for r in records:
        groups.setdefault(r.get(group_key) if group_key else None, []).append(r)
    for label, rs in sorted(groups.items(), key=lambda kv: str(kv[0])):
        xs = [r[xkey] for r in rs]
        ys = [r[ykey] for r in rs]
        ax.loglog(xs, ys, "o-", label=None if label is None else f"{group_key}={label}")
    if fit is not None:
        slope, intercept = fit
        xs = sorted(r[xkey] for r in records)
        ys = [10 ** intercept * x ** slope for x in xs]
        ax.loglog(xs, ys, "k--", label=f"slope {slope:.3f}")
    ax.set_xlabel(xkey)
    ax.set_ylabel(ykey)
    if title:
        ax.set_title(title)
    if group_key or fit is not None:
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_decay(rows, xkey, ykey, path, title=None, logy=True):
    """Semilog decay plot (gap scans, TDL convergence, locality profiles)."""
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    xs = [r[xkey] for r in rows]
    ys = [r[ykey] for r in rows]
    if logy and all(y > 0 for y in ys):
        ax.semilogy(xs, ys, "o-")
    else:
        ax.plot(xs, ys, "o-")
    ax.set_xlabel(xkey)
    ax.set_ylabel(ykey)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
