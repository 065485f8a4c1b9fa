"""Report figures rendered to files (headless backend)."""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _grouped(rows, key):
    """Group dict rows by ``row[key]``, preserving first-seen order."""
    groups = {}
    for row in rows:
        groups.setdefault(row[key], []).append(row)
    return groups


def save_trace_figure(result, path):
    """Plot the optimization trace of a `LearnResult`.

    Log-likelihood per accepted iterate on the left axis, gradient
    infinity-norm on a log-scaled right axis.  Iterations whose likelihood
    was not evaluated (model-free ascent) are skipped on the left axis.
    """
    trace = np.asarray(result.trace, dtype=float)
    fig, ax = plt.subplots(figsize=(7, 4.5))
    if trace.size:
        iters = np.arange(trace.shape[0])
        have_ll = ~np.isnan(trace[:, 0])
        if have_ll.any():
            ax.plot(iters[have_ll], trace[have_ll, 0], "o-", color="tab:blue",
                    markersize=3, label="log-likelihood")
        ax2 = ax.twinx()
        pos = trace[:, 1] > 0
        if pos.any():
            ax2.semilogy(iters[pos], trace[pos, 1], "s--", color="tab:red",
                         markersize=3, label="|grad|_inf")
        ax2.set_ylabel("gradient infinity norm", color="tab:red")
    ax.set_xlabel("accepted iteration")
    ax.set_ylabel("average demo log-likelihood", color="tab:blue")
    status = "converged" if result.converged else "not converged"
    ax.set_title(f"{result.method}: {result.iterations} iterations, {status}")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_eval_figure(rows, path):
    """Plot recovery quality vs. demonstration count per algorithm.

    Args:
        rows: Dicts with keys ``algorithm``, ``n_paths``, ``ile``, ``loglik``.
        path: Output image path.
    """
    fig, (ax_ile, ax_ll) = plt.subplots(1, 2, figsize=(11, 4.5))
    for name, alg_rows in _grouped(rows, "algorithm").items():
        by_n = _grouped(alg_rows, "n_paths")
        ns = sorted(by_n)
        med, lo, hi, med_ll = [], [], [], []
        for n in ns:
            iles = np.array([r["ile"] for r in by_n[n]], dtype=float)
            lls = np.array([r["loglik"] for r in by_n[n]], dtype=float)
            med.append(np.median(iles))
            lo.append(np.percentile(iles, 25))
            hi.append(np.percentile(iles, 75))
            med_ll.append(np.median(lls))
        line, = ax_ile.plot(ns, med, "o-", label=name)
        ax_ile.fill_between(ns, lo, hi, alpha=0.2, color=line.get_color())
        ax_ll.plot(ns, med_ll, "o-", label=name, color=line.get_color())
    for ax in (ax_ile, ax_ll):
        ax.set_xscale("log")
        ax.set_xlabel("demonstrations")
        ax.legend()
    ax_ile.set_ylabel("inverse learning error (median, IQR)")
    ax_ll.set_ylabel("held-out log-likelihood (median)")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_bench_figure(rows, path):
    """Plot wall time vs. horizon on log-log axes with fitted slopes.

    Args:
        rows: Dicts with keys ``algorithm``, ``horizon``, ``seconds``.
        path: Output image path.
    """
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for name, alg_rows in _grouped(rows, "algorithm").items():
        by_l = _grouped(alg_rows, "horizon")
        ls = np.array(sorted(by_l), dtype=float)
        mean_t = np.array([
            np.mean([r["seconds"] for r in by_l[l]]) for l in sorted(by_l)
        ])
        label = name
        if ls.size >= 2 and np.all(mean_t > 0):
            slope = np.polyfit(np.log(ls), np.log(mean_t), 1)[0]
            label = f"{name} (slope {slope:.2f})"
        ax.loglog(ls, mean_t, "o-", label=label)
    ax.set_xlabel("horizon")
    ax.set_ylabel("seconds per inference + gradient cycle")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
