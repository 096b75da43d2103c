"""Files written beside command output: JSON reports, CSV rows and PNG figures."""

import csv
import json
import math
import os
from fractions import Fraction

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .reference import exact_distribution  # noqa: E402


def write_json(path, doc):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True, indent=2)
        fh.write("\n")
    return path


def write_csv(path, rows, columns=None):
    """Write dict rows; columns default to the keys of the first row."""
    rows = list(rows)
    columns = columns or (list(rows[0]) if rows else [])
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=columns, extrasaction="ignore")
        w.writeheader()
        for row in rows:
            w.writerow(row)
    return path


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_table_error(table, epsilon, path):
    """Per-index gap between T and T[0] * exp(-eps i / 2), against the error bound."""
    eps = float(epsilon.approx()) if hasattr(epsilon, "approx") else float(epsilon)
    a = math.exp(eps / 2)
    idx = list(range(table.l))
    err = [abs(t - table.entries[0] * math.exp(-eps * i / 2)) for i, t in zip(idx, table.entries)]
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.plot(idx, err, marker=".", lw=1, label="|T[i] - T[0] a^-i|")
    ax.axhline(a / (a - 1), color="C3", ls="--", label="bound a/(a-1)")
    ax.set_xlabel("index i")
    ax.set_ylabel("additive error")
    ax.set_title(f"table error, eps={table.epsilon}, l={table.l}")
    ax.legend(frameon=False)
    return _save(fig, path)


def plot_distribution_pair(params, db, db2, path):
    """Exact output masses of two adjacent databases."""
    p1 = [float(x) for x in exact_distribution(list(db), params).masses]
    p2 = [float(x) for x in exact_distribution(list(db2), params).masses]
    xs = list(range(params.n))
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.bar([x - 0.2 for x in xs], p1, width=0.4, label=f"D={list(db)}")
    ax.bar([x + 0.2 for x in xs], p2, width=0.4, label=f"D'={list(db2)}")
    ax.set_xticks(xs)
    ax.set_xticklabels([str(v) for v in params.range])
    ax.set_xlabel("output element")
    ax.set_ylabel("probability")
    ax.set_title(f"worst adjacent pair ({params.method}, eps={params.epsilon})")
    ax.legend(frameon=False, fontsize=8)
    return _save(fig, path)


def plot_utility(report, path):
    cs = [r["c"] for r in report.rows]
    prob = [float(r["probability"]) for r in report.rows]
    bound = [float(r["bound"][1]) if r["bound"] is not None else float("nan") for r in report.rows]
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.step(cs, prob, where="post", label="Pr[u <= c]")
    ax.plot(cs, bound, "--", color="C3", label="bound")
    ax.set_yscale("symlog", linthresh=1e-6)
    ax.set_xlabel("threshold c")
    ax.set_ylabel("probability")
    ax.legend(frameon=False)
    return _save(fig, path)


def plot_sampling(report, params, path):
    xs = list(range(params.n))
    expected = [float(e) * report.trials for e in report.expected]
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.bar(xs, report.counts, width=0.6, alpha=0.7, label="observed")
    ax.plot(xs, expected, "o", color="C3", label="expected")
    ax.set_xticks(xs)
    ax.set_xticklabels([str(v) for v in params.range])
    ax.set_xlabel("output element")
    ax.set_ylabel("count")
    ax.set_title(f"{report.trials} samples, p-value {report.p_value:.3g}")
    ax.legend(frameon=False)
    return _save(fig, path)


def plot_rho(rows, path):
    """Closed-form distance and its s/(4p) bound over s for one prime."""
    s = [r["s"] for r in rows]
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.plot(s, [float(Fraction(r["closed_form"])) for r in rows], ".", label="z(s-z)/(ps)")
    ax.plot(s, [float(Fraction(r["bound"])) for r in rows], "--", color="C3", label="s/(4p)")
    ax.set_xlabel("s")
    ax.set_ylabel("statistical distance")
    ax.legend(frameon=False)
    return _save(fig, path)


def plot_bench(rows, path):
    """Witness, prove and verify times against the number of providers."""
    ms = [r["m"] for r in rows]
    fig, ax = plt.subplots(figsize=(6, 3.5))
    for key, label in (("t_w", "witness"), ("t_p", "prove"), ("t_v", "verify")):
        ax.plot(ms, [r[key] for r in rows], marker="o", label=label)
    ax.set_xlabel("providers m")
    ax.set_ylabel("seconds")
    ax.legend(frameon=False)
    return _save(fig, path)


def out_paths(out, stem):
    """``out/stem.json``, ``.csv`` and ``.png``; the directory is created."""
    os.makedirs(out, exist_ok=True)
    return {ext: os.path.join(out, f"{stem}.{ext}") for ext in ("json", "csv", "png")}
