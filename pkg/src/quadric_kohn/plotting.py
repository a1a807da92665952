"""Matplotlib figures for the CLI tables.

Each command's CSV maps to one figure: kernel values against the varying
grid axis (or point index), eigenvalues against direction, cone fractions
per multi-index and verification metrics against their tolerances.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _column(header, rows, name, cast=float):
    i = header.index(name)
    return np.array([cast(r[i]) for r in rows])


def _varying_axis(header, rows):
    """Name of the single point coordinate that varies, if exactly one does."""
    coords = [h for h in header if h.startswith(("z_", "t_"))]
    varying = [h for h in coords if np.ptp(_column(header, rows, h)) > 0]
    return varying[0] if len(varying) == 1 else None


def _kernel(ax, header, rows, title):
    re = _column(header, rows, "value_re")
    im = _column(header, rows, "value_im")
    axis = _varying_axis(header, rows)
    x = _column(header, rows, axis) if axis else np.arange(len(rows))
    ax.plot(x, re, "o-", ms=3, label="Re")
    ax.plot(x, im, "s--", ms=3, label="Im")
    ax.plot(x, np.hypot(re, im), "-", color="k", lw=0.8, label="|value|")
    ax.set_xlabel(axis or "point index")
    ax.set_ylabel("kernel coefficient")
    ax.set_title(title)
    ax.legend(frameon=False)


def _spectrum(ax, header, rows):
    mus = [h for h in header if h.startswith("mu_")]
    x = np.arange(len(rows))
    for h in mus:
        ax.plot(x, _column(header, rows, h), "o-", ms=3, label=h)
    ax.axhline(0.0, color="k", lw=0.6)
    ax.set_xlabel("direction index")
    ax.set_ylabel("eigenvalue")
    ax.legend(frameon=False)


def _gamma(ax, header, rows):
    labels = [r[header.index("L")] or "()" for r in rows]
    ax.bar(labels, _column(header, rows, "sphere_fraction"), color="0.4")
    ax.set_xlabel("L")
    ax.set_ylabel("fraction of sphere sample in the cone")


def _verify(ax, header, rows):
    names = [r[header.index("check")] for r in rows]
    metric = np.maximum(_column(header, rows, "metric"), 1e-18)
    tol = np.maximum(_column(header, rows, "tolerance"), 1e-18)
    ok = [bool(r[header.index("passed")]) for r in rows]
    y = np.arange(len(rows))
    ax.barh(y, metric, color=["tab:green" if k else "tab:red" for k in ok])
    ax.scatter(tol, y, marker="|", s=200, color="k", label="tolerance")
    ax.set_xscale("log")
    ax.set_yticks(y)
    ax.set_yticklabels(names)
    ax.set_xlabel("worst observed error")
    ax.legend(frameon=False)


def _heat(ax, header, rows):
    s = _column(header, rows, "s")
    v = _column(header, rows, "value")
    ax.semilogy(s, v, "o", ms=3)
    ax.set_xlabel("heat time s")
    ax.set_ylabel("transformed heat kernel")


def _classify(ax, header, rows):
    q = _column(header, rows, "q", int)
    solv = [bool(r[header.index("solvable")]) for r in rows]
    hypo = [bool(r[header.index("hypoelliptic")]) for r in rows]
    ax.imshow(np.array([solv, hypo], dtype=float), cmap="Greys", vmin=0, vmax=1.5, aspect="auto")
    ax.set_xticks(range(len(q)))
    ax.set_xticklabels([str(k) for k in q])
    ax.set_yticks([0, 1])
    ax.set_yticklabels(["solvable", "hypoelliptic"])
    ax.set_xlabel("form degree q")


def plot_table(command: str, header: list, rows: list, path) -> Path:
    """Draw the figure for ``command`` from its CSV table and save it to ``path``."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    if not rows:
        ax.text(0.5, 0.5, "no rows", ha="center", va="center")
    elif command in ("green", "szego"):
        _kernel(ax, header, rows, command)
    elif command == "spectrum":
        _spectrum(ax, header, rows)
    elif command == "gamma":
        _gamma(ax, header, rows)
    elif command == "verify":
        _verify(ax, header, rows)
    elif command == "heat":
        _heat(ax, header, rows)
    elif command == "classify":
        _classify(ax, header, rows)
    else:
        raise ValueError(f"no figure for command {command!r}")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
