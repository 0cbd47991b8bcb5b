"""Matplotlib renderings written next to the CLI's delimited outputs."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

RC = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 10,
    "xtick.direction": "in",
    "ytick.direction": "in",
    "savefig.dpi": 150,
    "svg.hashsalt": "usdpc",
}


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)


def plot_map(values, x, z, path, *, title="", cmap="gray", label="", vmin=None, vmax=None, symmetric=False):
    """Render an ``[x, z]`` map with depth increasing downward."""
    values = np.asarray(values, dtype=float)
    if symmetric:
        lim = np.nanmax(np.abs(values)) or 1.0
        vmin, vmax = -lim, lim
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(4, 4))
        im = ax.imshow(values.T, extent=(x[0], x[-1], z[-1], z[0]), cmap=cmap,
                       vmin=vmin, vmax=vmax, aspect="equal", interpolation="nearest")
        ax.set_xlabel("x (mm)")
        ax.set_ylabel("z (mm)")
        if title:
            ax.set_title(title)
        fig.colorbar(im, ax=ax, label=label, shrink=0.8)
        _save(fig, path)


def plot_bmode(db, grid, path, dynamic_range=50.0):
    plot_map(db, grid.x, grid.z, path, title="B-mode", label="dB", vmin=-dynamic_range, vmax=0)


def plot_dpc(image, path, title="DPC"):
    plot_map(image.values, image.grid.x, image.grid.z, path, title=title, cmap="RdBu_r",
             label="phase (rad)", symmetric=True)


def plot_memory_report(report, path, dataset=None):
    """Per-angle tracking statistics and, when given, the zero-tilt RF speckle."""
    rows = report["angles"]
    ang = np.array([r["angle"] for r in rows])
    order = np.argsort(ang)
    with plt.rc_context(RC):
        ncol = 3 if dataset is not None else 2
        fig, axes = plt.subplots(1, ncol, figsize=(3.2 * ncol, 3))
        axes[0].plot(ang[order], [rows[i]["pass_fraction"] for i in order], "o-", label="pass fraction")
        axes[0].plot(ang[order], [rows[i]["mean_rho"] for i in order], "s--", label="mean rho")
        axes[0].set_xlabel("tilt (rad)")
        axes[0].set_ylim(0, 1.05)
        axes[0].legend(frameon=False)
        axes[1].plot(ang[order], [rows[i]["rms_dx_mm"] for i in order], "o-")
        axes[1].set_xlabel("tilt (rad)")
        axes[1].set_ylabel("RMS lateral error (mm)")
        if dataset is not None:
            fr = dataset.frames[report["reference_index"]]
            x = dataset.probe.positions
            t = fr.times * 1e6
            axes[2].imshow(np.abs(fr.samples).T, extent=(x[0], x[-1], t[-1], t[0]), aspect="auto",
                           cmap="gray_r")
            axes[2].set_xlabel("x (mm)")
            axes[2].set_ylabel("t (us)")
            axes[2].set_title("|RF|, zero tilt")
        _save(fig, path)


def plot_soscal(result, path):
    """Integrated phase profiles and excursion versus delta-SoS with the fitted line."""
    with plt.rc_context(RC):
        fig, (a, b) = plt.subplots(1, 2, figsize=(7, 3))
        for kind, prof in result.profiles.items():
            a.plot(prof.x, prof.phase, label=f"type {kind}")
        a.set_xlabel("x (mm)")
        a.set_ylabel("integrated phase (rad)")
        a.legend(frameon=False)
        ds = np.array([r["delta_sos"] for r in result.rows])
        ex = np.array([r["excursion_rad"] for r in result.rows])
        b.plot(ds, ex, "o")
        xs = np.linspace(ds.min(), ds.max(), 50)
        b.plot(xs, result.fit.predict(xs), "-", label=f"r2 = {result.fit.r_squared:.4f}")
        b.set_xlabel("delta SoS (m/s)")
        b.set_ylabel("excursion (rad)")
        b.legend(frameon=False)
        _save(fig, path)
