"""Renderers for the four plot kinds. Pure presentation: no computation beyond
reading manifest-listed CSVs; outputs named by the manifest hash prefix."""

from __future__ import annotations

import json
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .jobs import Manifest, MissingColumns, read_table


def _outfile(manifest: Manifest, out_dir: Path, stem: str, ext: str = "png") -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    return out_dir / f"{manifest.hash_prefix}_{stem}.{ext}"


def render_convergence(manifest: Manifest, out_dir) -> list:
    """Log-log weak-star and corrector errors vs eps, one curve per (seed, phi),
    with a slope-1 guide line."""
    name = "convergence.csv"
    if name not in manifest.names():
        raise MissingColumns("manifest holds no convergence.csv")
    cols = read_table(manifest.file(name),
                      required=("seed", "eps", "time", "phi", "weak_err"))
    if not cols["eps"]:
        raise MissingColumns("convergence table is empty")
    seed = np.array(cols["seed"])
    eps = np.array([float(v) for v in cols["eps"]])
    tt = np.array([float(v) for v in cols["time"]])
    phi = np.array(cols["phi"])
    weak = np.array([float(v) for v in cols["weak_err"]])
    corr = np.array([float(v) if v else np.nan for v in cols.get("corrector_err", [""] * len(eps))])
    t_last = tt.max()
    at_t = np.abs(tt - t_last) < 1e-12

    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    for s in sorted(set(seed)):
        for p in sorted(set(phi)):
            m = at_t & (seed == s) & (phi == p)
            if not np.any(m):
                continue
            order = np.argsort(eps[m])
            ax.loglog(eps[m][order], weak[m][order], "o-",
                      label=f"seed {s}, phi {p}")
        mc = at_t & (seed == s) & np.isfinite(corr) & (phi == sorted(set(phi))[0])
        if np.any(mc):
            order = np.argsort(eps[mc])
            ax.loglog(eps[mc][order], corr[mc][order], "s--",
                      label=f"seed {s}, corrector")
    e0 = np.array(sorted(set(eps)))
    ref = weak[at_t].max() * e0 / e0.max()
    ax.loglog(e0, ref, "k:", label="slope 1")
    ax.set_xlabel("eps")
    ax.set_ylabel("error")
    ax.legend(fontsize=7)
    ax.set_title(f"{manifest.body['experiment']}: convergence at t={t_last:g}")
    out = _outfile(manifest, out_dir, "convergence")
    fig.savefig(out, dpi=110)
    plt.close(fig)
    return [out]


def render_fields(manifest: Manifest, out_dir) -> list:
    """1-D snapshot overlays of u_eps, ubar, and the corrector; 2-D heatmaps."""
    if "snapshots.json" not in manifest.names():
        raise MissingColumns("manifest holds no snapshots.json")
    index = json.loads(manifest.file("snapshots.json").read_text())
    outs = []
    for k, (t, fname) in enumerate(zip(index["times"], index["files"])):
        cols = read_table(manifest.file(fname), required=("u",))
        if index.get("dimension", 1) == 2:
            if "y" not in cols:
                raise MissingColumns(f"{fname}: 2-D snapshot needs x,y,u")
            n = index["n"]
            u = np.array([float(v) for v in cols["u"]]).reshape(n, n)
            fig, ax = plt.subplots(figsize=(5.4, 4.6))
            x = np.array([float(v) for v in cols["x"]]).reshape(n, n)
            y = np.array([float(v) for v in cols["y"]]).reshape(n, n)
            pc = ax.pcolormesh(x, y, u, shading="auto")
            fig.colorbar(pc, ax=ax, label="u")
            ax.set_xlabel("x1")
            ax.set_ylabel("x2")
        else:
            x = np.array([float(v) for v in cols["x"]])
            u = np.array([float(v) for v in cols["u"]])
            fig, ax = plt.subplots(figsize=(6.4, 4.2))
            ax.plot(x, u, lw=0.9, label="u_eps")
            if "ubar" in cols:
                ax.plot(x, [float(v) for v in cols["ubar"]], lw=1.4, label="ubar")
            if "corrector" in cols:
                ax.plot(x, [float(v) for v in cols["corrector"]], ":", lw=1.2,
                        label="corrector")
            ax.set_xlabel("x")
            ax.set_ylabel("u")
            ax.legend(fontsize=8)
        ax.set_title(f"{manifest.body['experiment']}: t = {t:g}")
        out = _outfile(manifest, out_dir, f"snapshot_{k}")
        fig.savefig(out, dpi=110)
        plt.close(fig)
        outs.append(out)
    return outs


def render_histogram(manifest: Manifest, out_dir) -> list:
    """Heatmap of a two-scale histogram (fast bin vs solution value)."""
    if "histogram.csv" not in manifest.names():
        raise MissingColumns("manifest holds no histogram.csv")
    cols = read_table(manifest.file("histogram.csv"),
                      required=("y_bin", "xi_mid", "weight"))
    yb = np.array([int(v) for v in cols["y_bin"]])
    xi = np.array([float(v) for v in cols["xi_mid"]])
    w = np.array([float(v) for v in cols["weight"]])
    ny = yb.max() + 1
    nxi = len(xi) // ny
    grid = w.reshape(ny, nxi)
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    pc = ax.pcolormesh(xi[:nxi], np.arange(ny), grid, shading="nearest")
    fig.colorbar(pc, ax=ax, label="weight")
    ax.set_xlabel("value")
    ax.set_ylabel("fast bin")
    ax.set_title(f"{manifest.body['experiment']}: two-scale histogram")
    out = _outfile(manifest, out_dir, "histogram")
    fig.savefig(out, dpi=110)
    plt.close(fig)
    return [out]


def render_moments(manifest: Manifest, out_dir) -> list:
    """Moment or contraction statistics vs time, with half-width bars."""
    name = None
    for cand in ("moments.csv", "contraction.csv"):
        if cand in manifest.names():
            name = cand
            break
    if name is None:
        raise MissingColumns("manifest holds neither moments.csv nor contraction.csv")
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    if name == "moments.csv":
        cols = read_table(manifest.file(name), required=("time", "p", "moment", "half_width"))
        t = np.array([float(v) for v in cols["time"]])
        p = np.array([int(float(v)) for v in cols["p"]])
        m = np.array([float(v) for v in cols["moment"]])
        hw = np.array([float(v) for v in cols["half_width"]])
        for pv in sorted(set(p)):
            sel = p == pv
            order = np.argsort(t[sel])
            ax.errorbar(t[sel][order], m[sel][order], yerr=hw[sel][order],
                        marker="o", capsize=3, label=f"p = {pv}")
        ax.set_ylabel("E int |u|^p w dx")
    else:
        cols = read_table(manifest.file(name), required=("t", "estimate", "half_width", "bound"))
        t = np.array([float(v) for v in cols["t"]])
        est = np.array([float(v) for v in cols["estimate"]])
        hw = np.array([float(v) for v in cols["half_width"]])
        bound = np.array([float(v) for v in cols["bound"]])
        order = np.argsort(t)
        ax.errorbar(t[order], est[order], yerr=hw[order], marker="o", capsize=3,
                    label="E int |u1-u2| w dx")
        ax.plot(t[order], bound[order], "k--", label="bound")
        ax.set_ylabel("weighted L1 distance")
    ax.set_xlabel("t")
    ax.legend(fontsize=8)
    ax.set_title(f"{manifest.body['experiment']}: moments")
    out = _outfile(manifest, out_dir, "moments")
    fig.savefig(out, dpi=110)
    plt.close(fig)
    return [out]


RENDERERS = {
    "convergence": render_convergence,
    "snapshot": render_fields,
    "histogram-heatmap": render_histogram,
    "moments": render_moments,
}
