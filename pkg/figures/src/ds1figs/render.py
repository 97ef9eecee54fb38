"""The six figure kinds rendered from solver output files.

Every renderer takes parsed inputs plus an output path, writes a PNG, and
returns a small summary dict (used by tests and printed by the CLI).
Rendering is deterministic for fixed inputs: fixed figure geometry, fixed
color maps, constant PNG metadata.

Defaults per kind: surface and contour use viridis over |values| with the
default viewing angle; spectrum shows log10 coefficient moduli (fftshifted,
viridis); norms draws each traced norm on a log-scaled y axis; loglog_fit
overlays the traced norm, the fitted line a*log10(t*-t)+b, and optionally
the generic loglog-rate curve; residual shows |values| with a diverging map.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .formats import NormSeries, Snapshot

_SAVE = dict(dpi=110, metadata={"Software": "ds1figs"})


def _downsample(a: np.ndarray, target: int = 256) -> tuple[np.ndarray, int]:
    stride = max(1, a.shape[0] // target, a.shape[1] // target)
    return a[::stride, ::stride], stride


def render_surface(snap: Snapshot, out: str | Path) -> dict:
    mag, stride = _downsample(np.abs(snap.values))
    xi = snap.xi[::stride][: mag.shape[0]]
    eta = snap.eta[::stride][: mag.shape[1]]
    x, y = np.meshgrid(xi, eta, indexing="ij")
    fig = plt.figure(figsize=(7, 5.5))
    ax = fig.add_subplot(projection="3d")
    ax.plot_surface(x, y, mag, cmap="viridis", linewidth=0, antialiased=False,
                    rstride=1, cstride=1)
    ax.set_xlabel(r"$\xi$")
    ax.set_ylabel(r"$\eta$")
    ax.set_zlabel(r"$|\Psi|$")
    ax.set_title(f"t = {snap.time:g}")
    fig.savefig(out, **_SAVE)
    plt.close(fig)
    return {"kind": "surface", "max": float(mag.max()), "stride": stride}


def render_contour(snap: Snapshot, out: str | Path) -> dict:
    mag, stride = _downsample(np.abs(snap.values), 512)
    xi = snap.xi[::stride][: mag.shape[0]]
    eta = snap.eta[::stride][: mag.shape[1]]
    fig, ax = plt.subplots(figsize=(6, 5))
    cs = ax.contour(xi, eta, mag.T, levels=12, cmap="viridis")
    ax.set_xlabel(r"$\xi$")
    ax.set_ylabel(r"$\eta$")
    ax.set_aspect("equal")
    ax.set_title(f"t = {snap.time:g}")
    fig.colorbar(cs, ax=ax)
    fig.savefig(out, **_SAVE)
    plt.close(fig)
    return {"kind": "contour", "levels": 12, "stride": stride}


def render_spectrum(snap: Snapshot, out: str | Path) -> dict:
    if snap.representation == "fourier":
        coeffs = snap.values
    else:
        # quadrature-scaled transform: the constant only shifts the log plot
        h = (2.0 * np.pi * snap.l_xi / snap.n_xi) * (2.0 * np.pi * snap.l_eta / snap.n_eta)
        coeffs = h * np.fft.fft2(snap.values)
    mag = np.abs(coeffs)
    peak = mag.max()
    rel = np.fft.fftshift(mag / peak)
    with np.errstate(divide="ignore"):
        logmag = np.log10(rel)
    # robust floor estimate: median log-magnitude over the corner quarter
    q = rel.shape[0] // 4
    corner = logmag[:q, :q]
    floor = float(np.median(corner[np.isfinite(corner)]))
    small, stride = _downsample(logmag, 512)
    fig, ax = plt.subplots(figsize=(6, 5))
    im = ax.imshow(small.T, origin="lower", cmap="viridis", vmin=-17, vmax=0)
    ax.set_xlabel(r"$k_\xi$ index")
    ax.set_ylabel(r"$k_\eta$ index")
    ax.set_title("log10 |coefficients| / peak")
    fig.colorbar(im, ax=ax)
    fig.savefig(out, **_SAVE)
    plt.close(fig)
    return {"kind": "spectrum", "log10_floor": floor, "peak": float(peak)}


def render_norms(series: NormSeries, out: str | Path) -> dict:
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.plot(series.t, series.linf, label=r"$\|\Psi\|_\infty$", lw=1.2)
    ax.plot(series.t, np.sqrt(series.mass), label=r"$\|\Psi\|_2$", lw=1.0)
    ax.plot(series.t, series.l2gradxi, label=r"$\|\Psi_\xi\|_2$", lw=1.0)
    ax.plot(series.t, series.l2gradeta, label=r"$\|\Psi_\eta\|_2$", lw=1.0)
    ax.set_xlabel("t")
    ax.set_yscale("log")
    ax.legend(loc="best", fontsize=8)
    fig.savefig(out, **_SAVE)
    plt.close(fig)
    trend = "decreasing" if series.linf[-1] < series.linf[0] else "increasing"
    return {"kind": "norms", "rows": int(series.t.size), "linf_trend": trend}


def render_loglog_fit(series: NormSeries, fits: dict, out: str | Path,
                      norm: str = "linf") -> dict:
    report = fits.get("linf" if norm == "linf" else "grad")
    if report is None:
        raise ValueError(f"fit report for {norm!r} missing from the fits document")
    a, b, t_star = report["a"], report["b"], report["t_star"]
    keep = (series.delta <= -3.0) & (series.t < t_star)
    t = series.t[keep]
    y = series.linf[keep] if norm == "linf" else series.l2gradxi[keep] ** 2
    tau = t_star - t
    fig, ax = plt.subplots(figsize=(6.5, 4.5))
    ax.plot(np.log10(tau), np.log10(y), ".", ms=2, label="data")
    # fitted ln y = -a ln(tau) + b, drawn in decimal logs
    ax.plot(np.log10(tau), (-a * np.log(tau) + b) / np.log(10.0), "r-", lw=1.2,
            label=f"fit a={a:.3f}")
    valid = tau < np.exp(-1.05)
    if valid.any():
        rate = np.sqrt(tau[valid] / np.log(np.abs(np.log(tau[valid]))))
        # generic loglog rate up to a constant; anchor at the last data point
        anchor = np.log10(y[valid][-1]) + np.log10(rate[-1])
        ax.plot(np.log10(tau[valid]), anchor - np.log10(rate), "g--", lw=1.0,
                label="loglog rate")
    ax.set_xlabel(r"$\log_{10}(t^*-t)$")
    ax.set_ylabel(r"$\log_{10}$ norm")
    ax.invert_xaxis()
    ax.legend(fontsize=8)
    fig.savefig(out, **_SAVE)
    plt.close(fig)
    return {"kind": "loglog_fit", "a": a, "b": b, "t_star": t_star, "points": int(t.size)}


def render_residual(snap: Snapshot, out: str | Path) -> dict:
    vals, stride = _downsample(snap.values.real, 512)
    xi = snap.xi[::stride][: vals.shape[0]]
    eta = snap.eta[::stride][: vals.shape[1]]
    lim = float(np.max(np.abs(vals))) or 1.0
    fig, ax = plt.subplots(figsize=(6, 5))
    im = ax.pcolormesh(xi, eta, vals.T, cmap="RdBu_r", vmin=-lim, vmax=lim)
    ax.set_xlabel(r"$\xi$")
    ax.set_ylabel(r"$\eta$")
    ax.set_aspect("equal")
    ax.set_title(f"residual, t = {snap.time:g}")
    fig.colorbar(im, ax=ax)
    fig.savefig(out, **_SAVE)
    plt.close(fig)
    return {"kind": "residual", "max_abs": lim}
