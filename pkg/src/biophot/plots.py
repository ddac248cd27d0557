"""Figure rendering for run reports.

Each scenario kind gets one or two PNG figures next to the CSV/JSON
artifacts of its run directory.  Everything draws through the Agg backend
so reports work headless.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from scipy import stats  # noqa: E402

__all__ = ["render_figures"]

FIG_DPI = 140


def _read_csv(path: Path) -> dict[str, np.ndarray]:
    lines = path.read_text().strip().splitlines()
    header = lines[0].split(",")
    rows = [line.split(",") for line in lines[1:]]
    columns = {}
    for i, name in enumerate(header):
        try:
            columns[name] = np.array([float(r[i]) for r in rows])
        except ValueError:
            columns[name] = np.array([r[i] for r in rows], dtype=object)
    return columns


def _save(fig, outdir: Path, name: str, created: list[str]) -> None:
    path = outdir / name
    fig.savefig(path, dpi=FIG_DPI, bbox_inches="tight")
    plt.close(fig)
    created.append(name)


def _plot_evolve(outdir: Path, created: list[str]) -> None:
    data = _read_csv(outdir / "trajectory.csv")
    fig, (ax_top, ax_bottom) = plt.subplots(2, 1, figsize=(6.4, 5.6), sharex=True)
    floor = 1e-18
    ax_top.semilogy(data["t"], np.maximum(data["entropy"], floor), color="tab:blue")
    ax_top.axhline(math.log(2), color="gray", ls=":", lw=0.8, label="ln 2")
    ax_top.set_ylabel("reduced entropy (nats)")
    ax_top.legend(loc="best", fontsize=8)
    ax_bottom.semilogy(data["t"], np.maximum(data["defect"], floor),
                       color="tab:red", label="coherence defect")
    ax_bottom.semilogy(data["t"], np.maximum(data["top_level_population"], floor),
                       color="tab:gray", lw=0.8, label="top-level population")
    ax_bottom.set_xlabel("time")
    ax_bottom.legend(loc="best", fontsize=8)
    fig.suptitle("coupled-mode trajectory")
    _save(fig, outdir, "trajectory.png", created)

    flow = outdir / "flow_comparison.csv"
    if flow.exists():
        data = _read_csv(flow)
        fig, ax = plt.subplots(figsize=(6.4, 4.0))
        ax.plot(data["t"], data["re_a_full"], color="tab:blue", label="Re <a> full")
        ax.plot(data["t"], data["re_a_flow"], "--", color="tab:cyan", label="Re mu_a flow")
        ax.plot(data["t"], data["re_b_full"], color="tab:red", label="Re <b> full")
        ax.plot(data["t"], data["re_b_flow"], "--", color="tab:orange", label="Re mu_b flow")
        ax.set_xlabel("time")
        ax.set_ylabel("mode amplitude")
        ax.legend(fontsize=8)
        ax.set_title("first moments vs 2x2 amplitude flow")
        _save(fig, outdir, "amplitude_flow.png", created)


def _plot_ein_scan(outdir: Path, created: list[str]) -> None:
    data = json.loads((outdir / "ranking.json").read_text())
    entries = data["entries"]
    colors = {"coherent": "tab:blue", "fock": "tab:red", "random": "tab:gray"}
    fig, ax = plt.subplots(figsize=(6.4, 0.5 + 0.22 * len(entries)))
    floor = 1e-16
    for entry in entries:
        ax.barh(
            entry["rank"],
            max(entry["mean_entropy"], floor),
            color=colors.get(entry["family"], "tab:green"),
            height=0.7,
        )
    ax.set_yticks([e["rank"] for e in entries])
    ax.set_yticklabels([e["label"] for e in entries], fontsize=6)
    ax.set_xscale("log")
    ax.set_xlabel("time-averaged reduced entropy (nats)")
    ax.invert_yaxis()
    handles = [plt.Rectangle((0, 0), 1, 1, color=c) for c in colors.values()]
    ax.legend(handles, colors.keys(), fontsize=8, loc="lower right")
    ax.set_title("entropy ranking of candidate initial states")
    _save(fig, outdir, "ranking.png", created)


def _plot_clicks(outdir: Path, created: list[str]) -> None:
    for det in (0, 1):
        path = outdir / f"waiting_times_det{det}.csv"
        if not path.exists():
            continue
        data = _read_csv(path)
        summary = json.loads((outdir / "clicks_summary.json").read_text())
        fit = summary.get("waiting_times", {}).get(str(det))
        fig, ax = plt.subplots(figsize=(6.4, 4.0))
        widths = data["gap_high"] - data["gap_low"]
        ax.bar(data["gap_low"], data["count"], width=widths, align="edge",
               color="tab:blue", alpha=0.6, label="gaps")
        if fit:
            rate = fit["rate_estimate"]
            n = fit["n_gaps"]
            grid = np.linspace(data["gap_low"][0], data["gap_high"][-1], 200)
            ax.plot(grid, n * widths.mean() * rate * np.exp(-rate * grid),
                    color="tab:red", label=f"exponential fit, rate {rate:.4g}/s")
        ax.set_xlabel("inter-arrival time (s)")
        ax.set_ylabel("count")
        ax.legend(fontsize=8)
        ax.set_title(f"waiting times, detector {det}")
        _save(fig, outdir, f"waiting_times_det{det}.png", created)


def _plot_g2(outdir: Path, created: list[str]) -> None:
    data = _read_csv(outdir / "g2.csv")
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    ax.errorbar(data["lag"], data["g2"], yerr=data["stderr"], fmt="o-",
                ms=3, lw=1, color="tab:blue", ecolor="tab:gray", capsize=2)
    ax.axhline(1.0, color="gray", ls=":", lw=0.8)
    ax.set_xlabel("lag (s)")
    ax.set_ylabel("g2")
    ax.set_title("two-detector correlation")
    _save(fig, outdir, "g2.png", created)


def _plot_counting(outdir: Path, created: list[str]) -> None:
    data = _read_csv(outdir / "counting.csv")
    info = json.loads((outdir / "counting.json").read_text())
    counts = data["count"].astype(int)
    freqs = data["windows"]
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    ax.bar(counts, freqs, color="tab:blue", alpha=0.6, label="observed")
    grid = np.arange(0, counts.max() + 1)
    expected = info["n_windows"] * stats.poisson.pmf(grid, info["mean"])
    ax.plot(grid, expected, "o-", color="tab:red", ms=3, lw=1,
            label=f"Poisson(mean={info['mean']:.3g})")
    ax.set_xlabel("counts per window")
    ax.set_ylabel("windows")
    ax.set_title(f"counting statistics (Q = {info['mandel_q']:.3g})")
    ax.legend(fontsize=8)
    _save(fig, outdir, "counting.png", created)


def _plot_decay(outdir: Path, created: list[str]) -> None:
    data = _read_csv(outdir / "decay_data.csv")
    info = json.loads((outdir / "decay_fit.json").read_text())
    t = data["t"]
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    ax.plot(t, data["counts"], "o", ms=3, color="tab:gray", label="data")
    grid = np.linspace(t.min(), t.max(), 400)
    styles = {"exponential": ("tab:blue", "-"), "hyperbolic": ("tab:red", "--"),
              "exponential_modulated": ("tab:cyan", "-"),
              "hyperbolic_modulated": ("tab:orange", "--")}
    for fit in info["fits"]:
        params = fit["params"]
        if not params:
            continue
        base = params["i0"] * (
            np.exp(-grid / params["tau"])
            if fit["model"].startswith("exponential")
            else 1.0 / (1.0 + grid / params["tau"]) ** params.get("p", 1.0)
        )
        if fit["model"].endswith("modulated"):
            base = base * (1 + params["m"] * np.cos(params["omega"] * grid + params["phi"]))
        color, style = styles[fit["model"]]
        ax.plot(grid, base, style, color=color, lw=1.2,
                label=f"{fit['model']} (AIC {fit['aic']:.1f})")
    ax.set_xlabel("time")
    ax.set_ylabel("intensity")
    ax.legend(fontsize=8)
    ax.set_title(f"decay model comparison (best: {info['best_model']})")
    _save(fig, outdir, "decay_fit.png", created)


def _rho_panels(rho_json, title: str, outdir: Path, name: str, created: list[str]) -> None:
    rho = np.array([[complex(re, im) for re, im in row] for row in rho_json])
    fig, axes = plt.subplots(1, 2, figsize=(7.6, 3.4))
    labels = ["HH", "HV", "VH", "VV"]
    for ax, part, label in ((axes[0], rho.real, "Re"), (axes[1], rho.imag, "Im")):
        im = ax.imshow(part, vmin=-0.5, vmax=0.5, cmap="RdBu_r")
        ax.set_xticks(range(4), labels, fontsize=7)
        ax.set_yticks(range(4), labels, fontsize=7)
        ax.set_title(f"{label}(rho)", fontsize=9)
        fig.colorbar(im, ax=ax, shrink=0.8)
    fig.suptitle(title)
    _save(fig, outdir, name, created)


def _plot_tomography(outdir: Path, created: list[str]) -> None:
    info = json.loads((outdir / "tomography.json").read_text())
    for method in ("mle", "linear_inversion"):
        if method in info:
            _rho_panels(
                info[method]["rho"],
                f"reconstructed density matrix ({method})",
                outdir,
                f"rho_{method}.png",
                created,
            )


def _plot_counts_table(outdir: Path, created: list[str]) -> None:
    info = json.loads((outdir / "counts.json").read_text())
    settings = sorted(info["counts"])
    outcomes = {s: sorted(info["counts"][s]) for s in settings}
    mat = np.array([[info["counts"][s][o] for o in outcomes[s]] for s in settings], dtype=float)
    fig, ax = plt.subplots(figsize=(6.4, 0.6 + 0.35 * len(settings)))
    im = ax.imshow(mat, aspect="auto", cmap="viridis")
    ax.set_yticks(range(len(settings)), settings, fontsize=7)
    ax.set_xticks(range(mat.shape[1]))
    ax.set_xticklabels(outcomes[settings[0]], fontsize=7)
    ax.set_xlabel("outcome")
    fig.colorbar(im, ax=ax, label="counts")
    ax.set_title("joint outcome counts per setting")
    _save(fig, outdir, "counts.png", created)


def _plot_bell(outdir: Path, created: list[str]) -> None:
    info = json.loads((outdir / "bell.json").read_text())
    fig, ax = plt.subplots(figsize=(5.4, 3.6))
    values = [abs(info["s_at_angles"]), info["optimized"]["value"]]
    ax.bar(["|S| at given angles", "optimized S"], values, color=["tab:blue", "tab:red"], width=0.5)
    ax.axhline(2.0, color="gray", ls="--", lw=1, label="classical bound")
    ax.axhline(2 * math.sqrt(2), color="black", ls=":", lw=1, label="quantum bound")
    ax.set_ylabel("S")
    ax.legend(fontsize=8)
    ax.set_title("Bell combination")
    _save(fig, outdir, "bell.png", created)


def render_figures(outdir: Path, scenario: str) -> list[str]:
    """Render the figures for one run directory; returns created file names."""
    outdir = Path(outdir)
    created: list[str] = []
    if scenario == "evolve":
        _plot_evolve(outdir, created)
    elif scenario == "ein_scan":
        _plot_ein_scan(outdir, created)
    elif scenario == "clicks":
        _plot_clicks(outdir, created)
    elif scenario == "g2":
        _plot_g2(outdir, created)
    elif scenario == "counting":
        _plot_counting(outdir, created)
    elif scenario == "decay_fit":
        _plot_decay(outdir, created)
    elif scenario == "tomo_sim":
        _plot_counts_table(outdir, created)
    elif scenario == "tomo_fit":
        _plot_tomography(outdir, created)
    elif scenario == "full_pipeline":
        _plot_counts_table(outdir, created)
        _plot_tomography(outdir, created)
    elif scenario == "bell":
        _plot_bell(outdir, created)
    return created
