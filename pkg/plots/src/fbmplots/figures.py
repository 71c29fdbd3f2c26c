"""Figure builders over the fbmlab file contracts.

Inputs are only the documented artifacts: solution CSVs
(``t,norm_u,mode_*``), stopping-time CSVs (``i,T_i,gap,f_residual``), the
stopping summary JSON and the stability report JSON. Each builder returns
the data it drew alongside writing the image, so tests can assert on the
rendered content without parsing pixels.

Rendering is deterministic: the Agg/SVG backends are used with a fixed hash
salt and without date metadata, so identical inputs give identical bytes.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

matplotlib.rcParams["svg.hashsalt"] = "fbmplots"

__all__ = [
    "FigureSpec",
    "PlotError",
    "plot_decay",
    "plot_gaps",
    "plot_growth",
    "plot_kcurve",
    "render",
]

PLOT_FLOOR = 1e-300

FIGURE_KINDS = ("decay", "gaps", "growth", "kcurve")


class PlotError(ValueError):
    """Bad or incomplete plotting inputs."""


@dataclass(frozen=True)
class FigureSpec:
    kind: str
    inputs: tuple[str, ...]
    output: str
    log_scale: bool = True

    def __post_init__(self):
        if self.kind not in FIGURE_KINDS:
            raise PlotError(f"unknown figure kind {self.kind!r}; "
                            f"expected one of {FIGURE_KINDS}")
        if not self.inputs:
            raise PlotError("figure needs at least one input file")


def _read_csv(path: str, required: tuple[str, ...]) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise PlotError(f"{path}: empty CSV") from None
        rows = [row for row in reader if row]
    if not rows:
        raise PlotError(f"{path}: CSV has a header but no data rows")
    for col in required:
        if col not in header:
            raise PlotError(f"{path}: missing required column {col!r}")
    data = np.asarray([[float(v) for v in row] for row in rows])
    return {name: data[:, i] for i, name in enumerate(header)}


def _read_json(path: str) -> dict:
    with open(path) as fh:
        return json.load(fh)


def _save(fig, output: str) -> None:
    metadata = {"Date": None} if output.endswith(".svg") else None
    fig.savefig(output, metadata=metadata)
    plt.close(fig)


@dataclass
class DecayFigure:
    output: str
    times: np.ndarray
    norms: np.ndarray
    rho: float | None
    rho_star: float | None


def plot_decay(solution_csv: str, report_json: str | None, output: str) -> DecayFigure:
    """Log-scale ||u(t)|| with exp(-rho t) and exp(-rho* t) reference lines.

    Norms at or below the plot floor are clipped so a fully decayed (zero)
    solution renders as a flat line at the floor.
    """
    cols = _read_csv(solution_csv, required=("t", "norm_u"))
    times = cols["t"]
    norms = np.maximum(cols["norm_u"], PLOT_FLOOR)
    rho = rho_star = None
    if report_json is not None:
        rep = _read_json(report_json)
        rho = rep.get("rho")
        rho_star = rep.get("estimates", {}).get("rho_star")
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.semilogy(times, norms, lw=1.2, color="tab:blue", label="||u(t)||")
    anchor = max(norms[0], PLOT_FLOOR)
    for rate, style, name in ((rho, "--", "exp(-rho t)"),
                              (rho_star, ":", "exp(-rho* t)")):
        if rate is not None:
            ref = np.maximum(anchor * np.exp(-rate * (times - times[0])), PLOT_FLOOR)
            ax.semilogy(times, ref, style, lw=1.0, label=f"{name}, rate {rate:.3g}")
    ax.set_xlabel("t")
    ax.set_ylabel("norm")
    ax.legend(loc="upper right", fontsize=8)
    ax.set_title("solution decay")
    fig.tight_layout()
    _save(fig, output)
    return DecayFigure(output, times, norms, rho, rho_star)


@dataclass
class GapsFigure:
    output: str
    gaps: np.ndarray
    mu: float
    bin_counts: np.ndarray
    bin_edges: np.ndarray

    @property
    def n_occupied_bins(self) -> int:
        return int((self.bin_counts > 0).sum())


def plot_gaps(stoptimes_csv: str, summary_json: str, output: str,
              bins: int = 40) -> GapsFigure:
    """Histogram of inter-stopping-time gaps, clipped at mu."""
    cols = _read_csv(stoptimes_csv, required=("i", "T_i", "gap"))
    summary = _read_json(summary_json)
    if "mu" not in summary:
        raise PlotError(f"{summary_json}: missing required key 'mu'")
    mu = float(summary["mu"])
    gaps = np.minimum(cols["gap"], mu)
    counts, edges = np.histogram(gaps, bins=bins, range=(0.0, mu))
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(edges[:-1], counts, width=np.diff(edges), align="edge",
           color="tab:orange", edgecolor="black", lw=0.3)
    ax.axvline(mu, color="black", lw=1.0, ls="--", label="mu")
    ax.set_xlabel("gap T_{i+1} - T_i")
    ax.set_ylabel("count")
    ax.set_title("stopping-time gaps")
    ax.legend(fontsize=8)
    fig.tight_layout()
    _save(fig, output)
    return GapsFigure(output, gaps, mu, counts, edges)


@dataclass
class GrowthFigure:
    output: str
    ks: np.ndarray
    ratios: np.ndarray
    D_hat: float


def plot_growth(stoptimes_csv: str, summary_json: str, output: str) -> GrowthFigure:
    """T_k / k against the growth constant D_hat."""
    cols = _read_csv(stoptimes_csv, required=("i", "T_i"))
    summary = _read_json(summary_json)
    if "D_hat" not in summary:
        raise PlotError(f"{summary_json}: missing required key 'D_hat'")
    D_hat = float(summary["D_hat"])
    ks = cols["i"].astype(int)
    ratios = cols["T_i"] / np.maximum(ks, 1)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(ks, ratios, lw=1.0, color="tab:green", label="T_k / k")
    ax.axhline(D_hat, color="black", lw=1.0, ls="--", label="D_hat")
    ax.set_xlabel("k")
    ax.set_ylabel("T_k / k")
    ax.set_title("stopping-time growth")
    ax.legend(fontsize=8)
    fig.tight_layout()
    _save(fig, output)
    return GrowthFigure(output, ks, ratios, D_hat)


@dataclass
class KCurveFigure:
    output: str
    mu: np.ndarray
    K: np.ndarray
    lam: float
    mu_opt: float
    satisfied: bool


def plot_kcurve(report_json: str, output: str) -> KCurveFigure:
    """K(mu) with the decay-rate level line and the minimizer marked."""
    rep = _read_json(report_json)
    if "kcurve" not in rep:
        raise PlotError(f"{report_json}: missing required key 'kcurve'")
    kc = rep["kcurve"]
    mu = np.asarray(kc["mu"])
    K = np.asarray(kc["K"])
    lam = float(kc["lambda"])
    mu_opt = float(kc["mu_opt"])
    k_min = float(kc["K_min"])
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.semilogy(mu, K, lw=1.2, color="tab:red", label="K(mu)")
    ax.axhline(lam, color="black", lw=1.0, ls="--", label="lambda")
    ax.plot([mu_opt], [k_min], "v", color="black", ms=7, label="mu_opt")
    ax.set_xlabel("mu")
    ax.set_ylabel("K")
    ax.set_title(f"sufficient condition (satisfied: {kc['satisfied']})")
    ax.legend(fontsize=8)
    fig.tight_layout()
    _save(fig, output)
    return KCurveFigure(output, mu, K, lam, mu_opt, bool(kc["satisfied"]))


def render(spec: FigureSpec):
    """Dispatch a FigureSpec to its builder."""
    if spec.kind == "decay":
        report = spec.inputs[1] if len(spec.inputs) > 1 else None
        return plot_decay(spec.inputs[0], report, spec.output)
    if spec.kind == "gaps":
        if len(spec.inputs) < 2:
            raise PlotError("gaps figures need a stoptimes CSV and a summary JSON")
        return plot_gaps(spec.inputs[0], spec.inputs[1], spec.output)
    if spec.kind == "growth":
        if len(spec.inputs) < 2:
            raise PlotError("growth figures need a stoptimes CSV and a summary JSON")
        return plot_growth(spec.inputs[0], spec.inputs[1], spec.output)
    return plot_kcurve(spec.inputs[0], spec.output)
