import json

import numpy as np
import pytest

from fbmplots import FigureSpec, PlotError, plot_decay, plot_gaps, plot_growth, plot_kcurve, render


def write_solution_csv(path, times, norms):
    rows = ["t,norm_u,mode_0"]
    rows += [f"{t},{n},{n}" for t, n in zip(times, norms)]
    path.write_text("\n".join(rows) + "\n")
    return str(path)


def write_stoptimes_csv(path, times):
    rows = ["i,T_i,gap,f_residual"]
    prev = 0.0
    for i, t in enumerate(times, start=1):
        rows.append(f"{i},{t},{t - prev},0")
        prev = t
    path.write_text("\n".join(rows) + "\n")
    return str(path)


def write_summary(path, mu=0.05, D=0.04):
    path.write_text(json.dumps({"mu": mu, "D_hat": D, "d_hat": 0.9, "dbar_hat": 0.1}))
    return str(path)


class TestFigureSpec:
    def test_unknown_kind_rejected(self):
        with pytest.raises(PlotError):
            FigureSpec("sparkline", ("a.csv",), "b.png")

    def test_inputs_required(self):
        with pytest.raises(PlotError):
            FigureSpec("decay", (), "b.png")


class TestDecay:
    def test_zero_solution_renders_at_floor(self, tmp_path):
        ts = np.linspace(0, 1, 50)
        csv = write_solution_csv(tmp_path / "s.csv", ts, np.zeros(50))
        fig = plot_decay(csv, None, str(tmp_path / "d.png"))
        assert np.all(fig.norms == 1e-300)
        assert (tmp_path / "d.png").exists()

    def test_pure_semigroup_straight_line(self, tmp_path):
        # slope of log ||u|| for exp(-lam1 t) is -lam1 on the log axis
        lam1 = 9.87
        ts = np.linspace(0, 1, 200)
        csv = write_solution_csv(tmp_path / "s.csv", ts, np.exp(-lam1 * ts))
        fig = plot_decay(csv, None, str(tmp_path / "d.png"))
        slopes = np.diff(np.log(fig.norms)) / np.diff(fig.times)
        assert np.allclose(slopes, -lam1, rtol=1e-9)

    def test_missing_column_names_it(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("t,mode_0\n0,1\n1,0.5\n")
        with pytest.raises(PlotError, match="norm_u"):
            plot_decay(str(bad), None, str(tmp_path / "d.png"))

    def test_reference_lines_from_report(self, tmp_path):
        ts = np.linspace(0, 1, 50)
        csv = write_solution_csv(tmp_path / "s.csv", ts, np.exp(-2 * ts))
        rep = tmp_path / "r.json"
        rep.write_text(json.dumps({"rho": 1.5, "estimates": {"rho_star": 1.9}}))
        fig = plot_decay(csv, str(rep), str(tmp_path / "d.png"))
        assert fig.rho == 1.5 and fig.rho_star == 1.9


class TestGaps:
    def test_uniform_gaps_single_bar(self, tmp_path):
        mu = 0.05
        csv = write_stoptimes_csv(tmp_path / "st.csv", mu * np.arange(1, 41))
        summary = write_summary(tmp_path / "sum.json", mu=mu)
        fig = plot_gaps(csv, summary, str(tmp_path / "g.png"))
        assert fig.n_occupied_bins == 1
        occupied = np.flatnonzero(fig.bin_counts > 0)[0]
        assert fig.bin_edges[occupied + 1] == pytest.approx(mu)

    def test_gaps_clipped_at_mu(self, tmp_path):
        csv = write_stoptimes_csv(tmp_path / "st.csv", [0.03, 0.09, 0.13])
        summary = write_summary(tmp_path / "sum.json", mu=0.05)
        fig = plot_gaps(csv, summary, str(tmp_path / "g.png"))
        assert fig.gaps.max() <= 0.05

    def test_empty_csv_rejected(self, tmp_path):
        empty = tmp_path / "st.csv"
        empty.write_text("")
        summary = write_summary(tmp_path / "sum.json")
        with pytest.raises(PlotError, match="empty"):
            plot_gaps(str(empty), summary, str(tmp_path / "g.png"))

    def test_header_only_rejected(self, tmp_path):
        empty = tmp_path / "st.csv"
        empty.write_text("i,T_i,gap,f_residual\n")
        summary = write_summary(tmp_path / "sum.json")
        with pytest.raises(PlotError, match="no data rows"):
            plot_gaps(str(empty), summary, str(tmp_path / "g.png"))


class TestGrowth:
    def test_ratios_computed(self, tmp_path):
        mu = 0.05
        csv = write_stoptimes_csv(tmp_path / "st.csv", mu * np.arange(1, 21))
        summary = write_summary(tmp_path / "sum.json", mu=mu, D=0.04)
        fig = plot_growth(csv, summary, str(tmp_path / "g.png"))
        assert np.allclose(fig.ratios, mu)
        assert fig.D_hat == 0.04
        assert np.all(fig.ratios >= fig.D_hat)

    def test_missing_summary_key(self, tmp_path):
        csv = write_stoptimes_csv(tmp_path / "st.csv", [0.05, 0.1])
        bad = tmp_path / "sum.json"
        bad.write_text(json.dumps({"mu": 0.05}))
        with pytest.raises(PlotError, match="D_hat"):
            plot_growth(csv, str(bad), str(tmp_path / "g.png"))


class TestKCurve:
    def _report(self, tmp_path, p=0.1):
        lam, cd = 5.0, 0.5
        mu = np.geomspace(1e-5, 1.9995, 200)
        K = np.exp(lam * mu) * (1 + p / mu**0.5) * cd / (1 - cd * mu)
        j = int(np.argmin(K))
        rep = tmp_path / "rep.json"
        rep.write_text(json.dumps({
            "kcurve": {"mu": mu.tolist(), "K": K.tolist(), "lambda": lam,
                        "mu_opt": float(mu[j]), "K_min": float(K[j]),
                        "satisfied": bool(lam > K[j]), "p": p, "q": 0.5},
        }))
        return str(rep), mu, K, j

    def test_curve_diverges_at_ends_and_marker_at_argmin(self, tmp_path):
        rep, mu, K, j = self._report(tmp_path)
        fig = plot_kcurve(rep, str(tmp_path / "k.png"))
        assert fig.K[0] > fig.K[j] * 5
        assert fig.K[-1] > fig.K[j] * 5
        assert fig.mu_opt == pytest.approx(mu[j])

    def test_monotone_near_zero_when_p_zero(self, tmp_path):
        lam, cd = 5.0, 0.5
        mu = np.linspace(1e-3, 1.0, 50)
        K = np.exp(lam * mu) * cd / (1 - cd * mu)
        rep = tmp_path / "rep.json"
        rep.write_text(json.dumps({
            "kcurve": {"mu": mu.tolist(), "K": K.tolist(), "lambda": lam,
                        "mu_opt": float(mu[0]), "K_min": float(K[0]),
                        "satisfied": True, "p": 0.0, "q": 0.5},
        }))
        fig = plot_kcurve(str(rep), str(tmp_path / "k.png"))
        assert np.all(np.diff(fig.K) > 0)  # increasing toward the pole, inf at 0+

    def test_missing_kcurve_key(self, tmp_path):
        rep = tmp_path / "rep.json"
        rep.write_text(json.dumps({"satisfied": True}))
        with pytest.raises(PlotError, match="kcurve"):
            plot_kcurve(str(rep), str(tmp_path / "k.png"))


class TestDeterminism:
    def test_png_and_svg_byte_stable(self, tmp_path):
        mu = 0.05
        csv = write_stoptimes_csv(tmp_path / "st.csv", mu * np.arange(1, 31))
        summary = write_summary(tmp_path / "sum.json", mu=mu)
        blobs = {}
        for ext in ("png", "svg"):
            pair = []
            for tag in ("a", "b"):
                out = tmp_path / f"{tag}.{ext}"
                render(FigureSpec("gaps", (csv, summary), str(out)))
                pair.append(out.read_bytes())
            blobs[ext] = pair
        assert blobs["png"][0] == blobs["png"][1]
        assert blobs["svg"][0] == blobs["svg"][1]
