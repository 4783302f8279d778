import hashlib

import numpy as np
import pytest

from figplots import FigureRecipe, SchemaError, build_figure, render


def write_bands(path, n=8, detached=True):
    rows = ["nu,K,E_over_J,label"]
    for nu in range(1, n + 1):
        k = 2 * np.pi * nu / n
        for q in range(1, n // 2 + 1):
            e = -4 * abs(np.cos(k / 2)) * np.cos(np.pi * q / (n + 1))
            rows.append(f"{nu},{float(k)!r},{float(e)!r},scattering")
        if detached:
            rows.append(f"{nu},{float(k)!r},{float(4.8 + 0.8 * np.cos(k))!r},bound")
    path.write_text("\n".join(rows) + "\n")
    return path


def write_projections(path, m=20):
    rng = np.random.default_rng(0)
    p = rng.random(m)
    p /= p.sum()
    rows = ["E_over_J,P"] + [f"{float(e)!r},{float(w)!r}"
                             for e, w in zip(np.linspace(-4, 5, m), p)]
    path.write_text("\n".join(rows) + "\n")
    return path


def write_variance(path, coef=2.0, err=0.05):
    taus = np.arange(0.0, 5.01, 0.5)
    rows = ["tau,sigma2_raw,sigma2_shifted,stderr"]
    for t in taus:
        raw = 0.25 + coef * t**2
        rows.append(f"{float(t)!r},{float(raw)!r},{float(raw - 0.25)!r},{float(err * raw)!r}")
    path.write_text("\n".join(rows) + "\n")
    return path


def write_occupation(path, n_sites=12, peak=1.0):
    taus = np.arange(0.0, 3.01, 0.5)
    rows = ["tau,site,n"]
    for t in taus:
        width = 0.6 + 1.2 * t
        prof = np.exp(-((np.arange(n_sites) - n_sites / 2) / width) ** 2)
        prof *= 2.0 * peak / prof.sum()
        for s in range(n_sites):
            rows.append(f"{float(t)!r},{s},{float(prof[s])!r}")
    path.write_text("\n".join(rows) + "\n")
    return path


def write_gain(path):
    gammas = np.logspace(0, np.log10(200), 8)
    rows = ["U_over_J,gamma,g_sigma,stderr"]
    for u, peak in ((40.0, 10.0), (100.0, 45.0)):
        for g in gammas:
            val = 1.5 * np.exp(-0.5 * np.log(g / peak) ** 2)
            rows.append(f"{float(u)!r},{float(g)!r},{float(val)!r},0.05")
    path.write_text("\n".join(rows) + "\n")
    return path


def write_autocorr(path):
    lags = np.array([0.25, 0.5, 1.0])
    rows = ["lag,estimate,stderr,analytic"]
    for lag in lags:
        analytic = 0.81 * np.exp(-2 * lag)
        rows.append(f"{float(lag)!r},{float(analytic * 1.01)!r},0.01,{float(analytic)!r}")
    path.write_text("\n".join(rows) + "\n")
    return path


WRITERS = {
    "bands": write_bands,
    "projections": write_projections,
    "variance": write_variance,
    "occupation": write_occupation,
    "gain": write_gain,
    "autocorr": write_autocorr,
}


@pytest.mark.parametrize("kind", sorted(WRITERS))
def test_every_kind_renders(tmp_path, kind):
    csv = WRITERS[kind](tmp_path / f"{kind}.csv")
    out = render(FigureRecipe(kind=kind, inputs=(csv,),
                              output=tmp_path / f"{kind}.png"))
    assert out.exists() and out.stat().st_size > 1000


def test_multi_panel_inputs(tmp_path):
    a = write_bands(tmp_path / "bands_u0.csv", detached=False)
    b = write_bands(tmp_path / "bands_u14.csv", detached=True)
    out = render(FigureRecipe(kind="bands", inputs=(a, b),
                              output=tmp_path / "bands.png"))
    assert out.exists()


def test_variance_series_selection(tmp_path):
    csv = write_variance(tmp_path / "variance_r1.csv")
    raw = render(FigureRecipe("variance", (csv,), tmp_path / "raw.png"))
    shifted = render(FigureRecipe("variance", (csv,), tmp_path / "shifted.png",
                                  series="shifted"))
    assert raw.read_bytes() != shifted.read_bytes()
    with pytest.raises(ValueError):
        FigureRecipe("variance", (csv,), tmp_path / "x.png", series="weird")


def test_occupation_panels_share_color_scale(tmp_path):
    weak = write_occupation(tmp_path / "occupation_noiseless.csv", peak=0.6)
    strong = write_occupation(tmp_path / "occupation_fast.csv", peak=1.0)
    fig = build_figure(FigureRecipe("occupation", (weak, strong),
                                    tmp_path / "occ.png"))
    clims = [ax.images[0].get_clim() for ax in fig.axes if ax.images]
    assert len(clims) == 2
    assert clims[0] == clims[1]


def test_schema_mismatch_names_columns(tmp_path):
    bad = tmp_path / "gain.csv"
    bad.write_text("U_over_J,gamma,gain\n40,1,0.5\n")
    with pytest.raises(SchemaError, match="g_sigma"):
        render(FigureRecipe("gain", (bad,), tmp_path / "gain.png"))


def test_unknown_kind_rejected(tmp_path):
    with pytest.raises(ValueError, match="unknown figure kind"):
        FigureRecipe("sparkline", (tmp_path / "x.csv",), tmp_path / "x.png")


def test_render_is_deterministic(tmp_path):
    csv = write_gain(tmp_path / "gain.csv")
    h = []
    for name in ("one.png", "two.png"):
        out = render(FigureRecipe("gain", (csv,), tmp_path / name))
        h.append(hashlib.sha256(out.read_bytes()).hexdigest())
    assert h[0] == h[1]


def test_cli_round_trip(tmp_path, capsys):
    from figplots.cli import main

    csv = write_autocorr(tmp_path / "autocorr.csv")
    out = tmp_path / "fig.png"
    assert main(["autocorr", "--in", str(csv), "--out", str(out)]) == 0
    assert out.exists()
    assert str(out) in capsys.readouterr().out

    bad = tmp_path / "bad.csv"
    bad.write_text("lag,estimate\n0.5,0.1\n")
    code = main(["autocorr", "--in", str(bad), "--out", str(tmp_path / "b.png")])
    assert code == 2
    assert "stderr" in capsys.readouterr().err
