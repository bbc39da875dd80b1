import csv
import json

import pytest

from netsectors.cli import main
from test_ingest import MBOX


def run(*argv):
    return main([str(a) for a in argv])


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture(scope="module")
def pa_corpus(tmp_path_factory):
    d = tmp_path_factory.mktemp("pa")
    assert run("synth", "--generator", "preferential_attachment", "--n", 1000, "--m", 5, "--seed", 3, "--out", d) == 0
    return d / "messages.jsonl"


@pytest.fixture(scope="module")
def small_corpus(tmp_path_factory):
    d = tmp_path_factory.mktemp("rp")
    assert run("synth", "--messages", 2000, "--authors", 300, "--seed", 1, "--out", d) == 0
    return d / "messages.jsonl"


def test_ingest_outputs(small_corpus, tmp_path):
    assert run("ingest", "--input", small_corpus, "--out", tmp_path) == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert set(summary) == {"N", "Gamma", "M_missing", "date_first", "date_last", "M"}
    assert summary["M"] == 2000
    assert (tmp_path / "messages.jsonl").read_text() == small_corpus.read_text()


def test_empty_jsonl_fails(tmp_path, capsys):
    empty = tmp_path / "empty.jsonl"
    empty.write_text("")
    assert run("ingest", "--input", empty, "--out", tmp_path / "o") != 0
    assert "error" in capsys.readouterr().err


def test_unreadable_input_fails(tmp_path, capsys):
    assert run("ingest", "--input", tmp_path / "missing.jsonl", "--out", tmp_path) != 0
    assert "netsectors ingest: error" in capsys.readouterr().err


def test_mbox_round_trip(tmp_path):
    box = tmp_path / "a.mbox"
    box.write_bytes(MBOX)
    assert run("ingest", "--input", box, "--format", "mbox", "--out", tmp_path / "one") == 0
    again = tmp_path / "one" / "messages.jsonl"
    assert run("ingest", "--input", again, "--out", tmp_path / "two") == 0
    first = json.loads((tmp_path / "one" / "summary.json").read_text())
    second = json.loads((tmp_path / "two" / "summary.json").read_text())
    first.pop("M_missing"), second.pop("M_missing")
    assert first == second
    assert again.read_text() == (tmp_path / "two" / "messages.jsonl").read_text()


def test_sectors_window_count_and_schema(small_corpus, tmp_path):
    assert run("sectors", "--input", small_corpus, "--ws", 1000, "--step", 500, "--out", tmp_path) == 0
    rows = read_csv(tmp_path / "sectors.csv")
    assert [r["window_start"] for r in rows] == ["0", "500", "1000"]
    assert list(rows[0]) == ["window_start", "criterion", "hub_frac", "inter_frac", "peri_frac", "extra_frac"]
    for r in rows:
        total = sum(float(r[k]) for k in ("hub_frac", "inter_frac", "peri_frac", "extra_frac"))
        assert total == pytest.approx(1)
    assert len(list((tmp_path / "vertex_sectors").iterdir())) == 3
    assert (tmp_path / "degenerate.csv").read_text().splitlines()[0] == "window_start,criterion,reason"


def test_sectors_ws_too_large(small_corpus, tmp_path, capsys):
    assert run("sectors", "--input", small_corpus, "--ws", 5000, "--out", tmp_path) != 0
    err = capsys.readouterr().err
    assert "5000" in err and "2000" in err


def test_sectors_c1_fills_extra(small_corpus, tmp_path):
    assert run("sectors", "--input", small_corpus, "--ws", 1000, "--criterion", "C1", "--eta", 3, "--out", tmp_path) == 0
    rows = read_csv(tmp_path / "sectors.csv")
    assert all(r["criterion"] == "C1" for r in rows)
    assert any(float(r["extra_frac"]) > 0 for r in rows)
    vrows = read_csv(tmp_path / "vertex_sectors" / "window_000000.csv")
    assert list(vrows[0]) == ["vertex", "criterion", "sector"]


def test_sectors_pa_hub_band(pa_corpus, tmp_path):
    assert run("sectors", "--input", pa_corpus, "--ws", 1000, "--eta", 3, "--out", tmp_path) == 0
    rows = read_csv(tmp_path / "sectors.csv")
    assert len(rows) >= 5
    for r in rows:
        assert 0.01 <= float(r["hub_frac"]) <= 0.15


def test_sectors_deterministic(small_corpus, tmp_path):
    args = ("sectors", "--input", small_corpus, "--ws", 500, "--criterion", "k", "--criterion", "C3")
    assert run(*args, "--out", tmp_path / "a") == 0
    assert run(*args, "--out", tmp_path / "b") == 0
    assert (tmp_path / "a" / "sectors.csv").read_bytes() == (tmp_path / "b" / "sectors.csv").read_bytes()


def test_pca_single_window(small_corpus, tmp_path):
    assert run("pca", "--input", small_corpus, "--ws", 2000, "--out", tmp_path) == 0
    rows = read_csv(tmp_path / "loadings.csv")
    assert len(rows) == 15 and rows[-1]["metric"] == "lambda"
    for r in rows:
        assert all(float(r[f"pc{i}_std"]) == 0 for i in (1, 2, 3))
    # written with limited precision
    assert sum(float(r["pc1_mean"]) for r in rows[:-1]) == pytest.approx(100, abs=1e-4)


def test_pca_skips_small_windows(small_corpus, tmp_path, caplog):
    pingpong = [
        {"id": f"p{i}", "author": "a" if i % 2 else "b", "timestamp": i, "reply_to": f"p{i - 1}" if i else None}
        for i in range(250)
    ]
    path = tmp_path / "mixed.jsonl"
    lines = small_corpus.read_text().splitlines(keepends=True)
    path.write_text("".join(json.dumps(m) + "\n" for m in pingpong) + "".join(lines[:250]))
    assert run("pca", "--input", path, "--ws", 250, "--out", tmp_path) == 0
    assert "skipped window at 0" in caplog.text
    assert (tmp_path / "loadings.csv").exists()


def test_pca_all_skipped(small_corpus, tmp_path, capsys):
    assert run("pca", "--input", small_corpus, "--ws", 10, "--out", tmp_path) != 0
    assert "fewer than 15 vertices" in capsys.readouterr().err
    assert not (tmp_path / "loadings.csv").exists()


def test_timestats_uniform_weekdays(tmp_path):
    base = 1104537600
    path = tmp_path / "u.jsonl"
    with open(path, "w") as fh:
        for d in range(700):
            fh.write(json.dumps({"id": f"m{d}", "author": f"a{d % 5}", "timestamp": base + 86400 * d + 3600 * (d % 24), "reply_to": None}) + "\n")
    out = tmp_path / "o"
    assert run("timestats", "--input", path, "--scales", "weekdays,months", "--out", out) == 0
    hist = read_csv(out / "hist_weekdays.csv")
    assert len(hist) == 7
    assert all(float(r["percentage"]) == pytest.approx(100 / 7, abs=1e-6) for r in hist)
    grouped = read_csv(out / "grouped_months.csv")
    for width in {r["width"] for r in grouped}:
        assert sum(float(r["percentage"]) for r in grouped if r["width"] == width) == pytest.approx(100, abs=1e-6)
    stats = read_csv(out / "stats.csv")
    assert [r["scale"] for r in stats] == ["weekdays", "months"]
    assert list(stats[0]) == ["scale", "theta_mu_rescaled", "var", "std", "dispersion"]
    conc = json.loads((out / "concentration.json").read_text())
    assert conc["q1_participants"] == pytest.approx(0.4)


def test_timestats_antipodal_row(tmp_path):
    path = tmp_path / "a.jsonl"
    path.write_text(
        json.dumps({"id": "a", "author": "x", "timestamp": 1104537600, "reply_to": None}) + "\n"
        + json.dumps({"id": "b", "author": "y", "timestamp": 1104537600 + 43200, "reply_to": None}) + "\n"
    )
    assert run("timestats", "--input", path, "--scales", "hours", "--out", tmp_path) == 0
    row = read_csv(tmp_path / "stats.csv")[0]
    assert row["theta_mu_rescaled"] == "nan" and float(row["var"]) == 1


def test_scatter_rows(small_corpus, pa_corpus, tmp_path):
    assert run("scatter", "--input", f"{small_corpus},{pa_corpus}", "--out", tmp_path) == 0
    rows = read_csv(tmp_path / "scatter.csv")
    assert list(rows[0]) == ["list", "M", "N", "Gamma"]
    assert len(rows) == 2 and rows[0]["M"] == "2000"
    first = (tmp_path / "scatter.csv").read_bytes()
    assert run("scatter", "--input", small_corpus, "--input", pa_corpus, "--out", tmp_path) == 0
    assert (tmp_path / "scatter.csv").read_bytes() == first


def test_synth_deterministic(tmp_path):
    args = ("synth", "--generator", "erdos_renyi", "--n", 1000, "--p", 0.01, "--seed", 7)
    assert run(*args, "--out", tmp_path / "a") == 0
    assert run(*args, "--out", tmp_path / "b") == 0
    assert (tmp_path / "a" / "messages.jsonl").read_bytes() == (tmp_path / "b" / "messages.jsonl").read_bytes()
    spec = json.loads((tmp_path / "a" / "synth.json").read_text())
    assert spec["generator"] == "erdos_renyi" and spec["seed"] == 7


def test_synth_invalid(tmp_path, capsys):
    assert run("synth", "--generator", "erdos_renyi", "--p", 2, "--out", tmp_path) != 0
    assert "error" in capsys.readouterr().err


def test_config_file_and_override(small_corpus, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(f"# run settings\ninput = {small_corpus}\nws = 1000\nstep = 500\n")
    assert run("sectors", "--config", cfg, "--out", tmp_path / "a") == 0
    assert len(read_csv(tmp_path / "a" / "sectors.csv")) == 3
    assert run("sectors", "--config", cfg, "--step", 1000, "--out", tmp_path / "b") == 0
    assert len(read_csv(tmp_path / "b" / "sectors.csv")) == 2


@pytest.mark.parametrize("flags", [("--ws", 0), ("--step", -1), ("--eta", 0), ("--criterion", "bogus")])
def test_invalid_run_config(small_corpus, tmp_path, flags):
    assert run("sectors", "--input", small_corpus, *flags, "--out", tmp_path) != 0


def test_criterion_aliases(small_corpus, tmp_path):
    assert run("sectors", "--input", small_corpus, "--ws", 1000, "--criterion", "kin,sout", "--out", tmp_path) == 0
    assert [r["criterion"] for r in read_csv(tmp_path / "sectors.csv")][:2] == ["k_in", "s_out"]
