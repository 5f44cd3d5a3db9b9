import json

import numpy as np
import pytest

from conftest import identifiable_sample, untruncated
from doubletrunc import fit_npmle
from doubletrunc.cli import main
from doubletrunc.io import PLOT_COLUMNS, read_dataset, read_report, write_dataset


def _write(path, header, rows, sep=","):
    path.write_text(sep.join(header) + "\n" + "".join(sep.join(map(str, r)) + "\n" for r in rows))
    return path


@pytest.fixture
def biased_file(tmp_path, m1_biased_100):
    path = tmp_path / "biased.csv"
    write_dataset(m1_biased_100, path)
    return path


def test_fit_report(tmp_path, biased_file, m1_biased_100):
    out = tmp_path / "fit.json"
    assert main(["fit", "--input", str(biased_file), "--out", str(out)]) == 0
    rep = read_report(out)
    fit, _ = fit_npmle(m1_biased_100)
    assert rep["n"] == 100 and rep["n_dropped"] == 0
    assert rep["alpha_n"] == fit.alpha_n
    assert rep["truncation_rate"] == 1 - fit.alpha_n
    assert rep["diagnostics"]["status"] == "Converged"
    assert [o["f_weight"] for o in rep["observations"]] == fit.f_weights.tolist()


def test_missing_rows_reported(tmp_path):
    rng = np.random.default_rng(1)
    u = rng.uniform(0, 5000, 409)
    x = u + rng.uniform(0, 1825, 409)
    rows = [[xi, ui, ui + 1825] for xi, ui in zip(x, u)]
    for i in (3, 50, 200):
        rows[i][0] = "NA" if i == 3 else ""
    path = _write(tmp_path / "registry.csv", ["x", "u", "v"], rows)
    out = tmp_path / "v.json"
    assert main(["validate", "--input", str(path), "--out", str(out)]) == 0
    rep = read_report(out)
    assert rep["n"] == 406 and rep["n_dropped"] == 3


def test_empty_file_is_input_error(tmp_path, capsys):
    path = tmp_path / "empty.csv"
    path.write_text("")
    assert main(["fit", "--input", str(path)]) == 2
    assert json.loads(capsys.readouterr().err)["error"] == "InputError"
    header_only = _write(tmp_path / "h.csv", ["x", "u", "v"], [])
    assert main(["fit", "--input", str(header_only)]) == 2
    all_missing = _write(tmp_path / "na.csv", ["x", "u", "v"], [["NA", 0, 1]])
    assert main(["fit", "--input", str(all_missing)]) == 2
    assert main(["fit", "--input", str(tmp_path / "nope.csv")]) == 2


def test_violation_is_input_error(tmp_path, capsys):
    path = _write(tmp_path / "bad.csv", ["x", "u", "v"], [[1, 0, 2], [5, 6, 7]])
    assert main(["fit", "--input", str(path)]) == 2
    assert json.loads(capsys.readouterr().err)["error"] == "TruncationViolation"


def test_degenerate_fit_exit_code(tmp_path, capsys):
    path = _write(tmp_path / "disjoint.csv", ["x", "u", "v"], [[1, 0, 1.5], [2, 1.5, 2.5], [3, 2.5, 3.5]])
    assert main(["fit", "--input", str(path)]) == 3
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "FitFailed"
    assert err["diagnostics"]["status"] == "DegenerateWeights"
    assert main(["test", "--input", str(path), "--seed", "1", "--b", "5"]) == 3


def test_header_order_and_delimiter(tmp_path, m1_biased_100):
    s = m1_biased_100
    rows = list(zip(s.x.tolist(), s.u.tolist(), s.v.tolist()))
    a = _write(tmp_path / "a.csv", ["x", "u", "v"], [[repr(c) for c in r] for r in rows])
    b = _write(tmp_path / "b.tsv", ["V", "id", "X", "U"],
               [[repr(v), i, repr(x), repr(u)] for i, (x, u, v) in enumerate(rows)], sep="\t")
    outs = []
    for path in (a, b):
        out = tmp_path / (path.stem + ".json")
        assert main(["test", "--input", str(path), "--seed", "3", "--b", "30", "--out", str(out)]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    assert read_dataset(b) == s


def test_same_seed_byte_identical(tmp_path, biased_file):
    outs = []
    for i in range(2):
        out = tmp_path / f"t{i}.json"
        main(["test", "--input", str(biased_file), "--seed", "9", "--b", "40", "--se-ratio", "--out", str(out)])
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_round_trip(tmp_path, biased_file):
    js, cs = tmp_path / "t.json", tmp_path / "t.csv"
    main(["test", "--input", str(biased_file), "--seed", "2", "--b", "30", "--out", str(js)])
    main(["test", "--input", str(biased_file), "--seed", "2", "--b", "30", "--out", str(cs), "--format", "csv"])
    rj = read_report(js)
    (rc,) = read_report(cs)
    for key in ("d_n", "p_value", "b_used", "b_requested", "alpha_n", "n"):
        assert rc[key] == rj[key]
    # re-serialising what was read gives the same bytes
    fit_out = tmp_path / "fit.json"
    main(["fit", "--input", str(biased_file), "--out", str(fit_out)])
    assert json.dumps(read_report(fit_out), indent=2) + "\n" == fit_out.read_text()


def test_untruncated_file(tmp_path):
    path = tmp_path / "flat.csv"
    write_dataset(untruncated(40), path)
    out = tmp_path / "t.json"
    assert main(["test", "--input", str(path), "--seed", "1", "--b", "20", "--out", str(out)]) == 0
    rep = read_report(out)
    assert rep["d_n"] < 1e-10
    assert rep["p_value"] == 1.0


def test_plot_data(tmp_path, biased_file):
    plot = tmp_path / "plot.csv"
    assert main(["test", "--input", str(biased_file), "--seed", "1", "--b", "20", "--se-ratio",
                 "--out", str(tmp_path / "t.json"), "--plot-data", str(plot)]) == 0
    rows = read_report(plot)
    assert tuple(rows[0]) == PLOT_COLUMNS
    series = {r["series"] for r in rows}
    assert series == {"F_n", "F_n_star", "G_n", "G_null", "se_ratio"}
    f_n = [r["value"] for r in rows if r["series"] == "F_n"]
    assert f_n == sorted(f_n) and f_n[-1] == 1.0


def test_simulate_single_trial(tmp_path):
    out = tmp_path / "sim.csv"
    assert main(["simulate", "--model", "M1", "--rho", "6", "--sigma", "1", "--n", "50",
                 "--trials", "1", "--b", "20", "--seed", "4", "--format", "csv", "--out", str(out)]) == 0
    rows = read_report(out)
    assert [r["gamma"] for r in rows] == [0.1, 0.05, 0.01]
    for r in rows:
        assert r["trials_used"] + r["trials_discarded"] == 1
        assert r["rejection_rate"] in (0, 1, None)


def test_simulate_config_file(tmp_path):
    cfg = tmp_path / "grid.json"
    cfg.write_text(json.dumps({"model": "M2", "rho": [1, 6], "sigma": 0.5, "n": 30,
                               "trials": 2, "b": 5, "seed": 1, "gammas": [0.05], "target": "beta(0.5,1)"}))
    out = tmp_path / "sim.json"
    assert main(["simulate", "--config", str(cfg), "--out", str(out)]) == 0
    cells = read_report(out)["cells"]
    assert len(cells) == 2
    assert {c["rho"] for c in cells} == {1.0, 6.0}
    assert all(c["target"] == "beta(0.5,1)" for c in cells)


def test_simulate_bad_config(tmp_path):
    cfg = tmp_path / "grid.json"
    cfg.write_text(json.dumps({"model": "M9"}))
    assert main(["simulate", "--config", str(cfg)]) == 2
    assert main(["simulate", "--config", str(tmp_path / "missing.json")]) == 2


def test_table1_preset_layout(tmp_path):
    out = tmp_path / "t1.csv"
    assert main(["simulate", "--preset", "table1", "--trials", "1", "--b", "2", "--n", "20",
                 "--format", "csv", "--out", str(out)]) == 0
    rows = read_report(out)
    cells = {(r["model"], r["rho"], r["sigma"]) for r in rows}
    assert len(cells) == 12
    assert len(rows) == 12 * 3


def test_table1_preset_full_grid(tmp_path):
    out = tmp_path / "d.json"
    assert main(["simulate", "--preset", "table1", "--trials", "2", "--discards-only", "--out", str(out)]) == 0
    cells = read_report(out)["cells"]
    assert len(cells) == 24
    assert {(c["model"], c["n"], c["sigma"], c["rho"]) for c in cells} == {
        (m, n, s, r) for m in ("M1", "M2") for n in (100, 200) for s in (1.0, 0.5) for r in (1.0, 2.0, 6.0)}


def test_fig1_preset(tmp_path):
    out = tmp_path / "fig1.csv"
    assert main(["simulate", "--preset", "fig1", "--format", "csv", "--out", str(out)]) == 0
    rows = read_report(out)
    series = {r["series"] for r in rows}
    assert len(series) == 12
    flat = [r["value"] for r in rows if r["series"] == "M1/rho=1/sigma=0.5"]
    assert len(set(flat)) == 1 and flat[0] == pytest.approx(1 / 3)


def test_sample_fixture_round_trip(tmp_path):
    s = identifiable_sample("M2", 2.0, 0.5, 30, seed=1)
    path = tmp_path / "s.tsv"
    write_dataset(s, path, delimiter="\t")
    assert read_dataset(path) == s


def test_seed_required(tmp_path, biased_file):
    with pytest.raises(SystemExit):
        main(["test", "--input", str(biased_file)])
