import io
from datetime import date, timedelta

import numpy as np
import pytest

from cfindep.calibrate import StatConfig, simulate_null
from cfindep.cli.cache import CalibrationCache, fingerprint
from cfindep.cli.config import UsageError, build_config, dump_config, parse_config_text
from cfindep.cli.io import (load_price_panel, read_matrix_csv, render_report,
                            subsample_series, write_matrix_csv)
from cfindep.cli.main import parse_config, run
from cfindep.cli.stocks import run_study
from cfindep.cli.tables import TABLES, get_table, run_table, wide_rows
from cfindep.errors import BadCoefficient, DataError, DegenerateSeries, NotEnoughTickers, SeriesTooShort
from cfindep.genmodels import ModelSpec, gen_compound_symmetric, gen_iid


@pytest.fixture
def cache_dir(tmp_path, monkeypatch):
    d = tmp_path / "cache"
    monkeypatch.setenv("CFINDEP_CACHE", str(d))
    return d


def call(argv):
    out = io.StringIO()
    code = run([str(a) for a in argv], out=out)
    return code, out.getvalue()


def kv(text):
    return dict(line.split("=", 1) for line in text.splitlines() if "=" in line and " " not in line)


# matrix CSV

def test_read_matrix_with_and_without_header(tmp_path):
    X = np.arange(6.0).reshape(3, 2)
    a = tmp_path / "a.csv"
    write_matrix_csv(a, X, header=True)
    b = tmp_path / "b.csv"
    write_matrix_csv(b, X, header=False)
    np.testing.assert_array_equal(read_matrix_csv(a), X)
    np.testing.assert_array_equal(read_matrix_csv(b), X)


def test_row_length_mismatch_reports_line(tmp_path):
    f = tmp_path / "bad.csv"
    f.write_text("a,b\n1,2\n3,4,5\n")
    with pytest.raises(DataError, match="line 3"):
        read_matrix_csv(f)


@pytest.mark.parametrize("cell", ["nan", "inf", "-Inf"])
def test_non_finite_rejected(tmp_path, cell):
    f = tmp_path / "nan.csv"
    f.write_text(f"1,2\n3,{cell}\n")
    with pytest.raises(DataError, match="line 2"):
        read_matrix_csv(f)


def test_empty_file(tmp_path, cache_dir, capsys):
    f = tmp_path / "empty.csv"
    f.write_text("")
    code, _ = call(["--cmd", "test", "--input", f])
    assert code == 1
    assert "no rows" in capsys.readouterr().err


def test_report_layout():
    text = render_report({"seed": 3, "version": "x"}, ["a", "b"], [[1, 0.5]])
    assert text == "# seed=3\n# version=x\na,b\n1,0.5\n"


# price panels

TICKERS = ["AAA", "BBB", "CCC"]
DATES = [date(2020, 1, 1) + timedelta(days=i) for i in range(5)]


def _prices():
    return {(d, t): 10.0 + i + 0.5 * j for j, t in enumerate(TICKERS) for i, d in enumerate(DATES)}


def write_long(path, prices, extra=()):
    lines = ["date,ticker,close"]
    lines += [f"{d.isoformat()},{t},{v}" for (d, t), v in prices.items()]
    lines += list(extra)
    path.write_text("\n".join(lines) + "\n")


def write_wide(path, prices):
    lines = ["date," + ",".join(TICKERS)]
    for d in DATES:
        lines.append(d.isoformat() + "," + ",".join(str(prices[(d, t)]) for t in TICKERS))
    path.write_text("\n".join(lines) + "\n")


def test_long_panel_round_trip(tmp_path):
    f = tmp_path / "long.csv"
    write_long(f, _prices())
    panel = load_price_panel(f)
    assert panel.close.shape == (3, 5)
    assert panel.tickers == tuple(TICKERS) and panel.dates == tuple(DATES)
    assert not panel.missing.any()
    assert panel.series("BBB")[2] == 12.5


def test_wide_equals_long(tmp_path):
    a, b = tmp_path / "long.csv", tmp_path / "wide.csv"
    write_long(a, _prices())
    write_wide(b, _prices())
    assert load_price_panel(a) == load_price_panel(b)


def test_duplicate_row_names_line(tmp_path):
    f = tmp_path / "dup.csv"
    write_long(f, _prices(), extra=["2020-01-02,AAA,99.0"])
    with pytest.raises(DataError, match="line 17"):
        load_price_panel(f)


def test_non_positive_price(tmp_path):
    f = tmp_path / "neg.csv"
    f.write_text("date,ticker,close\n2020-01-01,AAA,10\n2020-01-02,AAA,0\n")
    with pytest.raises(DataError, match="line 3.*non-positive"):
        load_price_panel(f)


def test_bad_date(tmp_path):
    f = tmp_path / "date.csv"
    f.write_text("date,ticker,close\n01/02/2020,AAA,10\n")
    with pytest.raises(DataError, match="line 2"):
        load_price_panel(f)


def test_unsorted_dates_are_ordered(tmp_path):
    f = tmp_path / "uns.csv"
    f.write_text("date,ticker,close\n2020-01-03,AAA,3\n2020-01-01,AAA,1\n2020-01-02,AAA,2\n")
    panel = load_price_panel(f)
    assert list(panel.dates) == sorted(panel.dates)
    assert panel.series("AAA").tolist() == [1, 2, 3]


def test_missing_quotes_are_nan(tmp_path):
    f = tmp_path / "gap.csv"
    f.write_text("date,AAA,BBB\n2020-01-01,1,2\n2020-01-02,,3\n")
    panel = load_price_panel(f)
    assert panel.missing.tolist() == [[False, True], [False, False]]


# strided subsampling

def _single_series_panel(tmp_path, values):
    f = tmp_path / "s.csv"
    lines = ["date,ticker,close"] + [
        f"{(date(2000, 1, 1) + timedelta(days=i)).isoformat()},X,{v}" for i, v in enumerate(values)]
    f.write_text("\n".join(lines) + "\n")
    return load_price_panel(f)


def test_unit_stride(tmp_path):
    panel = _single_series_panel(tmp_path, [4.0, 7.0, 9.0, 13.0])
    x = subsample_series(panel, "X", 3, stride=1, standardize=False)
    assert x.tolist() == [4.0, 7.0, 9.0]
    z = subsample_series(panel, "X", 3, stride=1)
    assert z.mean() == pytest.approx(0, abs=1e-15) and z.std(ddof=1) == pytest.approx(1)


def test_stride_length_requirement(tmp_path):
    panel = _single_series_panel(tmp_path, np.linspace(1, 2, 1700))
    with pytest.raises(SeriesTooShort) as info:
        subsample_series(panel, "X", 35, stride=50)
    assert info.value.required == 1701
    panel = _single_series_panel(tmp_path, np.linspace(1, 2, 1701))
    assert subsample_series(panel, "X", 35, stride=50).size == 35


def test_constant_series(tmp_path):
    panel = _single_series_panel(tmp_path, [5.0] * 10)
    with pytest.raises(DegenerateSeries):
        subsample_series(panel, "X", 5, stride=2)


# configuration

def test_config_file_and_flag_precedence(tmp_path):
    f = tmp_path / "run.cfg"
    f.write_text("# comment\ncmd = calibrate\nseed=5\nk-cal=200\nn=10\np=10\n")
    cfg = parse_config(["--config", str(f), "--seed", "7"])
    assert (cfg.cmd, cfg.seed, cfg.k_cal, cfg.n) == ("calibrate", 7, 200, 10)


def test_config_unknown_key(tmp_path, cache_dir):
    f = tmp_path / "run.cfg"
    f.write_text("colour=red\n")
    with pytest.raises(UsageError, match="unknown key"):
        parse_config(["--config", str(f)])
    code, _ = call(["--config", f])
    assert code == 1


def test_config_validation():
    with pytest.raises(UsageError):
        build_config(overrides={"alpha": 1.5})
    with pytest.raises(UsageError):
        build_config(overrides={"t1": 2.0, "t2": 1.0})
    with pytest.raises(UsageError):
        build_config(overrides={"model": "garch"})
    with pytest.raises(UsageError):
        build_config(overrides={"k_cal": 10})
    with pytest.raises(BadCoefficient):
        build_config(overrides={"psi": 1.0, "model": "ma1"})


def test_config_dump_round_trip():
    cfg = build_config(overrides={"cmd": "power", "model": "ma1", "psi": 0.3, "n": 40, "p": 20,
                                  "standardize": False})
    again = build_config(parse_config_text(dump_config(cfg)))
    assert again == cfg
    assert again.config_hash() == cfg.config_hash()


def test_model_spec_from_config():
    cfg = build_config(overrides={"model": "cs", "innovation": "std_gamma_4_2"})
    assert cfg.model_spec() == ModelSpec("compound_symmetric", "std_gamma_4_2")
    assert build_config(overrides={"model": "panel"}).model_spec().u_mode == "alt"


# exit codes

def test_usage_errors_exit_one(cache_dir):
    assert call(["--cmd", "bogus"])[0] == 1
    assert call(["--cmd", "test"])[0] == 1                     # neither input nor dims
    assert call(["--cmd", "table"])[0] == 1                    # no table id
    assert call(["--cmd", "power", "--n", "-3", "--p", "4"])[0] == 1


def test_numeric_failure_exit_two(cache_dir, capsys):
    code, _ = call(["--cmd", "test", "--n", 20, "--p", 20, "--cf-nodes", 2, "--k-cal", 100])
    assert code == 2
    assert "quadrature" in capsys.readouterr().err


def test_null_csv_mostly_accepted(tmp_path, cache_dir):
    codes = []
    for s in range(20):
        f = tmp_path / f"null{s}.csv"
        write_matrix_csv(f, gen_iid(100, 100, seed=1000 + s))
        code, out = call(["--cmd", "test", "--input", f, "--k-cal", 500, "--seed", 1])
        assert code in (0, 3)
        assert kv(out)["reject"] == ("true" if code == 3 else "false")
        codes.append(code)
    assert codes.count(0) >= 18


def test_compound_symmetric_csv_rejected(tmp_path, cache_dir):
    codes = []
    for s in range(20):
        f = tmp_path / f"cs{s}.csv"
        write_matrix_csv(f, gen_compound_symmetric(100, 100, seed=2000 + s))
        codes.append(call(["--cmd", "test", "--input", f, "--k-cal", 500, "--seed", 1])[0])
    assert codes.count(3) >= 19


def test_test_output_fields(cache_dir):
    code, out = call(["--cmd", "test", "--n", 30, "--p", 20, "--k-cal", 200])
    fields = kv(out)
    for key in ("statistic", "lower_crit", "upper_crit", "p_value", "reject"):
        assert key in fields
    assert "critical pair" in out
    assert float(fields["lower_crit"]) <= float(fields["upper_crit"])


def test_lrt_command(tmp_path, cache_dir):
    f = tmp_path / "x.csv"
    write_matrix_csv(f, gen_iid(30, 40, seed=3))
    code, out = call(["--cmd", "lrt", "--input", f])
    assert code == 3 and kv(out)["degenerate"] == "true"
    code, out = call(["--cmd", "lrt", "--n", 100, "--p", 5, "--k-eval", 200])
    assert code == 0 and "degenerate_fraction" in out


# cache

def test_cache_matches_fresh(tmp_path):
    cache = CalibrationCache(tmp_path / "c")
    null, config = ModelSpec(), StatConfig()
    first = cache.calibration(20, 10, null, config, 100, 4, 0.05)
    assert cache.path_for(fingerprint(20, 10, null, config, 100, 4)).exists()
    cached = cache.calibration(20, 10, null, config, 100, 4, 0.05)
    fresh = simulate_null(20, 10, K=100, seed=4)
    assert cached.sorted_stats.tobytes() == fresh.sorted_stats.tobytes() == \
        first.sorted_stats.tobytes()
    assert (cached.lower_q, cached.upper_q) == (fresh.lower_q, fresh.upper_q)


def test_cache_keys_differ():
    c = StatConfig()
    base = fingerprint(20, 10, ModelSpec(), c, 100, 4)
    assert fingerprint(20, 10, ModelSpec("iid", "std_gamma_4_2"), c, 100, 4) != base
    assert fingerprint(20, 10, ModelSpec(), c, 100, 5) != base
    assert fingerprint(20, 11, ModelSpec(), c, 100, 4) != base


# determinism and reports

def test_cli_csv_byte_identical_across_threads(tmp_path, cache_dir):
    outs = []
    for threads in (1, 2):
        out = tmp_path / f"power{threads}.csv"
        code, _ = call(["--cmd", "power", "--model", "ma1", "--n", 20, "--p", 10, "--k-cal", 100,
                        "--k-eval", 100, "--seed", 3, "--threads", threads, "--out", out,
                        "--no-cache"])
        assert code == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    assert outs[0].startswith(b"# tool=cfindep\n")


def test_calibrate_command_csv(tmp_path, cache_dir):
    out = tmp_path / "cal.csv"
    code, _ = call(["--cmd", "calibrate", "--n", 15, "--p", 10, "--k-cal", 120, "--out", out])
    assert code == 0
    lines = out.read_text().splitlines()
    header = [line for line in lines if not line.startswith("#")]
    assert header[0] == "rank,statistic" and len(header) == 121
    again = tmp_path / "cal2.csv"
    call(["--cmd", "calibrate", "--n", 15, "--p", 10, "--k-cal", 120, "--out", again])
    assert out.read_bytes() == again.read_bytes()


def test_table_run_deterministic_and_wide():
    a = run_table("t_ar", K=40, seed=2, threads=1)
    b = run_table("t_ar", K=40, seed=2, threads=2)
    assert wide_rows(a) == wide_rows(b)
    header, rows = wide_rows(a)
    assert header == ["section", "n", "p=10", "p=20", "p=50"]
    assert [r[1] for r in rows] == [20, 50, 100]


def test_table_registry():
    assert set(TABLES) == {"t1", "t2", "t3", "t4", "t_ar", "t_sma", "t_panel", "t_nma",
                           "t_arch", "t_vdm"}
    assert (50, 20) in get_table("t4").grid("desk")
    assert (100, 60) in get_table("t_arch").grid("desk")
    assert (50, 50) in get_table("t_vdm").grid("desk")
    assert len(get_table("t1").grid("full")) == 121
    assert (120, 120) in get_table("t_vdm").grid("full")
    with pytest.raises(KeyError):
        get_table("t9")


def test_lrt_table_reports_degenerate_rows(tmp_path, cache_dir):
    out = tmp_path / "t2.csv"
    code, _ = call(["--cmd", "table", "--table", "t2", "--out", out])
    assert code == 0
    text = out.read_text()
    assert "# preset=desk" in text and "# K=500" in text
    assert "size_degenerate" in text
    assert (tmp_path / "t2.png").stat().st_size > 0


# stock study

def _panel_file(path, values, start=date(1990, 1, 1)):
    """Wide CSV from a (days x tickers) price array."""
    tickers = [f"T{j:02d}" for j in range(values.shape[1])]
    lines = ["date," + ",".join(tickers)]
    for i, row in enumerate(values):
        lines.append((start + timedelta(days=i)).isoformat() + "," +
                     ",".join(repr(float(v)) for v in row))
    path.write_text("\n".join(lines) + "\n")
    return path


def test_stocks_independent_prices(tmp_path, cache_dir):
    n, stride, tickers = 20, 50, 40
    days = 1 + stride * (n - 1)
    rng = np.random.default_rng(31)
    prices = 100 * np.exp(0.05 * rng.standard_normal((days, tickers)))
    f = _panel_file(tmp_path / "null.csv", prices)
    out = tmp_path / "stocks.csv"
    code, _ = call(["--cmd", "stocks", "--input", f, "--n", n, "--p", 10, "--reps", 100,
                    "--k-cal", 500, "--seed", 5, "--out", out])
    assert code == 0
    text = out.read_text()
    frac = float(text.split("# rejection_fraction=")[1].split("\n")[0])
    assert abs(frac - 0.05) <= 0.07
    rows = [line for line in text.splitlines() if not line.startswith("#")]
    assert rows[0] == "repetition,p_value,statistic,tickers" and len(rows) == 101
    pvals = [float(r.split(",")[1]) for r in rows[1:]]
    assert all(0 < v <= 1 for v in pvals)
    assert (tmp_path / "stocks.png").exists()


def test_stocks_common_factor(tmp_path, cache_dir):
    n, stride, tickers = 20, 50, 40
    days = 1 + stride * (n - 1)
    rng = np.random.default_rng(32)
    factor = 5.0 * rng.standard_normal((days, 1))
    prices = 100 + factor + rng.standard_normal((days, tickers))
    panel = load_price_panel(_panel_file(tmp_path / "factor.csv", prices))
    study = run_study(panel, 10, n, repetitions=100, seed=6, K_cal=500)
    assert study.rejection_fraction >= 0.9
    assert len(study.repetitions) == 100
    assert all(len(set(r.tickers)) == 10 for r in study.repetitions)


def test_stocks_not_enough_tickers(tmp_path, cache_dir):
    prices = 100 + np.random.default_rng(1).random((60, 4))
    f = _panel_file(tmp_path / "few.csv", prices)
    panel = load_price_panel(f)
    with pytest.raises(NotEnoughTickers):
        run_study(panel, 5, 10, stride=5, K_cal=100)
    code, _ = call(["--cmd", "stocks", "--input", f, "--n", 10, "--p", 5, "--stride", 5,
                    "--k-cal", 100])
    assert code == 1


def test_stocks_standardization_toggle(tmp_path, cache_dir):
    prices = 100 + np.random.default_rng(2).random((60, 6))
    f = _panel_file(tmp_path / "p.csv", prices)
    base = ["--cmd", "stocks", "--input", f, "--n", 10, "--p", 3, "--stride", 5, "--reps", 5,
            "--k-cal", 100]
    code, out = call(base)
    assert code == 0 and "# standardized=true" in out
    code, out = call(base + ["--no-standardize"])
    assert code == 0 and "# standardized=false" in out
