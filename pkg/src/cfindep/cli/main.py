"""``cfindep`` command line.

Exit codes: 0 ok / not rejected, 3 rejected, 1 usage or data error,
2 internal numeric failure.
"""

import argparse
import sys
from pathlib import Path

from .. import __version__
from ..cf_test import decide, statistic_mn
from ..eigcore import covariance_spectrum, sample_covariance
from ..errors import (BadCoefficient, CalibrationMismatch, CfIndepError, DataError,
                      InsufficientReplicates, NonPositiveRatio)
from ..genmodels import ModelSpec, generate, null_counterpart
from ..lrt import lrt_size_power, lrt_statistic
from ..mp_law import make_rule
from .cache import CalibrationCache
from .config import COMMANDS, PRESETS, UsageError, build_config, load_config_file
from .io import load_price_panel, read_matrix_csv, render_report, write_report
from .stocks import run_study
from .tables import Section, TABLES, cell_estimate, run_table, wide_rows

EXIT_OK, EXIT_ERROR, EXIT_NUMERIC, EXIT_REJECT = 0, 1, 2, 3

# errors caused by what the user asked for, as opposed to numerical breakdown
USER_ERRORS = (UsageError, DataError, InsufficientReplicates, NonPositiveRatio,
               BadCoefficient, CalibrationMismatch, OSError, KeyError, ValueError)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser():
    ap = _Parser(prog="cfindep", description="Characteristic-function test of independence "
                 "for high-dimensional vectors.")
    S = argparse.SUPPRESS
    ap.add_argument("--version", action="version", version=f"cfindep {__version__}")
    ap.add_argument("--config", default=S, help="flat key=value file; flags override it")
    ap.add_argument("--cmd", choices=COMMANDS, default=S)
    ap.add_argument("--input", default=S, help="matrix CSV (test, lrt) or price panel (stocks)")
    ap.add_argument("--n", type=int, default=S)
    ap.add_argument("--p", type=int, default=S)
    ap.add_argument("--model", default=S, help="iid, compound_symmetric, ma1, ar1, sma, sar, "
                    "sec, panel, nonlinear_ma, arch1, vandermonde")
    ap.add_argument("--innovation", default=S)
    ap.add_argument("--psi", type=float, default=S)
    ap.add_argument("--phi", type=float, default=S)
    ap.add_argument("--alpha0", type=float, default=S)
    ap.add_argument("--alpha1", type=float, default=S)
    ap.add_argument("--u-mode", dest="u_mode", default=S)
    ap.add_argument("--k-cal", dest="k_cal", type=int, default=S)
    ap.add_argument("--k-eval", dest="k_eval", type=int, default=S)
    ap.add_argument("--alpha", type=float, default=S)
    ap.add_argument("--t1", type=float, default=S)
    ap.add_argument("--t2", type=float, default=S)
    ap.add_argument("--nodes", type=int, default=S)
    ap.add_argument("--cf-nodes", dest="cf_nodes", type=int, default=S)
    ap.add_argument("--backend", default=S)
    ap.add_argument("--seed", type=int, default=S)
    ap.add_argument("--threads", type=int, default=S)
    ap.add_argument("--out", default=S, help="output CSV; a PNG is written next to it")
    ap.add_argument("--table", choices=sorted(TABLES), default=S)
    ap.add_argument("--preset", choices=PRESETS, default=S)
    ap.add_argument("--stride", type=int, default=S)
    ap.add_argument("--start", type=int, default=S, help="1-based first sampled day")
    ap.add_argument("--reps", type=int, default=S)
    ap.add_argument("--no-standardize", dest="standardize", action="store_false", default=S)
    ap.add_argument("--cache-dir", dest="cache_dir", default=S)
    ap.add_argument("--no-cache", dest="no_cache", action="store_true", default=S)
    ap.add_argument("--no-figure", dest="figure", action="store_false", default=S)
    return ap


def parse_config(argv):
    flags = vars(build_parser().parse_args(argv))
    file_values = load_config_file(flags["config"]) if "config" in flags else {}
    return build_config(file_values, flags)


def _metadata(cfg, **extra):
    meta = {"tool": "cfindep", "version": __version__, "cmd": cfg.cmd, "seed": cfg.seed,
            "config_hash": cfg.config_hash()}
    meta.update(extra)
    return meta


def _emit(cfg, meta, header, rows, out=sys.stdout):
    if cfg.out:
        write_report(cfg.out, meta, header, rows)
        print(f"wrote {cfg.out}", file=sys.stderr)
    else:
        out.write(render_report(meta, header, rows))


def _figure_path(cfg):
    if cfg.out and cfg.figure:
        return str(Path(cfg.out).with_suffix(".png"))
    return None


def _kv(pairs, out=sys.stdout):
    for key, value in pairs:
        print(f"{key}={value}", file=out)


def _cache(cfg):
    return CalibrationCache(cfg.cache_dir, enabled=not cfg.no_cache)


def _need_dims(cfg):
    if cfg.n is None or cfg.p is None:
        raise UsageError(f"--cmd {cfg.cmd} needs --n and --p")
    return cfg.n, cfg.p


def _load_or_generate(cfg):
    """(X, null model, direct covariance flag) for test-type commands."""
    if cfg.input:
        X = read_matrix_csv(cfg.input)
        for name, got in (("n", X.shape[0]), ("p", X.shape[1])):
            want = getattr(cfg, name)
            if want is not None and want != got:
                raise DataError(f"--{name} {want} does not match the input ({got})")
        return X, ModelSpec("iid", cfg.innovation), False
    n, p = _need_dims(cfg)
    spec = cfg.model_spec()
    return generate(spec, n, p, cfg.seed), null_counterpart(spec), spec.covariance_is_direct


def cmd_test(cfg, out=sys.stdout):
    X, null, direct = _load_or_generate(cfg)
    n, p = X.shape
    config = cfg.stat_config()
    A = X.conj().T @ X if direct else sample_covariance(X)
    if direct:
        A = (A + A.conj().T) / 2
    spec = covariance_spectrum(A, n, backend=config.backend)
    stat = statistic_mn(spec, config.weights, make_rule(config.cf_nodes))
    calib = _cache(cfg).calibration(n, p, null, config, cfg.k_cal, cfg.seed, cfg.alpha,
                                    cfg.threads)
    dec = decide(stat, calib, config.weights)
    verdict = "reject independence" if dec.reject else "do not reject independence"
    print(f"p^2 M_n = {stat.scaled:.6g}, critical pair [{dec.lower_crit:.6g}, "
          f"{dec.upper_crit:.6g}], p-value {dec.p_value:.4g}: {verdict} "
          f"at alpha = {cfg.alpha:g}", file=out)
    pairs = [("n", n), ("p", p), ("statistic", repr(stat.scaled)),
             ("m_n", repr(stat.m_n)), ("lower_crit", repr(dec.lower_crit)),
             ("upper_crit", repr(dec.upper_crit)), ("p_value", repr(dec.p_value)),
             ("alpha", cfg.alpha), ("null", calib.null_label), ("k_cal", calib.K),
             ("reject", str(dec.reject).lower())]
    _kv(pairs, out)
    if cfg.out:
        write_report(cfg.out, _metadata(cfg), ["key", "value"], pairs)
    return dec, (EXIT_REJECT if dec.reject else EXIT_OK)


def cmd_calibrate(cfg, out=sys.stdout):
    n, p = _need_dims(cfg)
    spec = cfg.model_spec()
    null = ModelSpec("iid", cfg.innovation) if spec.kind == "iid" else null_counterpart(spec)
    config = cfg.stat_config()
    calib = _cache(cfg).calibration(n, p, null, config, cfg.k_cal, cfg.seed, cfg.alpha,
                                    cfg.threads)
    _kv([("n", n), ("p", p), ("null", calib.null_label), ("k_cal", calib.K),
         ("lower_crit", repr(calib.lower_q)), ("upper_crit", repr(calib.upper_q))],
        sys.stderr if not cfg.out else out)
    meta = _metadata(cfg, n=n, p=p, null=calib.null_label, K=calib.K, alpha=cfg.alpha,
                     lower_crit=repr(calib.lower_q), upper_crit=repr(calib.upper_q))
    rows = [[i + 1, float(v)] for i, v in enumerate(calib.sorted_stats)]
    _emit(cfg, meta, ["rank", "statistic"], rows, out)
    return calib, EXIT_OK


def _harness(cfg, section, out):
    n, p = _need_dims(cfg)
    cfg._check_order(cfg.k_cal)
    est = cell_estimate(section, n, p, cfg.k_cal, cfg.k_eval, cfg.alpha, cfg.seed,
                        cfg.stat_config(), _cache(cfg), cfg.threads)
    meta = _metadata(cfg, model=section.model.label(), null=section.null.label(),
                     k_cal=cfg.k_cal, k_eval=cfg.k_eval, alpha=cfg.alpha)
    _emit(cfg, meta, ["section", "n", "p", "estimate"], [[section.name, n, p, est]], out)
    return est, EXIT_OK


def cmd_size(cfg, out=sys.stdout):
    spec = cfg.model_spec()
    spec = ModelSpec("iid", cfg.innovation) if spec.kind == "iid" else spec
    return _harness(cfg, Section("size", spec, spec), out)


def cmd_power(cfg, out=sys.stdout):
    spec = cfg.model_spec()
    return _harness(cfg, Section("power", spec, null_counterpart(spec)), out)


def cmd_lrt(cfg, out=sys.stdout):
    if cfg.input:
        X = read_matrix_csv(cfg.input)
        res = lrt_statistic(X)
        reject = res.degenerate or res.p_value <= cfg.alpha
        pairs = [("n", X.shape[0]), ("p", X.shape[1]), ("dof", res.dof),
                 ("statistic", repr(res.statistic)), ("p_value", repr(res.p_value)),
                 ("degenerate", str(res.degenerate).lower()), ("reject", str(reject).lower())]
        _kv(pairs, out)
        if cfg.out:
            write_report(cfg.out, _metadata(cfg), ["key", "value"], pairs)
        return res, (EXIT_REJECT if reject else EXIT_OK)
    n, p = _need_dims(cfg)
    spec = cfg.model_spec()
    rep = lrt_size_power(n, p, spec, cfg.k_eval, cfg.alpha, cfg.seed)
    meta = _metadata(cfg, model=spec.label(), k_eval=cfg.k_eval, alpha=cfg.alpha)
    row = [n, p, rep.estimates[0], rep.extras["rate_nondegenerate"][0],
           rep.extras["degenerate_fraction"][0]]
    _emit(cfg, meta, ["n", "p", "estimate", "rate_nondegenerate", "degenerate_fraction"],
          [row], out)
    return rep, EXIT_OK


def cmd_table(cfg, out=sys.stdout):
    if not cfg.table:
        raise UsageError(f"--cmd table needs --table, one of {sorted(TABLES)}")

    def progress(section, n, p, est):
        print(f"{cfg.table} {section} n={n} p={p}: {est:.3f}", file=sys.stderr)

    result = run_table(cfg.table, cfg.preset, cfg.seed, cfg.alpha, cfg.stat_config(),
                       _cache(cfg), cfg.threads, progress=progress)
    header, rows = wide_rows(result)
    meta = _metadata(cfg, table=cfg.table, preset=cfg.preset, K=result.K, alpha=cfg.alpha,
                     t1=cfg.t1, t2=cfg.t2, nodes=cfg.nodes)
    _emit(cfg, meta, header, rows, out)
    fig = _figure_path(cfg)
    if fig:
        from .figures import table_figure
        table_figure(result, fig)
    return result, EXIT_OK


def cmd_stocks(cfg, out=sys.stdout):
    if not cfg.input:
        raise UsageError("--cmd stocks needs --input with a price panel CSV")
    n, p = _need_dims(cfg)
    panel = load_price_panel(cfg.input)
    study = run_study(panel, p, n, cfg.reps, cfg.alpha, cfg.seed, cfg.stride, cfg.start - 1,
                      cfg.standardize, cfg.k_cal, cfg.stat_config(), _cache(cfg), cfg.threads)
    meta = _metadata(cfg, n=n, p=p, reps=cfg.reps, alpha=cfg.alpha, stride=cfg.stride,
                     start=cfg.start, standardized=str(cfg.standardize).lower(),
                     k_cal=cfg.k_cal, usable_tickers=study.usable,
                     rejection_fraction=repr(study.rejection_fraction))
    rows = [[i + 1, r.p_value, r.statistic, ";".join(r.tickers)]
            for i, r in enumerate(study.repetitions)]
    _emit(cfg, meta, ["repetition", "p_value", "statistic", "tickers"], rows, out)
    print(f"rejection_fraction={study.rejection_fraction!r}", file=sys.stderr)
    fig = _figure_path(cfg)
    if fig:
        from .figures import pvalue_figure
        pvalue_figure(study.p_values, cfg.alpha, fig)
    return study, EXIT_OK


HANDLERS = {"test": cmd_test, "calibrate": cmd_calibrate, "size": cmd_size,
            "power": cmd_power, "lrt": cmd_lrt, "table": cmd_table, "stocks": cmd_stocks}


def run(argv=None, out=None):
    """Parse ``argv``, dispatch, and return the exit code."""
    out = sys.stdout if out is None else out
    try:
        cfg = parse_config(argv)
        _, code = HANDLERS[cfg.cmd](cfg, out)
        return code
    except USER_ERRORS as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"cfindep: error: {msg}", file=sys.stderr)
        return EXIT_ERROR
    except CfIndepError as exc:
        print(f"cfindep: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ArithmeticError, FloatingPointError, RuntimeError) as exc:
        print(f"cfindep: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
