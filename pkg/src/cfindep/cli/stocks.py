"""Repeated independence tests on randomly chosen groups of stock series."""

from dataclasses import dataclass

import numpy as np

from ..calibrate import StatConfig, scaled_statistic
from ..cf_test import mc_p_value
from ..errors import DataError, NotEnoughTickers
from ..genmodels import ModelSpec
from .cache import CalibrationCache
from .io import PricePanel, subsample_series


@dataclass(frozen=True)
class Repetition:
    tickers: tuple
    p_value: float
    statistic: float


@dataclass(frozen=True)
class StudyResult:
    repetitions: tuple
    alpha: float
    usable: int

    @property
    def p_values(self):
        return np.array([r.p_value for r in self.repetitions])

    @property
    def rejection_fraction(self):
        return float(np.mean(self.p_values < self.alpha))


def usable_tickers(panel: PricePanel, n, stride=50, start=0, standardize=True):
    """Tickers whose strided series exists, is complete and is not constant."""
    out = {}
    for t in panel.tickers:
        try:
            out[t] = subsample_series(panel, t, n, stride, start, standardize)
        except DataError:
            continue
    return out


def run_study(panel: PricePanel, p, n, repetitions=100, alpha=0.05, seed=0, stride=50,
              start=0, standardize=True, K_cal=1000, config: StatConfig = StatConfig(),
              cache: CalibrationCache | None = None, threads=1) -> StudyResult:
    """Draw ``p`` distinct tickers per repetition and test their independence.

    The null calibration is i.i.d. standard normal at the same (n, p).
    """
    series = usable_tickers(panel, n, stride, start, standardize)
    if len(series) < p:
        raise NotEnoughTickers(
            f"need {p} usable tickers with {n} points at stride {stride}, found {len(series)}")
    names = sorted(series)
    cache = CalibrationCache(enabled=False) if cache is None else cache
    calib = cache.calibration(n, p, ModelSpec("iid", "normal"), config, K_cal, seed, alpha,
                              threads)
    rng = np.random.default_rng(seed)
    reps = []
    for _ in range(repetitions):
        pick = sorted(rng.choice(len(names), size=p, replace=False))
        chosen = tuple(names[i] for i in pick)
        X = np.column_stack([series[t] for t in chosen])
        s = scaled_statistic(X, config)
        reps.append(Repetition(chosen, mc_p_value(s, calib.sorted_stats), float(s)))
    return StudyResult(tuple(reps), alpha, len(series))
