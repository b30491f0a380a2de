"""Monte-Carlo null calibration and the empirical size/power harness.

Critical points are order statistics of K simulated null values of
``p^2 M_n``: the floor(K alpha / 2)-th smallest and largest.  With K = 1000
and alpha = 0.05 these are the 25th and the 976th of the sorted sample.

Replicate ``r`` of stream ``s`` under base seed ``b`` uses the RNG seed
``replicate_seed(b, s, r)``, a splitmix64 mix of the three, so results do not
depend on execution order or on the number of worker processes.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .cf_test import WeightMeasure, statistic_mn
from .eigcore import DEFAULT_BACKEND, covariance_spectrum, sample_covariance
from .errors import InsufficientReplicates
from .genmodels import ModelSpec, gen_panel, generate, null_counterpart, panel_condition
from .mp_law import DEFAULT_NODES, make_rule

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15

# stream tags keep calibration and evaluation draws disjoint
STREAM_CAL = 0x43414C
STREAM_EVAL = 0x4556414C


def splitmix64(x):
    """One step of the splitmix64 output function."""
    z = (x + GOLDEN_GAMMA) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def replicate_seed(base_seed, stream, r):
    return splitmix64(splitmix64(splitmix64(base_seed & MASK64) ^ stream) ^ r)


def order_index(K, alpha):
    """1-based rank floor(K alpha / 2) used for both tails."""
    k = int(np.floor(K * alpha / 2 + 1e-9))
    if k < 1:
        raise InsufficientReplicates(
            f"K={K} replicates at alpha={alpha} leave no order statistic; "
            f"need K >= {int(np.ceil(2 / alpha))}"
        )
    return k


@dataclass(frozen=True, eq=False)
class NullCalibration:
    sorted_stats: np.ndarray
    alpha: float
    n: int
    p: int
    weight_fingerprint: tuple = WeightMeasure().fingerprint
    null_label: str = "iid:normal"
    seed: int | None = None
    lower_q: float = field(init=False)
    upper_q: float = field(init=False)

    def __post_init__(self):
        stats = np.sort(np.asarray(self.sorted_stats, dtype=float))
        stats.setflags(write=False)
        object.__setattr__(self, "sorted_stats", stats)
        k = order_index(stats.size, self.alpha)
        object.__setattr__(self, "lower_q", float(stats[k - 1]))
        object.__setattr__(self, "upper_q", float(stats[stats.size - k]))
        object.__setattr__(self, "weight_fingerprint", tuple(self.weight_fingerprint))

    @property
    def K(self):
        return self.sorted_stats.size

    def rejects(self, scaled):
        scaled = np.asarray(scaled)
        return (scaled <= self.lower_q) | (scaled >= self.upper_q)


@dataclass
class HarnessReport:
    label: str
    grid: list
    estimates: list
    reps: int
    seed: int
    extras: dict = field(default_factory=dict)

    def rows(self):
        for i, (n, p) in enumerate(self.grid):
            row = {"n": n, "p": p, "estimate": self.estimates[i]}
            for key, values in self.extras.items():
                row[key] = values[i]
            yield row


@dataclass(frozen=True)
class StatConfig:
    """Everything besides the data that fixes the value of ``p^2 M_n``."""

    weights: WeightMeasure = field(default_factory=WeightMeasure)
    cf_nodes: int = DEFAULT_NODES
    backend: str = DEFAULT_BACKEND


def scaled_statistic(X, config: StatConfig = StatConfig(), direct=False):
    """``p^2 M_n`` of a data matrix.

    With ``direct`` the covariance is ``X^* X`` (the matrix already carries
    the 1/sqrt(n) factor, as for the Vandermonde model).
    """
    n = X.shape[0]
    A = X.conj().T @ X if direct else sample_covariance(X)
    if direct:
        A = (A + A.conj().T) / 2
    spec = covariance_spectrum(A, n, backend=config.backend)
    return statistic_mn(spec, config.weights, make_rule(config.cf_nodes)).scaled


def _replicate(args):
    spec, n, p, seed, config = args
    X = generate(spec, n, p, seed)
    return scaled_statistic(X, config, direct=spec.covariance_is_direct)


def _map(fn, tasks, threads):
    if threads is None or threads <= 1 or len(tasks) < 2:
        return [fn(t) for t in tasks]
    chunk = max(1, len(tasks) // (4 * threads))
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, tasks, chunksize=chunk))


def simulate_statistics(spec: ModelSpec, n, p, K, seed, stream,
                        config: StatConfig = StatConfig(), threads=1):
    """K values of ``p^2 M_n`` under ``spec``, in replicate order."""
    tasks = [(spec, n, p, replicate_seed(seed, stream, r), config) for r in range(K)]
    return np.array(_map(_replicate, tasks, threads))


def calibration_from_sample(stats, alpha, n, p, weights=None, null_label="custom", seed=None):
    weights = WeightMeasure() if weights is None else weights
    return NullCalibration(np.asarray(stats, dtype=float), alpha, n, p,
                           weights.fingerprint, null_label, seed)


def simulate_null(n, p, innovation="normal", K=1000, seed=0, alpha=0.05,
                  config: StatConfig = StatConfig(), threads=1,
                  null: ModelSpec | None = None, stream=STREAM_CAL) -> NullCalibration:
    """Null calibration from K i.i.d. matrices of the given innovation law.

    ``null`` overrides the i.i.d. model (used for model-matched nulls).
    """
    order_index(K, alpha)
    null = ModelSpec("iid", innovation) if null is None else null
    stats = simulate_statistics(null, n, p, K, seed, stream, config, threads)
    return NullCalibration(stats, alpha, n, p, config.weights.fingerprint,
                           null.label(), seed)


def rejection_rate(calib: NullCalibration, stats):
    stats = np.asarray(stats)
    return int(np.count_nonzero(calib.rejects(stats))) / stats.size


def empirical_size(n, p, innovation="normal", K_cal=1000, K_eval=1000, alpha=0.05,
                   seed=0, config: StatConfig = StatConfig(), threads=1,
                   null: ModelSpec | None = None, same_stream=False):
    """Rejection frequency of null data against an independently drawn calibration.

    ``same_stream`` evaluates on the calibration's own draws (a sanity check
    that must return alpha up to ties and rounding).
    """
    null = ModelSpec("iid", innovation) if null is None else null
    calib = simulate_null(n, p, K=K_cal, seed=seed, alpha=alpha, config=config,
                          threads=threads, null=null)
    stream = STREAM_CAL if same_stream else STREAM_EVAL
    stats = simulate_statistics(null, n, p, K_eval, seed, stream, config, threads)
    return rejection_rate(calib, stats)


def empirical_power(n, p, model: ModelSpec, K_cal=1000, K_eval=1000, alpha=0.05,
                    seed=0, config: StatConfig = StatConfig(), threads=1,
                    null: ModelSpec | None = None):
    """Rejection frequency under ``model`` with null-calibrated critical points."""
    null = null_counterpart(model) if null is None else null
    calib = simulate_null(n, p, K=K_cal, seed=seed, alpha=alpha, config=config,
                          threads=threads, null=null)
    stats = simulate_statistics(model, n, p, K_eval, seed, STREAM_EVAL, config, threads)
    return rejection_rate(calib, stats)


def run_grid(grid, model: ModelSpec, K_cal=1000, K_eval=1000, alpha=0.05, seed=0,
             config: StatConfig = StatConfig(), threads=1, label=None,
             null: ModelSpec | None = None, progress=None) -> HarnessReport:
    """Size or power of ``model`` over a list of (n, p) cells.

    Each cell uses its own calibration; the seed is shared, so cells are
    reproducible one at a time.
    """
    estimates = []
    for n, p in grid:
        estimates.append(empirical_power(n, p, model, K_cal, K_eval, alpha, seed,
                                         config, threads, null))
        if progress is not None:
            progress(n, p, estimates[-1])
    return HarnessReport(label or model.label(), list(grid), estimates, K_eval, seed)


def panel_condition_trend(n, p, K, seed, ubar=2.0):
    """Mean of the panel condition diagnostic over K null panel draws."""
    vals = [panel_condition(gen_panel(n, p, "null", replicate_seed(seed, STREAM_EVAL, r),
                                      return_u=True)[1], ubar) for r in range(K)]
    return float(np.mean(vals))


__all__ = [
    "NullCalibration", "HarnessReport", "StatConfig", "simulate_null",
    "simulate_statistics", "empirical_size", "empirical_power", "run_grid",
    "scaled_statistic", "replicate_seed", "splitmix64", "order_index",
    "calibration_from_sample", "rejection_rate", "panel_condition_trend",
]
