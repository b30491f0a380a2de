"""On-disk cache of simulated null samples.

Entries are keyed by a hash of everything that fixes the null sample:
(n, p, null model, T1, T2, nodes, quadrature kind, cf nodes, backend, K,
seed).  The stored array is the sorted sample itself, so a cached
calibration equals a fresh one bit for bit.
"""

import hashlib
import json
import os
from pathlib import Path

import numpy as np

from ..calibrate import NullCalibration, StatConfig, simulate_null
from ..genmodels import ModelSpec

ENV_VAR = "CFINDEP_CACHE"


def default_cache_dir():
    env = os.environ.get(ENV_VAR)
    if env:
        return Path(env)
    return Path.home() / ".cache" / "cfindep"


def fingerprint(n, p, null: ModelSpec, config: StatConfig, K, seed):
    w = config.weights
    return {
        "n": int(n), "p": int(p), "null": null.to_dict(),
        "t1": float(w.t_lower), "t2": float(w.t_upper), "nodes": int(w.n_nodes),
        "kind": w.kind, "cf_nodes": int(config.cf_nodes), "backend": config.backend,
        "K": int(K), "seed": int(seed),
    }


def fingerprint_key(fp):
    blob = json.dumps(fp, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:24]


class CalibrationCache:
    def __init__(self, directory=None, enabled=True):
        self.directory = Path(directory) if directory else default_cache_dir()
        self.enabled = enabled

    def path_for(self, fp):
        return self.directory / f"null-{fingerprint_key(fp)}.npz"

    def load(self, fp):
        if not self.enabled:
            return None
        path = self.path_for(fp)
        if not path.exists():
            return None
        try:
            with np.load(path, allow_pickle=False) as data:
                stored = json.loads(str(data["fingerprint"]))
                stats = np.array(data["stats"], dtype=float)
        except (OSError, ValueError, KeyError):
            return None
        if stored != fp or stats.size != fp["K"]:
            return None
        return stats

    def store(self, fp, stats):
        if not self.enabled:
            return
        self.directory.mkdir(parents=True, exist_ok=True)
        path = self.path_for(fp)
        tmp = path.with_name(path.name + ".tmp.npz")
        np.savez(tmp, stats=np.asarray(stats, dtype=float), fingerprint=json.dumps(fp))
        os.replace(tmp, path)

    def calibration(self, n, p, null: ModelSpec, config: StatConfig, K, seed, alpha,
                    threads=1):
        """Cached or freshly simulated :class:`NullCalibration`."""
        fp = fingerprint(n, p, null, config, K, seed)
        stats = self.load(fp)
        if stats is None:
            calib = simulate_null(n, p, K=K, seed=seed, alpha=alpha, config=config,
                                  threads=threads, null=null)
            self.store(fp, calib.sorted_stats)
            return calib
        return NullCalibration(stats, alpha, n, p, config.weights.fingerprint,
                               null.label(), seed)
