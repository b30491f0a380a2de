"""Anderson's likelihood-ratio test of independence, one variable per block.

With m = 1 the criterion factors as L = L_2 L_3 ... L_p where

    L_k = det(Q_{1..k}) / (det(Q_{1..k-1}) Q_kk)

is the k-th squared Cholesky pivot of the sample covariance Q divided by
Q_kk.  Each ``-(n - 3/2 - k/2) log L_k`` is asymptotically chi-square with
k - 1 degrees of freedom and the factors are independent, so the sum is
referred to chi-square with p (p - 1) / 2 degrees of freedom.
"""

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .calibrate import HarnessReport, STREAM_EVAL, replicate_seed
from .eigcore import as_data_matrix
from .genmodels import ModelSpec, generate

PIVOT_RTOL = 1e-12


@dataclass(frozen=True)
class LrtResult:
    statistic: float | None
    dof: int
    p_value: float | None
    degenerate: bool
    log_factors: np.ndarray | None = None


def pivots(Q):
    """Squared Cholesky pivots of Q, computed column by column.

    Stops early and returns ``(pivots_so_far, False)`` at the first pivot not
    exceeding ``PIVOT_RTOL * max(diag Q)``.
    """
    Q = np.asarray(Q, dtype=float)
    p = Q.shape[0]
    tol = PIVOT_RTOL * max(float(np.max(np.diag(Q))), 0.0)
    L = np.zeros_like(Q)
    piv = np.empty(p)
    for k in range(p):
        row = L[k, :k]
        d = Q[k, k] - row @ row
        if not d > tol:
            return piv[:k], False
        piv[k] = d
        L[k, k] = np.sqrt(d)
        if k + 1 < p:
            L[k + 1:, k] = (Q[k + 1:, k] - L[k + 1:, :k] @ row) / L[k, k]
    return piv, True


def lrt_statistic(X, m=1) -> LrtResult:
    """LRT of mutual independence of the p columns of real data ``X``."""
    if m != 1:
        raise NotImplementedError("only single-variable blocks (m = 1) are supported")
    X = as_data_matrix(X)
    if np.iscomplexobj(X):
        raise TypeError("the likelihood-ratio baseline handles real data only")
    n, p = X.shape
    if n < 2:
        raise ValueError("need at least two observations")
    dof = p * (p - 1) // 2
    Q = np.cov(X, rowvar=False, ddof=1).reshape(p, p)
    piv, ok = pivots(Q)
    if not ok:
        return LrtResult(None, dof, None, True)
    if p == 1:
        return LrtResult(0.0, 0, 1.0, False, np.zeros(0))
    log_l = np.log(piv[1:]) - np.log(np.diag(Q)[1:])
    # Hadamard's inequality gives L_k <= 1; clip roundoff above it
    log_l = np.minimum(log_l, 0.0)
    k = np.arange(2, p + 1)
    statistic = float(np.sum(-(n - 1.5 - k / 2.0) * log_l))
    p_value = float(stats.chi2.sf(statistic, dof))
    return LrtResult(statistic, dof, p_value, False, log_l)


def lrt_size_power(n, p, model: ModelSpec, K=1000, alpha=0.05, seed=0) -> HarnessReport:
    """Rejection rate of the LRT at level alpha over K draws from ``model``.

    Degenerate replicates (singular sample covariance) count as rejections
    in ``estimate``; ``rate_nondegenerate`` counts only genuine chi-square
    rejections, and ``degenerate_fraction`` reports how many were singular.
    """
    rejected = degenerate = 0
    for r in range(K):
        res = lrt_statistic(generate(model, n, p, replicate_seed(seed, STREAM_EVAL, r)))
        if res.degenerate:
            degenerate += 1
        elif res.p_value <= alpha:
            rejected += 1
    extras = {
        "rate_nondegenerate": [rejected / K],
        "degenerate_fraction": [degenerate / K],
    }
    return HarnessReport(f"lrt:{model.label()}", [(n, p)], [(rejected + degenerate) / K],
                         K, seed, extras)
