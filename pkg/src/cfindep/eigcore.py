"""Sample covariance construction and dense symmetric/Hermitian eigenvalues.

Two eigenvalue backends are available:

``"native"``
    Householder reduction to tridiagonal form followed by the implicit-shift
    QL iteration, eigenvalues only.  Written here, no LAPACK involved.
``"lapack"``
    ``scipy.linalg.eigvalsh`` (LAPACK ``syevd``: the same Householder + QL/QR
    scheme, compiled).  This is the default for Monte-Carlo work.

Complex Hermitian input always goes through the real symmetric embedding
``[[Re A, -Im A], [Im A, Re A]]`` whatever the backend.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DimensionMismatch, NonConvergence, NotHermitian

BACKENDS = ("native", "lapack")
DEFAULT_BACKEND = "lapack"

# total QL rotations allowed, per unit of dimension
SWEEP_FACTOR = 50
HERMITIAN_RTOL = 1e-12


@dataclass(frozen=True)
class EigenSpectrum:
    """Eigenvalues of a p x p sample covariance, sorted ascending.

    ``n`` is the number of observations behind the matrix; it may be ``None``
    for a matrix that is not a sample covariance.
    """

    values: np.ndarray
    n: int | None = None

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def p(self) -> int:
        return self.values.shape[0]

    @property
    def c_n(self) -> float:
        if self.n is None:
            raise ValueError("spectrum has no sample size attached")
        return self.p / self.n

    def __len__(self):
        return self.p


def as_data_matrix(X) -> np.ndarray:
    """Validate an n x p observation matrix (rows are observations)."""
    X = np.asarray(X)
    if X.ndim != 2:
        raise DimensionMismatch(f"data matrix must be 2-D, got shape {X.shape}")
    n, p = X.shape
    if n < 1 or p < 1:
        raise DimensionMismatch(f"data matrix must be at least 1x1, got {X.shape}")
    if not np.iscomplexobj(X):
        X = X.astype(float, copy=False)
    if not np.all(np.isfinite(X)):
        raise ValueError("data matrix contains NaN or infinite entries")
    return X


def sample_covariance(X) -> np.ndarray:
    """Return ``X^* X / n`` without mean-centering."""
    X = as_data_matrix(X)
    n = X.shape[0]
    A = X.conj().T @ X / n
    # exact symmetry, so the hermitian check downstream never trips on roundoff
    return (A + A.conj().T) / 2


def is_hermitian(A, rtol=HERMITIAN_RTOL) -> bool:
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        return False
    scale = max(1.0, float(np.max(np.abs(A), initial=0.0)))
    return bool(np.max(np.abs(A - A.conj().T), initial=0.0) <= rtol * scale)


def _check_square(A):
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
        raise DimensionMismatch(f"expected a non-empty square matrix, got {A.shape}")
    return A


def householder_tridiagonal(A):
    """Reduce a real symmetric matrix to tridiagonal form.

    Returns ``(d, e)`` with the diagonal ``d`` (length p) and the
    sub-diagonal ``e`` (length p, ``e[0] = 0``), in the layout the QL
    routine expects.
    """
    a = np.array(A, dtype=float)
    p = a.shape[0]
    e = np.zeros(p)
    for k in range(p - 2):
        x = a[k + 1:, k]
        alpha = np.linalg.norm(x)
        if alpha == 0.0:
            continue
        if x[0] > 0:
            alpha = -alpha
        v = x.copy()
        v[0] -= alpha
        vnorm2 = v @ v
        if vnorm2 == 0.0:
            e[k + 1] = x[0]
            continue
        # apply H = I - 2 v v^T / (v^T v) on both sides of the trailing block
        sub = a[k + 1:, k + 1:]
        w = sub @ v * (2.0 / vnorm2)
        kappa = (v @ w) / vnorm2
        w -= kappa * v
        sub -= np.outer(v, w) + np.outer(w, v)
        a[k + 1:, k + 1:] = sub
        e[k + 1] = alpha
    if p >= 2:
        e[p - 1] = a[p - 1, p - 2]
    return np.diag(a).copy(), e


def tridiagonal_ql(d, e, max_rotations=None):
    """Eigenvalues of a symmetric tridiagonal matrix by implicit-shift QL.

    ``d`` is the diagonal and ``e[1:]`` the sub-diagonal.  Raises
    :class:`NonConvergence` once more than ``max_rotations`` QL sweeps
    (default ``50 * p``) have been spent.
    """
    d = [float(v) for v in d]
    p = len(d)
    off = [float(v) for v in e[1:]] + [0.0]
    budget = SWEEP_FACTOR * p if max_rotations is None else max_rotations
    used = 0
    eps = np.finfo(float).eps
    for l in range(p):
        while True:
            m = l
            while m < p - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(off[m]) <= eps * dd:
                    break
                m += 1
            if m == l:
                break
            if used >= budget:
                raise NonConvergence(l, budget)
            used += 1
            g = (d[l + 1] - d[l]) / (2.0 * off[l])
            r = np.hypot(g, 1.0)
            g = d[m] - d[l] + off[l] / (g + (r if g >= 0 else -r))
            s = c = 1.0
            pp = 0.0
            i = m - 1
            underflow = False
            while i >= l:
                f = s * off[i]
                b = c * off[i]
                r = np.hypot(f, g)
                off[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= pp
                    off[m] = 0.0
                    underflow = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - pp
                r = (d[i] - g) * s + 2.0 * c * b
                pp = s * r
                d[i + 1] = g + pp
                g = c * r - b
                i -= 1
            if underflow:
                continue
            d[l] -= pp
            off[l] = g
            off[m] = 0.0
    return np.sort(np.array(d))


def _eigvals_real(A, backend):
    if backend == "lapack":
        return np.sort(scipy.linalg.eigvalsh(A, check_finite=False))
    if backend == "native":
        d, e = householder_tridiagonal(A)
        return tridiagonal_ql(d, e)
    raise ValueError(f"unknown eigen backend {backend!r}; choose from {BACKENDS}")


def eigenvalues_sym(A, n=None, backend=DEFAULT_BACKEND) -> EigenSpectrum:
    """All eigenvalues of a real symmetric matrix, ascending."""
    A = _check_square(A)
    if np.iscomplexobj(A):
        if np.any(A.imag != 0):
            raise NotHermitian("eigenvalues_sym needs a real matrix; use eigenvalues_herm")
        A = A.real
    A = np.asarray(A, dtype=float)
    if not is_hermitian(A):
        raise NotHermitian("matrix is not symmetric within tolerance")
    return EigenSpectrum(_eigvals_real(A, backend), n=n)


def real_embedding(A) -> np.ndarray:
    """The 2p x 2p real symmetric matrix ``[[Re A, -Im A], [Im A, Re A]]``."""
    A = np.asarray(A)
    re, im = A.real, A.imag
    return np.block([[re, -im], [im, re]])


def eigenvalues_herm(A, n=None, backend=DEFAULT_BACKEND) -> EigenSpectrum:
    """Eigenvalues of a complex Hermitian matrix via its real embedding.

    Every eigenvalue of ``A`` appears twice among the 2p eigenvalues of the
    embedding; every second entry of the sorted list is returned.
    """
    A = _check_square(A)
    if not is_hermitian(A):
        raise NotHermitian("matrix is not Hermitian within tolerance")
    doubled = _eigvals_real(real_embedding(A), backend)
    return EigenSpectrum(doubled[1::2], n=n)


def eig_tolerance(A) -> float:
    return 1e-9 * max(1.0, float(np.linalg.norm(A)))


def clip_roundoff(values, A):
    """Zero out the tiny negative eigenvalues a PSD matrix picks up from roundoff."""
    tol = eig_tolerance(A)
    values = np.array(values, dtype=float)
    values[(values < 0) & (values >= -tol)] = 0.0
    return values


def covariance_spectrum(A, n, backend=DEFAULT_BACKEND) -> EigenSpectrum:
    """Spectrum of an already-formed sample covariance with ``n`` observations."""
    A = np.asarray(A)
    if np.iscomplexobj(A) and np.any(A.imag != 0):
        spec = eigenvalues_herm(A, n=n, backend=backend)
    else:
        spec = eigenvalues_sym(A.real if np.iscomplexobj(A) else A, n=n, backend=backend)
    return EigenSpectrum(clip_roundoff(spec.values, A), n=n)


def spectrum_of(X, backend=DEFAULT_BACKEND) -> EigenSpectrum:
    """ESD support points of ``X^* X / n`` for an n x p data matrix."""
    X = as_data_matrix(X)
    return covariance_spectrum(sample_covariance(X), X.shape[0], backend=backend)
