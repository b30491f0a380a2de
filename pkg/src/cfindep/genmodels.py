"""Seeded generators for the null scenarios and the dependence models.

Every generator returns an ``n x p`` matrix whose columns are the p vectors
under test.  Shared-stream convention: the main ``n x p`` innovation block is
always drawn first from the generator's RNG, and any extra draws (pre-sample
vectors, burn-in, common factors) come afterwards.  Degenerate parameters
(psi = 0, phi = 0, W = 0, alpha1 = 0, u = 0) therefore reproduce
:func:`gen_iid` bit for bit.
"""

from dataclasses import asdict, dataclass, fields

import numpy as np

from .errors import BadCoefficient, DimensionMismatch, SingularWeights

INNOVATIONS = ("normal", "std_gamma_4_2", "normal_mu1", "unit_phase")
KINDS = (
    "iid", "compound_symmetric", "ma1", "ar1", "sma", "sar", "sec",
    "panel", "nonlinear_ma", "arch1", "vandermonde",
)
U_MODES = ("null", "alt", "zero")
WEIGHT_SCHEMES = ("uniform", "zero", "identity")

ARCH_BURN_IN = 200
CS_COMMON = 0.05
SAR_RESIDUAL_TOL = 1e-8
# E R^2 of the nonlinear MA recursion with standard normal innovations: EZ^4 + 2
NONLINEAR_MA_VARIANCE = 5.0


def _rng(seed):
    return np.random.default_rng(seed)


def _check_dims(n, p):
    if int(n) < 1 or int(p) < 1:
        raise DimensionMismatch(f"dimensions must be positive, got n={n}, p={p}")


def draw_innovations(rng, size, innovation="normal"):
    """Standardized draws of the named law (``normal_mu1`` has mean 1)."""
    if innovation == "normal":
        return rng.standard_normal(size)
    if innovation == "std_gamma_4_2":
        # Gamma(shape 4, rate 2): mean 2, variance 1
        return rng.gamma(4.0, 0.5, size) - 2.0
    if innovation == "normal_mu1":
        return rng.standard_normal(size) + 1.0
    if innovation == "unit_phase":
        return np.exp(-1j * rng.uniform(0.0, 2 * np.pi, size))
    raise ValueError(f"unknown innovation {innovation!r}; choose from {INNOVATIONS}")


def gen_iid(n, p, innovation="normal", seed=None):
    _check_dims(n, p)
    return draw_innovations(_rng(seed), (n, p), innovation)


def gen_compound_symmetric(n, p, innovation="normal", seed=None):
    """Rows ``w^T T^{1/2}`` with population covariance 0.95 I + 0.05 11^T."""
    _check_dims(n, p)
    rng = _rng(seed)
    w = draw_innovations(rng, (n, p), innovation)
    common = draw_innovations(rng, (n, 1), innovation)
    return np.sqrt(1 - CS_COMMON) * w + np.sqrt(CS_COMMON) * common


def _check_coefficient(name, value):
    if not abs(value) < 1:
        raise BadCoefficient(f"{name} must satisfy |{name}| < 1, got {value}")


def ma1_from(z_main, z0, psi):
    """``v_t = z_t + psi z_{t-1}`` given z_1..z_p (columns) and z_0."""
    lagged = np.column_stack([z0, z_main[:, :-1]])
    return z_main + psi * lagged


def gen_ma1(n, p, psi=0.5, seed=None, innovation="normal"):
    _check_dims(n, p)
    _check_coefficient("psi", psi)
    rng = _rng(seed)
    z = draw_innovations(rng, (n, p), innovation)
    z0 = draw_innovations(rng, n, innovation)
    return ma1_from(z, z0, psi)


def ar1_from(z_main, z0, phi):
    """Stationary AR(1) across columns started at ``v_0 = z_0 / sqrt(1 - phi^2)``."""
    v = np.empty_like(z_main)
    prev = z0 / np.sqrt(1 - phi**2)
    for t in range(z_main.shape[1]):
        prev = phi * prev + z_main[:, t]
        v[:, t] = prev
    return v


def gen_ar1(n, p, phi=0.5, seed=None, innovation="normal"):
    _check_dims(n, p)
    _check_coefficient("phi", phi)
    rng = _rng(seed)
    z = draw_innovations(rng, (n, p), innovation)
    z0 = draw_innovations(rng, n, innovation)
    return ar1_from(z, z0, phi)


def study_weights(p, scheme="uniform", seed=None):
    """Spatial weight matrix used by the SMA/SAR/SEC power studies.

    ``uniform`` draws i.i.d. U(0, 1) / sqrt(p) entries.
    """
    if scheme == "uniform":
        return _rng(seed).uniform(0.0, 1.0, (p, p)) / np.sqrt(p)
    if scheme == "zero":
        return np.zeros((p, p))
    if scheme == "identity":
        return np.eye(p)
    raise ValueError(f"unknown weight scheme {scheme!r}; choose from {WEIGHT_SCHEMES}")


def _check_weights(W, p):
    W = np.asarray(W, dtype=float)
    if W.shape != (p, p):
        raise DimensionMismatch(f"weight matrix must be {p}x{p}, got {W.shape}")
    return W


def gen_sma(n, p, W, innovation="normal_mu1", seed=None):
    """Spatial moving average: ``v_j^T = eps_j^T (W^T + I)``."""
    _check_dims(n, p)
    W = _check_weights(W, p)
    eps = draw_innovations(_rng(seed), (n, p), innovation)
    return eps @ (W.T + np.eye(p))


def gen_sar(n, p, W, innovation="normal", seed=None):
    """Spatial autoregression: ``v_j^T = eps_j^T (W^T - I)^{-1}``.

    Solved as ``(W - I) V^T = eps^T``; the inverse is never formed.
    """
    _check_dims(n, p)
    W = _check_weights(W, p)
    eps = draw_innovations(_rng(seed), (n, p), innovation)
    M = W - np.eye(p)
    try:
        vt = np.linalg.solve(M, eps.T)
    except np.linalg.LinAlgError as exc:
        raise SingularWeights("W - I is singular") from exc
    resid = np.max(np.abs(M @ vt - eps.T), initial=0.0)
    scale = max(1.0, float(np.max(np.abs(eps), initial=0.0)))
    if not resid <= SAR_RESIDUAL_TOL * scale:
        raise SingularWeights(f"W - I is numerically singular (solve residual {resid:.2e})")
    return vt.T


def gen_sec(n, p, W, seed=None, innovation="normal"):
    """Spatial error components: ``v = xi W^T + eps``."""
    _check_dims(n, p)
    W = _check_weights(W, p)
    rng = _rng(seed)
    eps = draw_innovations(rng, (n, p), innovation)
    xi = draw_innovations(rng, (n, p), innovation)
    return xi @ W.T + eps


def panel_factor(p, mode, rng):
    """Unscaled factor loadings u_1..u_p (the model adds u_i / sqrt(p))."""
    if mode == "null":
        return rng.standard_normal(p) + 1.0
    if mode == "alt":
        T = rng.uniform(0.0, 1.0, (p, p))
        return 1.0 + T @ rng.standard_normal(p)
    if mode == "zero":
        return np.zeros(p)
    raise ValueError(f"unknown panel mode {mode!r}; choose from {U_MODES}")


def gen_panel(n, p, u_mode="null", seed=None, innovation="normal", return_u=False):
    """Additive panel model ``v_ij = eps_ij + u_i / sqrt(p)``.

    Column i of the result is the vector ``v_i``.  In ``alt`` mode
    ``u ~ N(1_p, T T^T)`` with T having i.i.d. U(0, 1) entries.
    """
    _check_dims(n, p)
    rng = _rng(seed)
    eps = draw_innovations(rng, (n, p), innovation)
    u = panel_factor(p, u_mode, rng)
    X = eps + u / np.sqrt(p)
    return (X, u) if return_u else X


def panel_condition(u, ubar=2.0):
    """Sample value of ``(1/p^2) sum_{i != j} (u_i^2 - ubar)(u_j^2 - ubar)``.

    The default ``ubar = 2`` is E u_i^2 for u_i ~ N(1, 1).
    """
    a = np.asarray(u, dtype=float) ** 2 - ubar
    p = a.size
    return float((a.sum() ** 2 - np.sum(a**2)) / p**2)


def nonlinear_ma_from(z_full):
    """``R_t = Z_{t-1} Z_{t-2} (Z_{t-2} + Z_t + 1)`` for t = 1..p.

    ``z_full`` holds the columns Z_{-1}, Z_0, Z_1, ..., Z_p.
    """
    z2, z1, z0 = z_full[:, :-2], z_full[:, 1:-1], z_full[:, 2:]
    return z1 * z2 * (z2 + z0 + 1.0)


def gen_nonlinear_ma(n, p, seed=None, innovation="normal", standardize=True):
    """Nonlinear MA model; ``standardize`` divides by the population sd sqrt(5)."""
    _check_dims(n, p)
    rng = _rng(seed)
    z = draw_innovations(rng, (n, p), innovation)
    pre = draw_innovations(rng, (n, 2), innovation)
    R = nonlinear_ma_from(np.column_stack([pre, z]))
    return R / np.sqrt(NONLINEAR_MA_VARIANCE) if standardize else R


def gen_arch1(n, p, alpha0=0.9, alpha1=0.1, square=True, seed=None,
              innovation="normal", burn_in=ARCH_BURN_IN):
    """ARCH(1) along each row, ``W_t = Z_t sqrt(alpha0 + alpha1 W_{t-1}^2)``.

    The recursion starts from N(0, alpha0 / (1 - alpha1)) and runs
    ``burn_in`` steps before the p kept ones.  With ``square`` the squared
    series is returned.
    """
    _check_dims(n, p)
    if not alpha0 > 0:
        raise BadCoefficient(f"alpha0 must be positive, got {alpha0}")
    if not 0 <= alpha1 < 1:
        raise BadCoefficient(f"alpha1 must lie in [0, 1), got {alpha1}")
    rng = _rng(seed)
    z = draw_innovations(rng, (n, p), innovation)
    prev = rng.standard_normal(n) * np.sqrt(alpha0 / (1 - alpha1))
    burn = draw_innovations(rng, (n, burn_in), innovation)
    for t in range(burn_in):
        prev = burn[:, t] * np.sqrt(alpha0 + alpha1 * prev**2)
    W = np.empty((n, p))
    for t in range(p):
        prev = z[:, t] * np.sqrt(alpha0 + alpha1 * prev**2)
        W[:, t] = prev
    return W**2 if square else W


def vandermonde_from(omega, n):
    """``V[k, j] = exp(-i k omega_j) / sqrt(n)`` for k = 0..n-1."""
    k = np.arange(n)[:, None]
    return np.exp(-1j * k * np.asarray(omega, dtype=float)[None, :]) / np.sqrt(n)


def gen_vandermonde(n, p, seed=None):
    """Random-phase Vandermonde matrix, phases i.i.d. U[0, 2 pi)."""
    _check_dims(n, p)
    omega = _rng(seed).uniform(0.0, 2 * np.pi, p)
    return vandermonde_from(omega, n)


def shuffle_rows_per_column(X, seed=None):
    """Permute the rows of each column independently.

    Keeps every column's marginal law and breaks all dependence across
    columns within a row.
    """
    rng = _rng(seed)
    X = np.array(X)
    for j in range(X.shape[1]):
        X[:, j] = X[rng.permutation(X.shape[0]), j]
    return X


@dataclass(frozen=True)
class ModelSpec:
    """Flat, serializable description of a data-generating process.

    Fields not used by ``kind`` are ignored.  ``shuffle`` wraps any model in
    :func:`shuffle_rows_per_column`, giving an independent-columns null with
    the model's own marginals.
    """

    kind: str = "iid"
    innovation: str = "normal"
    psi: float = 0.5
    phi: float = 0.5
    alpha0: float = 0.9
    alpha1: float = 0.1
    square: bool = True
    u_mode: str = "null"
    weights: str = "uniform"
    standardize: bool = True
    shuffle: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}; choose from {KINDS}")
        if self.innovation not in INNOVATIONS:
            raise ValueError(f"unknown innovation {self.innovation!r}")
        if self.kind == "ma1":
            _check_coefficient("psi", self.psi)
        if self.kind == "ar1":
            _check_coefficient("phi", self.phi)
        if self.kind == "arch1" and not (self.alpha0 > 0 and 0 <= self.alpha1 < 1):
            raise BadCoefficient("ARCH(1) needs alpha0 > 0 and 0 <= alpha1 < 1")
        if self.u_mode not in U_MODES:
            raise ValueError(f"unknown panel mode {self.u_mode!r}")
        if self.weights not in WEIGHT_SCHEMES:
            raise ValueError(f"unknown weight scheme {self.weights!r}")

    @property
    def is_complex(self):
        return self.kind == "vandermonde" or self.innovation == "unit_phase"

    @property
    def covariance_is_direct(self):
        """True when the 1/n normalization lives inside the generated matrix."""
        return self.kind == "vandermonde"

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        known = {f.name: f.type for f in fields(cls)}
        unknown = set(d) - set(known)
        if unknown:
            raise ValueError(f"unknown model keys: {sorted(unknown)}")
        kwargs = {}
        for key, raw in d.items():
            default = getattr(cls, key)
            if isinstance(default, bool):
                kwargs[key] = raw if isinstance(raw, bool) else str(raw).lower() in ("1", "true", "yes")
            elif isinstance(default, float):
                kwargs[key] = float(raw)
            else:
                kwargs[key] = str(raw)
        return cls(**kwargs)

    def label(self):
        parts = [self.kind]
        if self.kind == "ma1":
            parts.append(f"psi={self.psi:g}")
        elif self.kind == "ar1":
            parts.append(f"phi={self.phi:g}")
        elif self.kind == "arch1":
            parts.append(f"a0={self.alpha0:g},a1={self.alpha1:g}" + (",sq" if self.square else ""))
        elif self.kind == "panel":
            parts.append(self.u_mode)
        if self.kind not in ("vandermonde",):
            parts.append(self.innovation)
        if self.shuffle:
            parts.append("shuffled")
        return ":".join(parts)


def _aux_seed(rng):
    return int(rng.integers(0, 2**63))


def generate(spec: ModelSpec, n, p, seed=None):
    """Draw one ``n x p`` data matrix from ``spec``."""
    rng = _rng(seed)
    kind, inn = spec.kind, spec.innovation
    if kind == "iid":
        X = gen_iid(n, p, inn, rng)
    elif kind == "compound_symmetric":
        X = gen_compound_symmetric(n, p, inn, rng)
    elif kind == "ma1":
        X = gen_ma1(n, p, spec.psi, rng, inn)
    elif kind == "ar1":
        X = gen_ar1(n, p, spec.phi, rng, inn)
    elif kind in ("sma", "sar", "sec"):
        data_seed, w_seed = _aux_seed(rng), _aux_seed(rng)
        W = study_weights(p, spec.weights, w_seed)
        if kind == "sma":
            X = gen_sma(n, p, W, inn, data_seed)
        elif kind == "sar":
            X = gen_sar(n, p, W, inn, data_seed)
        else:
            X = gen_sec(n, p, W, data_seed, inn)
    elif kind == "panel":
        X = gen_panel(n, p, spec.u_mode, rng, inn)
    elif kind == "nonlinear_ma":
        X = gen_nonlinear_ma(n, p, rng, inn, spec.standardize)
    elif kind == "arch1":
        X = gen_arch1(n, p, spec.alpha0, spec.alpha1, spec.square, rng, inn)
    elif kind == "vandermonde":
        X = gen_vandermonde(n, p, rng)
    else:  # pragma: no cover - guarded by ModelSpec
        raise ValueError(kind)
    if spec.shuffle:
        X = shuffle_rows_per_column(X, rng)
    return X


def null_counterpart(spec: ModelSpec) -> ModelSpec:
    """The independent-columns model used to calibrate a test of ``spec``.

    * normal / gamma linear models: i.i.d. entries of the same innovation law
      (SMA's mean-one innovations calibrate against standard normal);
    * squared ARCH(1): the same model with rows shuffled per column, i.e.
      i.i.d. entries with exactly the ARCH marginal;
    * Vandermonde: i.i.d. unit-modulus complex entries;
    * panel model: the panel null itself (u_i i.i.d. N(1, 1)).
    """
    if spec.kind == "vandermonde":
        return ModelSpec("iid", "unit_phase")
    if spec.kind == "arch1" and spec.square:
        return ModelSpec("arch1", spec.innovation, alpha0=spec.alpha0,
                         alpha1=spec.alpha1, square=True, shuffle=True)
    if spec.kind == "panel":
        return ModelSpec("panel", spec.innovation, u_mode="null")
    if spec.kind in ("sma", "sar", "sec") and spec.innovation == "normal_mu1":
        return ModelSpec("iid", "normal")
    if spec.shuffle:
        return spec
    return ModelSpec("iid", spec.innovation)
