"""Parametric spectral / covariance models.

Normalisation convention: the closed-form continuous-time densities below
(`matern_spectrum_ct`, the rotary spectral matrix) are written on the scale
where

    acvs(tau) = integral_R  S~(omega) e^{i omega tau} d omega,

which is the scale on which the Matern covariance and its power-law density
are an exact transform pair.  Sampled-series code (periodograms, Whittle
sums) uses densities on the scale ``S(omega) = Delta * sum_tau s(tau)
e^{-i omega tau Delta}``, whose continuous limit is ``2*pi * S~(omega)``;
model classes expose that scale through ``spectral_density`` and friends.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.linalg import solve_discrete_lyapunov
from scipy.special import gamma, gammaln, kv

from .core import NonStationaryError, ParameterVector, ValidityError

__all__ = [
    "MaternParams",
    "matern_acvs",
    "matern_spectrum_ct",
    "aliased_acvs_spectrum",
    "acvs_from_spectrum",
    "differenced_model_spectrum",
    "CoherenceModel",
    "cartesian_coherency",
    "RotaryMaternSpec",
    "rotary_matern_matrix",
    "rotary_matern_moments",
    "ComplexArParams",
    "complex_ar_moments",
    "complex_ar_transition",
    "gneiting_validity",
    "MaternModel",
    "AlphaMaternModel",
    "WhiteNoiseModel",
    "ComplexWhiteNoiseModel",
    "DifferencedModel",
    "RotaryMaternModel",
    "ComplexArModel",
    "CrossSpectrumQuadrature",
    "model_from_json",
    "model_to_json",
    "MODEL_FAMILIES",
]

# continuous densities integrate to acvs(0) over d omega; sampled-units
# spectra carry an extra 2 pi (see module docstring)
_DENSITY_TO_SAMPLED = 2.0 * np.pi


# ---------------------------------------------------------------------------
# Matern primitives


@dataclass(frozen=True)
class MaternParams:
    """Amplitude phi > 0, smoothness nu > 0, damping alpha > 0 (1/time)."""

    phi: float
    nu: float
    alpha: float

    def __post_init__(self):
        for name in ("phi", "nu", "alpha"):
            if not getattr(self, name) > 0:
                raise ValidityError(f"Matern {name} must be > 0, got {getattr(self, name)}")


def matern_acvs(p: MaternParams, tau):
    """Matern autocovariance at time lag tau.

    ``phi^2 sqrt(pi) / (2^(nu-1) Gamma(nu+1/2) alpha^(2 nu)) * (alpha|tau|)^nu
    K_nu(alpha|tau|)``, with the finite tau -> 0 limit
    ``phi^2 sqrt(pi) Gamma(nu) / (Gamma(nu+1/2) alpha^(2 nu))``.
    """
    tau = np.abs(np.asarray(tau, dtype=float))
    scalar = tau.ndim == 0
    tau = np.atleast_1d(tau)
    x = p.alpha * tau
    lim = p.phi**2 * np.sqrt(np.pi) * gamma(p.nu) / (gamma(p.nu + 0.5) * p.alpha**(2 * p.nu))
    out = np.full(tau.shape, lim)
    m = x > 1e-12
    if np.any(m):
        c = p.phi**2 * np.sqrt(np.pi) / (2 ** (p.nu - 1) * gamma(p.nu + 0.5)
                                         * p.alpha ** (2 * p.nu))
        with np.errstate(under="ignore"):
            out[m] = c * x[m] ** p.nu * kv(p.nu, x[m])
    return float(out[0]) if scalar else out


def matern_spectrum_ct(p: MaternParams, omega):
    """Continuous-time Matern density ``phi^2 / (omega^2 + alpha^2)^(nu+1/2)``."""
    om = np.asarray(omega, dtype=float)
    return p.phi**2 / (om**2 + p.alpha**2) ** (p.nu + 0.5)


# ---------------------------------------------------------------------------
# spectrum <-> acvs plumbing


def aliased_acvs_spectrum(acvs, n: int, delta: float, rtol: float = 1e-12,
                          max_lag_factor: int = 4096):
    """Spectrum of the sampled process on the length-n Fourier grid.

    ``acvs`` is a callable of time lag.  Lags are accumulated until the tail
    falls below ``rtol * acvs(0)`` (cutoff extended with a warning otherwise),
    then folded modulo the grid, which evaluates ``Delta * sum_tau s(tau)
    e^{-i omega tau Delta}`` with the full two-sided lag sum.  Returns values
    in FFT order (j = 0..n-1).
    """
    s0 = complex(np.asarray(acvs(0.0)).ravel()[0])
    L = n
    while True:
        tail = np.max(np.abs(np.asarray(acvs(np.arange(L - 8, L) * delta))))
        if tail <= rtol * abs(s0) or L >= max_lag_factor * n:
            break
        L *= 2
    if L >= max_lag_factor * n:
        import warnings
        warnings.warn("acvs tail above tolerance at maximum lag cutoff; "
                      "aliased spectrum may be truncated")
    s = np.asarray(acvs(np.arange(L) * delta), dtype=complex)
    folded = np.zeros(n, dtype=complex)
    np.add.at(folded, np.arange(1, L) % n, s[1:])
    vals = delta * (s[0].real + 2.0 * np.fft.fft(folded).real)
    return vals


def acvs_from_spectrum(spectrum, n: int, delta: float, oversample: int = 4):
    """Recover the acvs at lags 0..n-1 from a two-sided sampled spectrum.

    ``spectrum`` is a callable on omega in (-pi/delta, pi/delta]; it is
    sampled on an ``oversample * 2n`` grid and inverse transformed, so the
    true acvs must be negligible beyond ``(oversample*2 - 1) * n`` lags.
    """
    m = int(oversample) * 2 * n
    k = np.fft.fftfreq(m, d=1.0) * m  # signed indices in fft order
    om = 2.0 * np.pi * k / (m * delta)
    vals = np.asarray(spectrum(om), dtype=complex)
    s = np.fft.ifft(vals) / delta
    return s[:n]


def differenced_model_spectrum(spectrum_values, omega, delta: float):
    """Spectrum of the first difference: ``2 (1 - cos(omega Delta)) S``."""
    om = np.asarray(omega, dtype=float)
    return 2.0 * (1.0 - np.cos(om * delta)) * np.asarray(spectrum_values)


# ---------------------------------------------------------------------------
# coherence models


@dataclass(frozen=True)
class CoherenceModel:
    """Frequency-domain coherency rho(omega) = sigma(omega) e^{-i theta(omega)}.

    Kinds:

    * ``none``: rho = 0.
    * ``constant``: real rho in [0, 1), no group delay.
    * ``linear_aniso``: sigma = max(0, 1 - c*omega*Delta), theta = 0; the
      coherence vanishes at omega = 1/(c Delta).
    * ``logistic``: sigma = 1/(1 + exp(q0 + q1 w^2 + ... + qr w^(2r))) and
      odd-polynomial group delay theta = th1 w + th2 w^3 + ...
    """

    kind: str = "none"
    rho: float = 0.0
    c: float = 1.0
    q: tuple = ()
    th: tuple = ()

    def __post_init__(self):
        if self.kind not in ("none", "constant", "linear_aniso", "logistic"):
            raise ValidityError(f"unknown coherence kind {self.kind!r}")
        if self.kind == "constant" and not (0.0 <= self.rho < 1.0):
            raise ValidityError(f"constant coherence needs rho in [0,1), got {self.rho}")
        if self.kind == "linear_aniso" and not self.c > 0:
            raise ValidityError(f"linear_aniso needs c > 0, got {self.c}")
        if self.kind == "logistic":
            if len(self.q) == 0:
                raise ValidityError("logistic coherence needs at least q0")
            if len(self.q) > 1 and not self.q[-1] > 0:
                raise ValidityError("highest-order q coefficient must be positive")

    def sigma(self, omega, delta: float = 1.0):
        om = np.abs(np.asarray(omega, dtype=float))
        if self.kind == "none":
            return np.zeros_like(om)
        if self.kind == "constant":
            return np.full_like(om, self.rho)
        if self.kind == "linear_aniso":
            return np.maximum(0.0, 1.0 - self.c * om * delta)
        qv = np.zeros_like(om)
        for k, qk in enumerate(self.q):
            qv += qk * om ** (2 * k)
        with np.errstate(over="ignore"):
            return 1.0 / (1.0 + np.exp(qv))

    def theta(self, omega):
        om = np.asarray(omega, dtype=float)
        tv = np.zeros_like(om)
        for k, tk in enumerate(self.th):
            tv += tk * om ** (2 * k + 1)
        return tv

    def evaluate(self, omega, delta: float = 1.0):
        """Complex coherency at omega (> 0 for rotary use)."""
        return self.sigma(omega, delta) * np.exp(-1j * self.theta(omega))

    def support_upper(self, delta: float = 1.0) -> float:
        """Frequency beyond which sigma is (numerically) zero; inf if none."""
        if self.kind == "none":
            return 0.0
        if self.kind == "linear_aniso":
            return 1.0 / (self.c * delta)
        if self.kind == "logistic" and len(self.q) > 1:
            lo, hi = 0.0, 1.0
            while self.sigma(hi) > 1e-14 and hi < 1e12:
                hi *= 2.0
            return hi
        return np.inf

    def is_zero(self) -> bool:
        return self.kind == "none" or (self.kind == "constant" and self.rho == 0.0)


def cartesian_coherency(q, th, omega):
    """Logistic-coherence / odd-delay Cartesian coherency rho_XY(omega).

    Even in omega through sigma, odd through theta (conjugate symmetry of the
    cross-spectrum); |rho| stays in [0, 1).
    """
    model = CoherenceModel(kind="logistic", q=tuple(q), th=tuple(th))
    om = np.asarray(omega, dtype=float)
    return model.sigma(om) * np.exp(-1j * np.sign(om) * model.theta(np.abs(om)))


# ---------------------------------------------------------------------------
# rotary (bivariate) Matern


@dataclass(frozen=True)
class RotaryMaternSpec:
    """Matern spectra for the two rotary components plus their coherency."""

    plus: MaternParams
    minus: MaternParams
    coherence: CoherenceModel = field(default_factory=CoherenceModel)


def rotary_matern_matrix(spec: RotaryMaternSpec, omega, delta: float = 1.0):
    """2x2 Hermitian rotary spectral matrix at omega > 0 (continuous units).

    Diagonal entries are the component Matern densities; the off-diagonal is
    ``rho(omega) * sqrt(S_++ S_--)``.  Raises if any |rho| >= 1.
    """
    om = np.asarray(omega, dtype=float)
    if np.any(om <= 0):
        raise ValidityError("rotary spectral matrix is defined for omega > 0")
    spp = matern_spectrum_ct(spec.plus, om)
    smm = matern_spectrum_ct(spec.minus, om)
    rho = spec.coherence.evaluate(om, delta)
    if np.any(np.abs(rho) >= 1.0):
        raise ValidityError("coherence modulus >= 1 at some frequency")
    cross = rho * np.sqrt(spp * smm)
    out = np.empty(om.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = spp
    out[..., 1, 1] = smm
    out[..., 0, 1] = cross
    out[..., 1, 0] = np.conj(cross)
    return out


class CrossSpectrumQuadrature:
    """Fixed Gauss-Legendre nodes on [0, band] with a cached cosine matrix.

    Used to transform one-sided cross-spectra to lag domain:
    ``r(tau) = 2 * integral_0^band f(omega) cos(omega tau) d omega`` evaluated
    for all lags at once.  Node count scales with the oscillation count
    ``band * max_lag / (2 pi)``.
    """

    def __init__(self, band: float, lags: np.ndarray, n_nodes: int | None = None):
        self.band = float(band)
        self.lags = np.asarray(lags, dtype=float)
        if n_nodes is None:
            cycles = self.band * max(self.lags.max(), 1.0) / (2.0 * np.pi)
            n_nodes = 1 << int(np.ceil(np.log2(max(2048, 3.2 * cycles))))
        x, w = np.polynomial.legendre.leggauss(n_nodes)
        self.omega = (x + 1.0) * 0.5 * self.band
        self.weights = w * 0.5 * self.band
        self._cos = np.cos(np.outer(self.omega, self.lags))

    def transform(self, f, upper: float | None = None):
        """``2 * sum_k w_k f(omega_k) cos(omega_k tau)`` over active nodes."""
        if upper is None or upper >= self.band:
            k = self.omega.size
        else:
            k = int(np.searchsorted(self.omega, upper))
            if k == 0:
                return np.zeros(self.lags.size, dtype=complex)
        vals = np.asarray(f(self.omega[:k]), dtype=complex)
        wf = 2.0 * self.weights[:k] * vals
        out = (wf.real @ self._cos[:k]).astype(complex)
        if np.any(wf.imag):
            out += 1j * (wf.imag @ self._cos[:k])
        return out


def _matern_sine_transform(p: MaternParams, taus):
    """``integral_0^inf S~(omega) sin(omega tau) d omega`` per lag (QAWF)."""
    out = np.zeros(len(taus))
    for i, t in enumerate(taus):
        if t == 0.0:
            continue
        out[i] = quad(lambda w: matern_spectrum_ct(p, w), 0.0, np.inf,
                      weight="sin", wvar=t, limit=400)[0]
    return out


def rotary_matern_moments(spec: RotaryMaternSpec, lags, delta: float = 1.0,
                          quadrature: CrossSpectrumQuadrature | None = None):
    """Covariance and relation sequences (s_zz, r_zz) at the given time lags.

    The even part of s_zz comes from the two Matern covariances in closed
    form; an asymmetric-energy model adds an odd imaginary part computed by
    oscillatory quadrature.  r_zz uses closed forms where the cross-spectrum
    is itself Matern (``none``/``constant`` with shared damping) and the
    cosine quadrature otherwise.
    """
    taus = np.asarray(lags, dtype=float)
    mp = matern_acvs(spec.plus, taus)
    mm = matern_acvs(spec.minus, taus)
    s_zz = 0.5 * (mp + mm) + 0j
    same_shape = (spec.plus.nu == spec.minus.nu and spec.plus.alpha == spec.minus.alpha)
    if not (same_shape and spec.plus.phi == spec.minus.phi):
        odd = (_matern_sine_transform(spec.plus, taus)
               - _matern_sine_transform(spec.minus, taus))
        s_zz = s_zz + 1j * odd

    coh = spec.coherence
    if coh.is_zero():
        return s_zz, np.zeros_like(s_zz)
    if coh.kind == "constant":
        if spec.plus.alpha != spec.minus.alpha:
            raise ValidityError("constant coherence needs equal damping "
                                "for a closed-form cross-covariance")
        cross = MaternParams(phi=np.sqrt(spec.plus.phi * spec.minus.phi),
                             nu=0.5 * (spec.plus.nu + spec.minus.nu),
                             alpha=spec.plus.alpha)
        r_zz = coh.rho * matern_acvs(cross, taus) + 0j
        return s_zz, r_zz

    upper = coh.support_upper(delta)
    if quadrature is None:
        band = min(upper, np.pi / delta) if np.isfinite(upper) else np.pi / delta
        quadrature = CrossSpectrumQuadrature(band=band, lags=taus)
    if upper > quadrature.band * (1 + 1e-9):
        import warnings
        warnings.warn("cross-spectrum support extends beyond the quadrature "
                      "band; truncating at the band edge")

    def f(om):
        return (coh.evaluate(om, delta)
                * np.sqrt(matern_spectrum_ct(spec.plus, om)
                          * matern_spectrum_ct(spec.minus, om)))

    r_zz = quadrature.transform(f, upper=upper)
    return s_zz, r_zz


def gneiting_validity(nu1: float, nu2: float, rho: float):
    """Largest constant cross-correlation keeping a shared-damping bivariate
    Matern (with cross smoothness (nu1+nu2)/2) nonnegative definite.

    Returns ``(valid, bound)`` with
    ``bound = G(nu1+1/2)^(1/2) G(nu2+1/2)^(1/2) G(m) /
    (G(nu1)^(1/2) G(nu2)^(1/2) G(m+1/2))``, ``m = (nu1+nu2)/2``.
    """
    if nu1 <= 0 or nu2 <= 0:
        raise ValidityError("smoothness parameters must be positive")
    m = 0.5 * (nu1 + nu2)
    logb = (0.5 * gammaln(nu1 + 0.5) + 0.5 * gammaln(nu2 + 0.5) + gammaln(m)
            - 0.5 * gammaln(nu1) - 0.5 * gammaln(nu2) - gammaln(m + 0.5))
    bound = float(np.exp(logb))
    return abs(rho) <= bound, bound


# ---------------------------------------------------------------------------
# improper complex AR(1)


@dataclass(frozen=True)
class ComplexArParams:
    """Improper first-order complex autoregression
    ``Z_t = lambda1 e^{i phi1} Z_{t-1} + lambda2 e^{i phi2} Z*_{t-1} + eps_t``.

    The innovation has variance ``sigma_eps2`` and complex relation ``r_eps``.
    ``r_eps=None`` selects the reduced 5-parameter form in which the noise
    ellipse matches the autoregressive part:
    ``r_eps = sigma_eps2 * 2 lambda1 lambda2 / (lambda1^2 + lambda2^2)
    * e^{i phi2}`` (zero when lambda1 = lambda2 = 0).
    """

    lambda1: float
    phi1: float
    lambda2: float
    phi2: float
    sigma_eps2: float
    r_eps: complex | None = None

    def __post_init__(self):
        if self.lambda1 < 0 or self.lambda2 < 0:
            raise ValidityError("AR moduli must be >= 0")
        if not self.sigma_eps2 > 0:
            raise ValidityError("innovation variance must be > 0")
        if self.r_eps is not None and abs(self.r_eps) > self.sigma_eps2:
            raise ValidityError("|r_eps| must not exceed sigma_eps2")

    def noise_relation(self) -> complex:
        if self.r_eps is not None:
            return complex(self.r_eps)
        den = self.lambda1**2 + self.lambda2**2
        if den == 0.0:
            return 0.0 + 0.0j
        ecc = 2.0 * self.lambda1 * self.lambda2 / den
        return self.sigma_eps2 * ecc * np.exp(1j * self.phi2)


def complex_ar_transition(p: ComplexArParams) -> np.ndarray:
    """Real 2x2 transition matrix of the (X, Y) embedding."""
    a1, b1 = p.lambda1 * np.cos(p.phi1), p.lambda1 * np.sin(p.phi1)
    a2, b2 = p.lambda2 * np.cos(p.phi2), p.lambda2 * np.sin(p.phi2)
    return np.array([[a1 + a2, b2 - b1], [b1 + b2, a1 - a2]])


def _complex_ar_noise_cov(p: ComplexArParams) -> np.ndarray:
    r = p.noise_relation()
    return 0.5 * np.array([[p.sigma_eps2 + r.real, r.imag],
                           [r.imag, p.sigma_eps2 - r.real]])


def complex_ar_moments(p: ComplexArParams, max_lag: int):
    """Stationary covariance s_zz and relation r_zz at lags 0..max_lag.

    Solves the discrete Lyapunov equation of the real bivariate embedding and
    propagates lagged covariances by the transition matrix.
    """
    A = complex_ar_transition(p)
    rad = np.max(np.abs(np.linalg.eigvals(A)))
    if rad >= 1.0:
        raise NonStationaryError(f"AR spectral radius {rad:.6g} >= 1")
    Q = _complex_ar_noise_cov(p)
    Sig = solve_discrete_lyapunov(A, Q)
    L = max_lag + 1
    s = np.empty(L, dtype=complex)
    r = np.empty(L, dtype=complex)
    G = Sig.copy()
    for k in range(L):
        s[k] = G[0, 0] + G[1, 1] + 1j * (G[1, 0] - G[0, 1])
        r[k] = G[0, 0] - G[1, 1] + 1j * (G[1, 0] + G[0, 1])
        G = A @ G
    return s, r


def complex_ar_spectral_pair(p: ComplexArParams, omega, delta: float = 1.0):
    """Exact sampled spectra (S_ZZ, R_ZZ) of the AR at the given frequencies."""
    A = complex_ar_transition(p)
    rad = np.max(np.abs(np.linalg.eigvals(A)))
    if rad >= 1.0:
        raise NonStationaryError(f"AR spectral radius {rad:.6g} >= 1")
    Q = _complex_ar_noise_cov(p)
    om = np.atleast_1d(np.asarray(omega, dtype=float))
    eye = np.eye(2)
    szz = np.empty(om.shape, dtype=float)
    rzz = np.empty(om.shape, dtype=complex)
    for i, w in enumerate(om):
        T = np.linalg.inv(eye - A * np.exp(-1j * w * delta))
        SU = delta * (T @ Q @ T.conj().T)
        szz[i] = np.real(SU[0, 0] + SU[1, 1] + 2.0 * np.imag(SU[0, 1]))
        rzz[i] = SU[0, 0] - SU[1, 1] + 2j * np.real(SU[0, 1]).real + 2j * 0
        rzz[i] = (SU[0, 0] - SU[1, 1]).real + 2j * SU[0, 1].real
    return szz, rzz


# ---------------------------------------------------------------------------
# model families (fit-facing)


class _ModelBase:
    """Shared plumbing: parameter vectors, JSON round trips, reporting."""

    family = "base"
    domain = "real"

    def param_vector(self) -> ParameterVector:
        raise NotImplementedError

    def with_vector(self, values) -> "_ModelBase":
        raise NotImplementedError

    @property
    def n_params(self) -> int:
        return len(self.param_vector())

    def report_values(self) -> dict:
        """Values on the scale used for percent-error reporting."""
        return self.param_vector().as_dict()

    def to_json_dict(self) -> dict:
        return {"schema": 1, "model": self.family,
                "params": self.param_vector().as_dict()}


class MaternModel(_ModelBase):
    """Univariate Matern process model.

    Percent-error reporting uses the spectral slope ``nu + 1/2`` for the
    smoothness entry (the scale on which relative errors of the power-law
    exponent are measured); ``phi`` and ``alpha`` report as themselves.
    """

    family = "matern"
    domain = "real"

    def __init__(self, phi, nu, alpha):
        self.p = MaternParams(phi, nu, alpha)

    def param_vector(self):
        return ParameterVector(("phi", "nu", "alpha"),
                               np.array([self.p.phi, self.p.nu, self.p.alpha]),
                               ("positive", "positive", "positive"))

    def with_vector(self, values):
        return MaternModel(*values)

    def acvs(self, tau):
        return matern_acvs(self.p, tau)

    def spectral_density(self, omega, delta: float = 1.0):
        return _DENSITY_TO_SAMPLED * matern_spectrum_ct(self.p, omega)

    def report_values(self):
        return {"phi": self.p.phi, "slope": self.p.nu + 0.5, "alpha": self.p.alpha}


class AlphaMaternModel(_ModelBase):
    """One-parameter Matern with amplitude tied to the damping
    (``phi = ratio * alpha``) and fixed smoothness."""

    family = "matern_alpha"
    domain = "real"

    def __init__(self, alpha, ratio=1.7725, nu=1.0):
        self.ratio = float(ratio)
        self.nu = float(nu)
        self.p = MaternParams(ratio * alpha, nu, alpha)

    def param_vector(self):
        return ParameterVector(("alpha",), np.array([self.p.alpha]), ("positive",))

    def with_vector(self, values):
        return AlphaMaternModel(values[0], ratio=self.ratio, nu=self.nu)

    def acvs(self, tau):
        return matern_acvs(self.p, tau)

    def spectral_density(self, omega, delta: float = 1.0):
        return _DENSITY_TO_SAMPLED * matern_spectrum_ct(self.p, omega)

    def to_json_dict(self):
        d = super().to_json_dict()
        d["config"] = {"ratio": self.ratio, "nu": self.nu}
        return d


class WhiteNoiseModel(_ModelBase):
    """Real white noise with variance sigma2 (flat sampled spectrum)."""

    family = "white"
    domain = "real"

    def __init__(self, sigma2):
        if not sigma2 > 0:
            raise ValidityError("sigma2 must be > 0")
        self.sigma2 = float(sigma2)

    def param_vector(self):
        return ParameterVector(("sigma2",), np.array([self.sigma2]), ("positive",))

    def with_vector(self, values):
        return WhiteNoiseModel(values[0])

    def acvs(self, tau):
        tau = np.asarray(tau, dtype=float)
        return np.where(tau == 0.0, self.sigma2, 0.0)

    def spectral_density(self, omega, delta: float = 1.0):
        # flat at Delta * sigma^2: white noise is intrinsically a sampled model
        return np.full(np.shape(omega), delta * self.sigma2)


class ComplexWhiteNoiseModel(_ModelBase):
    """Proper complex white noise; relation sequence identically zero."""

    family = "complex_white"
    domain = "complex"
    proper = True

    def __init__(self, sigma2):
        if not sigma2 > 0:
            raise ValidityError("sigma2 must be > 0")
        self.sigma2 = float(sigma2)

    def param_vector(self):
        return ParameterVector(("sigma2",), np.array([self.sigma2]), ("positive",))

    def with_vector(self, values):
        return ComplexWhiteNoiseModel(values[0])

    def moments(self, max_lag: int, delta: float = 1.0):
        s = np.zeros(max_lag + 1, dtype=complex)
        s[0] = self.sigma2
        return s, np.zeros(max_lag + 1, dtype=complex)

    def spectral_pair(self, omega, delta: float = 1.0):
        om = np.asarray(omega, dtype=float)
        return np.full(om.shape, delta * self.sigma2), np.zeros(om.shape, complex)


class DifferencedModel(_ModelBase):
    """First difference of a real base model (fits differenced series)."""

    family = "differenced"
    domain = "real"

    def __init__(self, base):
        if base.domain != "real":
            raise ValidityError("differenced wrapper supports real models")
        self.base = base

    def param_vector(self):
        return self.base.param_vector()

    def with_vector(self, values):
        return DifferencedModel(self.base.with_vector(values))

    def acvs(self, tau, delta: float = 1.0):
        tau = np.asarray(tau, dtype=float)
        b = self.base.acvs
        return 2.0 * b(tau) - b(tau - delta) - b(tau + delta)

    def spectral_density(self, omega, delta: float = 1.0):
        return differenced_model_spectrum(
            self.base.spectral_density(omega, delta), omega, delta)

    def report_values(self):
        return self.base.report_values()

    def to_json_dict(self):
        return {"schema": 1, "model": self.family, "base": self.base.to_json_dict()}


class RotaryMaternModel(_ModelBase):
    """Bivariate rotary Matern with shared damping and smoothness.

    The two rotary components share (nu, alpha) so the spectral matrix keeps
    a common power-law shape; amplitudes are either tied (isotropic-style,
    ``equal_amplitudes=True``) or separate.  The coherence model contributes
    its own parameters (constant: rho; linear_aniso: c; logistic: q, th).
    """

    family = "rotary_matern"
    domain = "complex"

    def __init__(self, phi_plus, nu, alpha, phi_minus=None,
                 coherence: CoherenceModel | None = None,
                 equal_amplitudes: bool | None = None):
        if equal_amplitudes is None:
            equal_amplitudes = phi_minus is None
        self.equal_amplitudes = bool(equal_amplitudes)
        if self.equal_amplitudes:
            phi_minus = phi_plus
        elif phi_minus is None:
            raise ValidityError("phi_minus required when amplitudes differ")
        self.coherence = coherence if coherence is not None else CoherenceModel()
        self.spec = RotaryMaternSpec(
            plus=MaternParams(phi_plus, nu, alpha),
            minus=MaternParams(phi_minus, nu, alpha),
            coherence=self.coherence)

    @property
    def proper(self) -> bool:
        return self.coherence.is_zero() and self.equal_amplitudes

    def _coh_param_spec(self):
        k = self.coherence.kind
        if k == "none":
            return (), (), ()
        if k == "constant":
            return ("rho",), (self.coherence.rho,), ("unit",)
        if k == "linear_aniso":
            return ("c",), (self.coherence.c,), ("positive",)
        names, vals, kinds = [], [], []
        for i, qv in enumerate(self.coherence.q):
            names.append(f"q{i}")
            vals.append(qv)
            kinds.append("positive" if i == len(self.coherence.q) - 1 and i > 0 else "free")
        for i, tv in enumerate(self.coherence.th):
            names.append(f"th{i + 1}")
            vals.append(tv)
            kinds.append("free")
        return tuple(names), tuple(vals), tuple(kinds)

    def param_vector(self):
        names = ["phi"] if self.equal_amplitudes else ["phi_plus", "phi_minus"]
        vals = [self.spec.plus.phi] if self.equal_amplitudes else \
            [self.spec.plus.phi, self.spec.minus.phi]
        kinds = ["positive"] * len(vals)
        names += ["nu", "alpha"]
        vals += [self.spec.plus.nu, self.spec.plus.alpha]
        kinds += ["positive", "positive"]
        cn, cv, ck = self._coh_param_spec()
        return ParameterVector(tuple(names) + cn, np.array(list(vals) + list(cv)),
                               tuple(kinds) + ck)

    def with_vector(self, values):
        values = np.asarray(values, dtype=float)
        if self.equal_amplitudes:
            phi_p = phi_m = values[0]
            nu, alpha = values[1], values[2]
            rest = values[3:]
        else:
            phi_p, phi_m = values[0], values[1]
            nu, alpha = values[2], values[3]
            rest = values[4:]
        k = self.coherence.kind
        if k == "none":
            coh = self.coherence
        elif k == "constant":
            coh = CoherenceModel(kind="constant", rho=rest[0])
        elif k == "linear_aniso":
            coh = CoherenceModel(kind="linear_aniso", c=rest[0])
        else:
            nq = len(self.coherence.q)
            coh = CoherenceModel(kind="logistic", q=tuple(rest[:nq]),
                                 th=tuple(rest[nq:]))
        return RotaryMaternModel(phi_p, nu, alpha, phi_minus=phi_m,
                                 coherence=coh,
                                 equal_amplitudes=self.equal_amplitudes)

    def moments(self, max_lag: int, delta: float = 1.0, quadrature=None):
        lags = np.arange(max_lag + 1) * delta
        return rotary_matern_moments(self.spec, lags, delta, quadrature)

    def spectral_pair(self, omega, delta: float = 1.0):
        """Sampled-units (S_ZZ(omega), R_ZZ(omega)) on a two-sided grid,
        continuous-time shape (no aliasing)."""
        om = np.asarray(omega, dtype=float)
        szz = np.where(om >= 0, matern_spectrum_ct(self.spec.plus, om),
                       matern_spectrum_ct(self.spec.minus, om))
        aom = np.abs(om)
        with np.errstate(invalid="ignore"):
            rho = self.coherence.evaluate(np.where(aom > 0, aom, 1.0), delta)
        cross = rho * np.sqrt(matern_spectrum_ct(self.spec.plus, aom)
                              * matern_spectrum_ct(self.spec.minus, aom))
        cross = np.where(aom > 0, cross, 0.0)
        return _DENSITY_TO_SAMPLED * szz, _DENSITY_TO_SAMPLED * cross

    def report_values(self):
        out = {}
        if self.equal_amplitudes:
            out["phi"] = self.spec.plus.phi
        else:
            out["phi_plus"] = self.spec.plus.phi
            out["phi_minus"] = self.spec.minus.phi
        out["slope"] = self.spec.plus.nu + 0.5
        out["alpha"] = self.spec.plus.alpha
        cn, cv, _ = self._coh_param_spec()
        out.update(dict(zip(cn, cv)))
        return out

    def to_json_dict(self):
        d = super().to_json_dict()
        d["config"] = {"coherence": self.coherence.kind,
                       "equal_amplitudes": self.equal_amplitudes}
        return d


class ComplexArModel(_ModelBase):
    """Improper complex AR(1); 5 free parameters by default, 7 with an
    explicitly parameterised noise relation."""

    family = "complex_ar"
    domain = "complex"
    proper = False

    def __init__(self, lambda1, phi1, lambda2, phi2, sigma_eps2,
                 rho_eps=None, psi_eps=None):
        self.free_relation = rho_eps is not None
        if self.free_relation:
            r_eps = sigma_eps2 * rho_eps * np.exp(1j * psi_eps)
            self.rho_eps, self.psi_eps = float(rho_eps), float(psi_eps)
        else:
            r_eps = None
            self.rho_eps = self.psi_eps = None
        self.p = ComplexArParams(lambda1, phi1, lambda2, phi2, sigma_eps2, r_eps)

    def param_vector(self):
        names = ("lambda1", "phi1", "lambda2", "phi2", "sigma_eps2")
        vals = [self.p.lambda1, self.p.phi1, self.p.lambda2, self.p.phi2,
                self.p.sigma_eps2]
        kinds = ("positive", "angle", "positive", "angle", "positive")
        if self.free_relation:
            names += ("rho_eps", "psi_eps")
            vals += [self.rho_eps, self.psi_eps]
            kinds += ("unit", "angle")
        return ParameterVector(names, np.array(vals), kinds)

    def with_vector(self, values):
        values = np.asarray(values, dtype=float)
        if self.free_relation:
            return ComplexArModel(*values[:5], rho_eps=values[5], psi_eps=values[6])
        return ComplexArModel(*values)

    def moments(self, max_lag: int, delta: float = 1.0):
        return complex_ar_moments(self.p, max_lag)

    def spectral_pair(self, omega, delta: float = 1.0):
        return complex_ar_spectral_pair(self.p, omega, delta)


MODEL_FAMILIES = {
    "matern": MaternModel,
    "matern_alpha": AlphaMaternModel,
    "white": WhiteNoiseModel,
    "complex_white": ComplexWhiteNoiseModel,
    "differenced": DifferencedModel,
    "rotary_matern": RotaryMaternModel,
    "complex_ar": ComplexArModel,
}


def model_to_json(model) -> dict:
    return model.to_json_dict()


def model_from_json(d: dict):
    """Rebuild a model from its JSON dictionary (schema 1)."""
    if d.get("schema", 1) != 1:
        raise ValueError(f"unsupported model schema {d.get('schema')!r}")
    fam = d.get("model")
    if fam not in MODEL_FAMILIES:
        raise ValueError(f"unknown model family {fam!r}")
    if fam == "differenced":
        return DifferencedModel(model_from_json(d["base"]))
    params = dict(d.get("params", {}))
    cfg = dict(d.get("config", {}))
    if fam == "matern":
        return MaternModel(params["phi"], params["nu"], params["alpha"])
    if fam == "matern_alpha":
        return AlphaMaternModel(params["alpha"], **cfg)
    if fam == "white":
        return WhiteNoiseModel(params["sigma2"])
    if fam == "complex_white":
        return ComplexWhiteNoiseModel(params["sigma2"])
    if fam == "complex_ar":
        return ComplexArModel(**params)
    # rotary matern
    kind = cfg.get("coherence", "none")
    equal = cfg.get("equal_amplitudes", "phi" in params)
    if kind == "none":
        coh = CoherenceModel()
    elif kind == "constant":
        coh = CoherenceModel(kind="constant", rho=params["rho"])
    elif kind == "linear_aniso":
        coh = CoherenceModel(kind="linear_aniso", c=params["c"])
    else:
        q = tuple(v for k, v in sorted(params.items()) if k.startswith("q"))
        th = tuple(v for k, v in sorted(params.items()) if k.startswith("th"))
        coh = CoherenceModel(kind="logistic", q=q, th=th)
    phi_p = params.get("phi", params.get("phi_plus"))
    phi_m = params.get("phi_minus")
    return RotaryMaternModel(phi_p, params["nu"], params["alpha"],
                             phi_minus=phi_m, coherence=coh,
                             equal_amplitudes=equal)
