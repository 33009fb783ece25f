"""Tapers, discrete Fourier transforms, nonparametric estimates and the
spectral-representation identities for complex-valued series.

The DFT convention is

    J(omega) = sqrt(delta) * sum_{t=1..N} h_t * x_t * exp(-i*omega*t*delta)

with a unit-energy taper ``sum h_t^2 = 1``; the uniform taper
``h_t = 1/sqrt(N)`` gives the plain periodogram ``|J|^2``.  Values are stored
at the discrete Fourier frequencies in FFT index order internally and exposed
on the grid objects from :mod:`blurwhittle.core`.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .core import (FourierGrid, KindError, SampledSeries, SizeError,
                   ValidityError, fourier_grid)

__all__ = [
    "Taper",
    "make_taper",
    "dft",
    "dft_fft_order",
    "periodogram",
    "SpectralEstimate",
    "RotaryDft",
    "rotary_dft",
    "rotary_cross_estimate",
    "fejer_kernel",
    "taper_kernel",
    "convert_representation",
    "REPRESENTATIONS",
]


# ---------------------------------------------------------------------------
# tapers


@dataclass(frozen=True)
class Taper:
    """Unit-energy data taper with its precomputed lag kernel.

    ``autocorrelation[tau] = sum_{t=1..N-tau} h_t h_{t+tau}`` for
    ``tau = 0 .. N-1``; the uniform taper reproduces the triangle kernel
    ``1 - tau/N``.
    """

    weights: np.ndarray
    kind: str
    nw: float | None
    autocorrelation: np.ndarray

    def __post_init__(self):
        for name in ("weights", "autocorrelation"):
            a = np.asarray(getattr(self, name), dtype=float)
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    @property
    def n(self) -> int:
        return self.weights.size

    def label(self) -> str:
        return f"dpss:{self.nw:g}" if self.kind == "dpss" else self.kind


def taper_kernel(h: np.ndarray) -> np.ndarray:
    """Lag autocorrelation of a taper, computed by FFT in O(N log N)."""
    n = h.size
    H = np.fft.rfft(h, 2 * n)
    return np.fft.irfft(np.abs(H) ** 2, 2 * n)[:n]


_taper_cache: dict = {}
_taper_lock = threading.Lock()


def make_taper(kind: str, n: int, nw: float = 4.0) -> Taper:
    """Build a uniform, dpss (order zero) or full cosine taper of length n.

    The dpss weights solve the symmetric tridiagonal eigenproblem with
    diagonal ``((N-1-2t)/2)^2 * cos(2*pi*W)`` and off-diagonal ``t(N-t)/2``
    (W = NW/N), taking the eigenvector of the largest eigenvalue with the
    sign fixed so ``sum h_t > 0``.
    """
    if n < 2:
        raise SizeError(f"taper needs n >= 2, got {n}")
    key = (kind, n, float(nw) if kind == "dpss" else None)
    with _taper_lock:
        if key in _taper_cache:
            return _taper_cache[key]
    if kind == "uniform":
        h = np.full(n, 1.0 / np.sqrt(n))
    elif kind == "cosine":
        t = np.arange(1, n + 1)
        h = 1.0 - np.cos(2.0 * np.pi * t / (n + 1))
        h /= np.sqrt(np.sum(h**2))
    elif kind == "dpss":
        if not (1.0 <= nw <= 16.0):
            raise ValidityError(f"dpss time-bandwidth NW must be in [1, 16], got {nw}")
        w = nw / n
        t = np.arange(n)
        diag = ((n - 1 - 2.0 * t) / 2.0) ** 2 * np.cos(2.0 * np.pi * w)
        off = t[1:] * (n - t[1:]) / 2.0
        _, vec = eigh_tridiagonal(diag, off, select="i", select_range=(n - 1, n - 1))
        h = vec[:, 0]
        h /= np.sqrt(np.sum(h**2))
        if h.sum() < 0:
            h = -h
    else:
        raise ValueError(f"unknown taper kind {kind!r}")
    tp = Taper(weights=h, kind=kind, nw=float(nw) if kind == "dpss" else None,
               autocorrelation=taper_kernel(h))
    with _taper_lock:
        _taper_cache[key] = tp
    return tp


# ---------------------------------------------------------------------------
# DFT and periodogram


def dft_fft_order(s: SampledSeries, taper: Taper | None = None) -> np.ndarray:
    """Tapered DFT at frequencies 2*pi*j/(N*delta), j = 0..N-1 (FFT order)."""
    n = s.n
    if taper is None:
        taper = make_taper("uniform", n)
    if taper.n != n:
        raise SizeError(f"taper length {taper.n} != series length {n}")
    # values index t-1 maps to time t = 1..N; fold the t=1 offset into a phase
    f = np.fft.fft(taper.weights * s.values)
    phase = np.exp(-2j * np.pi * np.arange(n) / n)
    return np.sqrt(s.delta) * phase * f


def dft(s: SampledSeries, taper: Taper | None = None):
    """DFT on the increasing two-sided grid; returns ``(grid, values)``."""
    J = dft_fft_order(s, taper)
    grid = fourier_grid(s.n, s.delta, "two")
    n = s.n
    shift = (n + 1) // 2 - 1  # number of negative frequencies
    vals = np.roll(J, shift)
    return grid, vals


@dataclass(frozen=True)
class SpectralEstimate:
    """Nonparametric spectral quantities on a Fourier grid.

    ``s_zz`` is the (tapered) periodogram on the two-sided grid.  For complex
    input the one-sided rotary quantities are filled as well: ``s_plus``,
    ``s_minus`` and the complex cross estimate ``s_cross`` on ``rotary_grid``
    (zero frequency excluded).
    """

    grid: FourierGrid
    s_zz: np.ndarray
    estimator: str
    rotary_grid: FourierGrid | None = None
    s_plus: np.ndarray | None = None
    s_minus: np.ndarray | None = None
    s_cross: np.ndarray | None = None

    def to_tsv(self, path) -> None:
        """Write plot-ready columns; order: omega, s_zz[, s_plus, s_minus,
        s_cross_re, s_cross_im] (rotary columns on their own rows)."""
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("omega\ts_zz\n")
            for om, v in zip(self.grid.omega, self.s_zz):
                fh.write(f"{om:.17g}\t{v:.17g}\n")
            if self.s_plus is not None:
                fh.write("omega\ts_plus\ts_minus\ts_cross_re\ts_cross_im\n")
                for om, p, m, c in zip(self.rotary_grid.omega, self.s_plus,
                                       self.s_minus, self.s_cross):
                    fh.write(f"{om:.17g}\t{p:.17g}\t{m:.17g}\t"
                             f"{c.real:.17g}\t{c.imag:.17g}\n")


def periodogram(s: SampledSeries, taper: Taper | None = None) -> SpectralEstimate:
    """(Tapered) periodogram ``|J(omega)|^2`` on the two-sided grid."""
    if taper is None:
        taper = make_taper("uniform", s.n)
    grid, J = dft(s, taper)
    est = "periodogram" if taper.kind == "uniform" else f"tapered({taper.label()})"
    szz = np.abs(J) ** 2
    if not s.is_complex:
        return SpectralEstimate(grid=grid, s_zz=szz, estimator=est)
    r = rotary_dft(s, taper)
    return SpectralEstimate(
        grid=grid, s_zz=szz, estimator=est, rotary_grid=r.grid,
        s_plus=np.abs(r.j_plus) ** 2, s_minus=np.abs(r.j_minus) ** 2,
        s_cross=rotary_cross_estimate(r),
    )


# ---------------------------------------------------------------------------
# rotary transform


@dataclass(frozen=True)
class RotaryDft:
    """Analytic / anti-analytic Fourier coefficients on omega in (0, pi/delta].

    ``j_plus(omega) = J_Z(omega)`` and ``j_minus(omega) = J_Z*(-omega)``; the
    pair relates to the Cartesian vector ``(J_X, J_Y)`` by the linear map
    ``[[1, 1j], [1, -1j]]``.
    """

    grid: FourierGrid
    j_plus: np.ndarray
    j_minus: np.ndarray


def rotary_dft(s: SampledSeries, taper: Taper | None = None) -> RotaryDft:
    if not s.is_complex:
        raise KindError("rotary DFT requires a complex-valued series")
    J = dft_fft_order(s, taper)
    n = s.n
    j = np.arange(1, n // 2 + 1)
    one_sided = fourier_grid(n, s.delta, "one")
    grid = FourierGrid(n=n, delta=s.delta, sided="one", omega=one_sided.omega[1:])
    return RotaryDft(grid=grid, j_plus=J[j], j_minus=np.conj(J[(n - j) % n]))


def rotary_cross_estimate(r: RotaryDft) -> np.ndarray:
    """Cross estimate ``j_plus * conj(j_minus)`` per positive frequency."""
    return r.j_plus * np.conj(r.j_minus)


# ---------------------------------------------------------------------------
# Fejér kernel


def fejer_kernel(omega, n: int, delta: float):
    """Spectral window of the length-n periodogram, unit integral over the
    Nyquist band; the omega -> 0 limit is N*delta/(2*pi)."""
    om = np.asarray(omega, dtype=float)
    x = om * delta / 2.0
    s = np.sin(x)
    num = np.sin(n * x)
    with np.errstate(divide="ignore", invalid="ignore"):
        val = (delta / (2.0 * np.pi * n)) * (num / s) ** 2
    lim = n * delta / (2.0 * np.pi)
    val = np.where(np.abs(s) < 1e-14, lim, val)
    return val if val.ndim else float(val)


# ---------------------------------------------------------------------------
# representation conversions (Cartesian / complex pair / rotary)

REPRESENTATIONS = ("cartesian", "complexpair", "rotary")


def _check_cartesian(sxx, syy, sxy):
    sxx = np.asarray(sxx, dtype=float)
    syy = np.asarray(syy, dtype=float)
    sxy = np.asarray(sxy, dtype=complex)
    if np.any(sxx < 0) or np.any(syy < 0):
        raise ValidityError("auto-spectra must be nonnegative")
    if np.any(np.abs(sxy) ** 2 > sxx * syy * (1 + 1e-12) + 1e-300):
        raise ValidityError("cross-spectrum violates |S_XY|^2 <= S_XX*S_YY")
    return sxx, syy, sxy


def _cart_to_pair(sxx, syy, sxy):
    szz_pos = sxx + syy + 2.0 * sxy.imag
    szz_neg = sxx + syy - 2.0 * sxy.imag
    rzz = sxx - syy + 2j * sxy.real
    return szz_pos, szz_neg, rzz


def _pair_to_cart(szz_pos, szz_neg, rzz):
    sxx = 0.25 * (szz_pos + szz_neg) + 0.5 * np.real(rzz)
    syy = 0.25 * (szz_pos + szz_neg) - 0.5 * np.real(rzz)
    sxy = 0.5 * np.imag(rzz) + 0.25j * (szz_pos - szz_neg)
    return sxx, syy, sxy


def convert_representation(triple, frm: str, to: str, omega_sign: str = "pos",
                           zero_branch: bool = False):
    """Convert one spectral triple between the three representations.

    Triples (elementwise over arrays), all at a fixed frequency ``omega != 0``:

    * ``cartesian``:   ``(S_XX(|omega|), S_YY(|omega|), S_XY(omega))``
    * ``complexpair``: ``(S_ZZ(+|omega|), S_ZZ(-|omega|), R_ZZ(omega))``
    * ``rotary``:      ``(S_++(|omega|), S_--(|omega|), S_+-(|omega|))``

    ``omega_sign`` gives the sign of the Cartesian cross-spectrum argument;
    conversions for negative omega conjugate ``S_XY``.  The rotary rows above
    do not hold at ``omega = 0``, where the energy is split between the two
    rotary components; with ``zero_branch=True`` the rotary representation is
    the 4-tuple ``(S_++(0), S_--(0), S_+-(0), R_+-(0))`` with
    ``S_++ = S_-- = S_+- = S_ZZ(0)/4`` and ``R_+- = R_ZZ(0)/4``.  Requesting
    a rotary conversion without the flag assumes ``omega != 0``.
    """
    if frm not in REPRESENTATIONS or to not in REPRESENTATIONS:
        raise ValueError(f"representations must be one of {REPRESENTATIONS}")
    if omega_sign not in ("pos", "neg"):
        raise ValueError("omega_sign must be 'pos' or 'neg'")

    # normalise the input to the complex pair (S_ZZ(+w), S_ZZ(-w), R_ZZ(w))
    if frm == "cartesian":
        sxx, syy, sxy = _check_cartesian(*triple)
        if omega_sign == "neg":
            sxy = np.conj(sxy)
        szz_pos, szz_neg, rzz = _cart_to_pair(sxx, syy, sxy)
    elif frm == "rotary":
        if zero_branch:
            if len(triple) != 4:
                raise ValidityError(
                    "zero-frequency rotary triple needs (S_++, S_--, S_+-, R_+-)")
            spp, smm, spm, rpm = triple
            szz_pos = szz_neg = 4.0 * np.real(np.asarray(spm))
            rzz = 4.0 * np.asarray(rpm, dtype=complex)
        else:
            spp, smm, spm = triple
            szz_pos = np.asarray(spp, dtype=float)
            szz_neg = np.asarray(smm, dtype=float)
            rzz = np.asarray(spm, dtype=complex)
    else:
        szz_pos = np.asarray(triple[0], dtype=float)
        szz_neg = np.asarray(triple[1], dtype=float)
        rzz = np.asarray(triple[2], dtype=complex)

    if to == "complexpair":
        return szz_pos, szz_neg, rzz
    if to == "rotary":
        if zero_branch:
            q = 0.25 * np.asarray(szz_pos, dtype=float)
            return q, q, q + 0j, 0.25 * rzz
        return szz_pos, szz_neg, rzz
    sxx, syy, sxy = _pair_to_cart(szz_pos, szz_neg, rzz)
    if omega_sign == "neg":
        sxy = np.conj(sxy)
    return sxx, syy, sxy
