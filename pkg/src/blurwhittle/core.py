"""Series containers, Fourier grids, frequency masks and parameter vectors.

Conventions used throughout the package:

* A sampled series ``x[t] = X(t * delta)`` has length ``N >= 2`` and sampling
  period ``delta > 0``; time units are carried by ``delta``.
* The discrete Fourier frequencies are ``omega_j = 2*pi*j / (N*delta)`` in
  radians per time unit.  The one-sided grid runs over ``j = 0 .. N//2``
  (Nyquist included once); the two-sided grid is the length-``N`` set
  ``j = -ceil(N/2)+1 .. N//2`` in increasing order.
* Complex series store a bivariate pair as ``z = x + 1j*y``; real series keep
  an exactly-zero imaginary part.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

__all__ = [
    "ParseError",
    "SizeError",
    "KindError",
    "MaskError",
    "ValidityError",
    "NonStationaryError",
    "ConditioningError",
    "SampledSeries",
    "FourierGrid",
    "FrequencyMask",
    "ParameterVector",
    "load_series",
    "save_series",
    "remove_mean",
    "difference",
    "fourier_grid",
    "rayleigh_frequency",
]


class ParseError(ValueError):
    """Malformed input file; message carries the 1-based line number."""


class SizeError(ValueError):
    """Input shorter than an operation requires."""


class KindError(ValueError):
    """Operation applied to the wrong series kind (real vs complex)."""


class MaskError(ValueError):
    """Frequency mask leaves too few frequencies, or masks are incompatible."""


class ValidityError(ValueError):
    """Model parameters violate a validity constraint (e.g. coherence >= 1)."""


class NonStationaryError(ValueError):
    """Autoregressive parameters with spectral radius >= 1."""


class ConditioningError(RuntimeError):
    """A required covariance factorisation failed; message names the pivot."""


# ---------------------------------------------------------------------------
# series container and preprocessing


@dataclass(frozen=True)
class SampledSeries:
    """A finite sample of a stationary series.

    ``values`` is always stored complex; for ``kind == "real"`` the imaginary
    part is exactly zero.  ``preprocessing`` records the last preprocessing
    step applied ("none", "mean_removed" or "differenced").
    """

    values: np.ndarray
    delta: float
    kind: str = "real"
    preprocessing: str = "none"

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.ndim != 1 or v.size < 2:
            raise SizeError(f"series needs at least 2 samples, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("series contains non-finite values")
        if self.delta <= 0:
            raise ValueError(f"delta must be positive, got {self.delta}")
        if self.kind not in ("real", "complex"):
            raise KindError(f"unknown kind {self.kind!r}")
        if self.kind == "real" and np.any(v.imag != 0.0):
            raise KindError("real series has nonzero imaginary part")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.size

    @property
    def is_complex(self) -> bool:
        return self.kind == "complex"

    def real_values(self) -> np.ndarray:
        if self.is_complex:
            raise KindError("series is complex-valued")
        return self.values.real


def remove_mean(s: SampledSeries) -> SampledSeries:
    """Subtract the sample mean (both parts for complex series)."""
    v = s.values - s.values.mean()
    return replace(s, values=v, preprocessing="mean_removed")


def difference(s: SampledSeries) -> SampledSeries:
    """First difference ``v[t+1] - v[t]``; output has length ``N - 1``."""
    if s.n < 3:
        raise SizeError(f"difference needs N >= 3, got N={s.n}")
    return replace(s, values=np.diff(s.values), preprocessing="differenced")


# ---------------------------------------------------------------------------
# CSV input / output

_FORMATS = ("csv_real", "csv_bivariate", "csv_complex")


def _parse_rows(path, ncols):
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = [p.strip() for p in line.split(",")]
            try:
                vals = [float(p) for p in parts]
            except ValueError:
                if lineno == 1:
                    continue  # optional header line
                raise ParseError(f"{path}: cannot parse line {lineno}: {line!r}") from None
            if len(vals) != ncols or not all(np.isfinite(vals)):
                raise ParseError(
                    f"{path}: line {lineno}: expected {ncols} finite values, got {line!r}"
                )
            rows.append(vals)
    return np.asarray(rows, dtype=float)


def load_series(path, format: str, delta: float) -> SampledSeries:
    """Read a series from CSV.

    ``csv_real`` is one column; ``csv_bivariate`` and ``csv_complex`` are two
    columns and both map the pair ``(a, b)`` to ``a + 1j*b`` (the bivariate
    and re/im readings coincide by construction).
    """
    if format not in _FORMATS:
        raise ValueError(f"unknown format {format!r}; expected one of {_FORMATS}")
    ncols = 1 if format == "csv_real" else 2
    data = _parse_rows(path, ncols)
    if data.shape[0] < 2:
        raise SizeError(f"{path}: need at least 2 rows, got {data.shape[0]}")
    if format == "csv_real":
        values = data[:, 0].astype(complex)
        kind = "real"
    else:
        values = data[:, 0] + 1j * data[:, 1]
        kind = "complex"
    return SampledSeries(values=values, delta=delta, kind=kind)


def save_series(s: SampledSeries, path) -> None:
    """Write a series as CSV; re-loading reproduces the values bit-for-bit."""
    if s.is_complex:
        np.savetxt(path, np.column_stack([s.values.real, s.values.imag]),
                   fmt="%.17g", delimiter=",")
    else:
        np.savetxt(path, s.values.real, fmt="%.17g", delimiter=",")


# ---------------------------------------------------------------------------
# Fourier grids


@dataclass(frozen=True)
class FourierGrid:
    """Discrete Fourier frequencies for a length-``n`` sample."""

    n: int
    delta: float
    sided: str
    omega: np.ndarray

    def __post_init__(self):
        om = np.asarray(self.omega, dtype=float)
        om.setflags(write=False)
        object.__setattr__(self, "omega", om)

    @property
    def nyquist(self) -> float:
        return np.pi / self.delta

    @property
    def rayleigh(self) -> float:
        return 2.0 * np.pi / (self.n * self.delta)


def fourier_grid(n: int, delta: float, sided: str = "one") -> FourierGrid:
    """Build the one- or two-sided grid of discrete Fourier frequencies."""
    if n < 2:
        raise SizeError(f"need n >= 2, got {n}")
    if delta <= 0:
        raise ValueError(f"delta must be positive, got {delta}")
    base = 2.0 * np.pi / (n * delta)
    if sided == "one":
        j = np.arange(n // 2 + 1)
    elif sided == "two":
        j = np.arange(-((n + 1) // 2) + 1, n // 2 + 1)
    else:
        raise ValueError(f"sided must be 'one' or 'two', got {sided!r}")
    return FourierGrid(n=n, delta=delta, sided=sided, omega=base * j)


def rayleigh_frequency(n: int, delta: float) -> float:
    return 2.0 * np.pi / (n * delta)


# ---------------------------------------------------------------------------
# frequency masks


@dataclass(frozen=True)
class FrequencyMask:
    """Subset of one-sided grid frequencies entering a likelihood sum."""

    included: np.ndarray
    exclude_zero: bool = False

    def __post_init__(self):
        inc = np.asarray(self.included, dtype=bool).copy()
        if self.exclude_zero:
            inc[0] = False
        if inc.sum() < 2:
            raise MaskError("mask must keep at least 2 frequencies")
        inc.setflags(write=False)
        object.__setattr__(self, "included", inc)

    @property
    def n_included(self) -> int:
        return int(self.included.sum())

    def indices(self) -> np.ndarray:
        return np.flatnonzero(self.included)

    @classmethod
    def full(cls, n_freqs: int, exclude_zero: bool = False) -> "FrequencyMask":
        return cls(np.ones(n_freqs, dtype=bool), exclude_zero=exclude_zero)

    @classmethod
    def from_fractions(cls, grid: FourierGrid, min_fraction: float = 0.0,
                       max_fraction: float = 1.0,
                       exclude_zero: bool = False) -> "FrequencyMask":
        """Keep frequencies with ``|omega|`` in the given fractions of Nyquist."""
        if grid.sided != "one":
            raise MaskError("masks are defined on the one-sided grid")
        lo = min_fraction * grid.nyquist
        hi = max_fraction * grid.nyquist
        inc = (grid.omega >= lo - 1e-15) & (grid.omega <= hi + 1e-15)
        return cls(inc, exclude_zero=exclude_zero)


def default_mask(grid: FourierGrid, series: SampledSeries,
                 rotary: bool = False) -> FrequencyMask:
    """Full mask; zero frequency dropped after preprocessing or for rotary use."""
    excl0 = rotary or series.preprocessing != "none"
    return FrequencyMask.full(grid.omega.size, exclude_zero=excl0)


# ---------------------------------------------------------------------------
# bounded parameter vectors

_KINDS = ("positive", "unit", "angle", "free")


def _wrap_angle(x):
    return np.mod(np.asarray(x) + np.pi, 2.0 * np.pi) - np.pi


@dataclass(frozen=True)
class ParameterVector:
    """Named parameters with bound metadata and optimizer-space transforms.

    Bound kinds: ``positive`` maps by log, ``unit`` (open interval (0,1)) by
    logit, ``angle`` is kept as-is and wrapped to ``[-pi, pi)``, ``free`` is
    unconstrained.
    """

    names: tuple
    values: np.ndarray
    kinds: tuple

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).copy()
        if len(self.names) != v.size or len(self.kinds) != v.size:
            raise ValueError("names, values and kinds must have equal length")
        for nm, val, kd in zip(self.names, v, self.kinds):
            if kd not in _KINDS:
                raise ValueError(f"unknown bound kind {kd!r} for {nm}")
            if kd == "positive" and not val > 0:
                raise ValidityError(f"parameter {nm} must be > 0, got {val}")
            if kd == "unit" and not (0.0 < val < 1.0):
                raise ValidityError(f"parameter {nm} must be in (0,1), got {val}")
            if kd == "angle" and not (-np.pi <= val < np.pi):
                raise ValidityError(f"parameter {nm} must be in [-pi,pi), got {val}")
            if not np.isfinite(val):
                raise ValidityError(f"parameter {nm} is not finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "kinds", tuple(self.kinds))

    def __len__(self):
        return self.values.size

    def __getitem__(self, name: str) -> float:
        return float(self.values[self.names.index(name)])

    def as_dict(self) -> dict:
        return {nm: float(v) for nm, v in zip(self.names, self.values)}

    def to_unconstrained(self) -> np.ndarray:
        u = np.empty(len(self))
        for i, kd in enumerate(self.kinds):
            x = self.values[i]
            if kd == "positive":
                u[i] = np.log(x)
            elif kd == "unit":
                u[i] = np.log(x) - np.log1p(-x)
            else:
                u[i] = x
        return u

    @classmethod
    def from_unconstrained(cls, names, kinds, u) -> "ParameterVector":
        u = np.asarray(u, dtype=float)
        v = np.empty_like(u)
        for i, kd in enumerate(kinds):
            if kd == "positive":
                v[i] = np.exp(u[i])
            elif kd == "unit":
                v[i] = 1.0 / (1.0 + np.exp(-u[i]))
            elif kd == "angle":
                v[i] = _wrap_angle(u[i])
            else:
                v[i] = u[i]
        return cls(names=tuple(names), values=v, kinds=tuple(kinds))

    def with_values(self, values) -> "ParameterVector":
        return ParameterVector(names=self.names, values=np.asarray(values, float),
                               kinds=self.kinds)
