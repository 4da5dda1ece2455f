"""Prefiltering of sampled signals and assembly of regression quantities.

Every filter runs as a causal difference equation with zero initial
conditions.  CT filters are applied to sampled signals by discretizing them
exactly under the ZOH convention and running the DT recursion, so filtered
values agree with the underlying CT filtering at every sampling instant; no
ODE integration is involved anywhere.

Regressor / instrument matrices follow the column order of the parameter
vectors: n output (denominator) columns, then the input (numerator) columns.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as npp

from rivkit import _backend
from rivkit.errors import ImproperFilter, UnstableFilterWarning
from rivkit.lti import CtModel, DtModel, NoiseModel, poly_roots, poly_trim
from rivkit.sampling import AdaptedDtModel, instrument_polys, zoh_discretize_family

__all__ = [
    "SampledSignal",
    "RegressionData",
    "dt_filter",
    "dt_filter_taps",
    "ct_filter_sampled",
    "build_regressor",
    "build_instrument",
    "build_adapted_regressor",
    "build_adapted_instrument",
    "build_filtered_output",
]


@dataclass(frozen=True)
class SampledSignal:
    """Uniformly sampled real signal with period h."""

    values: np.ndarray
    h: float

    def __post_init__(self):
        v = np.atleast_1d(np.asarray(self.values, dtype=float))
        if v.ndim != 1 or len(v) < 1:
            raise ValueError("signal must be a nonempty 1-D sequence")
        if not np.all(np.isfinite(v)):
            raise ValueError("signal contains non-finite values")
        if self.h <= 0:
            raise ValueError("sampling period must be positive")
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class RegressionData:
    """Time-aligned regressors, instruments and filtered outputs."""

    regressors: np.ndarray
    instruments: np.ndarray
    outputs: np.ndarray

    def __post_init__(self):
        if self.regressors.shape != self.instruments.shape:
            raise ValueError("regressor and instrument shapes differ")
        if self.regressors.shape[0] != len(self.outputs):
            raise ValueError("row count mismatch between matrices and outputs")


def taps_from_qpoly(num, den) -> tuple[np.ndarray, np.ndarray]:
    """Convert ascending q-polynomials to backward-shift taps (b, a).

    Dividing num/den by q^deg(den) gives the q^-1 normal form; properness
    requires deg(num) <= deg(den).
    """
    den = poly_trim(np.asarray(den, dtype=float))
    num = np.asarray(num, dtype=float)
    d = len(den) - 1
    num_t = poly_trim(num)
    if len(num_t) - 1 > d:
        raise ImproperFilter(f"numerator degree {len(num_t) - 1} exceeds denominator degree {d}")
    nb = np.zeros(d + 1)
    nb[: len(num)] = num[: d + 1]
    return nb[::-1].copy(), den[::-1].copy()


def _warn_if_unstable(den_q) -> None:
    den_q = poly_trim(den_q)
    if len(den_q) < 2:
        return
    roots = poly_roots(den_q)
    if np.any(np.abs(roots) >= 1.0):
        warnings.warn("filter denominator has roots on or outside the unit circle",
                      UnstableFilterWarning, stacklevel=3)


def dt_filter_taps(b, a, x: SampledSignal) -> SampledSignal:
    """Apply a filter given directly as backward-shift taps."""
    b = np.ascontiguousarray(b, dtype=float)
    a = np.ascontiguousarray(a, dtype=float)
    if a[0] == 0.0:
        raise ImproperFilter("leading denominator tap is zero")
    return SampledSignal(_backend.filt(b, a, np.ascontiguousarray(x.values)), x.h)


def dt_filter(num, den, x: SampledSignal, check_stability: bool = True) -> SampledSignal:
    """Filter x through num(q)/den(q) (ascending q-polynomials).

    Unstable denominators trigger an UnstableFilterWarning but the recursion
    still runs; callers decide how to react.
    """
    b, a = taps_from_qpoly(num, den)
    if check_stability:
        _warn_if_unstable(den)
    return dt_filter_taps(b, a, x)


def ct_filter_sampled(ct_num, ct_den, x: SampledSignal, check_stability: bool = True) -> SampledSignal:
    """Apply a CT filter to a sampled signal under the ZOH convention.

    The signal is treated as held constant between samples; the output is the
    exact sampled response of the CT filter, obtained from its ZOH equivalent.
    """
    ct_den = np.asarray(ct_den, dtype=float)
    ct_num = np.asarray(ct_num, dtype=float)
    if len(poly_trim(ct_num)) - 1 > len(poly_trim(ct_den)) - 1:
        raise ImproperFilter("CT filter numerator degree exceeds denominator degree")
    k0 = ct_den[0]
    alpha, betas = zoh_discretize_family(ct_den[1:] / k0, x.h, [ct_num / k0])
    return dt_filter(betas[0], np.concatenate(([1.0], alpha)), x, check_stability)


def _prefilter(noise: NoiseModel, x: SampledSignal) -> SampledSignal:
    """Inverse-noise prefilter D(q)/C(q); identity for the unit model."""
    if noise.is_unit:
        return x
    return dt_filter_taps(noise.d_taps, noise.c_taps, x)


def _unit_num(i: int) -> np.ndarray:
    e = np.zeros(i + 1)
    e[i] = 1.0
    return e


def _dt_columns(den_q, numerators, x: SampledSignal) -> list[np.ndarray]:
    _warn_if_unstable(den_q)
    return [dt_filter(num, den_q, x, check_stability=False).values for num in numerators]


def _ct_columns(a, numerators, x: SampledSignal) -> list[np.ndarray]:
    alpha, betas = zoh_discretize_family(a, x.h, numerators)
    den_q = np.concatenate(([1.0], alpha))
    return _dt_columns(den_q, betas, x)


def build_regressor(model: DtModel | CtModel, noise: NoiseModel,
                    u: SampledSignal, y: SampledSignal) -> np.ndarray:
    """Filtered regressor matrix: columns -xi^i/A y (i=1..n), xi^j/A u (j=0..m)."""
    uf = _prefilter(noise, u)
    yf = _prefilter(noise, y)
    n, m = model.n, model.m
    y_nums = [_unit_num(i) for i in range(1, n + 1)]
    u_nums = [_unit_num(j) for j in range(m + 1)]
    if isinstance(model, DtModel):
        ycols = _dt_columns(model.den, y_nums, yf)
        ucols = _dt_columns(model.den, u_nums, uf)
    else:
        ycols = _ct_columns(model.a, y_nums, yf)
        ucols = _ct_columns(model.a, u_nums, uf)
    return np.column_stack([-c for c in ycols] + ucols)


def build_instrument(model: DtModel | CtModel, noise: NoiseModel, u: SampledSignal) -> np.ndarray:
    """Filtered instrument matrix: columns -xi^i B/A^2 u (i=1..n), xi^j/A u (j=0..m).

    Uses the input only, so it is noise-free by construction and equals the
    parameter gradient of the filtered model output.
    """
    uf = _prefilter(noise, u)
    n, m = model.n, model.m
    grad_nums = [npp.polymul(_unit_num(i), model.num) for i in range(1, n + 1)]
    u_nums = [_unit_num(j) for j in range(m + 1)]
    if isinstance(model, DtModel):
        den2 = npp.polymul(model.den, model.den)
        acols = _dt_columns(den2, grad_nums, uf)
        ucols = _dt_columns(model.den, u_nums, uf)
    else:
        den2 = npp.polymul(model.den, model.den)
        acols = _ct_columns(den2[1:], grad_nums, uf)
        ucols = _ct_columns(model.a, u_nums, uf)
    return np.column_stack([-c for c in acols] + ucols)


def build_adapted_regressor(rho: AdaptedDtModel, noise: NoiseModel,
                            u: SampledSignal, y: SampledSignal) -> np.ndarray:
    """Adapted regressor: output columns as usual, input columns N_i/A_d u."""
    uf = _prefilter(noise, u)
    yf = _prefilter(noise, y)
    den = np.concatenate(([1.0], rho.alpha))
    ycols = _dt_columns(den, [_unit_num(i) for i in range(1, rho.n + 1)], yf)
    ucols = _dt_columns(den, list(rho.basis), uf)
    return np.column_stack([-c for c in ycols] + ucols)


def build_adapted_instrument(rho: AdaptedDtModel, noise: NoiseModel, u: SampledSignal) -> np.ndarray:
    """Adapted instrument: columns -M_r/A_d^2 u (r=1..n), then N_i/A_d u."""
    uf = _prefilter(noise, u)
    den = np.concatenate(([1.0], rho.alpha))
    den2 = npp.polymul(den, den)
    m_polys = instrument_polys(rho)
    acols = _dt_columns(den2, m_polys, uf)
    ucols = _dt_columns(den, list(rho.basis), uf)
    return np.column_stack([-c for c in acols] + ucols)


def build_filtered_output(model: DtModel | CtModel | AdaptedDtModel,
                          noise: NoiseModel, y: SampledSignal) -> np.ndarray:
    """Filtered output vector (D/C) (1/A) y."""
    yf = _prefilter(noise, y)
    if isinstance(model, CtModel):
        return _ct_columns(model.a, [np.array([1.0])], yf)[0]
    den = np.concatenate(([1.0], model.alpha))
    return _dt_columns(den, [np.array([1.0])], yf)[0]
