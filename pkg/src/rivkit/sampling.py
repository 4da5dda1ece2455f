"""Exact zero-order-hold sampling maps between CT and DT models.

Forward direction: augmented-matrix exponential.  Inverse direction: principal
matrix logarithm of the companion-form one-step transition, which is real and
unique exactly when the DT model has no pole on the closed negative real axis.
Also hosts the relative-degree-preserving reparametrization: DT numerator
basis polynomials (the ZOH numerators of p^i / A_c(p)) and the matching
instrument numerators built from the Jacobian of the inverse map.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as npp
from scipy.linalg import expm, logm

from rivkit.errors import DegenerateNormalization, JacobianSingular, NegativeRealPole
from rivkit.lti import (
    CtModel,
    DtModel,
    StateSpace,
    char_poly_adjugate,
    companion_realization,
    normalized_tf_from_state_space,
    poly_roots,
    to_state_space,
)

__all__ = [
    "ZohDomainCertificate",
    "AdaptedDtModel",
    "zoh_discretize",
    "zoh_discretize_family",
    "inverse_zoh",
    "inverse_zoh_denominator",
    "check_domain",
    "adapted_forward",
    "adapted_inverse",
    "adapted_from_rho",
    "numerator_basis_polys",
    "instrument_polys",
    "sampling_jacobian",
    "relative_degree_from_step",
]

_NEG_AXIS_IM_TOL = 1e-9


@dataclass(frozen=True)
class ZohDomainCertificate:
    """Validity flags for the inverse sampling map at a given DT model.

    The map is well-defined and bijective when the DT model has no pole on the
    closed negative real axis and the sampling frequency pi/h exceeds twice
    the largest imaginary part of the corresponding CT poles (equivalently,
    every DT pole has |arg z| < pi/2).
    """

    dt_negative_real_pole: bool
    ct_imag_part_bound_ok: bool

    @property
    def valid(self) -> bool:
        return (not self.dt_negative_real_pole) and self.ct_imag_part_bound_ok


def _negative_real_axis(z: np.ndarray) -> np.ndarray:
    on_axis = np.abs(z.imag) <= _NEG_AXIS_IM_TOL * np.maximum(1.0, np.abs(z))
    return on_axis & (z.real <= 0.0)


def check_domain(dt: DtModel) -> ZohDomainCertificate:
    """Evaluate both domain conditions from the DT pole locations."""
    if dt.n == 0:
        return ZohDomainCertificate(False, True)
    z = poly_roots(dt.den)
    neg = bool(np.any(_negative_real_axis(z)))
    imag_ok = bool(np.max(np.abs(np.angle(z))) < np.pi / 2)
    return ZohDomainCertificate(neg, imag_ok)


def zoh_discretize(ct: CtModel, h: float) -> DtModel:
    """Exact ZOH equivalent of a CT model at period h.

    Uses the exponential of the augmented matrix [[A, B], [0, 0]] * h; output
    and feedthrough rows carry over unchanged.  For a ZOH input the DT output
    matches the CT output at every sampling instant.
    """
    alpha, betas = zoh_discretize_family(ct.a, h, [ct.b])
    return DtModel(alpha, betas[0], h)


def zoh_discretize_family(a, h: float, numerators) -> tuple[np.ndarray, list[np.ndarray]]:
    """ZOH-discretize several CT numerators over one shared denominator.

    The matrix exponential and the characteristic-polynomial recursion run
    once; each numerator only costs its output-row contraction.  Returns the
    shared DT denominator parameters and one DT numerator per input (length n
    for strictly proper members, n + 1 for biproper ones).
    """
    if h <= 0:
        raise ValueError("sampling period must be positive")
    a = np.asarray(a, dtype=float)
    n = len(a)
    if n == 0:
        return np.zeros(0), [np.asarray(num, dtype=float).copy() for num in numerators]
    den = np.concatenate(([1.0], a))
    ss = companion_realization(den, np.array([1.0]))
    aug = np.zeros((n + 1, n + 1))
    aug[:n, :n] = ss.A
    aug[:n, n:] = ss.B
    M = expm(aug * h)
    Ad = M[:n, :n]
    Bd = M[:n, n]
    cp, adj = char_poly_adjugate(Ad)
    k0 = cp[0]
    # transiently stiff iterates produce k0 ~ e^(h tr A); only a true zero
    # (DT pole at the origin) is unrepresentable
    if k0 == 0.0 or abs(k0) <= 1e-250 * np.max(np.abs(cp)):
        raise DegenerateNormalization("DT pole at the origin; constant-term-1 form unavailable")
    alpha = (cp / k0)[1:]
    adjB = np.array([adj[k] @ Bd for k in range(n)])  # adjB[k] vector for power n-1-k
    betas = []
    for num in numerators:
        nb = np.zeros(n + 1)
        num = np.asarray(num, dtype=float)
        if len(num) - 1 > n:
            raise ValueError("improper numerator in discretization family")
        nb[: len(num)] = num
        D = nb[n] / a[-1]
        C = nb[:n] - D * den[:n]
        out = np.empty(n + 1)
        for k in range(n):
            out[n - 1 - k] = C @ adjB[k]
        out[n] = 0.0
        out += D * cp
        out /= k0
        betas.append(out[:n] if nb[n] == 0.0 else out)
    return alpha, betas


def _principal_log_real(M: np.ndarray, what: str) -> np.ndarray:
    L = logm(M)
    if np.iscomplexobj(L):
        scale = np.linalg.norm(L)
        if np.linalg.norm(L.imag) > 1e-8 * max(scale, 1.0):
            raise NegativeRealPole(f"principal logarithm of {what} is not real")
        L = L.real
    return L


def inverse_zoh(dt: DtModel) -> CtModel:
    """CT model whose ZOH discretization at dt.h is dt.

    Builds the companion realization of the DT model, takes the principal
    logarithm of the augmented (n+1) x (n+1) one-step matrix scaled by 1/h,
    and keeps the output/feedthrough rows.  Strictly proper DT models map to
    strictly proper CT models (the top numerator coefficient is dropped).
    """
    n = dt.n
    if n == 0:
        return CtModel(np.zeros(0), dt.beta.copy())
    z = poly_roots(dt.den)
    if np.any(_negative_real_axis(z)):
        raise NegativeRealPole(f"DT pole on the closed negative real axis: {z}")
    ss = to_state_space(dt)
    aug = np.zeros((n + 1, n + 1))
    aug[:n, :n] = ss.A
    aug[:n, n:] = ss.B
    aug[n, n] = 1.0
    L = _principal_log_real(aug, "the augmented one-step matrix") / dt.h
    css = StateSpace(L[:n, :n], L[:n, n:], ss.C, ss.D)
    num, den = normalized_tf_from_state_space(css)
    b = num[:n] if len(dt.beta) <= n else num
    return CtModel(den[1:], b)


def inverse_zoh_denominator(alpha: np.ndarray, h: float) -> np.ndarray:
    """Denominator part of the inverse map: [alpha_1..alpha_n] -> [a_1..a_n].

    Independent of the numerator; the CT state matrix is the principal log of
    the DT companion matrix scaled by 1/h.
    """
    alpha = np.asarray(alpha, dtype=float)
    n = len(alpha)
    if n == 0:
        return np.zeros(0)
    den = np.concatenate(([1.0], alpha))
    z = poly_roots(den)
    if np.any(_negative_real_axis(z)):
        raise NegativeRealPole(f"DT pole on the closed negative real axis: {z}")
    Ad = companion_realization(den, np.array([1.0])).A
    Ac = _principal_log_real(Ad, "the DT state matrix") / h
    cp, _ = char_poly_adjugate(Ac)
    return (cp / cp[0])[1:]


@dataclass(frozen=True)
class AdaptedDtModel:
    """DT model in the relative-degree-preserving parametrization.

    The numerator is sum_i basis[i] * gamma[i], where basis[i] is the ZOH
    numerator of p^i / A_c(p) for the CT denominator tied to ``alpha``; the
    gamma coefficients equal the CT numerator coefficients exactly.  Parameter
    vector rho = [alpha_1..alpha_n, gamma_0..gamma_m].
    """

    alpha: np.ndarray
    gamma: np.ndarray
    basis: tuple
    h: float

    def __post_init__(self):
        alpha = np.atleast_1d(np.asarray(self.alpha, dtype=float))
        gamma = np.atleast_1d(np.asarray(self.gamma, dtype=float))
        basis = tuple(np.asarray(p, dtype=float) for p in self.basis)
        if len(basis) != len(gamma):
            raise ValueError("one basis polynomial per gamma coefficient required")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "basis", basis)

    @property
    def n(self) -> int:
        return len(self.alpha)

    @property
    def m(self) -> int:
        return len(self.gamma) - 1

    def rho(self) -> np.ndarray:
        return np.concatenate((self.alpha, self.gamma))

    def beta_reconstructed(self) -> np.ndarray:
        """Coefficients of sum_i basis[i](q) * gamma[i]."""
        width = max(len(p) for p in self.basis)
        out = np.zeros(width)
        for g, p in zip(self.gamma, self.basis):
            out[: len(p)] += g * p
        return out

    def to_dt_model(self) -> DtModel:
        return DtModel(self.alpha, self.beta_reconstructed(), self.h)


def numerator_basis_polys(alpha, h: float, count: int | None = None, method: str = "discretize"):
    """Numerator polynomials of the ZOH equivalents of p^i / A_c(p), i = 0..count-1.

    ``alpha`` is the DT denominator whose CT pre-image supplies A_c.  The
    production path discretizes the per-i companion realization; the adjugate
    path evaluates the closed form alpha_n e_{i+1}^T adj(qI - e^{Ah})(I - e^{Ah}) e_1
    and exists as an independent cross-check.
    """
    alpha = np.asarray(alpha, dtype=float)
    a = inverse_zoh_denominator(alpha, h)
    return basis_polys_from_ct_denominator(a, h, count, method)


def basis_polys_from_ct_denominator(a, h: float, count: int | None = None, method: str = "discretize"):
    """Same as numerator_basis_polys but starting from the CT denominator."""
    a = np.asarray(a, dtype=float)
    n = len(a)
    if count is None:
        count = n
    if method == "discretize":
        out = []
        for i in range(count):
            e = np.zeros(i + 1)
            e[i] = 1.0
            out.append(zoh_discretize(CtModel(a, e), h).beta)
        return out
    if method != "adjugate":
        raise ValueError(f"unknown method {method!r}")
    if count > n:
        raise ValueError("adjugate route only covers strictly proper members (i < n)")
    Ac = companion_realization(np.concatenate(([1.0], a)), np.array([1.0])).A
    Ad = expm(Ac * h)
    cp, M = char_poly_adjugate(Ad)
    k0 = cp[0]  # 1/alpha_n of the normalized DT denominator
    Bv = (np.eye(n) - Ad)[:, 0]
    out = []
    for i in range(count):
        coeffs = np.zeros(n)
        for k in range(n):
            coeffs[n - 1 - k] = M[k][i, :] @ Bv
        out.append(coeffs / k0)
    return out


def adapted_forward(ct: CtModel, h: float) -> AdaptedDtModel:
    """Map a CT model to the adapted DT parametrization (gamma_i = b_i)."""
    dt = zoh_discretize(ct, h)
    basis = basis_polys_from_ct_denominator(ct.a, h, count=ct.m + 1)
    return AdaptedDtModel(dt.alpha, ct.b.copy(), tuple(basis), h)


def adapted_inverse(rho: AdaptedDtModel) -> CtModel:
    """CT equivalent of an adapted model: inverse map on alpha, identity on gamma."""
    a = inverse_zoh_denominator(rho.alpha, rho.h)
    return CtModel(a, rho.gamma.copy())


def adapted_from_rho(alpha, gamma, h: float) -> AdaptedDtModel:
    """Assemble an adapted model (with its basis) from raw parameter blocks."""
    alpha = np.asarray(alpha, dtype=float)
    gamma = np.asarray(gamma, dtype=float)
    a = inverse_zoh_denominator(alpha, h)
    basis = basis_polys_from_ct_denominator(a, h, count=len(gamma))
    return AdaptedDtModel(alpha, gamma, tuple(basis), h)


def sampling_jacobian(alpha, h: float) -> np.ndarray:
    """J[s, r] = d a_{s+1} / d alpha_{r+1} by central differences.

    Step 1e-6 * max(1, |alpha_r|) per coordinate, full inverse-map evaluation
    per perturbation.
    """
    alpha = np.asarray(alpha, dtype=float)
    n = len(alpha)
    J = np.empty((n, n))
    for r in range(n):
        step = 1e-6 * max(1.0, abs(alpha[r]))
        up = alpha.copy()
        up[r] += step
        dn = alpha.copy()
        dn[r] -= step
        J[:, r] = (inverse_zoh_denominator(up, h) - inverse_zoh_denominator(dn, h)) / (2 * step)
    return J


def instrument_polys(rho: AdaptedDtModel) -> list[np.ndarray]:
    """Instrument numerators M_r(q), r = 1..n, for the adapted parametrization.

    M_r is the ZOH numerator of (sum_s da_s/dalpha_r p^s) * B_c(p) / A_c^2(p);
    the filter -M_r(q) / A_d^2(q) then equals the derivative of the CT-
    equivalent output with respect to alpha_r.  The squared DT denominator is
    formed by polynomial squaring, which the discretized denominator of the
    order-2n realization matches exactly.
    """
    n = rho.n
    h = rho.h
    J = sampling_jacobian(rho.alpha, h)
    if np.linalg.cond(J) > 1e12:
        raise JacobianSingular("inverse-map Jacobian condition number exceeds 1e12")
    a = inverse_zoh_denominator(rho.alpha, h)
    den = np.concatenate(([1.0], a))
    den2 = npp.polymul(den, den)
    out = []
    for r in range(n):
        P = np.concatenate(([0.0], J[:, r]))
        num = npp.polymul(P, rho.gamma)
        out.append(zoh_discretize(CtModel(den2[1:], num), h).beta)
    return out


def relative_degree_from_step(ct: CtModel, h: float, r_max: int | None = None) -> int:
    """Relative degree of the ZOH equivalent, read off the sampled step response.

    Returns the smallest r >= 1 with |y_step(r h)| above 1e-10 times the
    largest step-response magnitude over the window, or r_max + 1 if the
    whole window stays below tolerance.  Requires a strictly proper model.
    """
    if ct.m >= ct.n:
        raise ValueError("step-response relative degree requires a strictly proper model")
    if h <= 0:
        raise ValueError("sampling period must be positive")
    n = ct.n
    if r_max is None:
        r_max = 4 * n
    ss = to_state_space(ct)
    E = expm(ss.A * h)
    I = np.eye(n)
    P = I.copy()
    y = np.empty(r_max)
    for k in range(r_max):
        P = P @ E
        xk = np.linalg.solve(ss.A, (P - I) @ ss.B)
        y[k] = (ss.C @ xk).item()
    tol = 1e-10 * np.max(np.abs(y))
    hits = np.nonzero(np.abs(y) > tol)[0]
    if np.max(np.abs(y)) == 0.0 or len(hits) == 0:
        return r_max + 1
    return int(hits[0]) + 1
