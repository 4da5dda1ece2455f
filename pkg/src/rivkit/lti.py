"""Polynomials, transfer-function models and companion state-space forms.

Polynomials are plain float arrays in ascending powers (``coeffs[k]``
multiplies ``xi**k``); index equals power, so there is no reversal bookkeeping.
Denominators are stored with their constant term fixed at 1:

    A_c(p) = a_n p^n + ... + a_1 p + 1      (continuous time, operator p)
    A_d(q) = alpha_n q^n + ... + alpha_1 q + 1   (discrete time, shift q)

Parameter vectors serialize as [a_1..a_n, b_0..b_m] (and the DT analogue),
which is the column/CSV order used everywhere else in the package.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as npp

from rivkit.errors import (
    DegenerateNormalization,
    NoRoots,
    PoleEvaluation,
    SingularDenominator,
    ZeroNumerator,
)

__all__ = [
    "CtModel",
    "DtModel",
    "NoiseModel",
    "StateSpace",
    "poly_trim",
    "poly_degree",
    "poly_eval",
    "poly_roots",
    "real_poly_from_roots",
    "char_poly_adjugate",
    "companion_realization",
    "to_state_space",
    "tf_from_state_space",
    "tf_eval",
    "is_stable",
    "relative_degree",
]

_TRIM_REL = 1e-12


def poly_trim(coeffs, rel_tol: float = _TRIM_REL) -> np.ndarray:
    """Strip trailing (highest-power) coefficients that vanish relative to the max."""
    c = np.atleast_1d(np.asarray(coeffs, dtype=float))
    scale = np.max(np.abs(c))
    if scale == 0.0:
        return c[:1] * 0.0
    keep = np.nonzero(np.abs(c) > rel_tol * scale)[0]
    return c[: keep[-1] + 1].copy()


def poly_degree(coeffs) -> int:
    """Degree after trimming; 0 for the zero polynomial."""
    return len(poly_trim(coeffs)) - 1


def poly_eval(coeffs, z):
    return npp.polyval(z, np.asarray(coeffs, dtype=float))


def poly_roots(coeffs) -> np.ndarray:
    """All roots (with multiplicity) via companion-matrix eigenvalues.

    Raises NoRoots for polynomials of degree < 1 after trimming.
    """
    c = poly_trim(coeffs)
    if len(c) < 2:
        raise NoRoots("degree-0 polynomial has no roots")
    return npp.polyroots(c)


def real_poly_from_roots(roots) -> np.ndarray:
    """Monic ascending polynomial from a conjugate-closed root set."""
    c = npp.polyfromroots(np.asarray(roots, dtype=complex))
    if np.max(np.abs(c.imag)) > 1e-8 * max(1.0, np.max(np.abs(c.real))):
        raise ValueError("root set is not closed under conjugation")
    return c.real.copy()


def char_poly_adjugate(A: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Characteristic polynomial and adjugate of (xi*I - A), Faddeev-LeVerrier.

    Returns ``(c, M)`` with ``c`` ascending monic of length n+1 and ``M`` of
    shape (n, n, n) such that adj(xi*I - A) = sum_k M[k] xi^(n-1-k).  Purely
    algebraic (no eigendecomposition), so repeated eigenvalues cost nothing in
    accuracy.  The matrix is pre-scaled by its Frobenius norm to keep the
    recursion well-ranged for stiff systems.
    """
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    if n == 0:
        return np.array([1.0]), np.zeros((0, 0, 0))
    s = np.linalg.norm(A)
    s = s if s > 1.0 else 1.0
    As = A / s
    c_desc = np.empty(n + 1)
    c_desc[0] = 1.0
    M = np.empty((n, n, n))
    Mk = np.eye(n)
    M[0] = Mk
    for k in range(1, n + 1):
        AM = As @ Mk
        ck = -np.trace(AM) / k
        c_desc[k] = ck
        if k < n:
            Mk = AM + ck * np.eye(n)
            M[k] = Mk
    # undo the scaling: c_k(A) = c_k(A/s) * s^k, M_k(A) = M_k(A/s) * s^k
    powers = s ** np.arange(n + 1)
    c_desc *= powers
    for k in range(n):
        M[k] *= powers[k]
    return c_desc[::-1].copy(), M


def _normalize_constant_term(num: np.ndarray, den: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Scale a rational function so the denominator constant term is exactly 1."""
    k0 = den[0]
    if abs(k0) <= 1e-12 * np.max(np.abs(den)):
        raise DegenerateNormalization(
            "denominator constant term is zero (pole at the origin of the domain variable)"
        )
    return num / k0, den / k0


@dataclass(frozen=True)
class CtModel:
    """Continuous-time rational model B_c(p)/A_c(p) in constant-term-1 form.

    ``a`` holds [a_1..a_n] (the implicit constant term is 1) and ``b`` holds
    [b_0..b_m].  Proper models only (n >= m).
    """

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.a, dtype=float))
        b = np.atleast_1d(np.asarray(self.b, dtype=float))
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise ValueError("non-finite coefficients")
        if len(a) > 0 and a[-1] == 0.0:
            raise SingularDenominator("leading denominator coefficient a_n is zero")
        if len(b) - 1 > len(a):
            raise ValueError(f"improper model: m={len(b) - 1} > n={len(a)}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def n(self) -> int:
        return len(self.a)

    @property
    def m(self) -> int:
        return len(self.b) - 1

    @property
    def den(self) -> np.ndarray:
        """Full ascending denominator [1, a_1, ..., a_n]."""
        return np.concatenate(([1.0], self.a))

    @property
    def num(self) -> np.ndarray:
        return self.b.copy()

    def theta(self) -> np.ndarray:
        """Parameter vector [a_1..a_n, b_0..b_m]."""
        return np.concatenate((self.a, self.b))

    @staticmethod
    def from_theta(theta, n: int) -> "CtModel":
        theta = np.asarray(theta, dtype=float)
        return CtModel(theta[:n], theta[n:])


@dataclass(frozen=True)
class DtModel:
    """Discrete-time rational model B_d(q)/A_d(q) in constant-term-1 form.

    ``alpha`` holds [alpha_1..alpha_n]; ``beta`` holds [beta_0..beta_db] with
    db <= n (db = n-1 for ZOH images of strictly proper CT systems, whose
    beta_n term is identically zero and therefore omitted).
    """

    alpha: np.ndarray
    beta: np.ndarray
    h: float

    def __post_init__(self):
        alpha = np.atleast_1d(np.asarray(self.alpha, dtype=float))
        beta = np.atleast_1d(np.asarray(self.beta, dtype=float))
        if not (np.all(np.isfinite(alpha)) and np.all(np.isfinite(beta))):
            raise ValueError("non-finite coefficients")
        if len(alpha) > 0 and alpha[-1] == 0.0:
            raise SingularDenominator("leading denominator coefficient alpha_n is zero")
        if len(beta) - 1 > len(alpha):
            raise ValueError(f"improper model: deg B = {len(beta) - 1} > n = {len(alpha)}")
        if self.h <= 0:
            raise ValueError("sampling period must be positive")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)

    @property
    def n(self) -> int:
        return len(self.alpha)

    @property
    def m(self) -> int:
        return len(self.beta) - 1

    @property
    def den(self) -> np.ndarray:
        return np.concatenate(([1.0], self.alpha))

    @property
    def num(self) -> np.ndarray:
        return self.beta.copy()

    def theta(self) -> np.ndarray:
        """Parameter vector [alpha_1..alpha_n, beta_0..beta_db]."""
        return np.concatenate((self.alpha, self.beta))

    @staticmethod
    def from_theta(theta, n: int, h: float) -> "DtModel":
        theta = np.asarray(theta, dtype=float)
        return DtModel(theta[:n], theta[n:], h)


@dataclass(frozen=True)
class NoiseModel:
    """ARMA noise shaping filter H(q) = C(q)/D(q) in backward-shift form.

    C(q) = 1 + c_1 q^-1 + ... + c_mc q^-mc and D(q) likewise with d_j; both
    monic by construction, and n_d >= m_c.  ``unit()`` gives C = D = 1.
    """

    c: np.ndarray = field(default_factory=lambda: np.zeros(0))
    d: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.c, dtype=float)) if np.size(self.c) else np.zeros(0)
        d = np.atleast_1d(np.asarray(self.d, dtype=float)) if np.size(self.d) else np.zeros(0)
        if len(d) < len(c):
            raise ValueError(f"noise orders must satisfy n_d >= m_c, got {len(d)} < {len(c)}")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "d", d)

    @staticmethod
    def unit() -> "NoiseModel":
        return NoiseModel(np.zeros(0), np.zeros(0))

    @property
    def is_unit(self) -> bool:
        return len(self.c) == 0 and len(self.d) == 0

    @property
    def c_taps(self) -> np.ndarray:
        """[1, c_1, ..., c_mc] as q^-1 filter taps."""
        return np.concatenate(([1.0], self.c))

    @property
    def d_taps(self) -> np.ndarray:
        return np.concatenate(([1.0], self.d))

    def eta(self) -> np.ndarray:
        """Parameter vector [d_1..d_nd, c_1..c_mc] (denominator first)."""
        return np.concatenate((self.d, self.c))


@dataclass(frozen=True)
class StateSpace:
    """SISO realization (A, B, C, D); B is n x 1, C is 1 x n, D scalar."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: float

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        B = np.asarray(self.B, dtype=float).reshape(A.shape[0], 1) if A.shape[0] else np.zeros((0, 1))
        C = np.asarray(self.C, dtype=float).reshape(1, A.shape[0]) if A.shape[0] else np.zeros((1, 0))
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "D", float(self.D))


def companion_realization(den: np.ndarray, num: np.ndarray) -> StateSpace:
    """Controllable companion form of num/den (both ascending, den[0]-normalized).

    The state matrix carries the shift structure with last row
    -[den_0, den_1, ..., den_{n-1}] / den_n, the input vector is e_n / den_n,
    and the output row absorbs the feedthrough num_n/den_n for biproper models.
    """
    den = np.asarray(den, dtype=float)
    num = np.asarray(num, dtype=float)
    n = len(den) - 1
    if n == 0:
        return StateSpace(np.zeros((0, 0)), np.zeros((0, 1)), np.zeros((1, 0)), num[0] / den[0])
    lead = den[-1]
    if lead == 0.0:
        raise SingularDenominator("leading denominator coefficient is zero")
    A = np.zeros((n, n))
    A[: n - 1, 1:] = np.eye(n - 1)
    A[-1, :] = -den[:-1] / lead
    B = np.zeros((n, 1))
    B[-1, 0] = 1.0 / lead
    nb = np.zeros(n + 1)
    nb[: len(num)] = num
    D = nb[n] / lead
    C = (nb[:n] - D * den[:n]).reshape(1, n)
    return StateSpace(A, B, C, D)


def to_state_space(model: CtModel | DtModel) -> StateSpace:
    """Companion realization of a CT or DT model (paper-normalized input)."""
    return companion_realization(model.den, model.num)


def tf_from_state_space(ss: StateSpace) -> tuple[np.ndarray, np.ndarray]:
    """Transfer function (num, den ascending) of a SISO realization.

    den is the characteristic polynomial (monic); num = C adj(xi I - A) B
    + D * den, both from the Faddeev-LeVerrier recursion.
    """
    n = ss.A.shape[0]
    if n == 0:
        return np.array([ss.D]), np.array([1.0])
    den, M = char_poly_adjugate(ss.A)
    num = np.empty(n + 1)
    for k in range(n):
        # M[k] multiplies xi^(n-1-k)
        num[n - 1 - k] = (ss.C @ M[k] @ ss.B).item()
    num[n] = 0.0
    num = num + ss.D * den
    return num, den


def normalized_tf_from_state_space(ss: StateSpace) -> tuple[np.ndarray, np.ndarray]:
    """Like tf_from_state_space but rescaled to the constant-term-1 convention."""
    num, den = tf_from_state_space(ss)
    return _normalize_constant_term(num, den)


def tf_eval(model: CtModel | DtModel, z) -> complex:
    """Evaluate B(z)/A(z) in the model's domain variable."""
    den_val = poly_eval(model.den, z)
    if den_val == 0:
        raise PoleEvaluation(f"denominator vanishes at {z}")
    return poly_eval(model.num, z) / den_val


def poles(model: CtModel | DtModel) -> np.ndarray:
    """Poles of the model; empty for static (n = 0) models."""
    if model.n == 0:
        return np.zeros(0, dtype=complex)
    return poly_roots(model.den)


def is_stable(model: CtModel | DtModel) -> bool:
    """Strict asymptotic stability (open left half-plane / open unit disk)."""
    p = poles(model)
    if isinstance(model, CtModel):
        return bool(np.all(p.real < 0.0))
    return bool(np.all(np.abs(p) < 1.0))


def relative_degree(model: CtModel | DtModel) -> int:
    """deg A - deg B after trimming; errors on an identically zero numerator."""
    num = poly_trim(model.num)
    if np.all(num == 0.0):
        raise ZeroNumerator("relative degree undefined for zero numerator")
    return model.n - (len(num) - 1)
