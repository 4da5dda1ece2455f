"""Iterative instrumental-variable estimators and the cross-domain checker.

One loop drives all six variants (SRIV, RIV, SRIVC, RIVC, ASRIV, ARIV):
optionally refresh the ARMA noise model from the current output-error
residual, assemble the filtered regressor/instrument/output, solve the
modified normal equations, and optionally project unstable denominators back
into the stable region.  Iterations stop on a relative parameter change below
``tol`` (infinity norm over the system parameters only).

``check_equivalence`` maps a converged DT estimate through the inverse
sampling map (or its adapted variant) and measures the deviation from the
corresponding converged CT estimate.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from rivkit.errors import (
    DegenerateNormalization,
    DomainCertificateInvalid,
    NegativeRealPole,
    NotConverged,
    PemDiverged,
    RivkitError,
    SingularNormalMatrix,
)
from rivkit.filtering import (
    RegressionData,
    SampledSignal,
    build_adapted_instrument,
    build_adapted_regressor,
    build_filtered_output,
    build_instrument,
    build_regressor,
    ct_filter_sampled,
    dt_filter,
)
from rivkit.lti import CtModel, DtModel, NoiseModel, poly_roots, real_poly_from_roots
from rivkit.sampling import (
    AdaptedDtModel,
    adapted_from_rho,
    check_domain,
    inverse_zoh,
    inverse_zoh_denominator,
    zoh_discretize,
)

__all__ = [
    "EstimatorKind",
    "EstimatorConfig",
    "EstimationReport",
    "EquivalenceResult",
    "KINDS",
    "iv_step",
    "arma_pem",
    "least_squares_init",
    "stabilize_theta",
    "run_estimator",
    "check_equivalence",
]

_COND_LIMIT = 1e14


@dataclass(frozen=True)
class EstimatorKind:
    """Estimator variant selector: domain ('dt'/'ct'), noise model, adapted flag."""

    domain: str
    noise_modeled: bool
    adapted: bool

    def __post_init__(self):
        if self.domain not in ("dt", "ct"):
            raise ValueError("domain must be 'dt' or 'ct'")
        if self.domain == "ct" and self.adapted:
            raise ValueError("adapted CT variant is not supported")

    @property
    def name(self) -> str:
        for key, kind in KINDS.items():
            if kind == self:
                return key
        raise AssertionError("unreachable")

    @staticmethod
    def from_name(name: str) -> "EstimatorKind":
        try:
            return KINDS[name.lower()]
        except KeyError:
            raise ValueError(f"unknown estimator {name!r}; choose from {sorted(KINDS)}") from None


KINDS = {
    "sriv": EstimatorKind("dt", False, False),
    "riv": EstimatorKind("dt", True, False),
    "srivc": EstimatorKind("ct", False, False),
    "rivc": EstimatorKind("ct", True, False),
    "asriv": EstimatorKind("dt", False, True),
    "ariv": EstimatorKind("dt", True, True),
}


@dataclass(frozen=True)
class EstimatorConfig:
    """Orders and iteration controls.

    ``m`` is the numerator degree in the estimated parametrization: the DT
    numerator degree for SRIV/RIV, the CT numerator degree for the CT and
    adapted variants.
    """

    n: int
    m: int
    mc: int = 0
    nd: int = 0
    max_iter: int = 100
    tol: float = 1e-8
    n_skip: int = 0
    stabilize: bool = True
    init: object = "ls"

    def __post_init__(self):
        if not (self.n >= self.m >= 0):
            raise ValueError("orders must satisfy n >= m >= 0")
        if not (self.nd >= self.mc >= 0):
            raise ValueError("noise orders must satisfy nd >= mc >= 0")
        if self.tol <= 0:
            raise ValueError("tol must be positive")


@dataclass
class IterationRecord:
    theta: np.ndarray
    condition_number: float
    residual_norm: float


@dataclass
class EstimationReport:
    """Outcome of one estimator run."""

    kind: EstimatorKind
    n: int
    m: int
    h: float
    theta_final: np.ndarray
    eta_final: NoiseModel
    iterations: int
    converged: bool
    trace: list = field(default_factory=list)
    warnings: list = field(default_factory=list)
    error: str | None = None
    beta_reconstructed: np.ndarray | None = None


def iv_step(data: RegressionData, n_skip: int = 0) -> tuple[np.ndarray, float]:
    """One instrumental-variable step: solve the modified normal equations.

    Returns the new parameter vector and the condition number of the modified
    normal matrix (1/N) sum inst_k phi_k^T; raises SingularNormalMatrix above
    condition 1e14.
    """
    phi = data.regressors[n_skip:]
    inst = data.instruments[n_skip:]
    yf = data.outputs[n_skip:]
    rows, cols = phi.shape
    if rows <= cols:
        raise ValueError(f"need more than {cols} rows after warm-up discard, got {rows}")
    G = inst.T @ phi / rows
    rhs = inst.T @ yf / rows
    cond = float(np.linalg.cond(G))
    if not np.isfinite(cond) or cond > _COND_LIMIT:
        raise SingularNormalMatrix(f"modified normal matrix condition {cond:.3e}")
    try:
        theta = np.linalg.solve(G, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularNormalMatrix(str(exc)) from exc
    return theta, cond


def _project_roots_inside(coeffs_monic_desc: np.ndarray) -> np.ndarray:
    """Reflect roots of a monic (descending) polynomial into the open unit disk."""
    if len(coeffs_monic_desc) == 1:
        return coeffs_monic_desc
    roots = np.roots(coeffs_monic_desc)
    moved = False
    out = []
    for r in roots:
        if abs(r) >= 1.0:
            r = 1.0 / np.conj(r)
            if abs(r) >= 1.0:
                r = r * 0.999
            moved = True
        out.append(r)
    if not moved:
        return coeffs_monic_desc
    return real_poly_from_roots(out)[::-1].copy()


def _shift(x: np.ndarray, lag: int) -> np.ndarray:
    if lag == 0:
        return x
    out = np.zeros_like(x)
    out[lag:] = x[:-lag]
    return out


def arma_pem(residual, mc: int, nd: int) -> NoiseModel:
    """Fit an ARMA noise model by prediction-error minimization.

    Minimizes sum_k [(D/C) v(kh)]^2 with Gauss-Newton iterations started from
    a Hannan-Rissanen two-stage regression (long AR fit, then least squares on
    lagged residuals).  C and D roots are projected strictly inside the unit
    circle after every accepted step.
    """
    v = residual.values if isinstance(residual, SampledSignal) else np.asarray(residual, dtype=float)
    if mc == 0 and nd == 0:
        return NoiseModel.unit()
    N = len(v)
    if N <= 10 * (mc + nd):
        raise ValueError(f"need more than {10 * (mc + nd)} residual samples, got {N}")
    if np.max(np.abs(v)) == 0.0:
        return NoiseModel(np.zeros(mc), np.zeros(nd))

    def taps(x):
        return np.concatenate(([1.0], x))

    # Hannan-Rissanen initialization
    L = max(min(50, N // 10), mc + nd)
    X = np.column_stack([v[L - i:N - i] for i in range(1, L + 1)])
    ar, *_ = np.linalg.lstsq(X, v[L:], rcond=None)
    e_hat = np.zeros(N)
    e_hat[L:] = v[L:] - X @ ar
    start = L + max(nd, mc)
    cols = [-v[start - i:N - i] for i in range(1, nd + 1)]
    cols += [e_hat[start - j:N - j] for j in range(1, mc + 1)]
    X2 = np.column_stack(cols)
    coef, *_ = np.linalg.lstsq(X2, v[start:], rcond=None)
    d = _project_roots_inside(np.concatenate(([1.0], coef[:nd])))[1:]
    c = _project_roots_inside(np.concatenate(([1.0], coef[nd:])))[1:]

    def cost(d_, c_):
        eps = _filter_taps_raw(taps(d_), taps(c_), v)
        return float(eps @ eps), eps

    cur_cost, eps = cost(d, c)
    for _ in range(50):
        inv_c_v = _filter_taps_raw(np.array([1.0]), taps(c), v)
        inv_c_e = _filter_taps_raw(np.array([1.0]), taps(c), eps)
        J = np.column_stack(
            [_shift(inv_c_v, i) for i in range(1, nd + 1)]
            + [-_shift(inv_c_e, j) for j in range(1, mc + 1)]
        )
        delta, *_ = np.linalg.lstsq(J, -eps, rcond=None)
        step = 1.0
        eta = np.concatenate((d, c))
        for attempt in range(21):
            if attempt == 20:
                raise PemDiverged("line search failed 20 times")
            cand = eta + step * delta
            d_new = _project_roots_inside(np.concatenate(([1.0], cand[:nd])))[1:]
            c_new = _project_roots_inside(np.concatenate(([1.0], cand[nd:])))[1:]
            new_cost, new_eps = cost(d_new, c_new)
            if new_cost <= cur_cost * (1.0 + 1e-12):
                break
            step /= 2.0
        moved = max(np.max(np.abs(np.concatenate((d_new - d, c_new - c)))), 0.0)
        improvement = cur_cost - new_cost
        d, c, eps = d_new, c_new, new_eps
        cur_cost = new_cost
        if moved < 1e-10 * max(1.0, float(np.max(np.abs(np.concatenate((d, c)))))):
            break
        if improvement < 1e-12 * max(cur_cost, 1e-300):
            break
    return NoiseModel(c, d)


def _filter_taps_raw(b: np.ndarray, a: np.ndarray, x: np.ndarray) -> np.ndarray:
    from rivkit import _backend

    return _backend.filt(
        np.ascontiguousarray(b, dtype=float),
        np.ascontiguousarray(a, dtype=float),
        np.ascontiguousarray(x, dtype=float),
    )


def _arx(u: np.ndarray, y: np.ndarray, n: int, deg_b: int) -> np.ndarray:
    """ARX least squares in the constant-term-1 normalization.

    Model row: y[s] = -sum_i alpha_i y[s+i] + sum_j beta_j u[s+j] + e, which is
    the backward-shift form of A(q) y = B(q) u with the q^0 coefficient pinned
    to one.
    """
    N = len(y)
    rows = N - n
    X_y = np.column_stack([-y[i + 1:i + 1 + rows] for i in range(n)])
    X_u = np.column_stack([u[j:j + rows] for j in range(deg_b + 1)])
    X = np.hstack([X_y, X_u])
    target = y[:rows]
    theta, _, rank, _ = np.linalg.lstsq(X, target, rcond=None)
    if rank < X.shape[1]:
        raise SingularNormalMatrix("rank-deficient ARX regression")
    return theta


def least_squares_init(u: SampledSignal, y: SampledSignal, n: int, m: int, domain: str) -> np.ndarray:
    """Initialization point: DT ARX, mapped/truncated for the CT domain.

    CT path: ARX of orders (n, n-1), inverse sampling map, numerator truncated
    to degree m; if the ARX denominator is outside the inverse map's domain,
    falls back to state-variable-filter least squares with (lambda p + 1)^-n,
    lambda = 10 h.
    """
    if len(u) != len(y):
        raise ValueError("input and output must have the same length")
    N = len(u)
    if N <= 2 * (n + m + 1):
        raise ValueError(f"need more than {2 * (n + m + 1)} samples, got {N}")
    if domain == "dt":
        return _arx(u.values, y.values, n, m)
    theta_dt = _arx(u.values, y.values, n, max(n - 1, m))
    dt = DtModel.from_theta(theta_dt, n, u.h)
    try:
        ct = inverse_zoh(dt)
        b = np.zeros(m + 1)
        take = min(m + 1, len(ct.b))
        b[:take] = ct.b[:take]
        return np.concatenate((ct.a, b))
    except (NegativeRealPole, DegenerateNormalization):
        pass
    lam = 10.0 * u.h
    f_den = np.polynomial.polynomial.polypow(np.array([1.0, lam]), n)
    svf = CtModel(f_den[1:], np.zeros(m + 1))
    phi = build_regressor(svf, NoiseModel.unit(), u, y)
    target = build_filtered_output(svf, NoiseModel.unit(), y)
    theta, _, rank, _ = np.linalg.lstsq(phi, target, rcond=None)
    if rank < phi.shape[1]:
        raise SingularNormalMatrix("rank-deficient SVF regression")
    return theta


def stabilize_theta(theta: np.ndarray, n: int, domain: str) -> np.ndarray:
    """Project denominator poles into the stable region; numerator untouched.

    DT: poles with |z| >= 1 are reflected to 1/conj(z) and scaled by 0.999.
    CT: poles with Re >= 0 are negated, then pushed to Re <= -1e-6.  Already
    stable vectors are returned unchanged (the projection is idempotent).
    """
    theta = np.asarray(theta, dtype=float)
    den = np.concatenate(([1.0], theta[:n]))
    if n == 0:
        return theta.copy()
    roots = poly_roots(den)
    moved = False
    out = []
    for r in roots:
        if domain == "dt":
            if abs(r) >= 1.0:
                r = 0.999 / np.conj(r)
                moved = True
        else:
            if r.real >= 0.0:
                r = -r
                moved = True
            if r.real > -1e-6:
                r = complex(-1e-6, r.imag)
                moved = True
        out.append(r)
    if not moved:
        return theta.copy()
    monic = real_poly_from_roots(out)
    if abs(monic[0]) <= 1e-12 * np.max(np.abs(monic)):
        raise DegenerateNormalization("stabilized denominator has a zero constant term")
    new_den = monic / monic[0]
    return np.concatenate((new_den[1:], theta[n:]))


def _make_model(kind: EstimatorKind, theta: np.ndarray, n: int, h: float):
    if kind.adapted:
        return adapted_from_rho(theta[:n], theta[n:], h)
    if kind.domain == "dt":
        return DtModel.from_theta(theta, n, h)
    return CtModel.from_theta(theta, n)


def _model_output(model, u: SampledSignal) -> np.ndarray:
    if isinstance(model, AdaptedDtModel):
        model = model.to_dt_model()
    if isinstance(model, DtModel):
        return dt_filter(model.num, model.den, u, check_stability=False).values
    return ct_filter_sampled(model.num, model.den, u, check_stability=False).values


def run_estimator(kind: EstimatorKind, cfg: EstimatorConfig,
                  u: SampledSignal, y: SampledSignal) -> EstimationReport:
    """Run one refined instrumental-variable estimator to convergence.

    Per iteration: refresh the noise model from the current output-error
    residual (noise-modeled kinds), rebuild the filtered regression data at
    the current parameters, take one IV step, and optionally stabilize the
    denominator.  Stops when the relative parameter change drops below
    cfg.tol, recording the full iteration trace.
    """
    if len(u) != len(y) or u.h != y.h:
        raise ValueError("input and output signals must share length and period")
    h = u.h
    n = cfg.n
    if isinstance(cfg.init, str) and cfg.init == "ls":
        theta = least_squares_init(u, y, n, cfg.m, kind.domain if not kind.adapted else "ct")
        if kind.adapted:
            ct0 = CtModel.from_theta(theta, n)
            theta = np.concatenate((zoh_discretize(ct0, h).alpha, ct0.b))
    else:
        theta = np.asarray(cfg.init, dtype=float).copy()
    if cfg.stabilize:
        theta = stabilize_theta(theta, n, kind.domain)
    noise = NoiseModel.unit()
    report = EstimationReport(kind=kind, n=n, m=cfg.m, h=h, theta_final=theta,
                              eta_final=noise, iterations=0, converged=False)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        for j in range(cfg.max_iter):
            try:
                model = _make_model(kind, theta, n, h)
                if kind.noise_modeled and (cfg.mc + cfg.nd) > 0:
                    v = y.values - _model_output(model, u)
                    noise = arma_pem(v, cfg.mc, cfg.nd)
                if kind.adapted:
                    phi = build_adapted_regressor(model, noise, u, y)
                    inst = build_adapted_instrument(model, noise, u)
                else:
                    phi = build_regressor(model, noise, u, y)
                    inst = build_instrument(model, noise, u)
                yf = build_filtered_output(model, noise, y)
                theta_next, cond = iv_step(RegressionData(phi, inst, yf), cfg.n_skip)
                if cfg.stabilize:
                    theta_next = stabilize_theta(theta_next, n, kind.domain)
            except (RivkitError, np.linalg.LinAlgError, ValueError) as exc:
                report.error = getattr(exc, "token", type(exc).__name__)
                report.warnings.append(f"iteration {j}: {exc}")
                break
            resid = yf[cfg.n_skip:] - phi[cfg.n_skip:] @ theta_next
            report.trace.append(IterationRecord(theta_next.copy(), cond, float(np.linalg.norm(resid))))
            scale = max(float(np.max(np.abs(theta))), 1e-300)
            delta = float(np.max(np.abs(theta_next - theta))) / scale
            theta = theta_next
            report.iterations = j + 1
            if delta < cfg.tol:
                report.converged = True
                break
    report.theta_final = theta
    report.eta_final = noise
    for w in caught:
        msg = str(w.message)
        if msg not in report.warnings:
            report.warnings.append(msg)
    if kind.adapted and report.error is None:
        try:
            report.beta_reconstructed = adapted_from_rho(theta[:n], theta[n:], h).beta_reconstructed()
        except RivkitError as exc:
            report.warnings.append(f"final reconstruction failed: {exc}")
    return report


@dataclass(frozen=True)
class EquivalenceResult:
    """Deviation between a mapped DT limiting point and a CT limiting point."""

    deviation: float
    denominator_deviation: float
    numerator_deviation: float
    threshold: float
    theta_ct_mapped: np.ndarray
    theta_ct: np.ndarray

    @property
    def equivalent(self) -> bool:
        return self.deviation < self.threshold


def check_equivalence(report_dt: EstimationReport, report_ct: EstimationReport,
                      adapted: bool | None = None, threshold: float = 1e-4) -> EquivalenceResult:
    """Map the DT limiting point through the (adapted) inverse sampling map
    and measure the infinity-norm relative deviation from the CT limiting point.

    Requires both reports converged and the DT model inside the validity
    domain of the map.  Numerator blocks of different degrees are zero-padded
    before comparison.
    """
    if not (report_dt.converged and report_ct.converged):
        raise NotConverged("both estimates must have converged")
    if adapted is None:
        adapted = report_dt.kind.adapted
    n = report_dt.n
    h = report_dt.h
    theta_d = report_dt.theta_final
    alpha = theta_d[:n]
    dtm = DtModel(alpha, theta_d[n:] if not adapted else np.zeros(n), h)
    cert = check_domain(dtm)
    if not cert.valid:
        raise DomainCertificateInvalid(
            f"negative_real_pole={cert.dt_negative_real_pole}, "
            f"imag_bound_ok={cert.ct_imag_part_bound_ok}"
        )
    if adapted:
        a = inverse_zoh_denominator(alpha, h)
        num_mapped = theta_d[n:].copy()
    else:
        ct = inverse_zoh(DtModel.from_theta(theta_d, n, h))
        a = ct.a
        num_mapped = ct.b
    theta_c = report_ct.theta_final
    a_ct, num_ct = theta_c[:n], theta_c[n:]
    width = max(len(num_mapped), len(num_ct))
    pad = lambda x: np.concatenate((x, np.zeros(width - len(x))))
    mapped = np.concatenate((a, pad(num_mapped)))
    ref = np.concatenate((a_ct, pad(num_ct)))
    scale = max(float(np.max(np.abs(ref))), 1e-300)
    deviation = float(np.max(np.abs(mapped - ref))) / scale
    den_dev = float(np.max(np.abs(a - a_ct))) / max(float(np.max(np.abs(a_ct))), 1e-300)
    num_scale = max(float(np.max(np.abs(pad(num_ct)))), 1e-300)
    num_dev = float(np.max(np.abs(pad(num_mapped) - pad(num_ct)))) / num_scale
    return EquivalenceResult(deviation, den_dev, num_dev, threshold, mapped, ref)
