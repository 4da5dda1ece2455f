"""Command-line interface.

Subcommands: c2d, d2c, simulate, estimate, montecarlo, benchmark, equivalence.
Parameter vectors travel as one-row CSV files in the serialization order of
the models ([a_1..a_n, b_0..b_m] and the DT analogue), printed with 17
significant digits so write/read round trips are exact for 64-bit floats.
Domain and estimation failures map to stable exit codes with a machine-
readable token on stderr (see EXIT_CODES).
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from rivkit.errors import (
    DomainCertificateInvalid,
    JacobianSingular,
    NegativeRealPole,
    NonUniformSampling,
    NotConverged,
    PemDiverged,
    RivkitError,
    SingularDenominator,
    SingularNormalMatrix,
    TooManyFailures,
)
from rivkit.estimators import (
    EstimatorConfig,
    EstimatorKind,
    check_equivalence,
    least_squares_init,
    run_estimator,
    stabilize_theta,
)
from rivkit.filtering import SampledSignal
from rivkit.lti import CtModel, DtModel, NoiseModel
from rivkit.sampling import inverse_zoh, zoh_discretize
from rivkit.simulation import (
    ExperimentSpec,
    arma_noise,
    monte_carlo,
    multisine_zoh,
    rao_garnier_spec,
    simulate_system,
)

EXIT_CODES = {
    "OK": 0,
    "IO_ERROR": 1,
    "USAGE": 2,
    "NEGATIVE_REAL_POLE": 3,
    "NOT_CONVERGED": 4,
    "SINGULAR": 5,
    "NONUNIFORM_SAMPLING": 6,
    "EQUIVALENCE_FAILED": 7,
    "DOMAIN_INVALID": 8,
    "PEM_DIVERGED": 9,
    "MC_TOO_MANY_FAILURES": 10,
}

_ERROR_EXITS = {
    NegativeRealPole: "NEGATIVE_REAL_POLE",
    NotConverged: "NOT_CONVERGED",
    SingularNormalMatrix: "SINGULAR",
    SingularDenominator: "SINGULAR",
    JacobianSingular: "SINGULAR",
    NonUniformSampling: "NONUNIFORM_SAMPLING",
    DomainCertificateInvalid: "DOMAIN_INVALID",
    PemDiverged: "PEM_DIVERGED",
    TooManyFailures: "MC_TOO_MANY_FAILURES",
}


def _fail(token: str, message: str) -> int:
    print(f"error: {token}: {message}", file=sys.stderr)
    return EXIT_CODES.get(token, 1)


def _fail_from_exc(exc: Exception) -> int:
    for etype, token in _ERROR_EXITS.items():
        if isinstance(exc, etype):
            return _fail(token, str(exc))
    if isinstance(exc, RivkitError):
        return _fail(exc.token, str(exc))
    return _fail("IO_ERROR", str(exc))


def _fmt(values) -> str:
    return ",".join(f"{v:.17g}" for v in np.asarray(values, dtype=float))


def read_vector(path: str) -> np.ndarray:
    with open(path, "r", encoding="utf-8") as fh:
        content = fh.read().strip()
    if not content:
        raise ValueError(f"empty parameter file {path}")
    return np.array([float(tok) for tok in content.replace("\n", ",").split(",") if tok.strip()])


def write_vector(path: str, values) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(_fmt(values) + "\n")


def read_data_csv(path: str) -> tuple[SampledSignal, SampledSignal]:
    """Read a t,u,y CSV; the time column must be uniform to 1e-9 relative."""
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().lower().split(",")
        if [c.strip() for c in header[:3]] != ["t", "u", "y"]:
            raise ValueError(f"expected header t,u,y in {path}")
        for line in fh:
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            rows.append((float(parts[0]), float(parts[1]), float(parts[2])))
    if len(rows) < 2:
        raise ValueError(f"need at least two samples in {path}")
    t = np.array([r[0] for r in rows])
    u = np.array([r[1] for r in rows])
    y = np.array([r[2] for r in rows])
    steps = np.diff(t)
    h = steps[0]
    if h <= 0 or np.max(np.abs(steps - h)) > 1e-9 * max(abs(h), 1.0):
        raise NonUniformSampling("time stamps are not uniformly spaced")
    return SampledSignal(u, h), SampledSignal(y, h)


def write_data_csv(path: str, u: SampledSignal, y: SampledSignal) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("t,u,y\n")
        for k in range(len(u)):
            t = (k + 1) * u.h
            fh.write(f"{t:.17g},{u.values[k]:.17g},{y.values[k]:.17g}\n")


def parse_config(path: str) -> dict:
    """Flat key=value config; arrays as key=[a,b,c]; # starts a comment."""
    out = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value")
            key, _, value = line.partition("=")
            key = key.strip()
            value = value.strip()
            if value.startswith("[") and value.endswith("]"):
                items = [v.strip() for v in value[1:-1].split(",") if v.strip()]
                out[key] = [_coerce(v) for v in items]
            else:
                out[key] = _coerce(value)
    return out


def _coerce(token: str):
    try:
        return int(token)
    except ValueError:
        pass
    try:
        return float(token)
    except ValueError:
        return token


def spec_from_config(cfg: dict) -> ExperimentSpec:
    system = CtModel(np.asarray(cfg["system_a"], dtype=float),
                     np.asarray(cfg["system_b"], dtype=float))
    noise = NoiseModel(np.asarray(cfg.get("noise_c", []), dtype=float),
                       np.asarray(cfg.get("noise_d", []), dtype=float))
    kwargs = {}
    for key in ("tol", "max_iter", "n_skip", "dt_num_degree"):
        if key in cfg:
            kwargs[key] = cfg[key]
    return ExperimentSpec(
        system=system,
        noise=noise,
        h=float(cfg["h"]),
        n_samples=int(cfg["n_samples"]),
        input_freqs=tuple(cfg["input_freqs"]),
        input_amps=tuple(cfg["input_amps"]),
        input_phases=tuple(cfg.get("input_phases", [0.0] * len(cfg["input_freqs"]))),
        noise_variance=float(cfg.get("noise_variance", 0.0)),
        runs=int(cfg.get("runs", 1)),
        seed=int(cfg.get("seed", 0)),
        methods=tuple(cfg.get("methods", ["sriv"])),
        **kwargs,
    )


def cmd_c2d(args) -> int:
    theta = read_vector(args.infile)
    ct = CtModel.from_theta(theta, args.n)
    dt = zoh_discretize(ct, args.h)
    write_vector(args.outfile, dt.theta())
    return 0


def cmd_d2c(args) -> int:
    theta = read_vector(args.infile)
    dt = DtModel.from_theta(theta, args.n, args.h)
    ct = inverse_zoh(dt)
    write_vector(args.outfile, ct.theta())
    return 0


def cmd_simulate(args) -> int:
    spec = spec_from_config(parse_config(args.spec))
    u = multisine_zoh(spec.input_freqs, spec.input_amps, spec.input_phases,
                      spec.n_samples, spec.h)
    rng = np.random.default_rng(np.random.SeedSequence((spec.seed, 0)))
    noise = arma_noise(spec.noise, spec.noise_variance, spec.n_samples, rng, spec.h)
    y = simulate_system(spec.system, u, noise)
    write_data_csv(args.out, u, y)
    return 0


def _estimate_config(args, init) -> EstimatorConfig:
    return EstimatorConfig(n=args.n, m=args.m, mc=args.mc, nd=args.nd,
                           max_iter=args.max_iter, tol=args.tol,
                           n_skip=args.n_skip, init=init)


def cmd_estimate(args) -> int:
    u, y = read_data_csv(args.data)
    init = "ls" if args.init == "ls" else read_vector(args.init)
    kind = EstimatorKind.from_name(args.method)
    report = run_estimator(kind, _estimate_config(args, init), u, y)
    write_vector(args.out, report.theta_final)
    diag = {
        "method": args.method,
        "n": args.n,
        "m": args.m,
        "iterations": report.iterations,
        "converged": report.converged,
        "condition_numbers": [rec.condition_number for rec in report.trace],
        "residual_norms": [rec.residual_norm for rec in report.trace],
        "eta": [float(v) for v in report.eta_final.eta()],
        "warnings": report.warnings,
        "error": report.error,
    }
    if report.beta_reconstructed is not None:
        diag["beta_reconstructed"] = [float(v) for v in report.beta_reconstructed]
    with open(args.out + ".diag.json", "w", encoding="utf-8") as fh:
        json.dump(diag, fh, indent=2)
        fh.write("\n")
    if report.error is not None:
        return _fail(report.error, "; ".join(report.warnings) or "estimation failed")
    if not report.converged:
        return _fail("NOT_CONVERGED", f"stopped after {report.iterations} iterations")
    return 0


def cmd_equivalence(args) -> int:
    u, y = read_data_csv(args.data)
    kind_dt = EstimatorKind.from_name(args.method_dt)
    kind_ct = EstimatorKind.from_name(args.method_ct)
    if kind_dt.domain != "dt" or kind_ct.domain != "ct":
        raise ValueError("method-dt must be a DT estimator and method-ct a CT one")
    n, m = args.n, args.m
    h = u.h
    if kind_dt.adapted:
        theta_c0 = least_squares_init(u, y, n, m, "ct")
        ct0 = CtModel.from_theta(theta_c0, n)
        init_dt = np.concatenate((zoh_discretize(ct0, h).alpha, ct0.b))
    else:
        m_dt = args.dt_num_degree if args.dt_num_degree is not None else n - 1
        init_dt = stabilize_theta(least_squares_init(u, y, n, m_dt, "dt"), n, "dt")
        ct0 = inverse_zoh(DtModel.from_theta(init_dt, n, h))
        b0 = np.zeros(m + 1)
        take = min(m + 1, len(ct0.b))
        b0[:take] = ct0.b[:take]
        theta_c0 = np.concatenate((ct0.a, b0))
    cfg_dt = EstimatorConfig(n=n, m=(m if kind_dt.adapted else len(init_dt) - n - 1),
                             mc=args.mc, nd=args.nd, max_iter=args.max_iter,
                             tol=args.tol, n_skip=args.n_skip, init=init_dt)
    cfg_ct = EstimatorConfig(n=n, m=m, mc=args.mc, nd=args.nd, max_iter=args.max_iter,
                             tol=args.tol, n_skip=args.n_skip, init=theta_c0)
    report_dt = run_estimator(kind_dt, cfg_dt, u, y)
    report_ct = run_estimator(kind_ct, cfg_ct, u, y)
    result = check_equivalence(report_dt, report_ct, threshold=args.threshold)
    print(f"deviation={result.deviation:.17g}")
    print(f"numerator_deviation={result.numerator_deviation:.17g}")
    print(f"equivalent={'true' if result.equivalent else 'false'}")
    if not result.equivalent:
        return _fail("EQUIVALENCE_FAILED",
                     f"deviation {result.deviation:.3e} >= threshold {args.threshold:.3e}")
    return 0


def _write_tables(table, out_dir: str) -> None:
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "mse.csv"), "w", encoding="utf-8") as fh:
        fh.write(table.to_csv())
    with open(os.path.join(out_dir, "runs.csv"), "w", encoding="utf-8") as fh:
        fh.write(table.run_log_csv())


def cmd_montecarlo(args) -> int:
    spec = spec_from_config(parse_config(args.spec))
    table = monte_carlo(spec)
    _write_tables(table, args.out_dir)
    print(f"wrote {args.out_dir}/mse.csv and {args.out_dir}/runs.csv")
    return 0


def cmd_benchmark(args) -> int:
    if args.name != "rao-garnier":
        raise ValueError(f"unknown benchmark {args.name!r}")
    spec = rao_garnier_spec(runs=args.runs, seed=args.seed, h=args.h,
                            n_samples=args.n_samples, amplitude=args.amplitude)
    table = monte_carlo(spec)
    _write_tables(table, args.out_dir)
    print(f"wrote {args.out_dir}/mse.csv and {args.out_dir}/runs.csv")
    return 0


def _add_estimation_flags(p) -> None:
    p.add_argument("--n", type=int, required=True, help="denominator order")
    p.add_argument("--m", type=int, required=True, help="numerator degree")
    p.add_argument("--mc", type=int, default=0, help="noise MA order")
    p.add_argument("--nd", type=int, default=0, help="noise AR order")
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--max-iter", type=int, default=100)
    p.add_argument("--n-skip", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rivkit",
                                     description="Refined instrumental-variable system identification")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("c2d", help="ZOH-discretize a CT parameter vector")
    p.add_argument("infile")
    p.add_argument("outfile")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--h", type=float, required=True)
    p.set_defaults(func=cmd_c2d)

    p = sub.add_parser("d2c", help="inverse ZOH transform of a DT parameter vector")
    p.add_argument("infile")
    p.add_argument("outfile")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--h", type=float, required=True)
    p.set_defaults(func=cmd_d2c)

    p = sub.add_parser("simulate", help="generate t,u,y data from an experiment config")
    p.add_argument("--spec", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate", help="fit one estimator to a t,u,y CSV")
    p.add_argument("--data", required=True)
    p.add_argument("--method", required=True,
                   choices=["sriv", "riv", "srivc", "rivc", "asriv", "ariv"])
    _add_estimation_flags(p)
    p.add_argument("--init", default="ls", help="'ls' or path to a parameter vector file")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("equivalence", help="compare a DT and a CT estimator on shared data")
    p.add_argument("--data", required=True)
    p.add_argument("--method-dt", required=True, choices=["sriv", "riv", "asriv", "ariv"])
    p.add_argument("--method-ct", required=True, choices=["srivc", "rivc"])
    _add_estimation_flags(p)
    p.add_argument("--dt-num-degree", type=int, default=None,
                   help="DT numerator degree for non-adapted DT methods (default n-1)")
    p.add_argument("--threshold", type=float, default=1e-4)
    p.set_defaults(func=cmd_equivalence)

    p = sub.add_parser("montecarlo", help="Monte Carlo benchmark from a config file")
    p.add_argument("--spec", required=True)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_montecarlo)

    p = sub.add_parser("benchmark", help="built-in benchmark experiments")
    p.add_argument("name", choices=["rao-garnier"])
    p.add_argument("--runs", type=int, default=50)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--h", type=float, default=0.05)
    p.add_argument("--n-samples", type=int, default=10000)
    p.add_argument("--amplitude", type=float, default=1.0)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_benchmark)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except RivkitError as exc:
        return _fail_from_exc(exc)
    except (OSError, ValueError) as exc:
        return _fail_from_exc(exc)


if __name__ == "__main__":
    sys.exit(main())
