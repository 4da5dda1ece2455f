"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run as `pytest tests/test_acceptance.py -v -s`.  Criterion 10 is expected to
fail: the published ~26 dB signal-to-noise figure is inconsistent with the
published per-parameter MSE table under the documented default input
calibration (see README, "Known discrepancies").  The test asserts the stated
tolerance faithfully and is marked xfail(strict=True) so a silent change in
behavior is flagged.
"""

import time
from contextlib import contextmanager

import numpy as np
import pytest
from numpy.polynomial import polynomial as npp

from rivkit.cli import main
from rivkit.estimators import (
    EstimatorConfig,
    KINDS,
    check_equivalence,
    least_squares_init,
    run_estimator,
)
from rivkit.filtering import (
    SampledSignal,
    build_adapted_instrument,
    build_instrument,
    dt_filter,
    dt_filter_taps,
    ct_filter_sampled,
)
from rivkit.lti import CtModel, DtModel, NoiseModel, relative_degree
from rivkit.sampling import (
    adapted_forward,
    adapted_from_rho,
    inverse_zoh,
    relative_degree_from_step,
    zoh_discretize,
)
from rivkit.simulation import (
    arma_noise,
    monte_carlo,
    multisine_zoh,
    rao_garnier_noise,
    rao_garnier_spec,
    rao_garnier_system,
    simulate_system,
    snr,
)
from tests.conftest import random_stable_ct

# Published reference values for the benchmark experiment.
DT_REFERENCE = np.array([-1.069, 0.546, -1.979, 1.65, 0.991, 2.665, -2.241, -1.268])
# half an ULP of each printed entry (1.65 is printed with two decimals)
DT_REFERENCE_TOL = np.array([5e-4, 5e-4, 5e-4, 5e-3, 5e-4, 5e-4, 5e-4, 5e-4])

RIV_TABLE = {
    "alpha_1": 3.97e-5, "alpha_2": 3.00e-4, "alpha_3": 3.15e-4, "alpha_4": 4.81e-5,
    "beta_0": 9.58e-4, "beta_1": 4.25e-3, "beta_2": 3.42e-3, "beta_3": 5.60e-4,
    "d_1": 6.83e-5, "c_1": 1.13e-4,
}


@contextmanager
def report(num, desc):
    try:
        yield
    except BaseException:
        print(f"ACCEPTANCE {num:02d} {desc}: FAIL")
        raise
    print(f"ACCEPTANCE {num:02d} {desc}: PASS")


def theta_padded(ct, n):
    b = np.zeros(n + 1)
    b[: len(ct.b)] = ct.b
    return np.concatenate((ct.a, b))


def benchmark_input(n_samples=10000, h=0.05):
    return multisine_zoh((1.0, 1.9, 2.1, 18.0, 22.0), (1.0,) * 5, (0.0,) * 5,
                         n_samples, h)


def test_criterion_01_zoh_round_trip():
    with report(1, "inverse sampling map round trip, 1000 random models"):
        rng = np.random.default_rng(2024)
        h = 0.2
        t0 = time.perf_counter()
        for _ in range(1000):
            n = int(rng.integers(1, 6))
            m = int(rng.integers(0, n + 1))
            ct = random_stable_ct(rng, n, m, max_imag=0.4 * np.pi / h)
            back = inverse_zoh(zoh_discretize(ct, h))
            ref = theta_padded(ct, n)
            got = theta_padded(back, n)
            err = np.max(np.abs(got - ref)) / max(np.max(np.abs(ref)), 1e-300)
            assert err < 1e-8
        assert time.perf_counter() - t0 < 10.0


def test_criterion_02_benchmark_discretization():
    with report(2, "benchmark system discretization matches the published vector"):
        # the printed vector corresponds to sampling period 0.1 (the prose
        # next to it says 0.05, which is contradicted by its own numbers; see
        # the README discrepancy note)
        dt = zoh_discretize(rao_garnier_system(), 0.1)
        diff = np.abs(dt.theta() - DT_REFERENCE)
        assert np.all(diff < DT_REFERENCE_TOL), diff


def test_criterion_03_relative_degree_characterization():
    with report(3, "step-response relative degree agrees with discretization, 1000 models"):
        rng = np.random.default_rng(77)
        h = 0.2
        for _ in range(1000):
            n = int(rng.integers(1, 6))
            m = int(rng.integers(0, n))
            ct = random_stable_ct(rng, n, m, max_imag=0.4 * np.pi / h)
            assert relative_degree_from_step(ct, h) == relative_degree(zoh_discretize(ct, h))


def test_criterion_04_gradient_instrument_identity():
    with report(4, "instrument columns equal finite-difference output gradients"):
        h, N = 0.05, 200
        rg = rao_garnier_system()
        rng = np.random.default_rng(61)
        u = SampledSignal(0.01 * rng.standard_normal(N), h)
        noise = NoiseModel(c=[0.4], d=[-0.7])

        def fd_check(theta, build, simulate):
            inst = build(theta)
            for i in range(len(theta)):
                step = 1e-6 * (abs(theta[i]) if abs(theta[i]) > 1e-8 else 1.0)
                up = theta.copy(); up[i] += step
                dn = theta.copy(); dn[i] -= step
                fd = (simulate(up) - simulate(dn)) / (2 * step)
                assert np.max(np.abs(inst[:, i] - fd)) < 1e-4

        def prefilter(x):
            return dt_filter_taps(noise.d_taps, noise.c_taps, SampledSignal(x, h)).values

        dtm = zoh_discretize(rg, h)
        fd_check(dtm.theta(),
                 lambda th: build_instrument(DtModel.from_theta(th, 4, h), noise, u),
                 lambda th: prefilter(dt_filter(DtModel.from_theta(th, 4, h).num,
                                                DtModel.from_theta(th, 4, h).den,
                                                u, check_stability=False).values))
        fd_check(rg.theta(),
                 lambda th: build_instrument(CtModel.from_theta(th, 4), noise, u),
                 lambda th: prefilter(ct_filter_sampled(CtModel.from_theta(th, 4).num,
                                                        CtModel.from_theta(th, 4).den,
                                                        u, check_stability=False).values))
        rho0 = adapted_forward(rg, h).rho()

        def sim_adapted(rho):
            m = adapted_from_rho(rho[:4], rho[4:], h).to_dt_model()
            return prefilter(dt_filter(m.num, m.den, u, check_stability=False).values)

        fd_check(rho0,
                 lambda r: build_adapted_instrument(adapted_from_rho(r[:4], r[4:], h), noise, u),
                 sim_adapted)


def test_criterion_05_noise_free_exactness():
    with report(5, "simplified estimators recover exact parameters from noise-free data"):
        h, N = 0.05, 10000
        rg = rao_garnier_system()
        u = benchmark_input(N, h)
        y = simulate_system(rg, u, SampledSignal(np.zeros(N), h))
        truths = {
            "sriv": (EstimatorConfig(n=4, m=3, max_iter=20, tol=1e-6),
                     zoh_discretize(rg, h).theta()),
            "srivc": (EstimatorConfig(n=4, m=1, max_iter=20, tol=1e-6), rg.theta()),
            "asriv": (EstimatorConfig(n=4, m=1, max_iter=20, tol=1e-6),
                      adapted_forward(rg, h).rho()),
        }
        for name, (cfg, truth) in truths.items():
            rep = run_estimator(KINDS[name], cfg, u, y)
            assert rep.converged and rep.iterations <= 10, name
            err = np.max(np.abs(rep.theta_final - truth)) / np.max(np.abs(truth))
            assert err < 1e-6, f"{name}: {err:.2e}"


def _theorem1_case(sysm, h, freqs, noise_frac, seed):
    N = 10000
    u = multisine_zoh(freqs, (1.0,) * len(freqs), (0.0,) * len(freqs), N, h)
    clean = simulate_system(sysm, u, SampledSignal(np.zeros(N), h))
    noise = arma_noise(rao_garnier_noise(), noise_frac * np.var(clean.values), N, seed, h)
    y = simulate_system(sysm, u, noise)
    n = sysm.n
    rng = np.random.default_rng(seed + 1000)
    th_true_d = zoh_discretize(sysm, h).theta()
    th_d0 = th_true_d * (1 + 0.05 * rng.standard_normal(len(th_true_d)))
    th_c0 = inverse_zoh(DtModel.from_theta(th_d0, n, h)).theta()
    cfg = dict(n=n, m=n - 1, mc=1, nd=1, max_iter=300, tol=1e-9)
    rep_dt = run_estimator(KINDS["riv"], EstimatorConfig(init=th_d0, **cfg), u, y)
    rep_ct = run_estimator(KINDS["rivc"], EstimatorConfig(init=th_c0, **cfg), u, y)
    assert rep_dt.converged and rep_ct.converged
    return check_equivalence(rep_dt, rep_ct).deviation


def test_criterion_06_dt_ct_equivalence_relative_degree_one():
    with report(6, "RIV and RIVC limiting points linked by the inverse sampling map"):
        rg = rao_garnier_system()
        num4 = np.real(npp.polyfromroots([-1.5, -8 + 15j, -8 - 15j]))
        num4 = num4 / num4[0]
        cases = [
            (CtModel([0.8, 0.25], [1.0, 0.5]), 0.2, (0.5, 1.3, 3.0, 5.0), 0.05, 5),
            (CtModel([1.1, 0.5, 0.1], [1.0, -0.4, 0.2]), 0.2, (0.3, 0.9, 2.0, 4.0, 7.0), 0.05, 6),
            (CtModel(rg.a, num4), 0.05, (1.0, 1.9, 2.1, 18.0, 22.0), 0.02, 17),
        ]
        for sysm, h, freqs, frac, seed in cases:
            dev = _theorem1_case(sysm, h, freqs, frac, seed)
            assert dev < 1e-4, f"order {sysm.n}: deviation {dev:.2e}"


@pytest.fixture(scope="module")
def benchmark_noisy_data():
    h, N = 0.05, 10000
    u = benchmark_input(N, h)
    noise = arma_noise(rao_garnier_noise(), 6.0, N, 2, h)
    y = simulate_system(rao_garnier_system(), u, noise)
    return u, y


def test_criterion_07_adapted_equivalence(benchmark_noisy_data):
    with report(7, "ARIV and RIVC limiting points linked by the adapted map"):
        u, y = benchmark_noisy_data
        h, n = u.h, 4
        theta_c0 = least_squares_init(u, y, n, 1, "ct")
        ct0 = CtModel.from_theta(theta_c0, n)
        rho0 = np.concatenate((zoh_discretize(ct0, h).alpha, ct0.b))
        rep_dt = run_estimator(KINDS["ariv"], EstimatorConfig(
            n=n, m=1, mc=1, nd=1, max_iter=200, tol=1e-9, init=rho0), u, y)
        rep_ct = run_estimator(KINDS["rivc"], EstimatorConfig(
            n=n, m=1, mc=1, nd=1, max_iter=200, tol=1e-9, init=theta_c0), u, y)
        assert rep_dt.converged and rep_ct.converged
        dev = check_equivalence(rep_dt, rep_ct).deviation
        assert dev < 1e-4, f"deviation {dev:.2e}"


def test_criterion_08_non_equivalence_control(benchmark_noisy_data):
    with report(8, "plain RIV does not match RIVC when the numerator order drops"):
        u, y = benchmark_noisy_data
        h, n = u.h, 4
        init_dt = least_squares_init(u, y, n, 3, "dt")
        theta_c0 = least_squares_init(u, y, n, 1, "ct")
        rep_dt = run_estimator(KINDS["riv"], EstimatorConfig(
            n=n, m=3, mc=1, nd=1, max_iter=200, tol=1e-9, init=init_dt), u, y)
        rep_ct = run_estimator(KINDS["rivc"], EstimatorConfig(
            n=n, m=1, mc=1, nd=1, max_iter=200, tol=1e-9, init=theta_c0), u, y)
        assert rep_dt.converged and rep_ct.converged
        res = check_equivalence(rep_dt, rep_ct)
        assert res.numerator_deviation > 1e-2, f"{res.numerator_deviation:.2e}"


def test_criterion_09_mse_table_reproduction():
    with report(9, "Monte Carlo MSE table reproduces the published structure"):
        t0 = time.perf_counter()
        spec = rao_garnier_spec(runs=50, seed=1, methods=("riv", "ariv"))
        table = monte_carlo(spec)
        riv = table.values["riv"]
        ariv = table.values["ariv"]
        # (a) adapted numerator MSEs at least 10x below plain RIV
        for j in range(4):
            ratio = riv[f"beta_{j}"] / ariv[f"beta_{j}"]
            assert ratio >= 10.0, f"beta_{j}: ratio {ratio:.1f}"
        # (b) noise-parameter MSEs agree within a factor of two
        for lab in ("d_1", "c_1"):
            ratio = riv[lab] / ariv[lab]
            assert 0.5 <= ratio <= 2.0, f"{lab}: ratio {ratio:.2f}"
        # (c) every RIV MSE within one order of magnitude of the published value
        for lab, ref in RIV_TABLE.items():
            ratio = riv[lab] / ref
            assert 0.1 <= ratio <= 10.0, f"{lab}: ratio {ratio:.3f}"
        assert time.perf_counter() - t0 < 600.0


@pytest.mark.xfail(strict=True, reason=(
    "published ~26 dB SNR is inconsistent with the published MSE table: the "
    "default input calibration that reproduces the table measures ~16.6 dB "
    "(amplitude 3.0 reaches 26 dB but shrinks every MSE far below the table)"))
def test_criterion_10_snr():
    with report(10, "benchmark generator signal-to-noise ratio near 26 dB"):
        spec = rao_garnier_spec(runs=1)
        u = multisine_zoh(spec.input_freqs, spec.input_amps, spec.input_phases,
                          spec.n_samples, spec.h)
        clean = simulate_system(spec.system, u, SampledSignal(np.zeros(spec.n_samples), spec.h))
        noise = arma_noise(spec.noise, spec.noise_variance, spec.n_samples, 0, spec.h)
        value = snr(clean, noise)
        assert abs(value - 26.0) <= 1.5, f"measured {value:.2f} dB"


def test_criterion_11_benchmark_determinism(tmp_path, monkeypatch):
    with report(11, "benchmark output byte-identical across seeds/threads"):
        monkeypatch.setenv("RIVKIT_THREADS", "1")
        assert main(["benchmark", "rao-garnier", "--runs", "10", "--seed", "7",
                     "--out-dir", str(tmp_path / "a")]) == 0
        monkeypatch.setenv("RIVKIT_THREADS", "4")
        assert main(["benchmark", "rao-garnier", "--runs", "10", "--seed", "7",
                     "--out-dir", str(tmp_path / "b")]) == 0
        a = (tmp_path / "a" / "mse.csv").read_bytes()
        b = (tmp_path / "b" / "mse.csv").read_bytes()
        assert a == b
        assert (tmp_path / "a" / "runs.csv").read_bytes() == (tmp_path / "b" / "runs.csv").read_bytes()
