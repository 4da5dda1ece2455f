"""Compare the compiled IIR kernel against the pure-Python fallback.

Usage: python benchmarks/bench_filter.py
"""

import timeit

import numpy as np

from rivkit import _iir_py

try:
    from rivkit import _iir
except ImportError:
    _iir = None

CASES = [
    ("order 2, N=1e3", 2, 1_000),
    ("order 8, N=1e4", 8, 10_000),
    ("order 8, N=1e5", 8, 100_000),
]


def stable_taps(rng, order):
    poles = 0.6 * rng.uniform(-1, 1, order)
    a = np.real(np.poly(poles))
    b = rng.standard_normal(order + 1)
    return b, a


def bench(fn, b, a, x, repeat=5):
    number = max(1, int(2e6 / len(x)))
    t = min(timeit.repeat(lambda: fn(b, a, x), number=number, repeat=repeat))
    return t / number


def main():
    rng = np.random.default_rng(0)
    print(f"{'case':<18} {'python':>12} {'cython':>12} {'speedup':>9}")
    for name, order, n in CASES:
        b, a, = stable_taps(rng, order)
        x = rng.standard_normal(n)
        t_py = bench(_iir_py.filt, b, a, x)
        if _iir is None:
            print(f"{name:<18} {t_py * 1e6:>10.1f}us {'n/a':>12} {'n/a':>9}")
            continue
        t_cy = bench(_iir.filt, b, a, x)
        err = np.max(np.abs(_iir.filt(b, a, x) - _iir_py.filt(b, a, x)))
        assert err < 1e-9, f"backend mismatch: {err}"
        print(f"{name:<18} {t_py * 1e6:>10.1f}us {t_cy * 1e6:>10.1f}us {t_py / t_cy:>8.1f}x")


if __name__ == "__main__":
    main()
