"""Pure-Python IIR kernel, used when the compiled extension is unavailable.

Same contract as ``rivkit._iir.filt``. The feed-forward part is vectorized
through ``numpy.convolve``; the recursive part is an explicit loop and is
roughly two orders of magnitude slower than the compiled kernel (see
``benchmarks/bench_filter.py``).
"""

import numpy as np

BACKEND = "python"


def filt(b, a, x):
    """Run y[k] = (sum_j b[j] x[k-j] - sum_{j>=1} a[j] y[k-j]) / a[0]."""
    b = np.asarray(b, dtype=float)
    a = np.asarray(a, dtype=float)
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    a0 = a[0]
    fir = np.convolve(x, b)[:n]
    na = a.shape[0]
    if na == 1:
        return fir / a0
    y = np.empty(n)
    ar = a[1:]
    for k in range(n):
        acc = fir[k]
        jmax = min(na - 1, k)
        for j in range(jmax):
            acc -= ar[j] * y[k - 1 - j]
        y[k] = acc / a0
    return y
