import numpy as np
import pytest
from numpy.polynomial import polynomial as npp

from rivkit.lti import CtModel
from rivkit.simulation import rao_garnier_noise, rao_garnier_system


@pytest.fixture
def rg():
    return rao_garnier_system()


@pytest.fixture
def rg_noise():
    return rao_garnier_noise()


def random_stable_ct(rng, n, m, max_imag=np.inf, re_range=(-3.0, -0.1)):
    """Random stable CT model in constant-term-1 form.

    Poles are drawn as real values or conjugate pairs with negative real
    parts; |Im| stays below max_imag so ZOH images at the matching period
    remain inside the inverse-map domain.
    """
    poles = []
    while len(poles) < n:
        re = rng.uniform(*re_range)
        if n - len(poles) >= 2 and rng.uniform() < 0.6:
            im = rng.uniform(0.1, max_imag) if np.isfinite(max_imag) else rng.uniform(0.1, 3.0)
            poles += [complex(re, im), complex(re, -im)]
        else:
            poles.append(complex(re, 0.0))
    den = np.real(npp.polyfromroots(poles))
    den = den / den[0]
    while True:
        b = rng.standard_normal(m + 1)
        if abs(b[-1]) > 0.1:
            break
    return CtModel(den[1:], b)
