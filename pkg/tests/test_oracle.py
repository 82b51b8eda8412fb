import math

import numpy as np
import pytest
from scipy import integrate, special

from lscpa import oracle
from lscpa.errors import InsufficientSamples


def _j0_integral(x):
    return integrate.quad(lambda t: math.cos(x * math.sin(t)), 0, math.pi, epsabs=1e-13, limit=200)[0] / math.pi


def test_j0_at_zero():
    assert oracle.bessel_j0(0.0) == 1.0


def test_j0_at_pi():
    assert oracle.bessel_j0(math.pi) == pytest.approx(-0.304242, abs=1e-6)
    assert oracle.bessel_j0(math.pi) == pytest.approx(_j0_integral(math.pi), abs=1e-10)


def test_j0_first_zero():
    assert abs(oracle.bessel_j0(2.404826)) < 1e-5


def test_j0_matches_integral_definition():
    xs = np.random.default_rng(3).uniform(0, 50, 50)
    for x in xs:
        assert abs(oracle.bessel_j0(x) - _j0_integral(x)) < 1e-7


def test_j0_accuracy_on_0_100():
    xs = np.linspace(0, 100, 4001)
    err = max(abs(oracle.bessel_j0(x) - special.j0(x)) for x in xs)
    assert err < 1e-9


def test_j0_even():
    assert oracle.bessel_j0(-3.3) == oracle.bessel_j0(3.3)


@pytest.mark.parametrize("a", [1, 2, 5, 32])
@pytest.mark.parametrize("x", [0.01, 0.5, 3.0, 20.0, 60.0])
def test_lower_gamma_matches_scipy(a, x):
    assert oracle.regularized_lower_gamma(a, x) == pytest.approx(special.gammainc(a, x), rel=1e-10, abs=1e-300)


def test_outage_m1():
    assert oracle.mrt_outage_analytic(1, 1.0, 0.3) == pytest.approx(1 - math.exp(-0.2311), abs=1e-4)
    assert oracle.mrt_outage_analytic(1, 1.0, 0.3) == pytest.approx(0.2063, abs=1e-4)


def test_outage_zero_threshold():
    assert oracle.mrt_outage_analytic(4, 0.3, 0.0) == 0.0


def test_outage_decreases_with_m():
    assert oracle.mrt_outage_analytic(2, 1.0, 0.3) < oracle.mrt_outage_analytic(1, 1.0, 0.3)


def test_outage_monotonicity():
    snrs = np.logspace(-2, 2, 20)
    for M in (1, 2, 8):
        p = [oracle.mrt_outage_analytic(M, s, 0.3) for s in snrs]
        assert all(b <= a for a, b in zip(p, p[1:]))
        r = [oracle.mrt_outage_analytic(M, 1.0, t) for t in np.linspace(0, 3, 20)]
        assert all(b >= a for a, b in zip(r, r[1:]))


def test_empirical_correlation_identical(rng):
    z = rng.standard_normal(1000) + 1j * rng.standard_normal(1000)
    assert oracle.empirical_correlation(z, z).rho == pytest.approx(1.0, abs=1e-12)


def test_empirical_correlation_independent(rng):
    n = 1_000_000
    a = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    b = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    assert abs(oracle.empirical_correlation(a, b).rho) < 0.005


def test_empirical_correlation_half(rng):
    n = 1_000_000
    a = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / math.sqrt(2)
    w = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / math.sqrt(2)
    est = oracle.empirical_correlation(0.5 * a + math.sqrt(0.75) * w, a)
    assert est.rho == pytest.approx(0.5, abs=0.01)
    assert 0 < est.stderr < 0.01


def test_empirical_correlation_too_few():
    with pytest.raises(InsufficientSamples):
        oracle.empirical_correlation([1j], [1j])


def test_bruteforce_m1_coarse_grid():
    ref = oracle.mrt_outage_analytic(1, 1.0, 0.3)
    assert abs(oracle.tiny_bruteforce_outage(1, 100, 1.0, 0.3) - ref) / ref < 0.02


def test_bruteforce_zero_threshold():
    assert oracle.tiny_bruteforce_outage(1, 30, 1.0, 0.0) == 0.0
    assert oracle.tiny_bruteforce_outage(2, 10, 1.0, 0.0) == 0.0


def test_bruteforce_refinement_shrinks_error():
    ref = oracle.mrt_outage_analytic(1, 1.0, 0.3)
    errs = [abs(oracle.tiny_bruteforce_outage(1, n, 1.0, 0.3) - ref) for n in (30, 300)]
    assert errs[1] < errs[0]


def test_bruteforce_m2():
    ref = oracle.mrt_outage_analytic(2, 1.0, 0.3)
    assert oracle.tiny_bruteforce_outage(2, 30, 1.0, 0.3) == pytest.approx(ref, rel=0.1)
