"""Shared fixtures and independent numerical oracles.

The oracles here deliberately avoid the package's own integration
machinery: the Gaussian CDF comes from its Maclaurin series, integrals
from a fixed-refinement composite Simpson rule.
"""

import math

import numpy as np
import pytest

from brownian_transport.pipeline import CantelliConfig, run_pipeline


def gauss_cdf_series(x, terms=200):
    """Standard normal CDF by the series 1/2 + pdf(x) * sum x^(2k+1)/(2k+1)!!."""
    total = 0.0
    term = x
    for k in range(terms):
        total += term
        term *= x * x / (2 * k + 3)
        if abs(term) < 1e-18:
            break
    return 0.5 + math.exp(-0.5 * x * x) / math.sqrt(2 * math.pi) * total


def simpson_oracle(f, a, b, rtol=1e-11, max_iter=22):
    """Composite Simpson with doubling panels until the value settles."""
    prev = None
    n = 8
    for _ in range(max_iter):
        xs = np.linspace(a, b, n + 1)
        ys = np.asarray([f(float(x)) for x in xs])
        h = (b - a) / n
        val = h / 3 * (ys[0] + ys[-1] + 4 * ys[1:-1:2].sum() + 2 * ys[2:-1:2].sum())
        if prev is not None and abs(val - prev) <= rtol * (1 + abs(val)):
            return val
        prev = val
        n *= 2
    raise AssertionError("oracle quadrature did not settle")


def bisect_oracle(f, a, b, iters=200):
    """Sign-change bisection for root finding."""
    fa = f(a)
    for _ in range(iters):
        m = 0.5 * (a + b)
        if f(m) * fa > 0:
            a = m
        else:
            b = m
    return 0.5 * (a + b)


@pytest.fixture(scope="session")
def small_pipeline():
    """A fast, fully assembled counter-example (coarse mesh)."""
    return run_pipeline(CantelliConfig(mesh_n=50, cantor_depth=6))
