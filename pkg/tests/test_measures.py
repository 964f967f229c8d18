import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import brownian_transport as bt
from brownian_transport.errors import PreconditionError

from conftest import gauss_cdf_series, simpson_oracle

SQRT_2PI = math.sqrt(2 * math.pi)


class TestCdf:
    def test_gaussian_symmetry(self):
        assert bt.gaussian(1.0).cdf(0.0) == pytest.approx(0.5, abs=1e-15)

    def test_uniform_linear(self):
        assert bt.uniform(-1, 1).cdf(0.5) == pytest.approx(0.75, abs=1e-15)

    def test_gaussian_value_against_series_oracle(self):
        # frozen from the series oracle; quadrature agrees independently
        oracle = gauss_cdf_series(1.0)
        assert oracle == pytest.approx(0.841344746068543, abs=1e-13)
        g = bt.gaussian(1.0)
        assert g.cdf(1.0) == pytest.approx(0.841345, abs=1e-6)
        assert g.cdf(1.0) == pytest.approx(oracle, abs=1e-12)
        quad = simpson_oracle(
            lambda s: math.exp(-0.5 * s * s) / SQRT_2PI, -12.0, 1.0
        )
        assert g.cdf(1.0) == pytest.approx(quad, abs=1e-9)

    def test_monotone(self):
        g = bt.gaussian(0.7)
        xs = np.linspace(-4, 4, 101)
        vals = g.cdf(xs)
        assert np.all(np.diff(vals) >= 0)
        assert np.all((vals >= 0) & (vals <= 1 + 1e-12))


class TestMeanVar:
    def test_gaussian_parameters(self):
        mean, var = bt.gaussian(0.25).mean_var()
        assert mean == pytest.approx(0.0, abs=1e-14)
        assert var == pytest.approx(0.25, abs=1e-14)

    def test_uniform_closed_form_and_quadrature(self):
        mean, var = bt.uniform(-1, 1).mean_var()
        assert mean == pytest.approx(0.0, abs=1e-14)
        assert var == pytest.approx(1.0 / 3.0, abs=1e-14)
        quad = simpson_oracle(lambda x: 0.5 * x * x, -1.0, 1.0)
        assert var == pytest.approx(quad, abs=1e-11)

    def test_point_like(self):
        mean, var = bt.triangle(0.7, 1e-3).mean_var()
        assert mean == pytest.approx(0.7, abs=1e-9)
        assert var == pytest.approx(0.0, abs=1e-6)


class TestPhi:
    def test_point_mass_limits(self):
        t = bt.triangle(0.0, 1e-3)
        assert t.phi(1.0) == pytest.approx(1.0, abs=1e-3)
        assert t.phi(-1.0) == 0.0

    def test_uniform_closed_form(self):
        u = bt.uniform(-1, 1)
        for x in (-0.75, -0.25, 0.0, 0.5, 1.0):
            assert u.phi(x) == pytest.approx((x + 1) ** 2 / 4, abs=1e-13)
        assert u.phi(0.0) == pytest.approx(0.25, abs=1e-14)

    def test_vanishes_far_left(self):
        assert bt.uniform(-1, 1).phi(-5.0) == 0.0
        assert bt.gaussian(1.0).phi(-40.0) == pytest.approx(0.0, abs=1e-15)

    @pytest.mark.parametrize(
        "measure",
        [
            bt.gaussian(1.0),
            bt.uniform(-1, 1),
            bt.triangle(0.3, 0.2),
            bt.truncate_normalize(bt.gaussian(1.0), 2.0),
        ],
    )
    def test_two_evaluations_agree(self, measure):
        # CDF-primitive form against the first-moment form
        tol = 10 * measure.quadrature.tol
        for x in (-1.5, -0.3, 0.0, 0.4, 1.2):
            assert measure.phi(x) == pytest.approx(
                measure.phi_from_cdf(x), abs=tol
            )

    @given(st.floats(min_value=-3.0, max_value=3.0))
    @settings(max_examples=25, deadline=None)
    def test_gaussian_closed_form(self, x):
        # phi of N(0,1) is x F(x) + pdf(x)
        g = bt.gaussian(1.0)
        expect = x * gauss_cdf_series(x) + math.exp(-0.5 * x * x) / SQRT_2PI
        assert g.phi(x) == pytest.approx(expect, abs=1e-12)


class TestCost:
    def test_identical_measures(self):
        u = bt.uniform(-1, 1)
        for x in (-0.5, 0.0, 0.7):
            assert bt.cost(u, u, x) == 0.0

    def test_gaussian_pair_value(self):
        # time integral of the half heat flow between variances t0 and 1
        t0 = 0.25
        oracle = 0.5 * simpson_oracle(
            lambda t: 1.0 / math.sqrt(2 * math.pi * t), t0, 1.0
        )
        got = bt.cost(bt.gaussian(t0), bt.gaussian(1.0), 0.0)
        assert got == pytest.approx(oracle, abs=1e-10)
        assert got == pytest.approx((1 - math.sqrt(t0)) / SQRT_2PI, abs=1e-13)

    def test_point_vs_half_masses(self):
        # unit mass at 0 against halves at -1 and 1: cost at 0 is 1/2
        w = 1e-3
        mu0 = bt.triangle(0.0, w)
        mix = bt.DensityMeasure(
            density=lambda x: 0.5 * (bt.triangle(-1.0, w).density(x)
                                     + bt.triangle(1.0, w).density(x)),
            support=(-1 - w, 1 + w),
            breakpoints=(-1.0, -1 + w, 1 - w, 1.0),
        )
        assert bt.cost(mu0, mix, 0.0) == pytest.approx(0.5, abs=5 * w)

    def test_mean_mismatch_rejected(self):
        with pytest.raises(PreconditionError):
            bt.cost(bt.uniform(-1, 1), bt.uniform(0, 2), 0.0)

    def test_cost_function_invariants(self):
        f = bt.CostFunction(bt.gaussian(0.5), bt.gaussian(1.0))
        assert f(-12.0) == pytest.approx(0.0, abs=1e-12)
        assert f(12.0) == pytest.approx(0.0, abs=1e-12)
        xs = np.linspace(-3, 3, 301)
        vals = np.array([f(float(x)) for x in xs])
        h = xs[1] - xs[0]
        # the derivative of the cost is a difference of CDFs, bounded by 1
        assert np.max(np.abs(np.diff(vals))) <= h * (1 + 1e-9)


class TestGammaCenter:
    def test_symmetric_fixed_point(self):
        m, c, d = bt.gamma_center(bt.uniform(-1, 1))
        assert c == pytest.approx(1.0, abs=1e-12)
        assert d == pytest.approx(1.0, abs=1e-12)
        for x in (-0.5, 0.25):
            assert m.density(x) == pytest.approx(0.5, abs=1e-12)

    def test_two_bump_weights(self):
        w = 1e-3
        base = bt.DensityMeasure(
            density=lambda x: (0.25 * bt.triangle(-1.0, w).density(x)
                               + 0.75 * bt.triangle(1.0, w).density(x)),
            support=(-1 - w, 1 + w),
            breakpoints=(-1.0, -1 + w, 1 - w, 1.0),
        )
        m, c, d = bt.gamma_center(base)
        # oracle: direct 2x2 solve on the exact interval moments
        n0, n1, _ = base.moments(-math.inf, 0.0)
        p0, p1, _ = base.moments(0.0, math.inf)
        oc, od = np.linalg.solve([[n0, p0], [n1, p1]], [1.0, 0.0])
        assert c == pytest.approx(oc, rel=1e-9)
        assert d == pytest.approx(od, rel=1e-9)
        assert c == pytest.approx(2.0, abs=1e-5)
        assert d == pytest.approx(2.0 / 3.0, abs=1e-5)
        mean, _ = m.mean_var()
        assert mean == pytest.approx(0.0, abs=1e-9)
        assert m.moments(-math.inf, 0.0)[0] == pytest.approx(0.5, abs=1e-5)

    def test_one_sided_rejected(self):
        with pytest.raises(PreconditionError):
            bt.gamma_center(bt.uniform(0.5, 2.0))

    def test_weights_approach_one_with_window(self):
        # centered but asymmetric: flat mass 0.6 on [-4,0], 0.4 on [0,6]
        m = bt.from_pieces([
            (-4.0, 0.0, (0.15, 0.0), []),
            (0.0, 6.0, (0.4 / 6.0, 0.0), []),
        ])
        gaps = []
        for R in (2.0, 3.0, 4.0, 5.0):
            _, c, d = bt.gamma_center(bt.truncate_normalize(m, R))
            gaps.append(abs(c - 1.0) + abs(d - 1.0))
        assert all(a >= b - 1e-12 for a, b in zip(gaps, gaps[1:]))
        assert gaps[-1] < gaps[0]


class TestTruncateNormalize:
    def test_uniform_restriction(self):
        t = bt.truncate_normalize(bt.uniform(-2, 2), 1.0)
        assert t.total_mass == pytest.approx(1.0, abs=1e-12)
        assert t.density(0.5) == pytest.approx(0.5, abs=1e-12)
        assert t.density(1.5) == 0.0

    def test_gaussian_normalizer(self):
        t = bt.truncate_normalize(bt.gaussian(1.0), 1.0)
        normalizer = gauss_cdf_series(1.0) - gauss_cdf_series(-1.0)
        assert normalizer == pytest.approx(0.682689, abs=1e-6)
        x = 0.3
        expect = math.exp(-0.5 * x * x) / SQRT_2PI / normalizer
        assert t.density(x) == pytest.approx(expect, rel=1e-10)

    def test_empty_window_rejected(self):
        with pytest.raises(PreconditionError):
            bt.truncate_normalize(bt.gaussian(1.0), 0.0)


class TestFeasibility:
    def test_variance_decrease_infeasible(self):
        r = bt.feasibility_check(bt.uniform(-1, 1), bt.uniform(-0.5, 0.5))
        assert not r.feasible
        assert not r.variance_ok

    def test_gaussian_pair_feasible(self):
        r = bt.feasibility_check(bt.gaussian(0.25), bt.gaussian(1.0))
        assert r.feasible
        assert r.min_cost > 0.0

    def test_identity_feasible(self):
        r = bt.feasibility_check(bt.uniform(-1, 1), bt.uniform(-1, 1))
        assert r.feasible
        assert r.min_cost == 0.0

    def test_swapped_orientation_always_fails(self):
        r = bt.feasibility_check(bt.gaussian(1.0), bt.gaussian(0.25))
        assert not r.feasible


def test_quadrature_nonconvergence_raises():
    # an integrable singularity defeats the refinement depth budget
    spike = bt.from_density(
        lambda x: 0.5 / np.sqrt(np.maximum(np.asarray(x, dtype=float),
                                           1e-300)),
        support=(0.0, 1.0),
        quadrature=bt.Quadrature(tol=1e-12, max_depth=12),
    )
    with pytest.raises(bt.NumericToleranceError):
        spike.cdf(0.5)


def test_quantile_inverts_cdf():
    g = bt.gaussian(2.0)
    u = np.array([0.05, 0.3, 0.5, 0.9])
    x = g.quantile(u)
    assert np.allclose(g.cdf(x), u, atol=1e-10)
    assert g.quantile(0.5) == pytest.approx(0.0, abs=1e-10)


def test_density_csv(tmp_path):
    path = tmp_path / "density.csv"
    bt.uniform(-1, 1).to_csv(path, grid=np.linspace(-1, 1, 5))
    lines = path.read_text().splitlines()
    assert lines[0] == "x,density"
    assert len(lines) == 6
    assert lines[3].split(",")[1] == "0.5"
