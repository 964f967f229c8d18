import math

import numpy as np
import pytest

import brownian_transport as bt
from brownian_transport.errors import PreconditionError
from brownian_transport.pipeline import (
    CantelliConfig,
    build_problem,
    crossing_radius,
    f1_asymptotics_report,
    run_pipeline,
)

from conftest import bisect_oracle, gauss_cdf_series, simpson_oracle

SQRT_2PI = math.sqrt(2 * math.pi)


def density_gap(t0, x):
    a = math.exp(-0.5 * x * x / t0) / math.sqrt(2 * math.pi * t0)
    b = math.exp(-0.5 * x * x) / SQRT_2PI
    return a - b


class TestCrossingRadius:
    def test_half_matches_bisection_oracle(self):
        got = crossing_radius(0.5)
        assert got == pytest.approx(math.sqrt(math.log(2)), abs=1e-14)
        root = bisect_oracle(lambda x: density_gap(0.5, x), 0.1, 2.0)
        assert got == pytest.approx(root, abs=1e-12)

    def test_limit_toward_one(self):
        assert crossing_radius(1 - 1e-6) == pytest.approx(1.0, abs=1e-5)

    @pytest.mark.parametrize("t0", [0.1, 0.3, 0.5, 0.8, 0.99])
    def test_gap_positive_inside(self, t0):
        assert density_gap(t0, 0.0) > 0.0
        r = crossing_radius(t0)
        assert density_gap(t0, 0.5 * r) > 0.0
        assert abs(density_gap(t0, r)) < 1e-12

    def test_domain_errors(self):
        for bad in (0.0, 1.0, -0.5, 2.0):
            with pytest.raises(PreconditionError):
                crossing_radius(bad)


class TestConfig:
    def test_default_radius_under_crossing(self):
        cfg = CantelliConfig()
        assert cfg.cantor_radius == pytest.approx(
            0.8 * crossing_radius(0.5), abs=1e-14
        )

    def test_radius_too_large_rejected(self):
        with pytest.raises(PreconditionError, match="crossing"):
            CantelliConfig(t0=0.5, cantor_radius=0.9)

    def test_bad_t0_rejected(self):
        with pytest.raises(PreconditionError):
            CantelliConfig(t0=1.5)

    def test_mesh_lower_bound(self):
        with pytest.raises(PreconditionError):
            CantelliConfig(mesh_n=8)

    def test_unresolvable_depth_rejected(self):
        with pytest.raises(PreconditionError, match="finest"):
            run_pipeline(CantelliConfig(mesh_n=400, cantor_depth=2))


class TestBuildProblem:
    def test_normalizer_against_cdf_oracle(self):
        cfg = CantelliConfig(t0=0.5, cantor_radius=0.6, cantor_depth=8)
        _, _, c = build_problem(cfg)
        K = cfg.cantor()
        inside = sum(
            gauss_cdf_series(float(b)) - gauss_cdf_series(float(a))
            for a, b in K.intervals
        )
        assert c == pytest.approx(1.0 - inside, abs=1e-12)

    def test_densities_and_mass(self):
        cfg = CantelliConfig(t0=0.5, cantor_depth=4, mesh_n=64)
        mu0, mu1, c = build_problem(cfg)
        # off the set the start density is the variance-t0 Gaussian over c
        x = 1.5
        assert mu0.density(x) == pytest.approx(
            math.exp(-x * x) / math.sqrt(math.pi) / c, rel=1e-12
        )
        assert mu1.density(x) == pytest.approx(
            math.exp(-0.5 * x * x) / SQRT_2PI / c, rel=1e-12
        )
        # on the set the target density vanishes and the start is the gap
        K = cfg.cantor()
        a, b = K.intervals[0]
        xin = float(a + b) / 2
        assert mu1.density(xin) == 0.0
        assert mu0.density(xin) == pytest.approx(
            density_gap(0.5, xin) / c, rel=1e-12
        )
        assert mu0.density(xin) > 0.0
        for m in (mu0, mu1):
            mass, mean = m.moments(-math.inf, math.inf)[:2]
            assert mass == pytest.approx(1.0, abs=1e-12)
            assert mean == pytest.approx(0.0, abs=1e-12)

    def test_cost_at_origin(self):
        # half the heat-flow time integral between the two variances,
        # scaled by the conditioning constant
        cfg = CantelliConfig(t0=0.5, cantor_depth=6)
        mu0, mu1, c = build_problem(cfg)
        oracle = 0.5 / c * simpson_oracle(
            lambda t: 1.0 / math.sqrt(2 * math.pi * t), 0.5, 1.0
        )
        got = mu1.phi(0.0) - mu0.phi(0.0)
        assert got == pytest.approx(oracle, abs=1e-10)
        assert got == pytest.approx(
            (1 - math.sqrt(0.5)) / SQRT_2PI / c, abs=1e-12
        )

    def test_cost_positive_on_grid(self):
        cfg = CantelliConfig(cantor_depth=5)
        mu0, mu1, _ = build_problem(cfg)
        xs = np.linspace(-3.5, 3.5, 701)
        vals = mu1.phi(xs) - mu0.phi(xs)
        assert vals.min() > 0.0

    def test_start_density_nonnegative(self):
        cfg = CantelliConfig(cantor_depth=6)
        mu0, _, _ = build_problem(cfg)
        xs = np.linspace(-1.0, 1.0, 2001)
        assert np.all(np.asarray(mu0.density(xs)) >= 0.0)


class TestRunPipeline:
    def test_phi_is_square_root_gap(self, small_pipeline):
        res = small_pipeline
        xs = np.linspace(-3.5, 3.5, 401)
        assert np.allclose(
            np.asarray(res.phi(xs)) ** 2 + np.asarray(res.f(xs)),
            res.C,
            atol=1e-12,
        )

    def test_f_level_on_the_set(self, small_pipeline):
        res = small_pipeline
        for a, b in res.cantor.float_intervals():
            mid = 0.5 * (a + b)
            assert res.f(mid) == res.config.t0
        # off the set strictly above t0 inside the window
        assert res.f(0.0) > res.config.t0

    def test_horizon_dominates(self, small_pipeline):
        res = small_pipeline
        xs = np.linspace(-6, 6, 1501)
        assert res.C >= float(np.asarray(res.f(xs)).max())
        assert res.C == pytest.approx(
            res.config.t0 + res.f1.ys.max() + res.config.horizon_margin
        )

    def test_phi_nonconstant_and_positive(self, small_pipeline):
        lo, hi = small_pipeline.phi_range()
        assert lo > 0.0
        assert hi - lo > 0.01

    def test_expected_time_identity(self, small_pipeline):
        res = small_pipeline
        gap = res.mu1n.variance() - res.mu0n.variance()
        assert res.solution.expected_time == pytest.approx(gap, abs=1e-8)

    def test_gamma_diagnostics_near_one(self, small_pipeline):
        d = small_pipeline.diagnostics
        for key in ("gamma_c0", "gamma_d0", "gamma_c1", "gamma_d1"):
            assert d[key] == pytest.approx(1.0, abs=1e-9)

    def test_grid_cauchy_trend_interior(self):
        # successive meshes approach each other away from the window edges
        runs = {n: run_pipeline(CantelliConfig(mesh_n=n, cantor_depth=6))
                for n in (25, 50, 100)}
        R = runs[25].config.truncation_R
        d = []
        for a, b in ((25, 50), (50, 100)):
            xs = runs[a].f1.xs
            inner = np.abs(xs) <= R - 1.0
            d.append(float(np.abs(
                runs[a].f1.ys[inner] - runs[b].f1(xs[inner])
            ).max()))
        assert d[1] < d[0]

    def test_modulus_diagnostic_present(self, small_pipeline):
        assert small_pipeline.diagnostics["modulus_step"] > 0.0


class TestAsymptotics:
    def test_report_on_small_pipeline(self, small_pipeline):
        rep = f1_asymptotics_report(small_pipeline)
        n = small_pipeline.config.mesh_n
        assert rep.lower_bound_ok  # 5/n budget at a coarse mesh
        assert rep.min_deviation >= -5.0 / n
        assert rep.monotone_ok
        assert rep.outer_band_max <= rep.inner_band_max
        assert rep.fitted_beta > 0.0

    def test_needs_wide_window(self, small_pipeline):
        cfg = CantelliConfig(truncation_R=2.5, mesh_n=50, cantor_depth=6)
        res = run_pipeline(cfg)
        with pytest.raises(PreconditionError):
            f1_asymptotics_report(res)
