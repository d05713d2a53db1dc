import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dfdreg.dfd import dfd_example_hp, pseudo_inverse_via_dfd
from dfdreg.filters import landweber_filter, tikhonov_filter, truncated_filter
from dfdreg.operators import pseudo_inverse_direct
from dfdreg.problems import build_dfd, shipped_dfds
from dfdreg.rates import make_source_element, rate_bound
from dfdreg.regularize import (
    FilteredDfdOperator,
    ParameterChoice,
    apriori_choice,
    check_admissibility,
    error_split,
    filtered_apply,
    operator_norm_bound,
    reconstruct,
)

from strategies import gaussian, seeds

SHIPPED = shipped_dfds()


def filters_for(dfd):
    kmax = float(dfd.kappa.max())
    return {
        "truncated:sigma_squared_cutoff": truncated_filter("sigma_squared_cutoff"),
        "truncated:kappa_cutoff": truncated_filter("kappa_cutoff"),
        "tikhonov:paper_form": tikhonov_filter("paper_form"),
        "tikhonov:rate_form": tikhonov_filter("rate_form"),
        "landweber": landweber_filter(0.9 / kmax**2),
    }


PAIRS = [(d, f) for d in sorted(SHIPPED) for f in filters_for(SHIPPED[d])]


class TestFilteredApply:
    def test_exact_inverse_mode(self):
        for d in SHIPPED.values():
            a = 0.5 * d.kappa.min()
            op = FilteredDfdOperator(d, truncated_filter("kappa_cutoff"), a)
            y = d.operator.apply(gaussian(1, d.operator.shape[1], 5))
            np.testing.assert_allclose(filtered_apply(op, y), pseudo_inverse_via_dfd(d, y), atol=1e-10)

    def test_zero(self):
        op = FilteredDfdOperator(dfd_example_hp(6), tikhonov_filter(), 0.1)
        assert not np.any(op(np.zeros(6)))

    def test_hp_paper_form_e0(self):
        d = build_dfd("hp", 5)
        op = FilteredDfdOperator(d, tikhonov_filter("paper_form"), 0.1)
        np.testing.assert_allclose(op(np.eye(5)[0]), np.eye(5)[0] / 1.1, rtol=1e-15, atol=1e-16)

    def test_dimension_mismatch(self):
        op = FilteredDfdOperator(build_dfd("hp", 5), tikhonov_filter(), 0.1)
        with pytest.raises(ValueError):
            op(np.ones(4))

    def test_alpha_positive(self):
        with pytest.raises(ValueError):
            FilteredDfdOperator(build_dfd("hp", 5), tikhonov_filter(), 0.0)

    def test_landweber_kappa_limit_enforced(self):
        with pytest.raises(ValueError, match="kappa"):
            FilteredDfdOperator(build_dfd("hp", 5), landweber_filter(1.0), 0.1)

    def test_dense_matches_apply(self):
        d = SHIPPED["volterra:derived"]
        op = FilteredDfdOperator(d, tikhonov_filter(), 0.05)
        y = gaussian(3, d.operator.shape[0])
        np.testing.assert_allclose(op.to_dense() @ y, op(y), atol=1e-12)

    @settings(max_examples=30, deadline=None)
    @given(seeds, st.floats(-5, 5), st.floats(-5, 5), st.sampled_from(sorted(SHIPPED)))
    def test_linearity(self, seed, a, b, name):
        d = SHIPPED[name]
        op = FilteredDfdOperator(d, tikhonov_filter(), 0.1)
        m = d.operator.shape[0]
        y, z = gaussian(seed, m), gaussian(seed + 1, m)
        lhs = op(a * y + b * z)
        rhs = a * op(y) + b * op(z)
        assert np.max(np.abs(lhs - rhs)) <= 1e-12 * max(1.0, np.max(np.abs(rhs)))


class TestNormBound:
    def test_orthonormal_truncated(self):
        d = build_dfd("hp", 50)
        a = 0.05
        nb = operator_norm_bound(FilteredDfdOperator(d, truncated_filter("sigma_squared_cutoff"), a))
        kept = d.kappa[d.kappa**2 >= a]
        assert nb.empirical == pytest.approx(np.max(1 / kept), rel=1e-12)
        assert nb.bound == pytest.approx(1 / np.sqrt(a))
        assert nb.holds

    def test_example_hp_tikhonov(self):
        # oracle: dense SVD of the assembled operator
        d = dfd_example_hp(40)
        op = FilteredDfdOperator(d, tikhonov_filter("rate_form"), 0.1)
        emp = np.linalg.svd(op.to_dense(), compute_uv=False)[0]
        assert emp <= (1 / (2 * 0.1)) * np.sqrt(d.bounds_u_dual.upper * 2) * (1 + 1e-6)
        assert operator_norm_bound(op).empirical == pytest.approx(emp, rel=1e-12)

    def test_large_alpha_vanishes(self):
        d = dfd_example_hp(20)
        norms = [operator_norm_bound(FilteredDfdOperator(d, tikhonov_filter(), a)).empirical for a in (1, 10, 100, 1e4)]
        assert np.all(np.diff(norms) < 0) and norms[-1] < 1e-7

    @pytest.mark.parametrize("dname,fname", PAIRS)
    def test_all_pairs(self, dname, fname):
        d = SHIPPED[dname]
        f = filters_for(d)[fname]
        for a in (1.0, 0.1, 0.01):
            assert operator_norm_bound(FilteredDfdOperator(d, f, a)).holds


class TestApriori:
    def test_values(self):
        assert apriori_choice(1e-4, 1, 1, 1) == pytest.approx(1e-2, rel=1e-12)
        assert apriori_choice(1e-6, 1, 2, 1) == pytest.approx(1e-2, rel=1e-12)

    @settings(max_examples=50, deadline=None)
    @given(st.floats(1e-10, 1), st.floats(0.1, 10), st.floats(0.1, 4), st.floats(0.1, 10))
    def test_scaling(self, delta, rho, mu, c):
        assert apriori_choice(delta, rho, mu, c) == pytest.approx(c * apriori_choice(delta, rho, mu, 1.0), rel=1e-14)

    def test_rejects(self):
        for args in [(0, 1, 1, 1), (1e-3, -1, 1, 1), (1e-3, 1, 0, 1), (1e-3, 1, 1, 0)]:
            with pytest.raises(ValueError):
                apriori_choice(*args)

    def test_choice_object(self):
        ch = ParameterChoice.apriori(rho=2.0, mu=1.0, c=3.0)
        assert ch(8e-4) == pytest.approx(3 * np.sqrt(4e-4))
        user = ParameterChoice.from_function(lambda d: -d)
        with pytest.raises(ValueError):
            user(0.1)


class TestAdmissibility:
    grid = np.logspace(-1, -7, 61)

    def test_tikhonov_apriori(self):
        r = check_admissibility(ParameterChoice.apriori(mu=1.0), tikhonov_filter("rate_form"), self.grid)
        assert r.passed
        np.testing.assert_allclose(r.noise_amplification, np.sqrt(r.deltas) / 2, rtol=1e-12)

    def test_constant_rule_fails_first(self):
        r = check_admissibility(ParameterChoice.from_function(lambda d: 0.1), tikhonov_filter(), self.grid)
        assert not r.alpha_decays and not r.passed

    def test_square_rule_fails_second(self):
        r = check_admissibility(ParameterChoice.from_function(lambda d: d * d), truncated_filter("kappa_cutoff"), self.grid)
        assert r.alpha_decays and not r.amplification_decays


class TestReconstruct:
    def test_exact_data_converges_to_projection(self):
        d = build_dfd("volterra", 16)
        x = gaussian(5, 16)
        y = d.operator.apply(x)
        ch = ParameterChoice.from_function(np.sqrt)
        errs = []
        for delta in np.logspace(-1, -12, 12):
            xr, alpha = reconstruct(d, tikhonov_filter(), ch, y, delta)
            assert alpha == np.sqrt(delta)
            errs.append(np.linalg.norm(xr - x))
        assert np.all(np.diff(errs) < 0) and errs[-1] < 1e-6

    def test_range_complement_data(self):
        d = SHIPPED["hp:derived"]
        Q = d.range_basis
        y = gaussian(2, 50)
        y_perp = y - Q @ (Q.T @ y)
        xr, _ = reconstruct(d, tikhonov_filter(), ParameterChoice.apriori(), y_perp, 1e-3)
        assert np.linalg.norm(xr) <= 1e-10 * max(1.0, np.linalg.norm(y))

    def test_hp_rate(self):
        d = build_dfd("hp", 100)
        src = make_source_element(d, 1.0, 1.0, "geometric", r=0.5)
        delta = 1e-3
        f = tikhonov_filter("rate_form")
        y = d.operator.apply(src.x_dagger) + delta * gaussian(1, 100) / np.linalg.norm(gaussian(1, 100))
        xr, a = reconstruct(d, f, ParameterChoice.apriori(mu=1.0), y, delta)
        assert np.linalg.norm(xr - src.x_dagger) <= rate_bound(d, f, a, delta, 1.0, 1.0)
        assert rate_bound(d, f, a, delta, 1.0, 1.0) == pytest.approx(np.sqrt(delta), rel=1e-12)


class TestInvariants:
    @pytest.mark.parametrize("name", sorted(SHIPPED))
    def test_pointwise_convergence(self, name):
        d = SHIPPED[name]
        op = d.operator
        y = op.apply(gaussian(3, op.shape[1]))
        ref = pseudo_inverse_direct(op, y)
        for f in filters_for(d).values():
            # paper_form's alpha plays the role of alpha**2 in the other families
            stop = -16 if f.name == "tikhonov:paper_form" else -8
            errs = [np.linalg.norm(FilteredDfdOperator(d, f, a)(y) - ref) for a in np.logspace(0, stop, 9)]
            assert np.all(np.diff(errs) <= 1e-12), f.name
            assert errs[-1] <= 1e-6, f.name

    @pytest.mark.parametrize("name", sorted(SHIPPED))
    def test_error_split(self, name):
        d = SHIPPED[name]
        op = d.operator
        x = pseudo_inverse_direct(op, op.apply(gaussian(7, op.shape[1])))
        z = gaussian(8, op.shape[0])
        for delta in (1e-1, 1e-3):
            y = op.apply(x) + delta * z / np.linalg.norm(z)
            for f in filters_for(d).values():
                for a in (1.0, 0.1, 0.01):
                    assert error_split(FilteredDfdOperator(d, f, a), x, y, delta).consistent
