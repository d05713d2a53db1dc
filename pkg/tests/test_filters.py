import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dfdreg.filters import (
    DEFAULT_ALPHA_GRID,
    DEFAULT_KAPPA_GRID,
    AlphaRoundingWarning,
    FilterFamily,
    filter_from_spectral,
    landweber_filter,
    parse_filter_spec,
    tikhonov_filter,
    truncated_filter,
    verify_filter_axioms,
    verify_qualification,
)

SHIPPED = {
    "truncated:sigma_squared_cutoff": truncated_filter("sigma_squared_cutoff"),
    "truncated:kappa_cutoff": truncated_filter("kappa_cutoff"),
    "tikhonov:paper_form": tikhonov_filter("paper_form"),
    "tikhonov:rate_form": tikhonov_filter("rate_form"),
    "landweber": landweber_filter(1.0),
}

alphas = st.floats(1e-4, 1.0)
kappas = st.floats(1e-4, 10.0)


def inverse_square():
    return filter_from_spectral(lambda a, lam: lam**-1.5, "inverse_square")


class TestTruncated:
    def test_sigma_squared_cutoff_values(self):
        f = truncated_filter("sigma_squared_cutoff")
        assert f(0.25, 0.4) == 0.0
        assert f(0.25, 0.6) == 1 / 0.6
        assert f.sup_norm(0.25) == 2.0

    def test_kappa_cutoff_mu1_sup(self):
        f = truncated_filter("kappa_cutoff")
        a = 0.01
        k = np.linspace(1e-6, 1.0, 200001)
        sup = np.max(k * np.abs(1 - k * f(a, k)))
        assert sup == pytest.approx(a, rel=1e-3) and sup < a

    def test_kappa_f_at_most_one(self):
        for f in (truncated_filter("sigma_squared_cutoff"), truncated_filter("kappa_cutoff")):
            for a in DEFAULT_ALPHA_GRID:
                assert np.all(np.abs(DEFAULT_KAPPA_GRID * f(a, DEFAULT_KAPPA_GRID)) <= 1 + 1e-15)

    def test_unknown_variant(self):
        with pytest.raises(ValueError):
            truncated_filter("soft")


class TestTikhonov:
    def test_paper_form_value(self):
        assert tikhonov_filter("paper_form")(0.1, 1.0) == pytest.approx(1 / 1.1, rel=1e-15)

    def test_rate_form_mu1_sup_oracle(self):
        # fine 1-D maximization of kappa alpha^2 / (kappa^2 + alpha^2); analytic answer alpha/2 at kappa = alpha
        f = tikhonov_filter("rate_form")
        for a in (0.3, 0.05, 1e-3):
            k = np.logspace(np.log10(a) - 2, np.log10(a) + 2, 400001)
            vals = k * np.abs(1 - k * f(a, k))
            assert vals.max() == pytest.approx(a / 2, rel=1e-9)
            assert k[np.argmax(vals)] == pytest.approx(a, rel=1e-4)

    def test_paper_form_limit(self):
        f = tikhonov_filter("paper_form")
        vals = [f(a, 0.3) for a in (1e-2, 1e-4, 1e-6, 1e-9)]
        assert abs(vals[-1] - 1 / 0.3) < 1e-7
        assert np.all(np.diff(np.abs(np.array(vals) - 1 / 0.3)) < 0)

    @settings(max_examples=100, deadline=None)
    @given(alphas)
    def test_sup_norms_exact(self, a):
        k = np.logspace(-6, 2, 20001)
        for f in (tikhonov_filter("paper_form"), tikhonov_filter("rate_form")):
            grid_max = np.max(f(a, k))
            assert grid_max <= f.sup_norm(a) * (1 + 1e-12)
            assert grid_max >= f.sup_norm(a) * (1 - 1e-3)

    def test_claimed_constants(self):
        f = tikhonov_filter("rate_form")
        assert f.claimed_constant(1.0) == 0.5
        assert f.claimed_constant(2.0) == 1.0
        assert f.claimed_constant(0.5) == 1.0
        assert f.claimed_constant(4.0) is None
        assert tikhonov_filter("paper_form").claimed_constant(1.0) is None


class TestLandweber:
    def test_single_step(self):
        f = landweber_filter(0.7)
        k = np.array([0.1, 0.5, 1.0])
        np.testing.assert_allclose(f(1.0, k), 0.7 * k, rtol=1e-14)

    def test_unit_step_point(self):
        f = landweber_filter(0.25)
        for a in (1.0, 0.5, 0.1, 0.01):
            assert f(a, 2.0) == pytest.approx(0.5, rel=1e-15)

    def test_limit_by_direct_summation(self):
        # oracle: omega * sum_{j<m} (1 - omega kappa^2)^j * kappa
        f = landweber_filter(1.0)
        errs = []
        for m in (1, 2, 5, 10, 50, 200):
            direct = 1.0 * sum((1 - 0.25) ** j for j in range(m)) * 0.5
            val = f(1.0 / m, 0.5)
            assert val == pytest.approx(direct, rel=1e-12)
            errs.append(abs(val - 2.0))
        assert np.all(np.diff(errs) < 0) and errs[-1] < 1e-12

    @pytest.mark.parametrize("m", [1, 2, 5, 30, 400])
    def test_sup_norm_bounded_by_sqrt_omega_m(self, m):
        f = landweber_filter(0.8)
        k = np.linspace(1e-4, 1 / np.sqrt(0.8), 50001)
        assert np.max(f(1 / m, k)) <= f.sup_norm(1 / m) * (1 + 1e-9)
        assert f.sup_norm(1 / m) <= np.sqrt(0.8 * m) * (1 + 1e-12)
        assert not f.sup_norm_exact

    def test_rounding_warning(self):
        f = landweber_filter(1.0)
        with pytest.warns(AlphaRoundingWarning):
            f(0.3, 0.5)
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            f(0.25, 0.5)

    def test_kappa_limit(self):
        assert landweber_filter(0.25).kappa_limit == 2.0

    def test_rejects_nonpositive_omega(self):
        with pytest.raises(ValueError):
            landweber_filter(0.0)


class TestResidual:
    @pytest.mark.parametrize("name", sorted(SHIPPED))
    def test_closed_form_matches_subtraction(self, name):
        f = SHIPPED[name]
        k = np.logspace(-3, 0, 200)
        for a in (1.0, 0.1, 0.01, 1e-3):
            direct = 1.0 - k * f(a, k)
            np.testing.assert_allclose(f.residual(a, k), direct, atol=1e-12)

    def test_no_cancellation_at_large_kappa(self):
        f = truncated_filter("kappa_cutoff")
        assert np.all(f.residual(1e-6, np.array([3.0, 7.0, 10.0])) == 0.0)

    def test_fallback_without_closed_form(self):
        g = filter_from_spectral(lambda a, lam: 1 / (lam + a))
        assert g.residual(0.1, 1.0) == pytest.approx(1 - 1 / 1.1)


class TestSpectral:
    def test_tikhonov_identity(self):
        g = filter_from_spectral(lambda a, lam: 1 / (lam + a), sup_norm=lambda a: 0.5 / np.sqrt(a))
        t = tikhonov_filter("paper_form")
        A = np.logspace(-6, 0, 100)
        K = np.logspace(-4, 1, 100)
        for a in A:
            assert np.max(np.abs(g(a, K) - t(a, K))) <= 1e-15 * np.max(np.abs(t(a, K)))
        assert g(0.1, 1.0) == pytest.approx(1 / 1.1, rel=1e-15)

    def test_truncation_identity(self):
        g = filter_from_spectral(lambda a, lam: np.where(lam >= a, 1 / lam, 0.0))
        t = truncated_filter("sigma_squared_cutoff")
        for a in (0.5, 0.01):
            np.testing.assert_allclose(g(a, DEFAULT_KAPPA_GRID), t(a, DEFAULT_KAPPA_GRID), rtol=1e-15)

    def test_estimated_sup_flagged(self):
        assert not filter_from_spectral(lambda a, lam: 1 / (lam + a)).sup_norm_exact


class TestAxioms:
    @pytest.mark.parametrize("name", sorted(SHIPPED))
    def test_shipped_pass(self, name):
        r = verify_filter_axioms(SHIPPED[name])
        assert r.passed, r

    @pytest.mark.parametrize("name", sorted(SHIPPED))
    def test_monotone_limit(self, name):
        assert verify_filter_axioms(SHIPPED[name]).f3_monotone

    def test_paper_form_documented_grid(self):
        r = verify_filter_axioms(tikhonov_filter("paper_form"), np.logspace(-6, 0, 61), np.logspace(-3, 1, 300))
        assert r.passed

    def test_truncated_constant_tight(self):
        r = verify_filter_axioms(truncated_filter("kappa_cutoff"))
        assert r.max_kappa_f == pytest.approx(1.0, rel=1e-15)

    def test_inverse_square_fails_f2(self):
        r = verify_filter_axioms(inverse_square())
        assert not r.f2 and not r.passed
        assert r.max_kappa_f == pytest.approx(1e4, rel=1e-9)

    def test_grids_positive(self):
        with pytest.raises(ValueError):
            verify_filter_axioms(tikhonov_filter(), [0.0, 1.0])

    @settings(max_examples=60, deadline=None)
    @given(alphas, kappas)
    def test_f2_pointwise(self, a, k):
        for name, f in SHIPPED.items():
            if name == "landweber":
                a = 1.0 / max(1, round(1 / a))
            assert abs(k * f(a, k)) <= f.axiom_constant_C * (1 + 1e-9)


class TestQualification:
    def test_tikhonov_mu1(self):
        r = verify_qualification(tikhonov_filter("rate_form"), 1.0)
        assert r.constant == pytest.approx(0.5, rel=1e-3) and r.constant <= 0.5 * (1 + 1e-3)
        assert r.passed

    def test_tikhonov_mu2(self):
        r = verify_qualification(tikhonov_filter("rate_form"), 2.0)
        assert r.passed and r.constant <= 1.0

    @pytest.mark.parametrize("mu", [0.5, 1.0, 2.0, 3.0, 5.0])
    def test_kappa_cutoff(self, mu):
        r = verify_qualification(truncated_filter("kappa_cutoff"), mu)
        assert r.passed and r.constant <= 1.0 and r.constant > 0.9

    def test_tikhonov_mu4_fails(self):
        r = verify_qualification(tikhonov_filter("rate_form"), 4.0)
        assert not r.passed
        assert np.all(np.diff(r.ratios) > 0)

    def test_tikhonov_just_above_claim_fails(self):
        assert not verify_qualification(tikhonov_filter("rate_form"), 2.5).passed

    def test_paper_form_mu1_unqualified(self):
        r = verify_qualification(tikhonov_filter("paper_form"), 1.0)
        assert not r.passed
        # sup scales like alpha^(1/2): ratio grows as alpha decreases
        assert r.ratios[-1] > 100 * r.ratios[0]

    def test_sigma_squared_unqualified(self):
        assert not verify_qualification(truncated_filter("sigma_squared_cutoff"), 1.0).passed

    def test_mu_positive(self):
        with pytest.raises(ValueError):
            verify_qualification(tikhonov_filter(), 0.0)


class TestParse:
    def test_specs(self):
        assert parse_filter_spec("tikhonov:rate_form").name == "tikhonov:rate_form"
        assert parse_filter_spec('"truncated:kappa_cutoff"').name == "truncated:kappa_cutoff"
        assert parse_filter_spec("tikhonov").name == "tikhonov:rate_form"
        assert parse_filter_spec("landweber omega=0.9").kappa_limit == pytest.approx(1 / np.sqrt(0.9))

    @pytest.mark.parametrize("bad", ["", "tikhonov:foo", "landweber:x", "tikhonov omega=1", "nonsense"])
    def test_rejects(self, bad):
        with pytest.raises(ValueError):
            parse_filter_spec(bad)

    def test_alpha_positive(self):
        with pytest.raises(ValueError):
            tikhonov_filter()(0.0, 1.0)

    def test_family_is_immutable(self):
        f = tikhonov_filter()
        assert isinstance(f, FilterFamily)
        with pytest.raises(Exception):
            f.name = "x"
