import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kbound.algebras import (
    AlgebraModel,
    classify_algebra,
    closure_test,
    model_amplitudes,
    model_observables,
    parse_model_spec,
    saturated_complexity,
    saturating_b,
)
from kbound.dynamics import complexity_profile, evolve_amplitudes
from kbound.errors import NumericalError, ValidationError


class TestAlgebraModel:
    def test_su2_chain_values(self):
        m = AlgebraModel.su2(1.5)
        np.testing.assert_allclose(
            m.b(np.array([1, 2, 3])), [math.sqrt(3.0), 2.0, math.sqrt(3.0)]
        )
        assert m.D == 4
        assert m.alpha == -4.0
        assert m.gamma == 6.0

    def test_hw_chain_values(self):
        m = AlgebraModel.hw(nu=2.0)
        np.testing.assert_allclose(m.b(np.arange(1, 5)), 2.0 * np.sqrt([1, 2, 3, 4]))
        assert m.alpha == 0.0
        assert m.gamma == 8.0
        assert m.D is None

    def test_linear_growth_chain(self):
        # eta = nu = 1 collapses b_n = nu sqrt(n (n - 1 + eta)) to b_n = n.
        m = AlgebraModel.sl2r(1.0)
        np.testing.assert_allclose(m.b(np.arange(1, 8)), np.arange(1.0, 8.0))
        assert m.alpha == 4.0
        assert m.gamma == 2.0

    def test_su2_rejects_out_of_range_site(self):
        m = AlgebraModel.su2(1.0)
        with pytest.raises(ValidationError):
            m.b(3)
        with pytest.raises(ValidationError):
            m.b(0)

    def test_validation(self):
        with pytest.raises(ValidationError):
            AlgebraModel("su3", 1.0)
        with pytest.raises(ValidationError):
            AlgebraModel.su2(0.7)  # not a half-integer
        with pytest.raises(ValidationError):
            AlgebraModel.su2(1.0, nu=0.0)
        with pytest.raises(ValidationError):
            AlgebraModel.sl2r(-1.0)
        with pytest.raises(ValidationError):
            AlgebraModel("su2", 1.0)  # j missing

    def test_half_integer_snapping(self):
        m = AlgebraModel.su2(2.5 + 1e-9)
        assert m.j == 2.5


class TestFromRates:
    def test_positive_alpha(self):
        m = AlgebraModel.from_rates(4.0, 202.0)
        assert m.kind == "sl2r"
        assert m.nu == pytest.approx(1.0)
        assert m.eta == pytest.approx(101.0)
        assert m.alpha == pytest.approx(4.0)
        assert m.gamma == pytest.approx(202.0)

    def test_zero_alpha(self):
        m = AlgebraModel.from_rates(0.0, 200.0)
        assert m.kind == "hw"
        assert m.nu == pytest.approx(10.0)

    def test_negative_alpha(self):
        m = AlgebraModel.from_rates(-4.0, 198.0)
        assert m.kind == "su2"
        assert m.j == pytest.approx(49.5)
        assert m.D == 100

    def test_negative_alpha_with_consistent_d(self):
        assert AlgebraModel.from_rates(-4.0, 198.0, D=100).D == 100

    def test_negative_alpha_with_wrong_d(self):
        with pytest.raises(ValidationError):
            AlgebraModel.from_rates(-4.0, 198.0, D=99)

    def test_finite_d_needs_negative_alpha(self):
        with pytest.raises(ValidationError):
            AlgebraModel.from_rates(4.0, 202.0, D=100)

    def test_non_half_integer_spin_rejected(self):
        with pytest.raises(ValidationError):
            AlgebraModel.from_rates(-4.0, 199.0)

    def test_round_trips_through_rates(self):
        for m in (AlgebraModel.su2(7.0, 0.8), AlgebraModel.hw(1.7),
                  AlgebraModel.sl2r(3.3, 1.2)):
            back = AlgebraModel.from_rates(m.alpha, m.gamma, m.D)
            assert back.kind == m.kind
            assert back.nu == pytest.approx(m.nu)


class TestParseModelSpec:
    def test_su2(self):
        m = parse_model_spec("su2:j=3.5,nu=2")
        assert (m.kind, m.j, m.nu) == ("su2", 3.5, 2.0)

    def test_nu_defaults_to_one(self):
        assert parse_model_spec("hw:").nu == 1.0
        assert parse_model_spec("syk:eta=2").nu == 1.0

    def test_syk_is_an_alias(self):
        m = parse_model_spec("syk:eta=1,nu=1")
        assert m.kind == "sl2r"
        assert m.label() == "syk:eta=1,nu=1"

    def test_saturating_spec(self):
        m = parse_model_spec("sat:alpha=-4,gamma=198,d=100")
        assert m.kind == "su2" and m.D == 100

    def test_rejects_malformed(self):
        for bad in ("su2", "su2:j", "su2:j=x", "su2:j=1,j=2", "orbit:j=1",
                    "su2:j=1,q=2", "hw:eta=1", "su2:nu=1"):
            with pytest.raises(ValidationError):
                parse_model_spec(bad)


class TestSaturatingLaw:
    def test_matches_family_chains(self):
        n = np.arange(1, 30)
        for m in (AlgebraModel.hw(1.3), AlgebraModel.sl2r(2.5, 0.7)):
            np.testing.assert_allclose(
                saturating_b(m.alpha, m.gamma, n), m.b(n), rtol=1e-13
            )
        m = AlgebraModel.su2(10.0, 1.1)
        n = np.arange(1, m.D)
        np.testing.assert_allclose(
            saturating_b(m.alpha, m.gamma, n), m.b(n), rtol=1e-13
        )

    def test_rejects_indices_past_the_finite_chain(self):
        with pytest.raises(ValidationError, match="n = 100"):
            saturating_b(-4.0, 198.0, np.arange(1, 101))

    def test_rejects_non_integer_index(self):
        with pytest.raises(ValidationError):
            saturating_b(0.0, 2.0, 1.5)


class TestClosureTest:
    def test_exact_families_are_closed(self):
        for m in (AlgebraModel.su2(12.0, 0.9), AlgebraModel.hw(1.4),
                  AlgebraModel.sl2r(5.5, 1.3)):
            M = (m.D - 1) if m.D else 40
            b = m.b(np.arange(1, M + 1))
            rep = closure_test(b, D=m.D)
            assert rep.closed
            assert not rep.trivial
            assert rep.alpha == pytest.approx(m.alpha, abs=1e-10 * max(1, abs(m.alpha)))
            assert rep.gamma == pytest.approx(m.gamma, rel=1e-12)

    def test_gamma_is_twice_b1_squared(self, rng):
        b = rng.uniform(0.5, 2.0, size=10)
        rep = closure_test(b)
        assert rep.gamma == 2.0 * b[0] ** 2

    def test_single_perturbed_coefficient_breaks_closure(self):
        m = AlgebraModel.sl2r(3.0, 1.0)
        b = m.b(np.arange(1, 25))
        b[6] *= 1.1
        rep = closure_test(b)
        assert not rep.closed
        assert rep.max_residual > 0.1

    def test_trivial_chain_flagged(self):
        rep = closure_test([1.5], D=2)
        assert rep.trivial
        assert rep.closed  # one f value is constant by definition

    def test_open_chain_needs_two_coefficients(self):
        with pytest.raises(ValidationError, match="too short"):
            closure_test([1.5])

    def test_finite_d_must_match_length(self):
        with pytest.raises(ValidationError):
            closure_test([1.0, 1.0], D=5)

    def test_rejects_nonpositive_entries(self):
        with pytest.raises(ValidationError):
            closure_test([1.0, 0.0, 1.0])

    def test_scale_relative_tolerance(self):
        # A chain 100x larger has f values 1e4 larger; the same relative
        # wiggle must not flip the verdict.
        b = saturating_b(0.5, 3.0, np.arange(1, 20))
        assert closure_test(b * 100.0).closed

    def test_classification(self):
        assert classify_algebra(-2.0) == "su2"
        assert classify_algebra(0.0) == "hw"
        assert classify_algebra(1e-12) == "hw"
        assert classify_algebra(3.0) == "sl2r"


@settings(max_examples=40, deadline=None)
@given(
    alpha=st.floats(min_value=0.0, max_value=5.0),
    gamma=st.floats(min_value=0.1, max_value=10.0),
    count=st.integers(min_value=3, max_value=50),
)
def test_saturating_chains_always_close(alpha, gamma, count):
    b = saturating_b(alpha, gamma, np.arange(1, count + 1))
    rep = closure_test(b)
    assert rep.closed
    assert rep.alpha == pytest.approx(alpha, abs=1e-9 * max(1.0, gamma))


class TestSaturatedComplexity:
    def test_three_branches(self):
        t = np.linspace(0.0, 2.0, 9)
        np.testing.assert_allclose(
            saturated_complexity(4.0, 202.0, t), 101.0 * np.sinh(t) ** 2, rtol=1e-13
        )
        np.testing.assert_allclose(
            saturated_complexity(0.0, 200.0, t), 100.0 * t * t, rtol=1e-13
        )
        np.testing.assert_allclose(
            saturated_complexity(-4.0, 198.0, t, D=100), 99.0 * np.sin(t) ** 2,
            rtol=1e-12, atol=1e-12,
        )

    def test_finite_branch_requires_d(self):
        with pytest.raises(ValidationError):
            saturated_complexity(-4.0, 198.0, [0.0, 1.0])

    def test_inconsistent_rates_rejected(self):
        with pytest.raises(ValidationError):
            saturated_complexity(-4.0, 198.0, [0.0, 1.0], D=50)


class TestModelAmplitudes:
    def test_su2_quarter_period(self):
        traj = model_amplitudes(AlgebraModel.su2(1.0), np.array([math.pi / 4]))
        np.testing.assert_allclose(
            traj.phi[0], [0.5, math.sqrt(0.5), 0.5], atol=1e-14
        )
        assert not traj.truncated

    def test_matches_chain_evolution_su2(self):
        m = AlgebraModel.su2(3.5, 1.2)
        t = np.linspace(0.0, 4.0, 33)
        closed = model_amplitudes(m, t)
        evolved = evolve_amplitudes(m.b(np.arange(1, m.D)), t)
        np.testing.assert_allclose(closed.phi, evolved.phi, atol=1e-12)

    def test_matches_chain_evolution_hw(self):
        # Pad the evolved chain: a hard truncation distorts amplitudes near
        # its edge, and the closed form is the infinite-chain answer.
        m = AlgebraModel.hw(0.9)
        t = np.linspace(0.0, 3.0, 25)
        closed = model_amplitudes(m, t)
        evolved = evolve_amplitudes(lambda n: m.b(np.asarray(n)), t,
                                    truncation=closed.sites + 200)
        np.testing.assert_allclose(
            closed.phi, evolved.phi[:, :closed.sites], atol=1e-12
        )

    def test_matches_chain_evolution_sl2r(self):
        m = AlgebraModel.sl2r(2.5, 0.8)
        t = np.linspace(0.0, 2.5, 21)
        closed = model_amplitudes(m, t)
        evolved = evolve_amplitudes(lambda n: m.b(np.asarray(n)), t,
                                    truncation=closed.sites + 200)
        np.testing.assert_allclose(
            closed.phi, evolved.phi[:, :closed.sites], atol=1e-12
        )

    def test_unit_norm_on_huge_chains(self):
        # Log-space evaluation must survive thousands of sites.
        m = AlgebraModel.sl2r(1.0)
        traj = model_amplitudes(m, np.array([0.0, 2.0, 4.0]))
        assert traj.sites >= 1000
        np.testing.assert_allclose(np.sum(traj.phi**2, axis=1), 1.0, atol=1e-10)

    def test_explicit_truncation_too_small(self):
        with pytest.raises(NumericalError, match="truncation"):
            model_amplitudes(AlgebraModel.hw(1.0), np.array([0.0, 5.0]),
                             truncation=8)

    def test_time_grid_validation(self):
        with pytest.raises(ValidationError):
            model_amplitudes(AlgebraModel.hw(1.0), [1.0, 0.5])


class TestModelObservables:
    def test_su2_closed_forms(self):
        m = AlgebraModel.su2(2.0, 1.5)
        t = np.linspace(0.0, 2.0, 17)
        prof = model_observables(m, t)
        x = 1.5 * t
        np.testing.assert_allclose(prof.complexity, 4.0 * np.sin(x) ** 2, rtol=1e-13)
        np.testing.assert_allclose(
            prof.dispersion, np.sqrt(1.0) * np.abs(np.sin(2 * x)), rtol=1e-12,
            atol=1e-15,
        )
        assert prof.b1 == pytest.approx(1.5 * 2.0)

    def test_ratio_is_one_wherever_defined(self):
        t = np.linspace(0.0, 3.0, 61)
        for m in (AlgebraModel.su2(4.5, 0.7), AlgebraModel.hw(1.1),
                  AlgebraModel.sl2r(3.0, 0.6)):
            prof = model_observables(m, t)
            defined = ~np.isnan(prof.ratio)
            np.testing.assert_allclose(prof.ratio[defined], 1.0, atol=1e-12)

    def test_agrees_with_evolved_profile(self):
        m = AlgebraModel.sl2r(4.0, 0.5)
        t = np.linspace(0.0, 3.0, 31)
        closed = model_observables(m, t)
        evolved = complexity_profile(
            evolve_amplitudes(lambda n: m.b(np.asarray(n)), t)
        )
        np.testing.assert_allclose(evolved.complexity, closed.complexity, atol=1e-9)
        np.testing.assert_allclose(evolved.rate, closed.rate, atol=1e-8)
        np.testing.assert_allclose(evolved.dispersion, closed.dispersion, atol=1e-9)
