import numpy as np
import pytest

from randresp.basis import from_callable, h_norm
from randresp.distributions import (DiracTranslate, PMSmoothFamily,
                                    UniformToDirac)
from randresp.errors import ConfigurationError
from randresp.inducing import (InducedSystem, compose_word,
                               compose_word_with_sens,
                               deterministic_full_response,
                               deterministic_induced_response,
                               first_return_time, xn_sequence)


@pytest.fixture(scope="module")
def pm_system():
    return InducedSystem(PMSmoothFamily(0.25, 0.45), n_max=40)


@pytest.fixture(scope="module")
def dirac_system():
    return InducedSystem(DiracTranslate(0.3), n_max=40)


class TestWords:
    def test_preimage_chain_monotone(self):
        us = 0.2 + 0.3 * np.random.default_rng(0).random(12)
        x, xp = xn_sequence(us, 10)
        assert np.all(np.diff(x) < 0) and np.all(np.diff(xp) < 0)
        assert xp[0] == pytest.approx(0.75)
        with pytest.raises(ConfigurationError):
            xn_sequence(us[:3], 10)

    def test_return_time_matches_cylinders(self):
        us = 0.2 + 0.3 * np.random.default_rng(1).random(12)
        _, xp = xn_sequence(us, 10)
        for k in range(1, 9):
            lo, hi = xp[k - 1], (1.0 if k == 1 else xp[k - 2])
            assert first_return_time(us, 0.5 * (lo + hi)) == k
        with pytest.raises(ConfigurationError):
            first_return_time(us, 0.3)

    def test_word_derivatives_vs_fd(self):
        us = np.array([0.3, 0.42, 0.27])
        x = np.linspace(0.55, 0.99, 7)
        h = 1e-6
        G, Gp, Gpp = compose_word(us, x)
        num1 = (compose_word(us, x + h)[0] - compose_word(us, x - h)[0]) / (2 * h)
        num2 = (compose_word(us, x + h)[1] - compose_word(us, x - h)[1]) / (2 * h)
        assert np.max(np.abs(num1 - Gp)) < 1e-8
        assert np.max(np.abs(num2 - Gpp)) < 1e-7

    def test_slot_sensitivities_vs_fd(self):
        us = np.array([0.3, 0.42, 0.27])
        x = np.linspace(0.55, 0.99, 7)
        G, Gp, dG, dGp = compose_word_with_sens(us, x)
        h = 1e-6
        for j in range(3):
            up, um = us.copy(), us.copy()
            up[j] += h
            um[j] -= h
            assert np.max(np.abs((compose_word(up, x)[0]
                                  - compose_word(um, x)[0]) / (2 * h)
                                 - dG[j])) < 1e-8
            assert np.max(np.abs((compose_word(up, x)[1]
                                  - compose_word(um, x)[1]) / (2 * h)
                                 - dGp[j])) < 1e-7

    def test_word_contraction(self):
        # every word branch contracts by at least the right-branch factor 1/2
        us = 0.26 + 0.18 * np.random.default_rng(3).random(6)
        x = np.linspace(0.51, 1.0, 50)
        for r in range(1, 7):
            _, gp, _ = compose_word(us[:r], x)
            assert np.max(np.abs(gp)) <= 0.5 + 1e-12


class TestInducedOperator:
    def test_recursion_matches_word_enumeration(self, dirac_system):
        ind = dirac_system
        xd = ind.delta_basis.nodes
        phi = lambda y: np.cos(3.0 * y) + y ** 2
        direct = phi((xd + 1) / 2) * 0.5
        for r in range(2, ind.n_max + 1):
            g, gp, _ = compose_word(np.full(r - 1, 0.3), xd)
            direct += phi(g) * gp
        op = ind.induced_operator(0.0)
        f = from_callable(ind.delta_basis, phi)
        assert np.max(np.abs(op.apply(f.values) - direct)) < 1e-12

    def test_cylinder_partition(self, pm_system):
        # enumerated expected cylinder lengths + tail account for |Delta|=1/2
        ind = pm_system
        a_out, a_delta, p0_out, p0_delta = ind._blocks(0.0)
        wd = ind.delta_basis.quad_weights
        total = float(wd @ (p0_delta @ np.ones(ind.delta_basis.size)))
        vec = p0_out @ np.ones(ind.delta_basis.size)
        for _ in range(ind.n_max - 1):
            total += float(wd @ (a_delta @ vec))
            vec = a_out @ vec
        assert total + ind.tail_mass(0.0) == pytest.approx(0.5, abs=1e-9)

    def test_stationary_density(self, pm_system):
        op, h = pm_system.stationary(0.0)
        assert h.integrate() == pytest.approx(1.0, abs=1e-12)
        assert abs(h.meta["eigenvalue_1"] - 1.0) < 10 * op.tail_bound
        g = np.linspace(0.5, 1.0, 200)
        assert np.min(h(g)) > 0.0

    def test_duality_within_tail(self, pm_system):
        op = pm_system.induced_operator(0.0)
        w = pm_system.delta_basis.quad_weights
        x = pm_system.delta_basis.nodes
        rng = np.random.default_rng(9)
        for _ in range(10):
            v = np.polynomial.polynomial.polyval(x, rng.standard_normal(7))
            v /= np.max(np.abs(v))
            assert abs(w @ op.apply(v) - w @ v) <= op.tail_bound + 1e-9

    def test_envelope_dominates_expected_tail(self, pm_system):
        assert pm_system.envelope_tail(0.0) > pm_system.tail_mass(0.0)


class TestUnfolding:
    def test_unfolded_mass_and_positivity(self, pm_system):
        _, h = pm_system.stationary(0.0)
        F = pm_system.unfold(h, 0.0)
        assert F.integrate() > 1.0  # the acim is not normalized on (0,1]
        g = np.geomspace(pm_system.out_basis.floor, 0.5, 300)
        assert np.min(F(g)) > 0.0
        # density grows toward the neutral fixed point
        assert F(0.001) > F(0.4)

    def test_fixed_point_defect_scales_with_truncation(self, pm_system):
        _, h = pm_system.stationary(0.0)
        F = pm_system.unfold(h, 0.0)
        grid = np.linspace(0.1, 1.0, 100)
        defect = np.max(np.abs(pm_system.apply_full_operator(F, grid, 0.0)
                               - F(grid)))
        assert defect < 50 * pm_system.tail_mass(0.0)


class TestDerivativeSeries:
    def test_qhat_matches_fd_of_operator(self, pm_system):
        # d/d eps (L-hat_eps h) at fixed h, against central differences
        ind = pm_system
        _, h = ind.stationary(0.0)
        q_hat, _ = ind._derivative_series(h, 0.0)
        g = np.linspace(0.51, 1.0, 150)
        errs = []
        for d in (2e-3, 1e-3):
            fp = ind.induced_operator(d).apply_fn(h)
            fm = ind.induced_operator(-d).apply_fn(h)
            fd = (fp(g) - fm(g)) / (2 * d)
            errs.append(np.max(np.abs(fd - q_hat(g))))
        order = np.log(errs[0] / errs[1]) / np.log(2.0)
        assert order > 1.8

    def test_q_correction_matches_fd_of_unfolding(self, pm_system):
        ind = pm_system
        _, h = ind.stationary(0.0)
        q_out = ind.q_correction(h, 0.0)
        g = np.geomspace(1e-3, 0.5, 150)
        errs = []
        for d in (4e-3, 2e-3):
            fp = ind.unfold(h, d)
            fm = ind.unfold(h, -d)
            fd = (fp.out_fn(g) - fm.out_fn(g)) / (2 * d)
            errs.append(np.max(np.abs(fd - q_out(g))))
        order = np.log(errs[0] / errs[1]) / np.log(2.0)
        assert order > 1.8

    def test_response_projection_bookkeeping(self, pm_system):
        op, h0, q_hat, _, h_star = pm_system.response_hat(0.0)
        # the raw derivative has only truncation-scale mass, and the solved
        # response is exactly mean-zero
        assert abs(h_star.meta["raw_mean_q"]) < 50 * op.tail_bound
        assert h_star.integrate() == pytest.approx(0.0, abs=1e-12)
        # the bordered solve absorbs the remaining defect into the
        # eigendirection multiplier; the residual stays at truncation scale
        assert h_star.meta["residual"] < op.tail_bound


class TestDeterministicPath:
    def test_matches_nu_pipeline(self, dirac_system):
        _, _, _, _, h_nu = dirac_system.response_hat(0.0)
        h_det = deterministic_induced_response(dirac_system, 0.3)
        g = np.linspace(0.5, 1.0, 400)
        assert np.max(np.abs(h_nu(g) - h_det(g))) < 1e-10

    def test_full_response_half_factor(self):
        ind_u = InducedSystem(UniformToDirac(0.25), n_max=30)
        ind_d = InducedSystem(DiracTranslate(0.25), n_max=30)
        resp_u = ind_u.full_response(0.0)
        h_det = deterministic_full_response(ind_d, 0.25)
        g = np.linspace(0.55, 1.0, 100)
        ratio = resp_u.h_star(g) / h_det(g)
        assert np.max(np.abs(ratio - 0.5)) < 1e-6


class TestFullResponseFD:
    def test_h_norm_fd_agreement(self, pm_system):
        resp = pm_system.full_response(0.0)
        eps = 1e-2
        fp = pm_system.unfolded_density(eps)
        fm = pm_system.unfolded_density(-eps)
        err = h_norm(lambda x: (fp(x) - fm(x)) / (2 * eps) - resp.h_star(x),
                     0.6, lo=pm_system.out_basis.floor)
        assert err < 5e-4

    def test_parameter_support_guard(self):
        with pytest.raises(ConfigurationError):
            InducedSystem(DiracTranslate(1.5, support=(0.0, 2.0)))
