import dataclasses

import numpy as np
import pytest

from qestim.errors import InvalidInput, NotEstimable
from qestim.estimability import (block_diagonal_reparam, check_lemma1, check_theorem1,
                                 fgqcrb_bound, generalized_qcrb, optimal_measurement,
                                 qfim, sld_operators)
from qestim.pauli import PauliIndex, pauli_matrix
from qestim.states import (ParameterizedState, evaluate, ghz_ancilla_probe,
                           ghz_code_projectors, ghz_logical_operators,
                           naive_phase_probe, twirled_qubit_probe)

I2 = np.eye(2)
X = pauli_matrix(PauliIndex.from_label("X"))
Y = pauli_matrix(PauliIndex.from_label("Y"))
Z = pauli_matrix(PauliIndex.from_label("Z"))


def linear_model(rho0, directions, names=None):
    """Affine family rho0 + sum_i theta_i H_i, evaluated at theta = 0."""
    names = names or tuple(f"t{i}" for i in range(len(directions)))
    return ParameterizedState(
        dim=rho0.shape[0], param_names=tuple(names),
        eval_fn=lambda theta: rho0 + sum(t * h for t, h in zip(theta, directions)),
        deriv_fns=tuple((lambda h: (lambda theta: h))(h) for h in directions),
    )


def random_traceless_hermitian(dim, rng, scale=0.05):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    h = 0.5 * (a + a.conj().T)
    return scale * (h - np.trace(h).real * np.eye(dim) / dim)


def random_full_rank_state(dim, rng):
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = g @ g.conj().T + 0.2 * np.eye(dim)
    return rho / np.trace(rho).real


def random_linear_model(rng, force_dependency=None):
    dim = int(rng.integers(2, 9))
    m = int(rng.integers(1, 7))
    rho0 = random_full_rank_state(dim, rng)
    dirs = [random_traceless_hermitian(dim, rng) for _ in range(m)]
    dependent = force_dependency if force_dependency is not None else (rng.random() < 0.5)
    if dependent and m >= 2:
        coeff = rng.normal(size=m - 1)
        dirs[0] = sum(c * h for c, h in zip(coeff, dirs[1:]))
    return linear_model(rho0, dirs), dependent and m >= 2


class TestSldOperators:
    def test_diagonal_case(self):
        model = linear_model(np.diag([0.3, 0.7]).astype(complex),
                             [np.diag([1.0, -1.0]).astype(complex)])
        em = evaluate(model, [0.0])
        l = sld_operators(em)[0]
        assert np.abs(l - np.diag([1 / 0.3, -1 / 0.7])).max() < 1e-12

    def test_pure_state_twice_derivative(self):
        def eval_fn(theta):
            phi = theta[0]
            return 0.5 * (I2 + np.cos(phi) * X + np.sin(phi) * Y)
        model = ParameterizedState(dim=2, param_names=("phi",), eval_fn=eval_fn)
        em = evaluate(model, [0.4])
        l = sld_operators(em)[0]
        assert np.abs(l - 2.0 * em.derivs[0]).max() < 1e-6

    def test_anticommutator_identity(self):
        rng = np.random.default_rng(1)
        model, _ = random_linear_model(rng, force_dependency=False)
        em = evaluate(model, np.zeros(model.num_params))
        for l, d in zip(sld_operators(em), em.derivs):
            recon = 0.5 * (l @ em.rho + em.rho @ l)
            assert np.abs(recon - d).max() < 1e-8

    def test_ghz_phase_sld_closed_form(self):
        n = 2
        rng = np.random.default_rng(2)
        p = rng.dirichlet(np.ones(4))
        lam = rng.uniform(0.4, 0.9, 4)
        phi = 0.31
        model = ghz_ancilla_probe(n)
        em = evaluate(model, np.concatenate([[phi], p, lam]))
        l_phi = sld_operators(em)[0]
        proj = ghz_code_projectors(n)
        xl, yl = ghz_logical_operators(n)
        quad = -np.sin(n * phi) * xl + np.cos(n * phi) * yl
        order = [tuple(int(c) for c in name[2:]) for name in model.param_names[1:5]]
        expected = n * sum(lam[k] * proj[x] @ quad for k, x in enumerate(order))
        assert np.abs(l_phi - expected).max() < 1e-8


class TestQfim:
    def test_pure_qubit_phase(self):
        def eval_fn(theta):
            phi = theta[0]
            return 0.5 * (I2 + np.cos(phi) * X + np.sin(phi) * Y)
        model = ParameterizedState(dim=2, param_names=("phi",), eval_fn=eval_fn)
        em = evaluate(model, [0.8])
        q = qfim(em)
        assert abs(q.matrix[0, 0] - 1.0) < 1e-8

    def test_ghz_closed_form_n1(self):
        rng = np.random.default_rng(3)
        p = rng.dirichlet(np.ones(2))
        lam = rng.uniform(0.3, 0.9, 2)
        em = evaluate(ghz_ancilla_probe(1), np.concatenate([[0.6], p, lam]))
        q = qfim(em)
        expected = np.diag(np.concatenate([[np.sum(p * lam**2)], 1 / p, p / (1 - lam**2)]))
        assert np.abs(q.matrix - expected).max() < 1e-9 * max(1, expected.max())

    def test_twirled_closed_form(self):
        # off-diagonal of the (lam1, alpha) block is +alpha*lam1/(1-lam1^2-alpha^2):
        # the eigenbasis computation fixes the sign
        lam1, alpha = 0.9, 0.1
        em = evaluate(twirled_qubit_probe(), [0.25, lam1, alpha])
        q = qfim(em)
        den = 1 - lam1**2 - alpha**2
        expected = np.array([
            [lam1**2, 0.0, 0.0],
            [0.0, (1 - alpha**2) / den, alpha * lam1 / den],
            [0.0, alpha * lam1 / den, (1 - lam1**2) / den],
        ])
        assert np.abs(q.matrix - expected).max() < 1e-8 * expected.max()

    def test_matches_sld_anticommutator_form(self):
        rng = np.random.default_rng(4)
        model, _ = random_linear_model(rng, force_dependency=False)
        em = evaluate(model, np.zeros(model.num_params))
        q = qfim(em)
        slds = sld_operators(em)
        m = len(slds)
        ref = np.empty((m, m))
        for i in range(m):
            for j in range(m):
                anti = slds[i] @ slds[j] + slds[j] @ slds[i]
                ref[i, j] = 0.5 * np.trace(em.rho @ anti).real
        assert np.abs(q.matrix - ref).max() < 1e-8

    def test_psd_and_pinv_attached(self):
        rng = np.random.default_rng(5)
        model, _ = random_linear_model(rng)
        em = evaluate(model, np.zeros(model.num_params))
        q = qfim(em)
        assert q.eigenvalues.min() > -1e-9
        a, pinv = q.matrix, q.pinv
        assert np.abs(a @ pinv @ a - a).max() < 1e-8
        assert np.abs(pinv @ a @ pinv - pinv).max() < 1e-8


class TestLemma1:
    def test_diagonal_support(self):
        em = evaluate(linear_model(random_full_rank_state(2, np.random.default_rng(6)),
                                   [0.05 * Z, np.zeros((2, 2))]), [0.0, 0.0])
        q = qfim(em)
        v1 = check_lemma1(q, [1.0, 0.0])
        v2 = check_lemma1(q, [0.0, 1.0])
        assert v1.estimable and np.isfinite(v1.bound)
        assert not v2.estimable and np.isinf(v2.bound)

    def test_zero_w_rejected(self):
        em = evaluate(linear_model(random_full_rank_state(2, np.random.default_rng(7)),
                                   [0.05 * Z]), [0.0])
        with pytest.raises(InvalidInput):
            check_lemma1(qfim(em), [0.0])

    def test_naive_phase_not_estimable(self):
        em = evaluate(naive_phase_probe(1), [0.5, 0.9, 0.85, 0.8])
        q = qfim(em)
        w = np.zeros(4)
        w[0] = 1.0
        verdict = check_lemma1(q, w)
        assert not verdict.estimable
        assert check_theorem1(em, "phi").estimable == verdict.estimable

    def test_matrix_examples(self):
        from qestim.linalg import pseudo_inverse
        j = np.diag([1.0, 0.0])
        pinv, rank = pseudo_inverse(j)
        from qestim.estimability import QfimResult
        q = QfimResult(j, np.array([0.0, 1.0]), np.eye(2)[:, ::-1], rank, pinv, 1e-15)
        assert check_lemma1(q, [1.0, 0.0]).bound == 1.0
        assert np.isinf(check_lemma1(q, [0.0, 1.0]).bound)


class TestTheorem1:
    def test_single_parameter(self):
        em = evaluate(linear_model(random_full_rank_state(3, np.random.default_rng(8)),
                                   [random_traceless_hermitian(3, np.random.default_rng(9))]),
                      [0.0])
        assert check_theorem1(em, 0).estimable

    @pytest.mark.parametrize("n", [1, 2])
    def test_naive_span_coefficients(self, n):
        # recovered coefficients match (u_a'/u_a) lam_a on the populated sectors
        rng = np.random.default_rng(10 + n)
        model = naive_phase_probe(n)
        lam = rng.uniform(0.55, 0.95, 4**n - 1)
        phi = 0.47
        em = evaluate(model, np.concatenate([[phi], lam]))
        verdict = check_theorem1(em, "phi")
        assert not verdict.estimable
        coeffs = verdict.dependency.coefficients
        from qestim.pauli import pauli_coefficients
        from qestim.states import phase_unitary, plus_state
        u = phase_unitary(n, phi)
        c = pauli_coefficients(u @ plus_state(n) @ u.conj().T, n)[1:]
        h = 1e-6
        cp = pauli_coefficients(phase_unitary(n, phi + h) @ plus_state(n)
                                @ phase_unitary(n, phi + h).conj().T, n)[1:]
        cm = pauli_coefficients(phase_unitary(n, phi - h) @ plus_state(n)
                                @ phase_unitary(n, phi - h).conj().T, n)[1:]
        du = (cp - cm) / (2 * h)
        for k in range(4**n - 1):
            if abs(c[k]) > 1e-9:
                expected = du[k] / c[k] * lam[k]
                assert abs(coeffs[k] - expected) < 1e-6 * max(1.0, abs(expected))
            else:
                assert abs(coeffs[k]) < 1e-9

    def test_ghz_phase_estimable(self):
        rng = np.random.default_rng(12)
        p = rng.dirichlet(np.ones(4))
        lam = rng.uniform(0.4, 0.9, 4)
        em = evaluate(ghz_ancilla_probe(2), np.concatenate([[0.4], p, lam]))
        verdict = check_theorem1(em, "phi")
        assert verdict.estimable
        assert abs(verdict.bound - 1.0 / (4 * np.sum(p * lam**2))) < 1e-8

    def test_equivalence_sweep(self):
        # Lemma 1 and Theorem 1 agree on 100 randomized models
        rng = np.random.default_rng(13)
        for _ in range(100):
            model, _ = random_linear_model(rng)
            em = evaluate(model, np.zeros(model.num_params))
            q = qfim(em)
            for k in range(model.num_params):
                w = np.zeros(model.num_params)
                w[k] = 1.0
                assert check_theorem1(em, k).estimable == check_lemma1(q, w).estimable


class TestGeneralizedQcrb:
    def test_scalar(self):
        from qestim.estimability import QfimResult
        from qestim.linalg import pseudo_inverse
        j = np.array([[4.0]])
        pinv, rank = pseudo_inverse(j)
        q = QfimResult(j, np.array([4.0]), np.eye(1), rank, pinv, 1e-15)
        assert abs(generalized_qcrb(q, [1.0]) - 0.25) < 1e-15

    def test_full_rank_matches_inverse(self):
        rng = np.random.default_rng(14)
        model, _ = random_linear_model(rng, force_dependency=False)
        em = evaluate(model, np.zeros(model.num_params))
        q = qfim(em)
        if q.rank < model.num_params:
            pytest.skip("randomly rank-deficient draw")
        w = rng.normal(size=model.num_params)
        direct = w @ np.linalg.inv(q.matrix) @ w
        assert abs(generalized_qcrb(q, w) - direct) < 1e-10 * max(1.0, abs(direct))

    def test_twirled_bound(self):
        em = evaluate(twirled_qubit_probe(), [0.3, 0.9, 0.1])
        q = qfim(em)
        assert abs(generalized_qcrb(q, [1.0, 0.0, 0.0]) - 1 / 0.81) < 1e-8

    def test_nuisance_monotonicity(self):
        # appending a nuisance parameter never decreases the bound for theta_1
        rng = np.random.default_rng(15)
        for _ in range(20):
            dim = int(rng.integers(2, 6))
            rho0 = random_full_rank_state(dim, rng)
            dirs = [random_traceless_hermitian(dim, rng) for _ in range(4)]
            previous = 0.0
            for m in range(1, 5):
                em = evaluate(linear_model(rho0, dirs[:m]), np.zeros(m))
                q = qfim(em)
                w = np.zeros(m)
                w[0] = 1.0
                verdict = check_lemma1(q, w)
                if not verdict.estimable:
                    break
                assert verdict.bound >= previous - 1e-10
                previous = verdict.bound


class TestFgqcrb:
    def test_identity_reduces_to_pinv(self):
        rng = np.random.default_rng(16)
        model, _ = random_linear_model(rng)
        em = evaluate(model, np.zeros(model.num_params))
        q = qfim(em)
        m = model.num_params
        assert np.abs(fgqcrb_bound(q, np.eye(m), np.zeros((m, m))) - q.pinv).max() < 1e-12

    def test_zero_jacobian_gives_bias(self):
        rng = np.random.default_rng(17)
        model, _ = random_linear_model(rng)
        em = evaluate(model, np.zeros(model.num_params))
        q = qfim(em)
        m = model.num_params
        b = np.eye(m) * 0.3
        assert np.abs(fgqcrb_bound(q, np.zeros((m, m)), b) - b).max() < 1e-12

    def test_dimension_mismatch(self):
        rng = np.random.default_rng(18)
        model, _ = random_linear_model(rng)
        em = evaluate(model, np.zeros(model.num_params))
        q = qfim(em)
        with pytest.raises(InvalidInput):
            fgqcrb_bound(q, np.eye(q.dim + 1), np.zeros((q.dim + 1, q.dim + 1)))


class TestBlockDiagonalReparam:
    def test_already_diagonal(self):
        from qestim.estimability import QfimResult
        from qestim.linalg import pseudo_inverse
        j = np.diag([2.0, 3.0])
        pinv, rank = pseudo_inverse(j)
        q = QfimResult(j, np.array([2.0, 3.0]), np.eye(2), rank, pinv, 1e-15)
        t, j_xi = block_diagonal_reparam(q, 0)
        assert np.abs(t - np.eye(2)).max() < 1e-12
        assert np.abs(j_xi - j).max() < 1e-12

    def test_two_by_two_hand_computed(self):
        from qestim.estimability import QfimResult
        from qestim.linalg import pseudo_inverse
        j = np.array([[2.0, 1.0], [1.0, 1.0]])
        pinv, rank = pseudo_inverse(j)
        w, v = np.linalg.eigh(j)
        q = QfimResult(j, w, v, rank, pinv, 1e-15)
        t, j_xi = block_diagonal_reparam(q, 0)
        assert abs(j_xi[0, 1]) < 1e-12 and abs(j_xi[1, 0]) < 1e-12
        # inv(J) = [[1, -1], [-1, 2]], so 1/[J_xi]_00 must equal 1
        assert abs(1.0 / j_xi[0, 0] - 1.0) < 1e-12

    def test_twirled_property_s2(self):
        em = evaluate(twirled_qubit_probe(), [0.6, 0.85, 0.2])
        q = qfim(em)
        for k in range(3):
            t, j_xi = block_diagonal_reparam(q, k)
            off = np.delete(j_xi[k], k)
            assert np.abs(off).max() < 1e-8
            assert abs(1.0 / j_xi[k, k] - q.pinv[k, k]) < 1e-8 * q.pinv[k, k]
            e = np.zeros(3)
            e[k] = 1.0
            assert np.abs(t @ e - e).max() < 1e-12

    def test_not_estimable_raises(self):
        em = evaluate(naive_phase_probe(1), [0.5, 0.9, 0.85, 0.8])
        q = qfim(em)
        with pytest.raises(NotEstimable):
            block_diagonal_reparam(q, 0)


def local_unbiasedness_errors(em, meas, k):
    # first condition: sum p v = theta_k; second (centered) condition:
    # sum (v - theta_k) d_i p = delta_ik, robust to unit-trace derivative
    # directions where sum_x d_i p(x) != 0
    probs = np.array([np.trace(p @ em.rho).real for p in meas.povm])
    mean_err = abs(probs @ meas.estimator_values - em.theta0[k])
    centered = meas.estimator_values - em.theta0[k]
    cross = []
    for i, d in enumerate(em.derivs):
        dp = np.array([np.trace(p @ d).real for p in meas.povm])
        target = 1.0 if i == k else 0.0
        cross.append(abs(centered @ dp - target))
    return mean_err, max(cross)


class TestOptimalMeasurement:
    def test_pure_qubit_y_basis(self):
        def eval_fn(theta):
            phi = theta[0]
            return 0.5 * (I2 + np.cos(phi) * X + np.sin(phi) * Y)
        model = ParameterizedState(dim=2, param_names=("phi",), eval_fn=eval_fn)
        em = evaluate(model, [0.0])
        meas = optimal_measurement(em, "phi")
        # POVM = eigenprojectors of Y, estimator values 0 -+ 1
        for p in meas.povm:
            assert np.abs(p @ Y - Y @ p).max() < 1e-8
        assert np.allclose(np.sort(meas.estimator_values), [-1.0, 1.0], atol=1e-6)
        mean_err, cross_err = local_unbiasedness_errors(em, meas, 0)
        assert mean_err < 1e-8 and cross_err < 1e-6

    def test_local_unbiasedness_ghz(self):
        rng = np.random.default_rng(19)
        p = rng.dirichlet(np.ones(4))
        lam = rng.uniform(0.4, 0.9, 4)
        em = evaluate(ghz_ancilla_probe(2), np.concatenate([[0.4], p, lam]))
        meas = optimal_measurement(em, "phi")
        total = sum(meas.povm)
        assert np.abs(total - np.eye(8)).max() < 1e-9
        mean_err, cross_err = local_unbiasedness_errors(em, meas, 0)
        assert mean_err < 1e-8 and cross_err < 1e-8

    def test_per_shot_variance_equals_bound(self):
        rng = np.random.default_rng(20)
        p = rng.dirichlet(np.ones(4))
        lam = rng.uniform(0.4, 0.9, 4)
        em = evaluate(ghz_ancilla_probe(2), np.concatenate([[0.4], p, lam]))
        meas = optimal_measurement(em, "phi")
        probs = np.array([np.trace(e @ em.rho).real for e in meas.povm])
        var = probs @ (meas.estimator_values - em.theta0[0]) ** 2
        assert abs(var - meas.bound) < 1e-8 * meas.bound

    def test_block_refinement_same_fisher_information(self):
        rng = np.random.default_rng(21)
        p = rng.dirichlet(np.ones(4))
        lam = rng.uniform(0.4, 0.9, 4)
        em = evaluate(ghz_ancilla_probe(2), np.concatenate([[0.4], p, lam]))
        blocks = list(ghz_code_projectors(2).values())
        raw = optimal_measurement(em, "phi")
        refined = optimal_measurement(em, "phi", refine_blocks=blocks)
        assert len(refined.povm) >= len(raw.povm)
        assert np.abs(sum(refined.povm) - np.eye(8)).max() < 1e-9

        def fisher(meas):
            probs = np.array([np.trace(e @ em.rho).real for e in meas.povm])
            dp = np.array([np.trace(e @ em.derivs[0]).real for e in meas.povm])
            keep = probs > 1e-12
            return np.sum(dp[keep] ** 2 / probs[keep])

        assert abs(fisher(raw) - fisher(refined)) < 1e-8 * fisher(raw)

    def test_zero_probability_outcomes_get_fiducial_value(self):
        # embed a pure qubit family in a qutrit: the unpopulated level is a
        # zero-probability outcome and must carry the fiducial value
        def eval_fn(theta):
            phi = theta[0]
            out = np.zeros((3, 3), dtype=complex)
            out[:2, :2] = 0.5 * (I2 + np.cos(phi) * X + np.sin(phi) * Y)
            return out
        model = ParameterizedState(dim=3, param_names=("phi",), eval_fn=eval_fn)
        em = evaluate(model, [0.2])
        meas = optimal_measurement(em, "phi")
        probs = np.array([np.trace(p @ em.rho).real for p in meas.povm])
        assert (probs < 1e-12).any()
        for pk, vk in zip(probs, meas.estimator_values):
            if pk < 1e-12:
                assert vk == pytest.approx(0.2)

    def test_not_estimable(self):
        em = evaluate(naive_phase_probe(1), [0.5, 0.9, 0.85, 0.8])
        with pytest.raises(NotEstimable):
            optimal_measurement(em, "phi")

    def test_naive_no_parameter_individually_estimable(self):
        # the phase-derivative relation makes every populated-sector parameter
        # dependent on the others; lam_Z has an identically zero derivative
        em = evaluate(naive_phase_probe(1), [0.5, 0.9, 0.85, 0.8])
        for name in em.param_names:
            assert not check_theorem1(em, name).estimable
            with pytest.raises(NotEstimable):
                optimal_measurement(em, name)

    def test_twirled_nuisance_parameters_estimable(self):
        em = evaluate(twirled_qubit_probe(), [0.5, 0.85, 0.15])
        for name in ("phi", "lam1", "alpha"):
            meas = optimal_measurement(em, name)
            mean_err, cross_err = local_unbiasedness_errors(em, meas, em.index_of(name))
            assert mean_err < 1e-8 and cross_err < 1e-7
