import numpy as np
import pytest

from qestim.errors import InvalidInput, InvalidModel
from qestim.estimability import check_theorem1
from qestim.learnability import (DEFAULT_DEPTHS, ParameterizedChannel,
                                 build_cycle_stack, check_corollary1,
                                 choi_state_model, closed_form_rz_ad,
                                 cnot_commutant, cnot_conjugation_map,
                                 cnot_cycle_model, cnot_ptm, cycle_ptms,
                                 depolarizing_family, learnability_report,
                                 pauli_eigenvalue_family, rz_cycle_model,
                                 rz_noise_family, rz_noise_ptm, shared_rate_family)
from qestim.pauli import PauliChannel, choi_of, pauli_indices, ptm_of_choi
from qestim.states import evaluate

RZ_POINT = dict(phi=0.3, lam1=0.95, lam2=0.92, alpha=0.05, theta=0.05,
                spam_prep=(0.97, 0.94, 0.91), spam_meas=(0.96, 0.93, 0.92))


def random_cp_eigenvalues(n, rng, strength=0.12):
    rates = rng.dirichlet(np.ones(4**n - 1)) * strength
    return PauliChannel.from_rates(n, rates).eigenvalues[1:]


def random_rz_point(rng):
    while True:
        point = dict(phi=rng.uniform(0.1, 1.0), lam1=rng.uniform(0.88, 0.97),
                     lam2=rng.uniform(0.85, 0.95), alpha=rng.uniform(0.01, 0.05),
                     theta=rng.uniform(0.01, 0.1),
                     spam_prep=tuple(rng.uniform(0.9, 0.99, 3)),
                     spam_meas=tuple(rng.uniform(0.9, 0.99, 3)))
        try:
            return rz_cycle_model(**point), point
        except InvalidModel:
            continue


class TestCorollary1:
    def test_depolarizing_learnable(self):
        ch = depolarizing_family()
        verdict = check_corollary1(ch, [0.1], "p")
        assert verdict.estimable

    def test_shared_rate_unlearnable(self):
        ch = shared_rate_family()
        for name in ("p", "q"):
            verdict = check_corollary1(ch, [0.05, 0.08], name)
            assert not verdict.estimable
            assert verdict.dependency is not None

    def test_pauli_eigenvalues_learnable(self):
        ch = pauli_eigenvalue_family(1)
        rng = np.random.default_rng(0)
        theta = random_cp_eigenvalues(1, rng)
        for name in ch.param_names:
            assert check_corollary1(ch, theta, name).estimable

    def test_matches_choi_state_theorem1(self):
        # channel criterion == state criterion on the Choi state
        for ch, theta in ((shared_rate_family(), [0.05, 0.08]),
                          (rz_noise_family(), [0.95, 0.92, 0.05, 0.05]),
                          (depolarizing_family(), [0.1])):
            em = evaluate(choi_state_model(ch), theta)
            for k, name in enumerate(ch.param_names):
                a = check_corollary1(ch, theta, name).estimable
                b = check_theorem1(em, k).estimable
                assert a == b

    def test_fd_fallback(self):
        ch = rz_noise_family()
        fd = ParameterizedChannel(1, ch.param_names, ch.eval_fn, None)
        theta = [0.95, 0.92, 0.05, 0.05]
        for name in ch.param_names:
            assert (check_corollary1(fd, theta, name).estimable
                    == check_corollary1(ch, theta, name).estimable)


class TestRzCycleModel:
    def test_noise_identity_limit(self):
        assert np.abs(rz_noise_ptm(1.0, 1.0, 0.0, 0.0) - np.eye(4)).max() == 0.0

    def test_cp_guard(self):
        with pytest.raises(InvalidModel):
            rz_cycle_model(lam1=0.999, lam2=0.7, alpha=0.2, theta=0.0)

    def test_subnormalization_guard(self):
        with pytest.raises(InvalidModel):
            rz_cycle_model(lam2=0.95, alpha=0.1)

    def test_depth_zero_block(self):
        model = rz_cycle_model(**RZ_POINT, depths=[0])
        ptms, _ = cycle_ptms(model)
        l1s, l2s, l3s = RZ_POINT["spam_prep"]
        l1m, l2m, l3m = RZ_POINT["spam_meas"]
        expected = np.diag([1.0, l3m * l3s, l1m * l1s, l2m * l2s])
        assert np.abs(ptms[0] - expected).max() < 1e-12

    def test_closed_form_matches_composition(self):
        model = rz_cycle_model(**RZ_POINT)
        ptms, _ = cycle_ptms(model)
        for block, d in zip(ptms, model.depths):
            ad = closed_form_rz_ad(d, RZ_POINT["phi"], RZ_POINT["lam1"], RZ_POINT["lam2"],
                                   RZ_POINT["alpha"], RZ_POINT["theta"],
                                   RZ_POINT["spam_prep"], RZ_POINT["spam_meas"])
            assert np.abs(block - ad).max() < 1e-10

    def test_corner_entry_uses_z_sector_geometric_sum(self):
        # the damped-shift corner accumulates with lam2, not lam1
        model = rz_cycle_model(**RZ_POINT)
        ptms, _ = cycle_ptms(model)
        lam2, alpha = RZ_POINT["lam2"], RZ_POINT["alpha"]
        l3m = RZ_POINT["spam_meas"][2]
        d = 5
        expected = l3m * alpha * (1 - lam2**d) / (1 - lam2)
        assert abs(ptms[d][1, 0] - expected) < 1e-12
        wrong = l3m * alpha * (1 - RZ_POINT["lam1"]**d) / (1 - RZ_POINT["lam1"])
        assert abs(ptms[d][1, 0] - wrong) > 1e-3

    def test_derivatives_match_finite_differences(self):
        model = rz_cycle_model(**RZ_POINT)
        ptms, derivs = cycle_ptms(model)
        h = 1e-6
        for k in range(model.num_params):
            up = model.theta0.copy()
            dn = model.theta0.copy()
            up[k] += h
            dn[k] -= h
            pu, _ = cycle_ptms(model, up)
            pd, _ = cycle_ptms(model, dn)
            for j in range(len(model.depths)):
                fd = (pu[j] - pd[j]) / (2 * h)
                assert np.abs(fd - derivs[k][j]).max() < 1e-7

    def test_cycle_stack_blocks(self):
        model = rz_cycle_model(**RZ_POINT, depths=[0, 1, 2])
        stack = build_cycle_stack(model)
        ptms, derivs = cycle_ptms(model)
        for block, a in zip(stack.blocks, ptms):
            assert np.abs(block - choi_of(a) / 3.0).max() < 1e-12
            assert abs(np.trace(block).real - 1.0 / 3.0) < 1e-12
        recovered = ptm_of_choi(stack.derivative_blocks[0][1] * 3.0)
        assert np.abs(recovered - derivs[0][1]).max() < 1e-10


class TestRzLearnability:
    def test_verdicts_at_default_point(self):
        report = learnability_report(rz_cycle_model(**RZ_POINT))
        assert report.learnable == ("lam1", "lam2", "theta_prime")
        assert set(report.unlearnable) == {"alpha", "lam1S", "lam2S", "lam3S",
                                           "lam1M", "lam2M", "lam3M"}

    def test_eq13_relation(self):
        report = learnability_report(rz_cycle_model(**RZ_POINT))
        rel = report.relation_for("alpha")
        expected = {"alpha": 1.0, "lam3M": -1.0, "lam3S": 1.0}
        assert set(rel.coefficients) == set(expected)
        for name, c in expected.items():
            assert abs(rel.coefficients[name] - c) < 1e-8
        assert report.null_space_contains(expected, 1e-8)

    def test_spam_gauge_relation(self):
        # unnoticed by the closed-form analysis: the XY-sector SPAM eigenvalues
        # enter only через the products lamM_i * lamS_j, leaving the direction
        # lam1M + lam2M - lam1S - lam2S unlearnable
        report = learnability_report(rz_cycle_model(**RZ_POINT))
        gauge = {"lam1M": 1.0, "lam2M": 1.0, "lam1S": -1.0, "lam2S": -1.0}
        assert report.null_space_contains(gauge, 1e-8)
        assert report.null_basis.shape[1] == 2

    def test_verdicts_stable_across_fiducial_points(self):
        rng = np.random.default_rng(77)
        for _ in range(5):
            model, _ = random_rz_point(rng)
            report = learnability_report(model)
            assert report.learnable == ("lam1", "lam2", "theta_prime")
            assert report.null_space_contains({"alpha": 1.0, "lam3M": -1.0, "lam3S": 1.0},
                                              1e-8)

    def test_depth_monotonicity(self):
        # enlarging the depth set never flips learnable -> unlearnable
        small = learnability_report(rz_cycle_model(**RZ_POINT, depths=range(5)))
        large = learnability_report(rz_cycle_model(**RZ_POINT, depths=range(9)))
        for name in small.param_names:
            if small.verdicts[name][0]:
                assert large.verdicts[name][0]

    def test_split_phase_regression(self):
        report = learnability_report(rz_cycle_model(**RZ_POINT, split_phase=True))
        assert not report.verdicts["phi"][0]
        assert not report.verdicts["theta"][0]
        assert report.verdicts["lam1"][0] and report.verdicts["lam2"][0]
        # only the sum phi + theta is learnable: the raw direction
        # (1, 1) scaled by the parameter values must be orthogonal to the null space
        phi, theta = RZ_POINT["phi"], RZ_POINT["theta"]
        k_phi = report.param_names.index("phi")
        k_th = report.param_names.index("theta")
        scaled = np.zeros(len(report.param_names))
        scaled[k_phi] = phi
        scaled[k_th] = theta
        component = report.null_basis.T @ (scaled / np.linalg.norm(scaled))
        assert np.linalg.norm(component) < 1e-8
        # whereas phi - theta is not learnable
        scaled[k_th] = -theta
        component = report.null_basis.T @ (scaled / np.linalg.norm(scaled))
        assert np.linalg.norm(component) > 1e-3


class TestCnot:
    def test_conjugation_table(self):
        table = cnot_conjugation_map()
        assert table["IX"] == ("IX", 1)
        assert table["ZI"] == ("ZI", 1)
        assert table["XI"] == ("XX", 1)
        assert table["IZ"] == ("ZZ", 1)
        assert table["XZ"] == ("YY", -1)

    def test_commutant_partition(self):
        fixed, pairs = cnot_commutant()
        assert sorted(a.label for a in fixed) == ["IX", "ZI", "ZX"]
        assert len(fixed) + 2 * len(pairs) == 15

    def test_gate_ptm_is_signed_permutation(self):
        a = cnot_ptm()
        assert np.abs(a @ a - np.eye(16)).max() < 1e-12
        assert np.all(np.isin(np.round(a, 12), [-1.0, 0.0, 1.0]))

    def test_verdicts_match_commutant(self):
        rng = np.random.default_rng(5)
        model = cnot_cycle_model(random_cp_eigenvalues(2, rng),
                                 random_cp_eigenvalues(2, rng, 0.05),
                                 random_cp_eigenvalues(2, rng, 0.06))
        report = learnability_report(model)
        fixed, _ = cnot_commutant()
        commutant = {a.label for a in fixed}
        for a in pauli_indices(2)[1:]:
            learnable = report.verdicts[f"lam_{a.label}"][0]
            assert learnable == (a.label in commutant)

    def test_four_term_identities(self):
        rng = np.random.default_rng(6)
        model = cnot_cycle_model(random_cp_eigenvalues(2, rng),
                                 random_cp_eigenvalues(2, rng, 0.05),
                                 random_cp_eigenvalues(2, rng, 0.06))
        report = learnability_report(model)
        _, pairs = cnot_commutant()
        for a, b in pairs:
            for i, j in ((a.label, b.label), (b.label, a.label)):
                relation = {f"lam_{i}": 1.0, f"lam_{j}": -1.0,
                            f"lamS_{i}": 1.0, f"lamM_{i}": -1.0}
                assert report.null_space_contains(relation, 1e-8)

    def test_spam_pair_gauge_for_commuting_labels(self):
        rng = np.random.default_rng(7)
        model = cnot_cycle_model(random_cp_eigenvalues(2, rng))
        report = learnability_report(model)
        fixed, _ = cnot_commutant()
        for a in fixed:
            relation = {f"lamS_{a.label}": 1.0, f"lamM_{a.label}": -1.0}
            assert report.null_space_contains(relation, 1e-8)

    def test_non_cp_rejected(self):
        with pytest.raises(InvalidModel):
            cnot_cycle_model(np.linspace(0.85, 0.99, 15))

    def test_all_identity_noise_is_identity(self):
        model = cnot_cycle_model(np.ones(15), np.ones(15), np.ones(15), depths=[1])
        ptms, _ = cycle_ptms(model)
        assert np.abs(ptms[0] - cnot_ptm()).max() < 1e-12


class TestReportMachinery:
    def test_empty_depths_rejected(self):
        model = rz_cycle_model(**RZ_POINT, depths=[0])
        object.__setattr__(model, "depths", ())
        with pytest.raises(InvalidInput):
            build_cycle_stack(model)

    def test_zero_parameter_reported_raw(self):
        model = rz_cycle_model(**{**RZ_POINT, "alpha": 0.0, "theta": 0.0, "phi": 0.0})
        report = learnability_report(model)
        assert "alpha" in report.raw_scaled and "theta_prime" in report.raw_scaled
        # alpha = 0 is the degenerate fiducial where the masking product
        # lam3M * alpha vanishes: the first-order response in alpha becomes
        # visible and the verdict legitimately flips to learnable, while the
        # SPAM eigenvalues stay pairwise gauge-locked
        assert report.verdicts["alpha"][0]
        for name in ("lam1S", "lam2S", "lam3S", "lam1M", "lam2M", "lam3M"):
            assert not report.verdicts[name][0]

    def test_rendering_mentions_pivot(self):
        report = learnability_report(rz_cycle_model(**RZ_POINT))
        rel = report.relation_for("alpha")
        assert rel.rendering.startswith("alpha*d_alpha = ")
        assert "lam3M*d_lam3M" in rel.rendering and "lam3S*d_lam3S" in rel.rendering
