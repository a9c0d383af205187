import math

import numpy as np
import pytest

from quadinv.errors import (
    AssumptionViolated,
    InfeasiblePair,
    InvalidUserP,
    NumeratorOutOfRange,
    Unstable,
)
from quadinv.horizon import (
    BoundScalars,
    K_of,
    best_K,
    candidate_Ps,
    evaluate_candidates,
    find_k_strict,
    mu,
    nu,
    nu_sequence,
    objective_scores,
    s_value,
    stability_certificate,
    tail_bound,
)
from quadinv.matcore import generalized_lmax, lyapunov_solve, weighted_opnorm
from quadinv.model import (
    AffineSystem,
    InitialSet,
    QuadraticObjective,
    VerificationTask,
    box_to_vertices,
    homogenize,
)
from support import (
    counterexample_task,
    harmonic_task,
    random_linear_task,
    random_psd,
    random_stable_matrix,
    rotation_task,
)


def scalar_demo_task():
    """d=1 fixture with exactly representable bound quantities."""
    return VerificationTask(
        system=AffineSystem(A=[[0.5]], b=[0.0]),
        init=InitialSet.from_vertices([[0.25], [0.5]]),
        objective=QuadraticObjective(Q=[[1.0]], q=[0.0]),
    )


class TestStabilityCertificate:
    def test_scalar_matrix(self):
        cert = stability_certificate(0.5 * np.eye(2))
        np.testing.assert_allclose(cert.P, (4.0 / 3.0) * np.eye(2), atol=1e-12)
        assert cert.norm_A_P == pytest.approx(0.5, abs=1e-12)

    def test_identity_is_unstable(self):
        with pytest.raises(Unstable):
            stability_certificate(np.eye(2))

    def test_spectral_radius_above_one(self):
        with pytest.raises(Unstable):
            stability_certificate(1.5 * np.eye(3))

    def test_harmonic_certificate(self):
        cert = stability_certificate(harmonic_task(np.eye(2)).system.A)
        assert 0.0 < cert.norm_A_P < 1.0
        assert cert.residual_margin > 0.0
        assert cert.lmin_P > 0.0

    def test_norm_strictly_below_one_on_randoms(self):
        rng = np.random.default_rng(23)
        for _ in range(100):
            d = int(rng.integers(1, 5))
            cert = stability_certificate(random_stable_matrix(rng, d))
            assert 0.0 < cert.norm_A_P <= 1.0 - 1e-12
            assert cert.residual_margin > 0.0


class TestNu:
    def test_harmonic_at_zero(self):
        result = nu(harmonic_task(np.eye(2)), 0)
        assert result.value == pytest.approx(2.0, abs=1e-12)
        assert set(np.abs(result.vertex)) == {1.0}

    def test_harmonic_first_coordinate_peak(self):
        result = nu(harmonic_task(np.diag([1.0, 0.0])), 61)
        assert result.value == pytest.approx(1.6489, abs=1e-3)

    def test_counterexample_at_zero(self):
        result = nu(counterexample_task(), 0)
        assert result.value == pytest.approx(-3.0 / 16.0, abs=1e-12)

    def test_rejects_affine_task(self):
        with pytest.raises(ValueError):
            nu(rotation_task(np.eye(2)), 0)

    def test_sequence_matches_pointwise(self):
        rng = np.random.default_rng(29)
        for _ in range(5):
            task = random_linear_task(rng)
            values, argmax = nu_sequence(task, 700)  # long enough to block
            for k in [0, 1, 63, 64, 65, 200, 421, 700]:
                point = nu(task, k)
                assert values[k] == pytest.approx(point.value, abs=1e-9)
                assert point.value == pytest.approx(
                    task.objective.value(
                        np.linalg.matrix_power(task.system.A, k)
                        @ task.init.vertices[argmax[k]]
                    ),
                    abs=1e-9,
                )


class TestFindKStrict:
    def test_definite_objective_fast_path(self):
        assert find_k_strict(harmonic_task(np.eye(2))) == 0

    def test_semidefinite_with_open_box(self):
        assert find_k_strict(harmonic_task(np.diag([1.0, 0.0]))) == 0

    def test_counterexample_not_found(self):
        assert find_k_strict(counterexample_task(), cap=100) is None

    def test_shifted_rotation_needs_scan(self):
        hom = homogenize(rotation_task(np.diag([0.0, 1.0])))
        assert hom.init.box is not None
        assert find_k_strict(hom) == 2

    def test_vertex_list_scans(self):
        task = VerificationTask(
            system=AffineSystem(A=0.5 * np.eye(2), b=np.zeros(2)),
            init=InitialSet.from_vertices([[1.0, 0.0], [0.0, 1.0]]),
            objective=QuadraticObjective(Q=np.diag([1.0, 0.0]), q=np.zeros(2)),
        )
        assert task.init.box is None
        assert find_k_strict(task) == 0

    def test_zero_objective_not_found(self):
        task = harmonic_task(np.zeros((2, 2)))
        assert find_k_strict(task, cap=50) is None


class TestSValue:
    def test_harmonic_definite(self):
        assert s_value(harmonic_task(np.eye(2)), 0) == pytest.approx(2.0, abs=1e-12)

    def test_scalar_demo(self):
        assert s_value(scalar_demo_task(), 0) == pytest.approx(0.25, abs=1e-15)

    def test_harmonic_semidefinite(self):
        assert s_value(harmonic_task(np.diag([1.0, 0.0])), 0) == pytest.approx(
            1.0, abs=1e-12
        )

    def test_nonpositive_raises(self):
        task = VerificationTask(
            system=AffineSystem(A=[[0.5]], b=[0.0]),
            init=InitialSet.from_vertices([[0.25], [0.5]]),
            objective=QuadraticObjective(Q=[[-1.0]], q=[1.0]),
        )
        # first step value is positive, but sup x^T Q x is negative
        assert find_k_strict(task) == 0
        with pytest.raises(AssumptionViolated):
            s_value(task, 0)


class TestMu:
    def test_euclidean_corner(self):
        assert mu(np.eye(2), box_to_vertices([-1, -1], [1, 1])) == pytest.approx(
            math.sqrt(2.0)
        )

    def test_scalar(self):
        init = InitialSet.from_vertices([[0.25], [0.5]])
        assert mu([[4.0 / 3.0]], init) == pytest.approx(math.sqrt(1.0 / 3.0))

    def test_larger_box(self):
        init = box_to_vertices([-1, -1], [2, 2])
        assert mu((4.0 / 3.0) * np.eye(2), init) == pytest.approx(math.sqrt(32.0 / 3.0))


class TestKOf:
    def test_scalar_demo_exact(self):
        task = scalar_demo_task()
        assert K_of(0.75, [[4.0 / 3.0]], task, S=0.25) == 1

    def test_unit_pair_for_lyapunov_objective(self):
        # when the objective matrix is itself a strict Lyapunov shape and
        # q = 0, the pair (1, Q) certifies cutoff 1
        rng = np.random.default_rng(31)
        for _ in range(20):
            d = int(rng.integers(1, 5))
            a = random_stable_matrix(rng, d)
            q_mat = lyapunov_solve(a, np.eye(d))
            task = VerificationTask(
                system=AffineSystem(A=a, b=np.zeros(d)),
                init=box_to_vertices(-np.ones(d), np.ones(d)),
                objective=QuadraticObjective(Q=q_mat, q=np.zeros(d)),
            )
            s = s_value(task, find_k_strict(task))
            assert K_of(1.0, q_mat, task, S=s) == 1

    def test_rotation_identity_pair(self):
        task = rotation_task(np.eye(2), translated=False)
        s = s_value(task, 0)
        assert K_of(1.0, np.eye(2), task, S=s) == 1

    def test_infeasible_scaling(self):
        task = harmonic_task(np.eye(2))
        p = lyapunov_solve(task.system.A, np.eye(2))
        t_min = generalized_lmax(np.eye(2), p)
        with pytest.raises(InfeasiblePair):
            K_of(0.5 * t_min, p, task, S=2.0)
        with pytest.raises(InfeasiblePair):
            K_of(-1.0, p, task, S=2.0)

    def test_numerator_out_of_range(self):
        # an S above sup x^T Q x violates the threshold's definition
        task = scalar_demo_task()
        with pytest.raises(NumeratorOutOfRange):
            K_of(0.75, [[4.0 / 3.0]], task, S=10.0)

    def test_scale_identity_and_monotonicity(self):
        rng = np.random.default_rng(37)
        for _ in range(25):
            task = random_linear_task(rng)
            k_strict = find_k_strict(task)
            if k_strict is None:
                continue
            try:
                s = s_value(task, k_strict)
            except AssumptionViolated:
                continue
            d = task.dim
            p = lyapunov_solve(task.system.A, np.eye(d) + random_psd(rng, d))
            t_min = generalized_lmax(task.objective.Q, p)
            if t_min <= 0:
                continue
            t1 = t_min * (1.0 + rng.uniform(0.0, 1.0))
            t2 = t1 * (1.0 + rng.uniform(0.0, 2.0))
            assert K_of(t1, p, task, S=s) == K_of(1.0, t1 * p, task, S=s)
            assert K_of(t1, p, task, S=s) <= K_of(t2, p, task, S=s)


class TestTailBound:
    def test_zero_linear_part_closed_form(self):
        scalars = BoundScalars(t=2.0, S=1.0, V=0.0, mu=3.0, k_strict=0)
        for k in range(5):
            assert tail_bound(k, scalars, 0.5) == pytest.approx(
                2.0 * 9.0 * 0.5 ** (2 * k)
            )

    def test_scalar_demo_tight_at_zero(self):
        task = scalar_demo_task()
        scalars = BoundScalars(
            t=0.75, S=0.25, V=0.0, mu=mu([[4.0 / 3.0]], task.init), k_strict=0
        )
        assert tail_bound(0, scalars, 0.5) == pytest.approx(0.25, abs=1e-12)

    def test_dominates_step_values(self):
        rng = np.random.default_rng(41)
        checked = 0
        for _ in range(20):
            task = random_linear_task(rng)
            k_strict = find_k_strict(task)
            if k_strict is None:
                continue
            try:
                s = s_value(task, k_strict)
            except AssumptionViolated:
                continue
            cert = stability_certificate(task.system.A)
            t = generalized_lmax(task.objective.Q, cert.P)
            if t <= 0:
                continue
            v_term = float(np.linalg.norm(task.objective.q)) / (
                2.0 * math.sqrt(t * cert.lmin_P)
            )
            scalars = BoundScalars(
                t=t, S=s, V=v_term, mu=mu(cert.P, task.init), k_strict=k_strict
            )
            values, _ = nu_sequence(task, 500, include_constant=False)
            envelope = np.array(
                [tail_bound(k, scalars, cert.norm_A_P) for k in range(501)]
            )
            assert np.all(values <= envelope + 1e-9)
            assert np.all(np.diff(envelope) <= 1e-12)
            checked += 1
        assert checked >= 10

    def test_decay_bound_on_step_values(self):
        # |nu_k| is sandwiched by the envelope plus the linear-part decay term
        rng = np.random.default_rng(43)
        task = random_linear_task(rng, d=3)
        cert = stability_certificate(task.system.A)
        t = generalized_lmax(task.objective.Q, cert.P)
        v_term = float(np.linalg.norm(task.objective.q)) / (
            2.0 * math.sqrt(t * cert.lmin_P)
        )
        mu_val = mu(cert.P, task.init)
        scalars = BoundScalars(t=t, S=1.0, V=v_term, mu=mu_val, k_strict=0)
        values, _ = nu_sequence(task, 300, include_constant=False)
        for k in range(301):
            linear_decay = (
                float(np.linalg.norm(task.objective.q))
                * mu_val
                * cert.norm_A_P**k
                / math.sqrt(cert.lmin_P)
            )
            assert abs(values[k]) <= tail_bound(k, scalars, cert.norm_A_P) + linear_decay + 1e-9


class TestMinimalScalingIsTight:
    def test_slightly_smaller_scaling_infeasible(self):
        rng = np.random.default_rng(47)
        for _ in range(30):
            d = int(rng.integers(1, 5))
            q = random_psd(rng, d)
            m = rng.standard_normal((d, d))
            p = m @ m.T + np.eye(d)
            t = generalized_lmax(q, p)
            assert t > 0
            delta = 1e-4 * t
            assert np.linalg.eigvalsh((t - delta) * p - q).min() < 0


class TestCandidates:
    def test_identity_strategy_closed_form(self):
        cands = candidate_Ps(0.5 * np.eye(2), np.eye(2), strategy="identity")
        assert len(cands) == 1
        assert cands[0].strategy_id == "identity"
        np.testing.assert_allclose(cands[0].P, (4.0 / 3.0) * np.eye(2), atol=1e-12)
        assert cands[0].t == pytest.approx(0.75, abs=1e-12)

    def test_user_identity_accepted_for_rotation(self):
        task = rotation_task(np.eye(2), translated=False)
        cands = candidate_Ps(
            task.system.A, task.objective.Q, strategy="user", user_P=np.eye(2)
        )
        ids = {c.strategy_id for c in cands}
        assert "user-unit-scale" in ids

    def test_user_rejected_without_margin(self):
        task = harmonic_task(np.eye(2))
        with pytest.raises(InvalidUserP):
            candidate_Ps(
                task.system.A, task.objective.Q, strategy="user", user_P=np.eye(2)
            )

    def test_user_rejected_when_indefinite(self):
        task = rotation_task(np.eye(2), translated=False)
        with pytest.raises(InvalidUserP):
            candidate_Ps(
                task.system.A,
                task.objective.Q,
                strategy="user",
                user_P=np.diag([1.0, -1.0]),
            )

    def test_all_candidates_certify(self):
        rng = np.random.default_rng(53)
        for _ in range(20):
            task = random_linear_task(rng)
            for cand in candidate_Ps(task.system.A, task.objective.Q):
                assert weighted_opnorm(task.system.A, cand.P) < 1.0
                assert (
                    np.linalg.eigvalsh(
                        cand.t * cand.P - task.objective.Q
                    ).min()
                    >= -1e-8 * max(1.0, np.linalg.norm(task.objective.Q))
                )


class TestObjectiveScores:
    def test_identity_scores(self):
        init = box_to_vertices([-1, -1], [1, 1])
        f0, _, f2, _, f4 = objective_scores(np.eye(2), np.zeros((2, 2)), init)
        assert f0 == pytest.approx(2.0)
        assert f2 == pytest.approx(8.0)
        assert f4 == pytest.approx(1.0)

    def test_largest_eigenvalue(self):
        init = box_to_vertices([-1, -1], [1, 1])
        assert objective_scores(np.diag([1.0, 3.0]), np.zeros((2, 2)), init)[
            4
        ] == pytest.approx(3.0)

    def test_matched_pair_zeroes_differences(self):
        init = box_to_vertices([-1, -1], [1, 1])
        q = np.array([[2.0, 0.5], [0.5, 1.0]])
        scores = objective_scores(q, q, init)
        assert scores[1] == pytest.approx(0.0, abs=1e-12)
        assert scores[3] == pytest.approx(0.0, abs=1e-12)


class TestBestK:
    def test_rotation_without_translation(self):
        task = rotation_task(np.eye(2), translated=False)
        bound = best_K(task)
        assert bound.K == 1

    def test_scalar_demo(self):
        assert best_K(scalar_demo_task()).K == 1

    def test_harmonic_first_coordinate_sound(self):
        task = harmonic_task(np.diag([1.0, 0.0]))
        bound = best_K(task)
        assert bound.K >= 62  # the supremum is attained at step 61
        values, _ = nu_sequence(task, 10 * bound.K, include_constant=False)
        assert np.all(values[bound.K + 1 :] <= bound.scalars.S + 1e-9)

    def test_assumption_violated_when_not_found(self):
        with pytest.raises(AssumptionViolated):
            best_K(counterexample_task(), kstrict_cap=100)

    def test_user_strategy_only_uses_user_candidates(self):
        task = rotation_task(np.eye(2), translated=False)
        evaluated = evaluate_candidates(task, strategy="user", user_P=np.eye(2))
        assert {cb.bound.strategy_id for cb in evaluated} <= {
            "user-unit-scale",
            "user-min-scale",
        }
        assert min(cb.bound.K for cb in evaluated) == 1

    def test_indefinite_objective_warns(self):
        task = VerificationTask(
            system=AffineSystem(A=0.5 * np.eye(2), b=np.zeros(2)),
            init=box_to_vertices([-1, -1], [1, 1]),
            objective=QuadraticObjective(Q=np.diag([1.0, -0.5]), q=np.zeros(2)),
        )
        with pytest.warns(RuntimeWarning):
            best_K(task)
