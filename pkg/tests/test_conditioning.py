import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qergodic import (
    Distribution,
    NullEventError,
    collapsed_chain,
    conditional_law,
    conditional_law_sequence,
    conditional_step,
    exact_mean_ratio,
    lift_chain,
    mean_ratio_curve,
    moving_walk,
    moving_walk_qed,
    qld_cycle,
    qsd_fixed_point_search,
    write_conditional_laws_csv,
    write_mean_ratio_csv,
)
from _chains import (
    conditional_law_brute,
    k2_walk,
    n3_walk,
    random_problem,
    survival_paths,
)


def test_conditional_step_n3_example():
    out = conditional_step(n3_walk(), Distribution.point_mass("3"), 1)
    assert out.weights == {"2": 0.5, "4": 0.5}


def test_conditional_step_fixed_point_at_qsd():
    # the left Perron law of the phase survivor matrix is invariant
    from qergodic import decompose_classes

    problem = k2_walk(p=0.35)
    lifted = lift_chain(problem)
    cls = decompose_classes(lifted.survivor_matrix).classes[0]
    qsd = Distribution(
        {lifted.survivors[s][0]: w for s, w in zip(cls.states, cls.nu)}
    )
    moved = conditional_step(problem, qsd, 0)
    assert moved.tv_distance(qsd) < 1e-12


def test_conditional_step_null_event():
    prob = moving_walk(0.5, 2, initial="2")
    with pytest.raises(NullEventError):
        conditional_step(prob, Distribution.point_mass("2"), 1)


def test_conditional_step_scale_invariant():
    prob = n3_walk()
    mu = Distribution({"3": 0.2, "1": 0.1})
    scaled = Distribution({"3": 2.0, "1": 1.0})
    a = conditional_step(prob, mu, 1)
    b = conditional_step(prob, scaled, 1)
    assert a.tv_distance(b) < 1e-15


def test_conditional_law_time_zero_restricts_and_renormalizes():
    prob = n3_walk()
    mu = Distribution({"0": 0.5, "3": 0.5})
    law = conditional_law(prob, 0, mu=mu)
    assert law.weights == {"3": 1.0}


def test_conditional_law_k2_alternates():
    prob = k2_walk()
    for n in range(8):
        law = conditional_law(prob, n)
        assert law.weights == ({"1": 1.0} if n % 2 == 0 else {"2": 1.0})


def test_conditional_law_matches_brute_force_enumeration():
    for problem, n in ((n3_walk(0.4), 4), (n3_walk(0.5, start="3"), 2)):
        law = conditional_law(problem, n)
        brute = conditional_law_brute(problem, n)
        assert set(law.support()) == set(brute)
        for x, w in brute.items():
            assert law.weights[x] == pytest.approx(w, abs=1e-13)


def test_conditional_law_matches_lifted_matrix_powers():
    for p in (0.3, 0.6):
        problem = n3_walk(p)
        lifted = lift_chain(problem)
        vec = lifted.normalized_initial()
        for n in range(1, 51):
            vec = vec @ lifted.survivor_matrix
            law = conditional_law(problem, n)
            marg = {}
            for w, (x, k) in zip(vec, lifted.survivors):
                if k == n % problem.gamma and w != 0.0:
                    marg[x] = marg.get(x, 0.0) + w
            total = sum(marg.values())
            for x, w in marg.items():
                assert law.weights.get(x, 0.0) == pytest.approx(
                    w / total, abs=1e-12
                )


def test_collapsed_chain_n3_row():
    cc = collapsed_chain(n3_walk(), 0)
    idx = {s: i for i, s in enumerate(cc.survivors)}
    row = cc.matrix[idx["3"]]
    expected = {"1": 0.25, "3": 0.5, "5": 0.25}
    for s, i in idx.items():
        assert row[i] == pytest.approx(expected.get(s, 0.0), abs=1e-15)
    assert cc.cemetery[idx["3"]] == pytest.approx(0.0, abs=1e-15)


def test_collapsed_chain_gamma_one_is_survivor_restriction():
    from qergodic import survivor_restriction

    prob = k2_walk(p=0.4)
    cc = collapsed_chain(prob, 0)
    Q, survivors = survivor_restriction(
        prob.space, prob.kernel, prob.boundary.killing_set(0)
    )
    assert cc.survivors == survivors
    np.testing.assert_allclose(cc.matrix, Q, atol=1e-15)
    np.testing.assert_allclose(cc.cemetery, 1.0 - Q.sum(axis=1), atol=1e-15)


def _collapse_cylinders_brute(problem, n_blocks):
    """Joint law of (X_gamma, ..., X_{n_blocks*gamma}) with survival."""
    gamma = problem.gamma
    out = {}
    for path, pr in survival_paths(problem, n_blocks * gamma):
        key = tuple(path[k * gamma] for k in range(1, n_blocks + 1))
        out[key] = out.get(key, 0.0) + pr
    return out


def test_collapse_identity_exact_on_cylinders():
    rng = np.random.default_rng(321)
    for _ in range(6):
        problem = random_problem(rng, n_states=4, gamma=2)
        space = problem.space
        cc = collapsed_chain(problem, 0)
        idx = {space.index(s): i for i, s in enumerate(cc.survivors)}
        brute = _collapse_cylinders_brute(problem, 2)
        init = problem.initial.to_array(space)
        for (a, b), pr in brute.items():
            assert a in idx and b in idx
            two_step = sum(
                init[x0] * cc.matrix[idx[x0], idx[a]] * cc.matrix[idx[a], idx[b]]
                for x0 in range(space.size)
                if x0 in idx
            )
            assert two_step == pytest.approx(pr, abs=1e-14)


def test_collapse_identity_three_blocks():
    rng = np.random.default_rng(77)
    for _ in range(2):
        problem = random_problem(rng, n_states=3, gamma=2)
        space = problem.space
        cc = collapsed_chain(problem, 0)
        idx = {space.index(s): i for i, s in enumerate(cc.survivors)}
        init = problem.initial.to_array(space)
        brute = _collapse_cylinders_brute(problem, 3)
        for (a, b, c), pr in brute.items():
            three_step = sum(
                init[x0]
                * cc.matrix[idx[x0], idx[a]]
                * cc.matrix[idx[a], idx[b]]
                * cc.matrix[idx[b], idx[c]]
                for x0 in range(space.size)
                if x0 in idx
            )
            assert three_step == pytest.approx(pr, abs=1e-14)


def test_qld_cycle_k2_forced_alternation():
    cycle = qld_cycle(k2_walk())
    assert [d.weights for d in cycle.distributions] == [{"2": 1.0}, {"1": 1.0}]
    assert cycle.max_pairwise_tv == pytest.approx(1.0)
    assert not cycle.qld_exists


def test_qld_cycle_aperiodic_collapses_to_qsd():
    # lazy 3-state chain with self-loops: aperiodic, classical limit
    from qergodic import (
        AbsorbedChainProblem,
        MovingBoundary,
        StateSpace,
        TransitionKernel,
        decompose_classes,
    )

    labels = ("a", "b", "t")
    P = np.array([[0.5, 0.4, 0.1], [0.3, 0.5, 0.2], [0.0, 0.0, 1.0]])
    problem = AbsorbedChainProblem(
        StateSpace(labels),
        TransitionKernel(P),
        MovingBoundary(1, (frozenset({"t"}),)),
        Distribution.point_mass("a"),
    )
    cycle = qld_cycle(problem)
    assert cycle.period == 1
    assert cycle.qld_exists
    lifted = lift_chain(problem)
    cls = decompose_classes(lifted.survivor_matrix).classes[0]
    qsd = Distribution(
        {lifted.survivors[s][0]: w for s, w in zip(cls.states, cls.nu)}
    )
    assert cycle.distributions[0].tv_distance(qsd) < 1e-10


def test_qld_cycle_n3_disjoint_parity_supports():
    cycle = qld_cycle(n3_walk())
    assert cycle.period == 2
    supports = [sorted(d.support()) for d in cycle.distributions]
    assert supports == [["2", "4"], ["1", "3", "5"]]
    assert cycle.max_pairwise_tv == pytest.approx(1.0)
    assert not cycle.qld_exists
    assert "no quasi-limiting" in cycle.verdict


def test_qld_cycle_elements_are_fixed_points_of_composed_map():
    for problem in (n3_walk(0.35), k2_walk()):
        cycle = qld_cycle(problem)
        gamma = problem.gamma
        for i, dist in enumerate(cycle.distributions):
            phase = cycle.offsets[i] % gamma
            current = dist
            for step in range(1, cycle.period + 1):
                current = conditional_step(problem, current, (phase + step) % gamma)
            assert current.tv_distance(dist) < 1e-9


def test_exact_mean_ratio_constant_function_is_one():
    rng = np.random.default_rng(9)
    for _ in range(5):
        problem = random_problem(rng)
        ones = {x: 1.0 for x in problem.space.labels}
        for n in (1, 3, 7):
            assert exact_mean_ratio(problem, ones, n) == pytest.approx(
                1.0, abs=1e-12
            )


def test_exact_mean_ratio_k2_forced_half():
    value = exact_mean_ratio(k2_walk(), {"1": 1.0}, 10)
    assert value == pytest.approx(0.5, abs=1e-15)


def test_exact_mean_ratio_horizon_one_from_point_mass():
    problem = n3_walk(0.4, start="3")
    assert exact_mean_ratio(problem, {"3": 1.0}, 1) == pytest.approx(1.0)
    assert exact_mean_ratio(problem, {"2": 1.0}, 1) == pytest.approx(0.0)


def test_exact_mean_ratio_matches_brute_force():
    problem = n3_walk(0.4)
    f = {"1": 2.0, "3": -1.0, "4": 0.5}
    fidx = {problem.space.index(k): v for k, v in f.items()}
    for n in (1, 2, 3, 5):
        num = 0.0
        den = 0.0
        for path, pr in survival_paths(problem, n):
            den += pr
            num += pr * sum(fidx.get(x, 0.0) for x in path[:-1])
        assert exact_mean_ratio(problem, f, n) == pytest.approx(
            num / (n * den), abs=1e-13
        )


def test_exact_mean_ratio_converges_to_closed_form():
    problem = n3_walk(0.5, start="3")
    target = moving_walk_qed(3, "odd")
    f = {"3": 1.0}
    value = exact_mean_ratio(problem, f, 2000)
    assert abs(value - target.weights["3"]) < 1e-2


def test_mean_ratio_curve_matches_pointwise():
    problem = n3_walk(0.45)
    f = {"2": 1.0, "3": 0.25}
    curve = mean_ratio_curve(problem, f, [1, 4, 9])
    for n, v in zip([1, 4, 9], curve):
        assert v == pytest.approx(exact_mean_ratio(problem, f, n), abs=1e-14)


def test_mean_ratio_deep_horizon_rescaling():
    # rho ~ 0.69 here: naive powers underflow long before n = 2500
    problem = n3_walk(0.1, start="3")
    value = exact_mean_ratio(problem, {"3": 1.0}, 2500)
    target = moving_walk_qed(3, "odd").weights["3"]
    assert abs(value - target) < 1e-2


def test_qsd_fixed_point_search_n3():
    report = qsd_fixed_point_search(n3_walk(), grid_step=1e-2)
    assert not report.has_common_fixed_point
    assert report.common_support == ("2", "3", "4")
    assert report.grid_min_gap > 0.05
    assert report.eigen_candidates
    assert all(g > 0.05 for g in report.eigen_gaps)


def test_csv_emitters(tmp_path):
    problem = n3_walk()
    ratio_csv = tmp_path / "ratio.csv"
    laws_csv = tmp_path / "laws.csv"
    write_mean_ratio_csv(problem, {"3": 1.0}, 12, ratio_csv)
    write_conditional_laws_csv(problem, 8, laws_csv)
    ratio_lines = ratio_csv.read_text().strip().splitlines()
    assert ratio_lines[0] == "n,mean_ratio"
    assert len(ratio_lines) == 13
    law_lines = laws_csv.read_text().strip().splitlines()
    assert law_lines[0].split(",") == ["n", *problem.space.labels]
    assert len(law_lines) == 10


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 12))
def test_composition_equals_sequence(seed, n):
    rng = np.random.default_rng(seed)
    problem = random_problem(rng)
    try:
        seq = conditional_law_sequence(problem, n)
    except NullEventError:
        return
    stepped = conditional_law(problem, 0)
    for k in range(1, n + 1):
        stepped = conditional_step(problem, stepped, k % problem.gamma)
    assert stepped.tv_distance(seq[-1]) < 1e-12
