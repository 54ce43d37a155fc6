import itertools
import math
import random

import pytest

from riskplan import (
    FiniteHorizonError,
    Horizon,
    Instance,
    InvalidInstanceError,
    MissionPlan,
    PackageSpec,
    UNBOUNDED,
    evaluate_mission,
    reward_to_risk,
    solve_finite,
    solve_infinite,
)

from conftest import make_instance, with_horizon


def inst_of(theta, *pkgs):
    return Instance(theta=theta, horizon=Horizon.infinite(), packages=tuple(pkgs))


class TestExamples:
    def test_derived_single_package(self):
        inst = inst_of(1.0, PackageSpec(0, 10, 0.9))
        report = solve_infinite(inst)
        assert report.chosen == 0
        # closed form gamma_max - theta, hit exactly by construction
        assert report.total == reward_to_risk(inst.packages[0]) - 1.0
        assert math.isclose(report.total, 9 / 0.19 - 1.0, rel_tol=1e-12)

    def test_gamma_below_theta_idles(self):
        inst = inst_of(1.0, PackageSpec(0, 1, 0.5))
        report = solve_infinite(inst)
        assert report.chosen is None
        assert report.total == 0.0
        assert math.isclose(report.gamma_max, 2 / 3, rel_tol=1e-12)

    def test_high_reward_beats_high_survival(self):
        inst = inst_of(0.0, PackageSpec(0, 1, 0.9), PackageSpec(1, 100, 0.1))
        report = solve_infinite(inst)
        assert report.chosen == 1
        assert math.isclose(report.gamma_max, 10 / 0.99, rel_tol=1e-12)
        assert math.isclose(report.total, 10 / 0.99, rel_tol=1e-12)
        # the rejected package's ratio, for contrast
        assert math.isclose(reward_to_risk(inst.packages[0]), 0.9 / 0.19, rel_tol=1e-12)

    def test_exact_equality_chooses_empty(self):
        # gamma = 1.0 exactly equals theta
        inst = inst_of(1.0, PackageSpec(0, 1.5, 0.5))
        report = solve_infinite(inst)
        assert report.chosen is None
        assert report.total == 0.0

    def test_ties_resolve_to_lowest_id(self):
        inst = inst_of(0.0, PackageSpec(4, 2, 0.7), PackageSpec(1, 2, 0.7))
        assert solve_infinite(inst).chosen == 1

    def test_riskless_positive_reward_is_unbounded(self):
        inst = inst_of(5.0, PackageSpec(0, 1, 1.0))
        report = solve_infinite(inst)
        assert report.chosen == 0
        assert report.gamma_max == math.inf
        assert report.total is UNBOUNDED

    def test_empty_catalog(self):
        report = solve_infinite(inst_of(1.0))
        assert report.chosen is None
        assert report.total == 0.0

    def test_errors(self):
        finite = Instance(theta=0.0, horizon=Horizon.finite(1), packages=())
        with pytest.raises(FiniteHorizonError):
            solve_infinite(finite)
        with pytest.raises(InvalidInstanceError):
            solve_infinite(inst_of(-1.0))


class TestDominanceAndConvergence:
    def test_stationary_dominance_exhaustive_smoke(self):
        rng = random.Random(77)
        for _ in range(10):
            inst = make_instance(rng.randrange(2**31), n_max=4, infinite=True)
            total = solve_infinite(inst).total
            ids = [p.id for p in inst.packages]
            for size in range(len(ids) + 1):
                for subset in itertools.combinations(ids, size):
                    for order in itertools.permutations(subset):
                        value = evaluate_mission(
                            MissionPlan.from_stationary(order), inst).total
                        assert total >= value - 1e-9

    def test_stationary_dominance_sampled_large_n(self):
        # n up to 10: every subset, sampled orderings (cap 10k per instance)
        rng = random.Random(79)
        for _ in range(4):
            inst = make_instance(rng.randrange(2**31), n=rng.randint(6, 10), infinite=True)
            total = solve_infinite(inst).total
            ids = [p.id for p in inst.packages]
            samples = 0
            for size in range(len(ids) + 1):
                for subset in itertools.combinations(ids, size):
                    order = list(subset)
                    for _ in range(min(6, math.factorial(size))):
                        rng.shuffle(order)
                        value = evaluate_mission(
                            MissionPlan.from_stationary(tuple(order)), inst).total
                        assert total >= value - 1e-9
                        samples += 1
                        if samples >= 10_000:
                            break
                    if samples >= 10_000:
                        break
                if samples >= 10_000:
                    break

    def test_finite_horizon_convergence_smoke(self):
        rng = random.Random(78)
        for _ in range(10):
            inst = make_instance(rng.randrange(2**31), n_max=6, infinite=True,
                                 rho_range=(0.0, 0.95))
            infinite_total = solve_infinite(inst).total
            finite_total = solve_finite(with_horizon(inst, Horizon.finite(200))).total
            assert abs(finite_total - infinite_total) < 1e-4
