from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest

from signalgame.dynamics import (
    ImitationParams,
    LocalParams,
    _step_imitation_ids,
    _step_localized_ids,
    aligned_census,
    fraction_aligned,
    random_profile_ids,
    run,
    step_imitation,
    step_localized,
)
from signalgame.languages import Language, Profile, trace_raising_neighbor, get_table

ALIGNED = Language(2, 2, (0, 1), (0, 1))
SWAPPED = Language(2, 2, (1, 0), (1, 0))
POOLING = Language(2, 2, (0, 0), (0, 0))


class TestParams:
    def test_imitation_validation(self):
        ImitationParams(0.0, 1, (0.3, 0.3))
        with pytest.raises(ValueError):
            ImitationParams(1.0, 1, (0.3, 0.3))
        with pytest.raises(ValueError):
            ImitationParams(0.1, 0, (0.3, 0.3))
        with pytest.raises(ValueError):
            ImitationParams(0.1, 1, (0.3, 1.0))

    def test_local_validation(self):
        LocalParams(0.1, ((0.5, 1.0), (1.0, 0.5)))
        with pytest.raises(ValueError):
            LocalParams(0.1, ((0.5, 0.0), (1.0, 0.5)))
        with pytest.raises(ValueError):
            LocalParams(0.1, ((0.5,), (1.0,)))


class TestStepImitation:
    def test_homogeneous_absorbing_without_mutation(self):
        params = ImitationParams.uniform(epsilon=0.0, d=2, N=4, p=0.5)
        profile = Profile((POOLING,) * 4)
        rng = np.random.default_rng(0)
        for _ in range(200):
            assert step_imitation(profile, params, rng) == profile

    def test_reaches_homogeneous_from_any_start(self):
        table = get_table(2, 2)
        params = ImitationParams.uniform(epsilon=0.0, d=2, N=5, p=0.5)
        for seed in range(10):
            rng = np.random.default_rng(seed)
            ids = random_profile_ids(table, 5, rng)
            for _ in range(200):
                ids = _step_imitation_ids(ids, table, params, rng)
                if len(set(ids.tolist())) == 1:
                    break
            assert len(set(ids.tolist())) == 1

    def test_changed_agents_copy_an_argmax_language(self):
        table = get_table(3, 3)
        params = ImitationParams.uniform(epsilon=0.0, d=3, N=6, p=0.5)
        rng = np.random.default_rng(1)
        ids = random_profile_ids(table, 6, rng)
        for _ in range(60):
            fit = table.fitness_scaled_ids(ids)
            argmax_langs = set(ids[fit == fit.max()].tolist())
            new = _step_imitation_ids(ids, table, params, rng)
            for old, fresh in zip(ids, new):
                if fresh != old:
                    assert int(fresh) in argmax_langs
            ids = new

    def test_two_aligned_one_mute_agent(self):
        # the zero-trace agent is strictly less fit; whenever every agent
        # revises and nobody mutates, the next profile is homogeneous aligned
        table = get_table(2, 2)
        crossed = Language(2, 2, (0, 1), (1, 0))
        profile = Profile((ALIGNED, ALIGNED, crossed))
        ids = np.asarray(profile.ids())
        fit = table.fitness_scaled_ids(ids)
        assert list(fit == fit.max()) == [True, True, False]
        params = ImitationParams.uniform(epsilon=0.0, d=2, N=3, p=0.9)
        rng = np.random.default_rng(2)
        outcomes = set()
        for _ in range(300):
            outcomes.add(tuple(_step_imitation_ids(ids, table, params, rng).tolist()))
        aligned_id = ALIGNED.id
        assert (aligned_id,) * 3 in outcomes
        for out in outcomes:
            for agent, lid in enumerate(out):
                assert lid in (ids[agent], aligned_id)

    def test_mutation_support_is_the_disk(self):
        table = get_table(2, 2)
        params = ImitationParams.uniform(epsilon=0.999, d=1, N=2, p=0.9)
        rng = np.random.default_rng(3)
        start = np.array([POOLING.id, ALIGNED.id])
        seen: dict[int, set[int]] = {0: set(), 1: set()}
        for _ in range(4000):
            out = _step_imitation_ids(start, table, params, rng)
            for agent in (0, 1):
                if out[agent] != start[agent]:
                    seen[agent].add(int(out[agent]))
        disks = table.disks(1)
        for agent in (0, 1):
            support = set(int(x) for x in disks[start[agent]])
            assert seen[agent] <= support
            # the argmax language is also adoptable without mutating
            assert support <= seen[agent] | set(start.tolist())

    def test_one_mutation_transition_structure(self):
        # a lone weakly-fitter mutant joins the argmax set and some
        # unperturbed continuation carries it to fixation; a strictly less
        # fit mutant never spreads under the unperturbed dynamics
        table = get_table(2, 2)
        better = trace_raising_neighbor(POOLING)
        ids = np.array([POOLING.id] * 2 + [better.id])
        fit = table.fitness_scaled_ids(ids)
        assert fit[2] == fit.max()
        params = ImitationParams.uniform(epsilon=0.0, d=2, N=3, p=0.5)
        fixed = set()
        for seed in range(40):
            rng = np.random.default_rng(seed)
            state = ids.copy()
            for _ in range(60):
                state = _step_imitation_ids(state, table, params, rng)
                if len(set(state.tolist())) == 1:
                    break
            fixed.add(int(state[0]))
        assert better.id in fixed

        crossed = Language(2, 2, (0, 1), (1, 0))  # delta > 0 against ALIGNED
        ids = np.array([ALIGNED.id] * 2 + [crossed.id])
        fit = table.fitness_scaled_ids(ids)
        assert fit[2] < fit.max()
        params = ImitationParams.uniform(epsilon=0.0, d=2, N=3, p=0.5)
        rng = np.random.default_rng(4)
        state = ids.copy()
        for _ in range(100):
            state = _step_imitation_ids(state, table, params, rng)
        assert state.tolist() == [ALIGNED.id] * 3


class TestStepLocalized:
    def test_homogeneous_absorbing(self):
        params = LocalParams.uniform(epsilon=0.0, N=3, p=0.5)
        profile = Profile((SWAPPED,) * 3)
        rng = np.random.default_rng(5)
        for _ in range(200):
            assert step_localized(profile, params, rng) == profile

    def test_full_neighbourhoods_imitate_global_argmax(self):
        # with p_ij = 1 and a unique fittest agent, one step conforms everyone
        table = get_table(2, 2)
        crossed = Language(2, 2, (0, 1), (1, 0))
        ids = np.array([ALIGNED.id, ALIGNED.id, crossed.id])
        params = LocalParams.uniform(epsilon=0.0, N=3, p=1.0)
        rng = np.random.default_rng(6)
        out = _step_localized_ids(ids, table, params, rng)
        assert out.tolist() == [ALIGNED.id] * 3

    def test_mutation_support_is_everything(self):
        table = get_table(2, 2)
        params = LocalParams.uniform(epsilon=0.999, N=2, p=0.5)
        rng = np.random.default_rng(7)
        start = np.array([POOLING.id, POOLING.id])
        seen = set()
        for _ in range(3000):
            out = _step_localized_ids(start, table, params, rng)
            seen.update(out.tolist())
        assert seen == set(range(table.size))

    def test_less_fit_mutant_never_copied(self):
        table = get_table(2, 2)
        crossed = Language(2, 2, (0, 1), (1, 0))
        ids = np.array([ALIGNED.id] * 3 + [crossed.id])
        params = LocalParams.uniform(epsilon=0.0, N=4, p=0.5)
        rng = np.random.default_rng(8)
        for _ in range(300):
            out = _step_localized_ids(ids, table, params, rng)
            assert all(lid == ALIGNED.id for lid in out[:3])


class TestMetrics:
    def test_fraction_aligned(self):
        assert fraction_aligned(Profile((ALIGNED,) * 4)) == 1
        assert fraction_aligned(Profile((POOLING,) * 4)) == 0
        mixed = Profile((ALIGNED,) * 6 + (POOLING,) * 4)
        assert fraction_aligned(mixed) == Fraction(3, 5)

    def test_census_domain(self):
        table = get_table(3, 3)
        ident = Language(3, 3, (0, 1, 2), (0, 1, 2))
        census = aligned_census(Profile((ident,) * 4))
        assert len(census) == 6
        assert census[ident.id] == 4
        assert sum(census.values()) == 4

    def test_census_all_zero(self):
        census = aligned_census(Profile((POOLING,) * 3))
        assert set(census.values()) == {0}


class TestRun:
    def test_zero_horizon_records_initial_only(self):
        profile = Profile((ALIGNED, POOLING))
        params = ImitationParams.uniform(epsilon=0.1, d=1, N=2, p=0.5)
        traj = run(profile, "imitation", params, horizon=0, rng=0)
        assert traj.times() == [0]
        assert traj.records[0].ids == profile.ids()

    def test_record_every_includes_final(self):
        profile = Profile((ALIGNED, POOLING))
        params = ImitationParams.uniform(epsilon=0.1, d=1, N=2, p=0.5)
        traj = run(profile, "imitation", params, horizon=7, record_every=3, rng=0)
        assert traj.times() == [0, 3, 6, 7]

    def test_deterministic_and_seed_sensitive(self):
        table = get_table(2, 2)
        params = ImitationParams.uniform(epsilon=0.05, d=2, N=4, p=0.4)
        initial = random_profile_ids(table, 4, np.random.default_rng(99))
        a = run(initial.copy(), "imitation", params, 50, rng=11, table=table)
        b = run(initial.copy(), "imitation", params, 50, rng=11, table=table)
        c = run(initial.copy(), "imitation", params, 50, rng=12, table=table)
        assert a.to_csv() == b.to_csv()
        assert a.to_csv() != c.to_csv()

    def test_localized_run_and_csv_schema(self):
        table = get_table(2, 2)
        params = LocalParams.uniform(epsilon=0.05, N=3, p=0.5)
        initial = random_profile_ids(table, 3, np.random.default_rng(0))
        traj = run(initial, "localized", params, 20, rng=1, table=table)
        header = traj.to_csv().splitlines()[0]
        assert header == "t,frac_aligned,avg_fitness,majority_lang_id,count_5,count_10"

    def test_wrong_params_type(self):
        profile = Profile((ALIGNED, POOLING))
        with pytest.raises(TypeError):
            run(profile, "imitation", LocalParams.uniform(0.1, 2, 0.5), 5, rng=0)
        with pytest.raises(ValueError):
            run(profile, "annealing", ImitationParams.uniform(0.1, 1, 2, 0.5), 5, rng=0)
