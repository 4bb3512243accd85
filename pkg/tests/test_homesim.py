import numpy as np
import pytest

from tamplan import homesim as hs
from tamplan.homesim.world import WorldObject


def snapshot_key(state):
    return (tuple(state.rooms), state.agent_room, tuple(state.inventory),
            tuple(hs.graph_snapshot(state)))


class TestApartmentGeneration:
    def test_same_seed_identical(self):
        a, b = hs.generate_apartment(12), hs.generate_apartment(12)
        assert snapshot_key(a) == snapshot_key(b)

    def test_test_seeds_pairwise_distinct(self):
        keys = [snapshot_key(hs.generate_apartment(s)) for s in range(10)]
        assert len(set(keys)) == 10

    def test_room_count_echoes_config(self):
        cfg = hs.SimConfig(min_extra_rooms=0, max_extra_rooms=0)
        state = hs.generate_apartment(0, cfg)
        assert len(state.rooms) == 4

    def test_infeasible_config_rejected(self):
        with pytest.raises(ValueError):
            hs.generate_apartment(0, hs.SimConfig(min_extra_rooms=3, max_extra_rooms=1))
        with pytest.raises(ValueError):
            hs.generate_apartment(0, hs.SimConfig(max_extra_rooms=99))

    def test_invariants_hold_across_seeds(self):
        for seed in range(20):
            hs.generate_apartment(seed).check_invariants()


class TestActionSemantics:
    def test_grab_requires_same_room(self):
        state = hs.generate_apartment(1)
        state.agent_room = "bathroom"
        plate = state.instances_of("plate")[0]
        acts = hs.executable_actions(state)
        assert hs.Action("GRAB", (plate,)) not in acts

    def test_hands_full_blocks_grab(self):
        state = hs.generate_apartment(1)
        state.agent_room = "kitchen"
        # force two held objects
        for oid in ["plate_0", "cup_0"]:
            obj = state.objects[oid]
            state.relations = {r for r in state.relations if r[0] != oid}
            obj.room, obj.held = None, True
            state.inventory.append(oid)
        assert all(a.verb != "GRAB" for a in hs.executable_actions(state))

    def test_walk_to_current_room_is_noop_success(self):
        state = hs.generate_apartment(2)
        state.agent_room = "living_room"
        new, _ = hs.execute(state, hs.Action("WALK", ("living_room",)))
        assert snapshot_key(new) == snapshot_key(state)

    def test_grab_moves_plate_to_inventory(self):
        state = hs.generate_apartment(2)
        state.agent_room = state.objects["plate_0"].room
        if hs.check_action(state, hs.Action("GRAB", ("plate_0",))) == "not_visible":
            container = state.container_of("plate_0")
            state, _ = hs.execute(state, hs.Action("OPEN", (container,)))
        new, _ = hs.execute(state, hs.Action("GRAB", ("plate_0",)))
        assert "plate_0" in new.inventory
        assert new.objects["plate_0"].room is None
        assert all(r[0] != "plate_0" for r in new.relations)

    def test_switchon_from_other_room_not_executable(self):
        state = hs.generate_apartment(2)
        state.agent_room = "bathroom"
        before = snapshot_key(state)
        with pytest.raises(hs.NotExecutable) as err:
            hs.execute(state, hs.Action("SWITCHON", ("tv_0",)))
        assert err.value.reason == "not_visible"
        assert snapshot_key(state) == before

    def test_sink_washes_contents(self):
        state = hs.generate_apartment(4)
        state.agent_room = "kitchen"
        plate = state.objects["plate_0"]
        state.relations = {r for r in state.relations if r[0] != "plate_0"}
        plate.room = "kitchen"
        plate.states["dirt"] = "dirty"
        state.relations.add(("plate_0", "inside", "sink_0"))
        if state.objects["sink_0"].states["power"] == "on":
            state, _ = hs.execute(state, hs.Action("SWITCHOFF", ("sink_0",)))
        new, _ = hs.execute(state, hs.Action("SWITCHON", ("sink_0",)))
        assert new.objects["plate_0"].states["dirt"] == "clean"


class TestExecutabilitySoundness:
    def random_state(self, rng):
        state = hs.generate_apartment(int(rng.integers(0, 200)))
        state.agent_room = state.rooms[int(rng.integers(len(state.rooms)))]
        for _ in range(int(rng.integers(0, 6))):
            acts = hs.executable_actions(state)
            state = hs.apply_action(state, acts[int(rng.integers(len(acts)))])
        return state

    def random_action(self, state, rng):
        oids = sorted(state.objects)
        verb = ["WALK", "GRAB", "PUTBACK", "OPEN", "CLOSE", "SWITCHON",
                "SWITCHOFF", "PUTIN"][int(rng.integers(8))]
        if verb == "WALK":
            return hs.Action(verb, (hs.ROOM_VOCAB[int(rng.integers(len(hs.ROOM_VOCAB)))],))
        if verb in ("PUTBACK", "PUTIN"):
            return hs.Action(verb, (oids[int(rng.integers(len(oids)))],
                                    oids[int(rng.integers(len(oids)))]))
        return hs.Action(verb, (oids[int(rng.integers(len(oids)))],))

    def test_fuzz_equivalence_and_conservation(self):
        rng = np.random.default_rng(99)
        checked = 0
        while checked < 10_000:
            state = self.random_state(rng)
            allowed = set(hs.executable_actions(state))
            for _ in range(25):
                action = self.random_action(state, rng)
                claimed = action in allowed
                try:
                    new = hs.apply_action(state, action)
                    succeeded = True
                except hs.NotExecutable:
                    succeeded = False
                assert claimed == succeeded, (action, sorted(allowed))
                if succeeded:
                    assert set(new.objects) == set(state.objects)
                checked += 1

    def test_every_executable_action_succeeds(self):
        rng = np.random.default_rng(7)
        for _ in range(30):
            state = self.random_state(rng)
            for action in hs.executable_actions(state):
                hs.apply_action(state, action)


class TestObservations:
    def test_zero_noise_identical_states(self):
        state = hs.generate_apartment(5)
        obs = hs.render_observation(state, state, sigma=0.0)
        np.testing.assert_array_equal(obs.start_features, obs.end_features)

    def test_multi_hot_matches_hand_oracle(self):
        state = hs.EnvironmentState(
            rooms=list(hs.CORE_ROOMS),
            objects={
                "plate_0": WorldObject("plate_0", "plate", "kitchen",
                                       {"dirt": "dirty"}),
                "tv_0": WorldObject("tv_0", "tv", "living_room", {"power": "on"}),
            },
            relations=set(),
            agent_room="kitchen",
        )
        vec = hs.encode_state(state)
        n_rooms, n_classes = len(hs.ROOM_VOCAB), len(hs.CLASS_VOCAB)
        expected = np.zeros(n_rooms + n_classes * 8)
        expected[hs.ROOM_VOCAB.index("kitchen")] = 1.0
        plate_ci = hs.CLASS_VOCAB.index("plate")
        expected[n_rooms + plate_ci] = 1.0
        expected[n_rooms + n_classes + plate_ci * 6 + 5] = 1.0  # "dirty" is value 5
        np.testing.assert_array_equal(vec, expected)

    def test_noise_linf_bound(self):
        state = hs.generate_apartment(6)
        clean = hs.encode_state(state)
        rng = np.random.default_rng(1234)
        for _ in range(1000):
            noisy = hs.render_observation(state, state, rng, sigma=0.05)
            assert np.max(np.abs(noisy.start_features - clean)) < 0.3

    def test_noiseless_deterministic_function_of_state(self):
        state = hs.generate_apartment(8)
        np.testing.assert_array_equal(hs.encode_state(state), hs.encode_state(state.copy()))


class TestDemonstrations:
    def test_generated_demos_replay_exactly(self):
        demos, _ = hs.generate_demonstrations(24, seed=3,
                                              apartment_seeds=list(range(100, 130)))
        for demo in demos:
            assert hs.replay_demonstration(demo) == demo.final_facts

    def test_full_executability_by_construction(self):
        demos, _ = hs.generate_demonstrations(16, seed=4,
                                              apartment_seeds=list(range(100, 120)))
        for demo in demos:
            state = hs.generate_apartment(demo.apartment_seed)
            state.agent_room = demo.spawn_room
            for _, action in demo.steps:
                state = hs.apply_action(state, action)  # raises on any failure

    def test_spawn_in_target_room_drops_walk(self):
        template = hs.TASK_TEMPLATES[2]  # watch tv, lives in the living room
        cfg = hs.SimConfig()
        rng = np.random.default_rng(0)
        inside = hs.run_expert_episode(template, 101, "living_room", 0, rng, cfg)
        away = hs.run_expert_episode(template, 101, "kitchen", 1, rng, cfg)
        assert len(inside.steps) < len(away.steps)
        assert away.steps[0][1].verb == "WALK"

    def test_dataset_roundtrip_and_byte_identity(self, tmp_path):
        seeds = list(range(100, 110))
        demos1, _ = hs.generate_demonstrations(10, seed=11, apartment_seeds=seeds)
        demos2, _ = hs.generate_demonstrations(10, seed=11, apartment_seeds=seeds)
        p1, p2 = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        h1 = hs.save_dataset(p1, demos1)
        h2 = hs.save_dataset(p2, demos2)
        assert h1 == h2
        assert p1.read_bytes() == p2.read_bytes()
        loaded = hs.load_dataset(p1)
        assert len(loaded) == 10
        for orig, back in zip(demos1, loaded):
            assert back.goal == orig.goal
            assert back.final_facts == orig.final_facts
            assert [a for _, a in back.steps] == [a for _, a in orig.steps]
            np.testing.assert_array_equal(back.steps[0][0].end_features,
                                          orig.steps[0][0].end_features)


class TestGraphSnapshot:
    def test_snapshot_stable_across_copies(self):
        state = hs.generate_apartment(9)
        assert hs.graph_snapshot(state) == hs.graph_snapshot(state.copy())

    def test_grab_changes_only_plate_facts(self):
        state = hs.generate_apartment(2)
        state.agent_room = state.objects["plate_0"].room
        if hs.check_action(state, hs.Action("GRAB", ("plate_0",))) == "not_visible":
            state, _ = hs.execute(state, hs.Action("OPEN", (state.container_of("plate_0"),)))
        before = set(hs.graph_snapshot(state))
        after_state = hs.apply_action(state, hs.Action("GRAB", ("plate_0",)))
        after = set(hs.graph_snapshot(after_state))
        for fact in before.symmetric_difference(after):
            assert "plate_0" in fact

    def test_empty_object_apartment_gives_empty_facts(self):
        state = hs.EnvironmentState(rooms=list(hs.CORE_ROOMS), objects={},
                                    relations=set(), agent_room="kitchen")
        assert hs.graph_snapshot(state) == []
