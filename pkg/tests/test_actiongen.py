import numpy as np
import pytest

from tamplan import actiongen as ag
from tamplan import evalharness as ev
from tamplan import homesim as hs
from tamplan import tam
from tamplan.actiongen.decoder import DecoderConfig, TransformerPlanner, cross_entropy_row
from tamplan.gradcore import SGD, Adam, Tape, ops


@pytest.fixture(scope="module")
def vocab():
    return ag.ActionVocabulary()


@pytest.fixture(scope="session")
def desk_retriever(desk_memory, desk_nets):
    return tam.MemoryRetriever(desk_memory, tam.LearnedLocalizer(desk_nets["localizer"]),
                               desk_nets["assoc"])


@pytest.fixture(scope="session")
def desk_decoder(desk_demos, desk_retriever):
    vocab = ag.ActionVocabulary()
    decoder, report = ag.train_decoder(
        desk_demos, desk_retriever, vocab,
        ag.DecoderTrainConfig(epochs=6), seed=4)
    return {"decoder": decoder, "report": report, "vocab": vocab}


class TestVocabulary:
    def test_encode_decode_identity_on_all_tokens(self, vocab):
        for token_id, signature in enumerate(vocab.signatures):
            assert vocab.encode_signature(vocab.decode(token_id)) == token_id
            assert vocab.decode(vocab.encode_signature(signature)) == signature

    def test_pad_has_no_signature(self, vocab):
        with pytest.raises(ValueError, match="PAD"):
            vocab.decode(vocab.pad_id)

    def test_every_demo_action_is_encodable(self, vocab, desk_demos):
        for demo in desk_demos[:40]:
            tokens = vocab.encode_demo(demo)
            assert tokens[-1] == vocab.stop_id
            assert all(0 <= t < len(vocab) for t in tokens)

    def test_grounding_prefers_executable_instance(self, vocab):
        state = hs.generate_apartment(3)
        state.agent_room = "kitchen"
        action = ag.ground_signature(("WALK", "bedroom"), state)
        assert action == hs.Action("WALK", ("bedroom",))
        grab = ag.ground_signature(("GRAB", "sponge"), state)
        assert grab is not None and grab.verb == "GRAB"

    def test_grounding_missing_class_returns_none(self, vocab):
        state = hs.generate_apartment(3)
        state.objects = {k: v for k, v in state.objects.items()
                         if v.cls != "groceries"}
        assert ag.ground_signature(("GRAB", "groceries"), state) is None


class TestDecodeNext:
    def test_distribution_sums_to_one(self, vocab):
        planner = TransformerPlanner(np.random.default_rng(0),
                                     DecoderConfig(vocab_size=len(vocab), n_goals=8))
        rng = np.random.default_rng(1)
        memory = rng.normal(size=(5, 128))
        probs = planner.next_distribution(3, [1, 4, 2], memory)
        assert abs(probs.sum() - 1.0) < 1e-9
        assert np.all(probs >= 0.0)

    def test_memory_slot_order_is_irrelevant(self, vocab):
        planner = TransformerPlanner(np.random.default_rng(2),
                                     DecoderConfig(vocab_size=len(vocab), n_goals=8))
        rng = np.random.default_rng(3)
        memory = rng.normal(size=(5, 128))
        base = planner.next_distribution(1, [0, 7], memory)
        for seed in range(5):
            perm = np.random.default_rng(seed).permutation(5)
            shuffled = planner.next_distribution(1, [0, 7], memory[perm])
            np.testing.assert_allclose(shuffled, base, atol=1e-10)

    def test_zeroed_memory_changes_trained_distribution(self, desk_decoder, desk_memory):
        decoder = desk_decoder["decoder"]
        nodes = [desk_memory.node(i) for i in range(5)]
        slots = ag.memory_slot_values(nodes)
        with_memory = decoder.next_distribution(0, [], slots)
        without = decoder.next_distribution(0, [], np.zeros_like(slots))
        assert np.max(np.abs(with_memory - without)) > 1e-6

    def test_history_overflow_is_contract_error(self, vocab):
        planner = TransformerPlanner(np.random.default_rng(0),
                                     DecoderConfig(vocab_size=len(vocab), n_goals=8,
                                                   max_len=4))
        with pytest.raises(ValueError, match="history length"):
            planner.next_distribution(0, [1, 2, 3, 4], None)

    def test_causality_bitwise(self, vocab):
        planner = TransformerPlanner(np.random.default_rng(5),
                                     DecoderConfig(vocab_size=len(vocab), n_goals=8))
        rng = np.random.default_rng(6)
        memory = rng.normal(size=(4, 128))
        history = [3, 1, 4, 1, 5]
        base = planner.forward_positions(2, history, memory).data.copy()
        for j in range(1, len(history) + 1):       # sequence position of token j
            mutated = list(history)
            mutated[j - 1] = (mutated[j - 1] + 17) % len(vocab)
            out = planner.forward_positions(2, mutated, memory).data
            np.testing.assert_array_equal(out[:j], base[:j])

    def test_chain_rule_consistency(self, vocab):
        planner = TransformerPlanner(np.random.default_rng(7),
                                     DecoderConfig(vocab_size=len(vocab), n_goals=8))
        rng = np.random.default_rng(8)
        memory = rng.normal(size=(5, 128))
        tokens = [2, 9, 33, 70, vocab.stop_id]
        logits = planner.forward_positions(4, tokens[:-1], memory).data
        full = 0.0
        for position, token in enumerate(tokens):
            row = logits[position]
            full += row[token] - np.log(np.exp(row - row.max()).sum()) - row.max()
        stepwise = 0.0
        for position, token in enumerate(tokens):
            probs = planner.next_distribution(4, tokens[:position], memory)
            stepwise += np.log(probs[token])
        assert abs(full - stepwise) < 1e-9


class _ScriptedHead:
    """Minimal decoding head with a fixed distribution schedule."""

    def __init__(self, vocab_size, rows):
        self.rows = rows
        self.config = DecoderConfig(vocab_size=vocab_size, n_goals=8,
                                    use_memory=False)
        self._step = 0

    def next_distribution(self, goal_id, history, memory):
        row = self.rows[min(self._step, len(self.rows) - 1)]
        self._step += 1
        return row


class _NullInterface:
    def reset(self):
        return None

    def submit(self, signature):
        return ev.StepOutcome(observation=None, executed=True)


class TestGreedyDecode:
    def test_strict_argmax_token_chosen(self, vocab):
        row = np.zeros(len(vocab))
        row[7] = 1.0
        planner = ag.TamPlanner(_ScriptedHead(len(vocab), [row]), vocab)
        plan = planner.plan_episode(0, _NullInterface(), max_steps=1)
        assert plan.steps[0].predicted_token == 7

    def test_argmax_tie_takes_lowest_token_id(self, vocab):
        row = np.zeros(len(vocab))
        row[[5, 11]] = 1.0
        planner = ag.TamPlanner(_ScriptedHead(len(vocab), [row]), vocab)
        plan = planner.plan_episode(0, _NullInterface(), max_steps=1)
        assert plan.steps[0].predicted_token == 5

    def test_stop_token_ends_plan(self, vocab):
        go = np.zeros(len(vocab))
        go[3] = 1.0
        stop = np.zeros(len(vocab))
        stop[vocab.stop_id] = 1.0
        planner = ag.TamPlanner(_ScriptedHead(len(vocab), [go, stop]), vocab)
        plan = planner.plan_episode(0, _NullInterface(), max_steps=10)
        assert len(plan.steps) == 1 and plan.stopped

    def test_zero_step_budget_gives_empty_plan(self, vocab):
        planner = ag.TamPlanner(_ScriptedHead(len(vocab), [np.zeros(len(vocab))]), vocab)
        plan = planner.plan_episode(0, _NullInterface(), max_steps=0)
        assert plan.steps == [] and not plan.stopped

    def test_identical_seeds_give_identical_plans(self, desk_decoder, desk_retriever):
        vocab = desk_decoder["vocab"]
        planner = ag.TamPlanner(desk_decoder["decoder"], vocab, desk_retriever)
        config = ev.EvalConfig(n_episodes=2)
        episode = ev.build_test_episodes(config)[0]
        plans = []
        for _ in range(2):
            interface = ev.make_interface(ev.EvalMode.VIS_INTERACTIVE, episode,
                                          config.eval_seed)
            plans.append(planner.plan_episode(episode.goal_id, interface, 12))
        assert [s.predicted_token for s in plans[0].steps] == \
            [s.predicted_token for s in plans[1].steps]
        assert [s.executed for s in plans[0].steps] == \
            [s.executed for s in plans[1].steps]


class TestTrainDecoder:
    def test_initial_loss_near_uniform(self, vocab, desk_demos, desk_retriever):
        planner = TransformerPlanner(np.random.default_rng(0),
                                     DecoderConfig(vocab_size=len(vocab), n_goals=8))
        slots = ag.precompute_retrievals(desk_demos[:10], desk_retriever)
        losses = []
        for demo, per_position in zip(desk_demos[:10], slots):
            tokens = vocab.encode_demo(demo)
            for position, target in enumerate(tokens):
                logits = planner.forward_positions(demo.goal.id, tokens[:position],
                                                   per_position[position])
                row = ops.take_rows(logits, [logits.shape[0] - 1])
                losses.append(cross_entropy_row(row, target, len(vocab)).item())
        assert abs(np.mean(losses) - np.log(len(vocab))) < 0.1 * np.log(len(vocab))

    def test_overfit_loss_strictly_decreases_then_memorizes(
            self, vocab, desk_demos, desk_retriever):
        demos = desk_demos[:10]
        slots = ag.precompute_retrievals(demos, desk_retriever)
        tokens = [vocab.encode_demo(d) for d in demos]
        planner = TransformerPlanner(np.random.default_rng(1),
                                     DecoderConfig(vocab_size=len(vocab), n_goals=8))

        def full_batch_loss():
            per_episode = []
            for demo, seq, per_position in zip(demos, tokens, slots):
                losses = []
                for position, target in enumerate(seq):
                    logits = planner.forward_positions(demo.goal.id, seq[:position],
                                                       per_position[position])
                    row = ops.take_rows(logits, [logits.shape[0] - 1])
                    losses.append(cross_entropy_row(row, target, len(vocab)))
                total = losses[0]
                for extra in losses[1:]:
                    total = ops.add(total, extra)
                per_episode.append(ops.scale(total, 1.0 / len(losses)))
            acc = per_episode[0]
            for extra in per_episode[1:]:
                acc = ops.add(acc, extra)
            return ops.scale(acc, 1.0 / len(per_episode))

        # gradient descent with a small step decreases a smooth loss every step
        sgd = SGD(planner.parameters(), learning_rate=0.02)
        curve = []
        for _ in range(100):
            with Tape() as tape:
                loss = full_batch_loss()
            curve.append(loss.item())
            tape.backward(loss)
            sgd.step()
        assert all(b < a for a, b in zip(curve, curve[1:]))

        adam = Adam(planner.parameters(), learning_rate=1e-3)
        for _ in range(120):
            with Tape() as tape:
                loss = full_batch_loss()
            tape.backward(loss)
            adam.step()
        accuracy = ag.next_action_accuracy(planner, demos, desk_retriever, vocab)
        assert accuracy >= 0.99

    def test_trained_decoder_beats_chance(self, desk_decoder):
        metrics = desk_decoder["report"].metrics
        assert metrics["holdout_next_action_accuracy"] > 0.5

    def test_loss_curve_decreases(self, desk_decoder):
        curve = desk_decoder["report"].loss_curve
        assert curve[-1] < curve[0]

    def test_memory_dataset_mismatch_is_provenance_error(self, desk_demos,
                                                         desk_retriever, vocab):
        from tamplan.tam.memory import ProvenanceError
        desk_retriever.memory.provenance["dataset_hash"] = "aaa"
        try:
            with pytest.raises(ProvenanceError):
                ag.train_decoder(desk_demos, desk_retriever, vocab,
                                 ag.DecoderTrainConfig(epochs=1), seed=0,
                                 dataset_hash="bbb")
        finally:
            desk_retriever.memory.provenance["dataset_hash"] = None
