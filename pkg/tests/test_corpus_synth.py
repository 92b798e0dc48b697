"""Corpus I/O, validation, and the synthetic generator's planted structure."""

import numpy as np
import pytest

from mmgi.corpus import load_corpus, save_corpus
from mmgi.errors import AlignmentError, DataValidationError, GenerationError
from mmgi.features import pitch_indices, vad_aggregate
from mmgi.metrics import bracketing_f1
from mmgi.synth import (SynthConfig, generate_synthetic, lexicon_slices,
                        right_chain_grammar)
from mmgi.trees import bracket_set, right_branching, tree_spans

from .conftest import random_bundle, tiny_config


def _small_synth(**kw):
    base = dict(sentence_count=12, seed=7, d_s=8, d_v=40)
    base.update(kw)
    return generate_synthetic(SynthConfig(**base))


# ---------------------------------------------------------------------------
# corpus I/O


def test_roundtrip_identity(tmp_path):
    examples = _small_synth()
    path = tmp_path / "c.jsonl"
    save_corpus(examples, path)
    loaded = load_corpus(path, "full")
    assert [e.id for e in loaded] == [e.id for e in examples]
    for a, b in zip(examples, loaded):
        assert a.tokens == b.tokens
        assert a.gold_brackets == b.gold_brackets
        assert a.gold_labels == b.gold_labels
        assert a.speech.clips == b.speech.clips
        assert a.speech.f0_frames == b.speech.f0_frames
        assert a.speech.vad_frames == b.speech.vad_frames
        assert np.array_equal(a.speech.clip_features, b.speech.clip_features)
        assert np.array_equal(a.regions.features, b.regions.features)
        assert np.array_equal(a.regions.bboxes, b.regions.bboxes)
        assert np.array_equal(a.regions.categories, b.regions.categories)


def test_empty_corpus_rejected(tmp_path):
    path = tmp_path / "empty.jsonl"
    path.write_text("")
    with pytest.raises(DataValidationError, match="no examples"):
        load_corpus(path, "full")
    with pytest.raises(DataValidationError, match="not found"):
        load_corpus(tmp_path / "missing.jsonl", "full")


def test_token_clip_mismatch_names_example(tmp_path, rng):
    cfg = tiny_config()
    bundle = random_bundle(rng, 3, cfg, ex_id="broken")
    bundle.tokens = bundle.tokens[:2]
    path = tmp_path / "bad.jsonl"
    save_corpus([bundle], path)
    with pytest.raises(AlignmentError, match="broken"):
        load_corpus(path, "full")


def test_textless_mode_allows_missing_tokens(tmp_path, rng):
    cfg = tiny_config()
    bundle = random_bundle(rng, 3, cfg, ex_id="clip-only")
    bundle.tokens = None
    path = tmp_path / "textless.jsonl"
    save_corpus([bundle], path)
    loaded = load_corpus(path, "textless")
    assert loaded[0].tokens is None
    assert loaded[0].n == 3


def test_duplicate_ids_rejected(tmp_path, rng):
    cfg = tiny_config()
    bundle = random_bundle(rng, 2, cfg, ex_id="dup")
    path = tmp_path / "dup.jsonl"
    save_corpus([bundle, bundle], path)
    with pytest.raises(DataValidationError, match="duplicate"):
        load_corpus(path, "full")


def test_schema_violation_names_line(tmp_path):
    path = tmp_path / "junk.jsonl"
    path.write_text('{"id": "x", "clips": "oops"}\n')
    with pytest.raises(DataValidationError, match="line 1"):
        load_corpus(path, "full")


# ---------------------------------------------------------------------------
# synthetic generator


def test_synth_deterministic_per_seed(tmp_path):
    a = _small_synth()
    b = _small_synth()
    pa, pb = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    save_corpus(a, pa)
    save_corpus(b, pb)
    assert pa.read_bytes() == pb.read_bytes()
    c = _small_synth(seed=8)
    assert any(x.tokens != y.tokens for x, y in zip(a, c))


def test_synth_examples_validate_and_have_gold_trees():
    for ex in _small_synth():
        ex.validate("full")
        tree = ex.gold_tree()
        assert sorted(tree_spans(tree)) == sorted(ex.gold_brackets)
        assert bracketing_f1([tree], [tree], "sentence") == 1.0


def test_synth_flat_config_gives_allvoiced_constant_pitch():
    examples = _small_synth(pause_seconds=0.0, f0_slope=0.0, f0_reset=0.0,
                            f0_jitter=0.0)
    for ex in examples:
        voice, nonvoice = vad_aggregate(ex.speech)
        assert np.all(nonvoice == 0.0)
        rows = pitch_indices(ex.speech)
        assert len(set(rows.tolist())) == 1  # constant f0 everywhere


def test_synth_pauses_only_at_shallow_constituent_ends():
    examples = _small_synth(sentence_count=40, pause_depth=1)
    saw_pause = False
    for ex in examples:
        _, nonvoice = vad_aggregate(ex.speech)
        tree = ex.gold_tree()
        spans = tree_spans(tree)
        depths = {}

        def walk(node, depth):
            if isinstance(node, int):
                return node, node
            li, _ = walk(node[0], depth + 1)
            _, rj = walk(node[1], depth + 1)
            depths[(li, rj)] = depth
            return li, rj

        walk(tree, 0)
        shallow_ends = {j for (i, j) in spans
                        if depths[(i, j)] <= 1 and j < ex.n}
        for t in range(ex.n):
            if nonvoice[t] > 0:
                saw_pause = True
                assert (t + 1) in shallow_ends
    assert saw_pause


def test_synth_companion_cooccurrence_rate(tmp_path):
    cfg = SynthConfig(sentence_count=1000, seed=99, companion_prob=0.75,
                      scene_leak=0.0, d_s=4, d_v=40)
    examples = generate_synthetic(cfg)
    slices = lexicon_slices(cfg)
    noun_count = len(slices["Noun"])
    scene_count = cfg.scene_count
    # counting oracle straight off the emitted bundles
    trials = 0
    hits = 0
    for ex in examples:
        cats = set(int(c) for c in ex.regions.categories)
        nouns = {c for c in cats if c < noun_count}
        companions = {c - noun_count for c in cats
                      if noun_count <= c < noun_count + scene_count}
        for noun in nouns:
            trials += 1
            if (noun % scene_count) in companions:
                hits += 1
    rate = hits / trials
    assert abs(rate - cfg.companion_prob) / cfg.companion_prob < 0.05


def test_synth_right_chain_grammar_is_right_branching():
    examples = generate_synthetic(SynthConfig(
        sentence_count=15, seed=3, grammar=right_chain_grammar(), d_s=4, d_v=40))
    for ex in examples:
        assert set(ex.gold_brackets) == set(bracket_set(right_branching(ex.n)))


def test_synth_mean_length_near_eight():
    examples = _small_synth(sentence_count=400, seed=17)
    mean = np.mean([ex.n for ex in examples])
    assert 6.5 <= mean <= 9.5


def test_synth_nonterminating_grammar_raises():
    with pytest.raises(GenerationError):  # no preterminals at all
        generate_synthetic(SynthConfig(
            sentence_count=1, grammar={"S": [("S", "S", 1.0)]}))
    with pytest.raises(GenerationError):  # recursion always exceeds the depth bound
        generate_synthetic(SynthConfig(
            sentence_count=1, grammar={"S": [("S", "Word", 1.0)]}, max_depth=6))


def test_synth_clip_times_quantized_to_frames():
    for ex in _small_synth():
        voice, nonvoice = vad_aggregate(ex.speech)
        for t, (start, end) in enumerate(ex.speech.clips):
            frames = len(ex.speech.vad_frames[t])
            assert end - start == pytest.approx(frames * 0.01, abs=1e-9)
            assert voice[t] + nonvoice[t] == pytest.approx(end - start, abs=1e-9)


def test_bad_gold_brackets_rejected(tmp_path, rng):
    cfg = tiny_config()
    bundle = random_bundle(rng, 3, cfg, ex_id="badgold")
    bundle.gold_brackets = [(1, 3)]  # too few for a binary tree over 3 leaves
    with pytest.raises(DataValidationError, match="badgold"):
        bundle.validate("full")
