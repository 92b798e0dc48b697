"""Chart passes against the independent recursive oracle, plus the span ops."""

import numpy as np
import pytest

from mmgi import autodiff as ad
from mmgi.autodiff import Tensor
from mmgi.chart import (build_context, chart_dump, init_terminals, inside_pass,
                        region_composition_score, run_chart, span_marginal,
                        visual_span_feature, voice_activity_score)
from mmgi.errors import AlignmentError, DegenerateChartError
from mmgi.features import PairRelevanceMatrix
from mmgi.nn import mlp_compose
from mmgi.params import build_params

from .conftest import random_bundle, tiny_config, tiny_vocab_index
from .oracles import naive_chart, np_sigmoid


def _setup(seed, n, cfg=None, **bundle_kw):
    cfg = cfg or tiny_config()
    rng = np.random.default_rng(seed)
    bundle = random_bundle(rng, n, cfg, **bundle_kw)
    vocab_index = tiny_vocab_index([bundle])
    params = build_params(cfg, len(vocab_index), np.random.default_rng(seed + 1))
    pair = PairRelevanceMatrix(np.random.default_rng(seed + 2).random((5, 5)) * 0.5)
    return cfg, bundle, vocab_index, params, pair


# ---------------------------------------------------------------------------
# terminals


def test_terminals_single_position_is_value_projection():
    cfg, bundle, vocab_index, params, pair = _setup(0, 1)
    ctx = build_context(bundle, params, cfg, vocab_index, pair)
    h = init_terminals(ctx, params, cfg)
    clip_proj = bundle.speech.clip_features @ params["clip_projection"].data
    expect = clip_proj @ params["attn_v"].data
    assert np.allclose(h.data, expect, atol=1e-12)


def test_terminals_attention_rows_sum_to_one():
    cfg, bundle, vocab_index, params, pair = _setup(1, 4)
    ctx = build_context(bundle, params, cfg, vocab_index, pair)
    word_proj = ad.matmul(ctx.word_rows, params["word_projection"])
    clip_proj = ad.matmul(ctx.clip_rows, params["clip_projection"])
    logits = ad.matmul(ad.matmul(word_proj, params["attn_q"]),
                       ad.transpose(ad.matmul(clip_proj, params["attn_k"])))
    rows = ad.softmax(logits, axis=1).data
    assert np.allclose(rows.sum(axis=1), 1.0, atol=1e-12)


def test_terminals_textless_unit_norm():
    cfg, bundle, vocab_index, params, pair = _setup(2, 3, tiny_config(mode="textless"))
    ctx = build_context(bundle, params, cfg, None, pair)
    h = init_terminals(ctx, params, cfg)
    assert np.allclose(np.linalg.norm(h.data, axis=1), 1.0, atol=1e-9)


def test_terminals_length_mismatch_rejected():
    cfg, bundle, vocab_index, params, pair = _setup(3, 3)
    bundle.tokens = bundle.tokens[:2]
    vocab_index = tiny_vocab_index([bundle])
    ctx = build_context(bundle, params, cfg, vocab_index, pair)
    with pytest.raises(AlignmentError):
        init_terminals(ctx, params, cfg)


# ---------------------------------------------------------------------------
# fusion features


def test_visual_span_feature_single_region():
    rng = np.random.default_rng(4)
    h = Tensor(rng.normal(size=4))
    v_proj = Tensor(rng.normal(size=(1, 4)))
    region_sum = Tensor(rng.normal(size=(1, 4)))
    u, att = visual_span_feature(h, v_proj, region_sum)
    assert np.allclose(att.data, [1.0])
    assert np.allclose(u.data, region_sum.data[0], atol=1e-14)


def test_visual_span_feature_identical_regions():
    rng = np.random.default_rng(5)
    h = Tensor(rng.normal(size=4))
    row = rng.normal(size=4)
    srow = rng.normal(size=4)
    u, att = visual_span_feature(h, Tensor(np.stack([row, row])),
                                 Tensor(np.stack([srow, srow])))
    assert np.allclose(att.data, [0.5, 0.5])
    assert np.allclose(u.data, srow, atol=1e-14)


def test_visual_span_feature_matches_naive_sum():
    rng = np.random.default_rng(6)
    h = Tensor(rng.normal(size=5))
    v_proj = rng.normal(size=(3, 5))
    region_sum = rng.normal(size=(3, 5))
    u, att = visual_span_feature(h, Tensor(v_proj), Tensor(region_sum))
    logits = np.array([v_proj[m] @ h.data for m in range(3)])
    weights = np.exp(logits - logits.max())
    weights = weights / weights.sum()
    expect = sum(weights[m] * region_sum[m] for m in range(3))
    assert np.allclose(u.data, expect, atol=1e-12)
    assert np.allclose(att.data, weights, atol=1e-12)


def test_region_composition_single_category():
    att = Tensor(np.array([1.0]))
    pair = Tensor(np.array([[0.37]]))
    assert region_composition_score(att, att, pair).data == pytest.approx(0.37)


def test_region_composition_zero_matrix():
    att = Tensor(np.array([0.25, 0.75]))
    pair = Tensor(np.zeros((2, 2)))
    assert region_composition_score(att, att, pair).data == 0.0


def test_region_composition_matches_double_loop():
    rng = np.random.default_rng(7)
    left = rng.random(3)
    left /= left.sum()
    right = rng.random(3)
    right /= right.sum()
    pair = rng.random((3, 3))
    got = region_composition_score(Tensor(left), Tensor(right), Tensor(pair)).data
    expect = sum(left[m] * right[n] * pair[m, n] for m in range(3) for n in range(3))
    assert abs(float(got) - expect) < 1e-10


def test_voice_activity_score_values():
    voice = np.array([0.5, 0.5])
    silence = np.zeros(2)
    assert voice_activity_score(1, 2, voice, silence) == pytest.approx(-0.5)
    # worked case: single clip in range, nonvoice 0.5 vs voice 0.5
    got = voice_activity_score(1, 2, np.array([0.5, 0.5]), np.array([0.5, 0.0]))
    assert got == pytest.approx(-np_sigmoid(0.5 / (0.5 + 1e-6)))
    assert got == pytest.approx(-0.7311, abs=1e-4)
    assert voice_activity_score(2, 2, voice, silence) == 0.0


def test_voice_activity_score_range_and_monotonicity():
    rng = np.random.default_rng(8)
    voice = rng.uniform(0.1, 0.5, size=6)
    for _ in range(50):
        nonvoice = rng.uniform(0.0, 1.0, size=6)
        value = voice_activity_score(1, 6, voice, nonvoice)
        assert -1.0 < value < 0.0
    # non-increasing in the largest pause, holding voice fixed
    values = [voice_activity_score(1, 6, voice, np.full(6, level))
              for level in np.linspace(0.0, 1.0, 20)]
    assert all(a >= b for a, b in zip(values, values[1:]))


# ---------------------------------------------------------------------------
# passes vs the naive recursive oracle


@pytest.mark.parametrize("seed,n", [(11, 2), (12, 3), (13, 4), (14, 5), (15, 5)])
def test_chart_matches_naive_oracle(seed, n):
    cfg, bundle, vocab_index, params, pair = _setup(seed, n)
    chart, ctx = run_chart(bundle, params, cfg, vocab_index, pair)
    weights = {k: p.data for k, p in params.items()}
    oracle = naive_chart(bundle, weights, cfg, pair.values, vocab_index)
    for i in range(1, n + 1):
        for j in range(i, n + 1):
            key = (i, j)
            assert np.allclose(chart.h_in[key].data, oracle["h_in"][key],
                               atol=1e-8, rtol=1e-8), ("h_in", key)
            assert np.allclose(float(chart.s_in[key].data), oracle["s_in"][key],
                               atol=1e-8, rtol=1e-8), ("s_in", key)
            assert np.allclose(chart.h_out[key].data, oracle["h_out"][key],
                               atol=1e-8, rtol=1e-8), ("h_out", key)
            assert np.allclose(float(chart.s_out[key].data), oracle["s_out"][key],
                               atol=1e-8, rtol=1e-8), ("s_out", key)
            if n >= 2:
                assert np.allclose(float(span_marginal(chart, i, j).data),
                                   oracle["q"][key], atol=1e-8, rtol=1e-8), ("q", key)


def test_chart_matches_naive_oracle_textless():
    cfg = tiny_config(mode="textless")
    rng = np.random.default_rng(21)
    bundle = random_bundle(rng, 4, cfg)
    params = build_params(cfg, 1, np.random.default_rng(22))
    pair = PairRelevanceMatrix(np.random.default_rng(23).random((5, 5)))
    chart, _ = run_chart(bundle, params, cfg, None, pair)
    oracle = naive_chart(bundle, {k: p.data for k, p in params.items()},
                         cfg, pair.values, None)
    for key in chart.s_in:
        assert np.allclose(float(chart.s_in[key].data), oracle["s_in"][key],
                           atol=1e-8)
        assert np.allclose(chart.h_out[key].data, oracle["h_out"][key], atol=1e-8)


def test_inside_two_tokens_single_split():
    cfg, bundle, vocab_index, params, pair = _setup(31, 2)
    ctx = build_context(bundle, params, cfg, vocab_index, pair)
    chart = inside_pass(ctx, params, cfg)
    assert np.allclose(ad.softmax(chart.split_in[(1, 2)]).data, [1.0])
    # recompute h_{1,2} directly: fused children through the composition MLP
    pooled = ctx.pitch_seq.data[0:2].mean(axis=0)
    left = chart.h_in[(1, 1)].data + cfg.gamma * chart.u[(1, 1)].data \
        + cfg.lam * pooled
    right = chart.h_in[(2, 2)].data + cfg.gamma * chart.u[(2, 2)].data \
        + cfg.lam * pooled
    expect = mlp_compose(Tensor(left), Tensor(right), params["compose_in_w1"],
                         params["compose_in_b1"], params["compose_in_w2"],
                         params["compose_in_b2"]).data
    assert np.allclose(chart.h_in[(1, 2)].data, expect, atol=1e-12)


def test_chart_shape_invariants():
    cfg, bundle, vocab_index, params, pair = _setup(32, 4)
    chart, _ = run_chart(bundle, params, cfg, vocab_index, pair)
    assert len(chart.h_in) == 4 * 5 // 2
    assert len(chart.h_out) == 4 * 5 // 2
    assert chart.split_in[(1, 4)].data.shape == (3,)
    for key, scores in chart.split_in.items():
        assert abs(ad.softmax(scores).data.sum() - 1.0) <= 1e-12


def test_outside_two_tokens_context_formula():
    cfg, bundle, vocab_index, params, pair = _setup(33, 2)
    chart, ctx = run_chart(bundle, params, cfg, vocab_index, pair)
    expect = mlp_compose(params["root_outside_bias"], chart.h_in[(2, 2)],
                         params["compose_out_w1"], params["compose_out_b1"],
                         params["compose_out_w2"], params["compose_out_b2"]).data
    assert np.allclose(chart.h_out[(1, 1)].data, expect, atol=1e-12)
    assert float(chart.s_out[(1, 2)].data) == 0.0
    assert np.array_equal(chart.h_out[(1, 2)].data, params["root_outside_bias"].data)


def test_span_marginal_contract():
    cfg, bundle, vocab_index, params, pair = _setup(34, 3)
    chart, _ = run_chart(bundle, params, cfg, vocab_index, pair)
    assert float(span_marginal(chart, 1, 3).data) == 0.0  # root outside score is 0
    first = span_marginal(chart, 1, 2).data
    second = span_marginal(chart, 1, 2).data
    assert np.array_equal(first, second)

    dump = chart_dump(chart)
    root = dump["s_in"]["1,3"]
    for key, q in dump["q"].items():
        assert q == pytest.approx(dump["s_in"][key] * dump["s_out"][key] / root,
                                  abs=1e-12)

    chart.s_in[(1, 3)] = Tensor(0.0)
    with pytest.raises(DegenerateChartError):
        span_marginal(chart, 1, 2)


def test_fusion_terms_are_additive_only():
    # zero fusion weights + zero pair matrix + voice off == fusion disabled
    cfg_zero = tiny_config(gamma=0.0, lam=0.0, use_voice=False)
    rng = np.random.default_rng(35)
    bundle = random_bundle(rng, 4, cfg_zero)
    vocab_index = tiny_vocab_index([bundle])
    params = build_params(cfg_zero, len(vocab_index), np.random.default_rng(36))
    zero_pair = PairRelevanceMatrix(np.zeros((5, 5)))
    fused, _ = run_chart(bundle, params, cfg_zero, vocab_index, zero_pair)

    cfg_off = tiny_config(use_visual=False, use_pitch=False, use_voice=False)
    plain, _ = run_chart(bundle, params, cfg_off, vocab_index, None)
    for key in fused.h_in:
        assert np.array_equal(fused.h_in[key].data, plain.h_in[key].data), key
        assert np.array_equal(fused.s_in[key].data, plain.s_in[key].data), key
        assert np.array_equal(fused.h_out[key].data, plain.h_out[key].data), key
        assert np.array_equal(fused.s_out[key].data, plain.s_out[key].data), key


def test_chart_deterministic_given_inputs():
    cfg, bundle, vocab_index, params, pair = _setup(37, 3)
    a, _ = run_chart(bundle, params, cfg, vocab_index, pair)
    b, _ = run_chart(bundle, params, cfg, vocab_index, pair)
    for key in a.h_in:
        assert np.array_equal(a.h_in[key].data, b.h_in[key].data)


def test_ground_span_matches_raw_argmax():
    from mmgi.inference import ground_span
    cfg, bundle, vocab_index, params, pair = _setup(38, 3)
    chart, ctx = run_chart(bundle, params, cfg, vocab_index, pair)
    got = ground_span(chart, ctx, 1, 3)
    assert got == int(np.argmax(ctx.v_proj.data @ chart.h_in[(1, 3)].data))
