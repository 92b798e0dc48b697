"""Differentiable span chart: terminal init, fused inside pass, outside pass.

The chart holds, for every span (i, j) with 1 <= i <= j <= n, an inside
vector/score pair built bottom-up from its decompositions and an outside
vector/score pair built top-down from its contexts. Region, pitch, and
voice-activity features enter the inside pass only, and only additively:
with zero fusion weights, a zero pair matrix, and the voice term disabled,
the pass is exactly the text-only chart.

Span indices are 1-based inclusive throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .config import RunConfig
from .corpus import ExampleBundle
from .errors import (AlignmentError, ChartError, DataValidationError,
                     DegenerateChartError)
from .features import (PairRelevanceMatrix, normalize_bbox, pitch_features,
                       vad_aggregate)
from .nn import mlp_compose

__all__ = [
    "ExampleContext",
    "Chart",
    "build_context",
    "init_terminals",
    "visual_span_feature",
    "region_composition_score",
    "voice_activity_score",
    "inside_pass",
    "outside_pass",
    "span_marginal",
    "run_chart",
    "chart_dump",
]

ROOT_EPS = 1e-12


@dataclass
class ExampleContext:
    """Per-example tensors the passes consume; rebuilt per optimization step
    because projections are functions of the current parameters."""

    n: int
    token_ids: np.ndarray | None
    word_rows: Tensor | None        # (n, d_w) embedding rows
    clip_rows: Tensor               # (T, d_s) constants
    region_rows: Tensor             # (M, d_v) constants
    v_proj: Tensor                  # (M, d) projected region features
    region_sum: Tensor | None       # (M, d) v_proj + bbox embeds; None = fusion off
    pair_sub: Tensor | None         # (M, M) pair relevance for this image
    pitch_seq: Tensor | None        # (T, d)
    voice_time: np.ndarray | None   # (T,)
    nonvoice_time: np.ndarray | None


@dataclass
class Chart:
    n: int
    h_in: dict = field(default_factory=dict)
    s_in: dict = field(default_factory=dict)
    split_in: dict = field(default_factory=dict)    # (i, j) -> (K,) scores, j > i
    h_out: dict = field(default_factory=dict)
    s_out: dict = field(default_factory=dict)
    att: dict = field(default_factory=dict)         # object attention per span
    u: dict = field(default_factory=dict)           # visual span feature

    def spans(self):
        for length in range(1, self.n + 1):
            for i in range(1, self.n - length + 2):
                yield i, i + length - 1

    def split_tables(self) -> tuple[dict, dict]:
        """Plain-float decomposition and span score tables for decoding."""
        splits = {key: t.data.copy() for key, t in self.split_in.items()}
        spans = {key: float(t.data) for key, t in self.s_in.items()}
        return splits, spans


def build_context(example: ExampleBundle, params: dict[str, Tensor],
                  cfg: RunConfig, vocab_index: dict[str, int] | None,
                  pair_matrix: PairRelevanceMatrix | None) -> ExampleContext:
    """Project raw modalities once per example; regions are capped at roi_count."""
    textless = cfg.mode == "textless"
    n = example.speech.count if textless else len(example.tokens or [])

    token_ids = None
    word_rows = None
    if not textless:
        if example.tokens is None:
            raise AlignmentError(f"example {example.id}: full mode requires tokens")
        try:
            token_ids = np.array([vocab_index[t] for t in example.tokens], dtype=np.intp)
        except KeyError as exc:
            raise DataValidationError(
                f"example {example.id}: token {exc.args[0]!r} outside the vocabulary"
            ) from exc
        word_rows = ad.gather_rows(params["word_embeddings"], token_ids)

    clip_rows = ad.constant(example.speech.clip_features)

    keep = min(example.regions.count, cfg.roi_count)
    region_rows = ad.constant(example.regions.features[:keep])
    v_proj = ad.matmul(region_rows, params["vision_projection"])
    region_sum = pair_sub = None
    if cfg.use_visual:
        width, height = example.regions.image_size
        units = np.stack([
            normalize_bbox(example.regions.bboxes[m], width, height, index=m)
            for m in range(keep)
        ])
        boxes = ad.matmul(ad.constant(units), params["bbox_embed_w"]) + params["bbox_embed_b"]
        region_sum = v_proj + boxes
        if pair_matrix is not None:
            pair_sub = ad.constant(pair_matrix.submatrix(example.regions.categories[:keep]))

    pitch_seq = None
    if cfg.use_pitch:
        pitch_seq = pitch_features(
            example.speech, params["pitch_embedding"], params["pitch_lstm_wx"],
            params["pitch_lstm_wh"], params["pitch_lstm_b"],
        )

    voice_time = nonvoice_time = None
    if cfg.use_voice:
        voice_time, nonvoice_time = vad_aggregate(example.speech)

    return ExampleContext(
        n=n, token_ids=token_ids, word_rows=word_rows, clip_rows=clip_rows,
        region_rows=region_rows, v_proj=v_proj, region_sum=region_sum,
        pair_sub=pair_sub, pitch_seq=pitch_seq, voice_time=voice_time,
        nonvoice_time=nonvoice_time,
    )


# ---------------------------------------------------------------------------
# terminal initialization


def init_terminals(ctx: ExampleContext, params: dict[str, Tensor],
                   cfg: RunConfig) -> Tensor:
    """(n, d) terminal vectors.

    Full setting: each word attends over the clip sequence (cross-attention
    without scaling) and takes the attention-weighted value projection of the
    clips. Textless: the projected clip itself, L2-normalized.
    """
    clip_proj = ad.matmul(ctx.clip_rows, params["clip_projection"])  # (T, d)
    if cfg.mode == "textless":
        sq = ad.tensor_sum(clip_proj * clip_proj, axis=1)
        norms = ad.reshape(ad.sqrt(sq + 1e-16), (ctx.clip_rows.data.shape[0], 1))
        return ad.div(clip_proj, norms)
    if ctx.word_rows is None or ctx.word_rows.data.shape[0] != clip_proj.data.shape[0]:
        have = None if ctx.word_rows is None else ctx.word_rows.data.shape[0]
        raise AlignmentError(
            f"full setting requires one clip per token, got {have} tokens "
            f"vs {clip_proj.data.shape[0]} clips"
        )
    word_proj = ad.matmul(ctx.word_rows, params["word_projection"])  # (n, d)
    queries = ad.matmul(word_proj, params["attn_q"])
    keys = ad.matmul(clip_proj, params["attn_k"])
    values = ad.matmul(clip_proj, params["attn_v"])
    attention = ad.softmax(ad.matmul(queries, ad.transpose(keys)), axis=1)
    return ad.matmul(attention, values)


# ---------------------------------------------------------------------------
# fusion features


def visual_span_feature(h_in: Tensor, v_proj: Tensor,
                        region_sum: Tensor) -> tuple[Tensor, Tensor]:
    """Attention-pooled region feature for one span: (u, attention weights)."""
    att = ad.softmax(ad.matmul(v_proj, h_in))
    return ad.matmul(att, region_sum), att


def region_composition_score(att_left: Tensor, att_right: Tensor,
                             pair_sub: Tensor) -> Tensor:
    """How plausibly two sub-spans' attended regions compose, via the pair matrix."""
    return ad.matmul(ad.matmul(att_left, pair_sub), att_right)


def voice_activity_score(i: int, j: int, voice_time: np.ndarray,
                         nonvoice_time: np.ndarray) -> float:
    """Speech-rhythm density of span (i, j): penalizes internal pauses.

    Ranges over clips i..j-1; an empty range (j == i) scores 0. Always in
    (-1, 0) otherwise.
    """
    if j <= i:
        return 0.0
    seg_nonvoice = nonvoice_time[i - 1:j - 1]
    seg_voice = voice_time[i - 1:j - 1]
    ratio = seg_nonvoice.max() / (seg_voice.mean() + 1e-6)
    return float(-1.0 / (1.0 + np.exp(-ratio)))


# ---------------------------------------------------------------------------
# passes


def _span_extras(chart: Chart, ctx: ExampleContext, key: tuple[int, int]) -> None:
    if ctx.region_sum is not None:
        u, att = visual_span_feature(chart.h_in[key], ctx.v_proj, ctx.region_sum)
        chart.u[key] = u
        chart.att[key] = att


def inside_pass(ctx: ExampleContext, params: dict[str, Tensor], cfg: RunConfig,
                training: bool = False,
                rng: np.random.Generator | None = None) -> Chart:
    """Fill inside vectors/scores bottom-up, caching decomposition scores.

    Spans of each length are visited left to right; every cell is written
    exactly once.
    """
    n = ctx.n
    chart = Chart(n=n)
    terminals = init_terminals(ctx, params, cfg)
    d = terminals.data.shape[1]
    zero = ad.constant(0.0)
    for i in range(1, n + 1):
        key = (i, i)
        chart.h_in[key] = ad.reshape(ad.slice_axis0(terminals, i - 1, i), (d,))
        chart.s_in[key] = zero
        _span_extras(chart, ctx, key)

    gamma, lam = cfg.gamma, cfg.lam
    for length in range(2, n + 1):
        for i in range(1, n - length + 2):
            j = i + length - 1
            ks = list(range(i, j))
            left = ad.stack([chart.h_in[(i, k)] for k in ks])
            right = ad.stack([chart.h_in[(k + 1, j)] for k in ks])
            if ctx.region_sum is not None:
                left = left + gamma * ad.stack([chart.u[(i, k)] for k in ks])
                right = right + gamma * ad.stack([chart.u[(k + 1, j)] for k in ks])
            if ctx.pitch_seq is not None:
                pooled = ad.tensor_mean(ad.slice_axis0(ctx.pitch_seq, i - 1, j), axis=0)
                left = left + lam * pooled
                right = right + lam * pooled

            composed = mlp_compose(
                left, right, params["compose_in_w1"], params["compose_in_b1"],
                params["compose_in_w2"], params["compose_in_b2"],
                dropout_rate=cfg.dropout, rng=rng, training=training,
            )
            scores = ad.tensor_sum(
                ad.matmul(left, params["bilinear_inside"]) * right, axis=1
            )
            if ctx.pair_sub is not None:
                att_left = ad.stack([chart.att[(i, k)] for k in ks])
                att_right = ad.stack([chart.att[(k + 1, j)] for k in ks])
                scores = scores + ad.tensor_sum(
                    ad.matmul(att_left, ctx.pair_sub) * att_right, axis=1
                )
            if ctx.voice_time is not None:
                scores = scores + voice_activity_score(
                    i, j, ctx.voice_time, ctx.nonvoice_time
                )
            scores = scores \
                + ad.stack([chart.s_in[(i, k)] for k in ks]) \
                + ad.stack([chart.s_in[(k + 1, j)] for k in ks])
            if not np.all(np.isfinite(scores.data)):
                bad = int(np.flatnonzero(~np.isfinite(scores.data))[0])
                raise ChartError(
                    f"non-finite inside score at span ({i}, {j}), split k={ks[bad]}"
                )
            weights = ad.softmax(scores)
            key = (i, j)
            chart.split_in[key] = scores
            chart.h_in[key] = ad.matmul(weights, composed)
            chart.s_in[key] = ad.tensor_sum(scores * weights)
            _span_extras(chart, ctx, key)
    return chart


def outside_pass(chart: Chart, ctx: ExampleContext, params: dict[str, Tensor],
                 cfg: RunConfig, training: bool = False,
                 rng: np.random.Generator | None = None) -> Chart:
    """Fill outside vectors/scores top-down.

    Each context of span (i, j) pairs a parent outside cell with a sibling
    inside cell: position k > j uses parent (i, k) and sibling (j+1, k);
    k < i uses parent (k, j) and sibling (k, i-1). The root has no context;
    its outside vector is a learned bias and its outside score is zero.
    """
    n = chart.n
    chart.h_out[(1, n)] = params["root_outside_bias"]
    chart.s_out[(1, n)] = ad.constant(0.0)
    for length in range(n - 1, 0, -1):
        for i in range(1, n - length + 2):
            j = i + length - 1
            parents = []
            siblings = []
            parent_scores = []
            sibling_scores = []
            for k in range(1, i):
                parents.append(chart.h_out[(k, j)])
                siblings.append(chart.h_in[(k, i - 1)])
                parent_scores.append(chart.s_out[(k, j)])
                sibling_scores.append(chart.s_in[(k, i - 1)])
            for k in range(j + 1, n + 1):
                parents.append(chart.h_out[(i, k)])
                siblings.append(chart.h_in[(j + 1, k)])
                parent_scores.append(chart.s_out[(i, k)])
                sibling_scores.append(chart.s_in[(j + 1, k)])
            parent_mat = ad.stack(parents)
            sibling_mat = ad.stack(siblings)
            composed = mlp_compose(
                parent_mat, sibling_mat, params["compose_out_w1"],
                params["compose_out_b1"], params["compose_out_w2"],
                params["compose_out_b2"],
                dropout_rate=cfg.dropout, rng=rng, training=training,
            )
            scores = ad.tensor_sum(
                ad.matmul(parent_mat, params["bilinear_outside"]) * sibling_mat, axis=1
            ) + ad.stack(parent_scores) + ad.stack(sibling_scores)
            if not np.all(np.isfinite(scores.data)):
                bad = int(np.flatnonzero(~np.isfinite(scores.data))[0])
                raise ChartError(
                    f"non-finite outside score at span ({i}, {j}), context {bad}"
                )
            weights = ad.softmax(scores)
            chart.h_out[(i, j)] = ad.matmul(weights, composed)
            chart.s_out[(i, j)] = ad.tensor_sum(scores * weights)
    return chart


def span_marginal(chart: Chart, i: int, j: int) -> Tensor:
    """q(i, j): inside times outside score, normalized by the root inside score."""
    root = chart.s_in[(1, chart.n)]
    if abs(float(root.data)) < ROOT_EPS:
        raise DegenerateChartError(
            f"root inside score {float(root.data):.3e} too small to normalize"
        )
    return ad.div(chart.s_in[(i, j)] * chart.s_out[(i, j)], root)


def run_chart(example: ExampleBundle, params: dict[str, Tensor], cfg: RunConfig,
              vocab_index: dict[str, int] | None,
              pair_matrix: PairRelevanceMatrix | None,
              training: bool = False, rng: np.random.Generator | None = None,
              outside: bool = True) -> tuple[Chart, ExampleContext]:
    """Context + inside (+ optionally outside) in one call."""
    ctx = build_context(example, params, cfg, vocab_index, pair_matrix)
    chart = inside_pass(ctx, params, cfg, training=training, rng=rng)
    if outside:
        outside_pass(chart, ctx, params, cfg, training=training, rng=rng)
    return chart, ctx


def chart_dump(chart: Chart) -> dict:
    """JSON-friendly dump of all scores, marginals, and the argmax splits."""
    doc: dict = {"n": chart.n, "s_in": {}, "s_out": {}, "q": {}, "argmax_k": {}}
    for (i, j) in chart.spans():
        key = f"{i},{j}"
        doc["s_in"][key] = float(chart.s_in[(i, j)].data)
        if (i, j) in chart.s_out:
            doc["s_out"][key] = float(chart.s_out[(i, j)].data)
            doc["q"][key] = float(span_marginal(chart, i, j).data)
        if j > i:
            doc["argmax_k"][key] = i + int(np.argmax(chart.split_in[(i, j)].data))
    return doc
