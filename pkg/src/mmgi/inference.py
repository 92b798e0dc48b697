"""Model-driven parsing and corpus-level evaluation helpers."""

from __future__ import annotations

from .autodiff import Tensor
from .chart import build_context, chart_dump, inside_pass, outside_pass
from .config import RunConfig
from .corpus import ExampleBundle
from .decode import cky_decode
from .errors import CheckpointError
from .features import PairRelevanceMatrix
from .metrics import bracketing_f1
from .trees import Tree, baseline_tree

__all__ = [
    "build_vocab",
    "corpus_pair_matrix",
    "parse_example",
    "parse_corpus",
    "heldout_sent_f1",
    "ground_span",
    "check_dims",
]


def build_vocab(examples: list[ExampleBundle]) -> list[str]:
    tokens: set[str] = set()
    for ex in examples:
        if ex.tokens:
            tokens.update(ex.tokens)
    return sorted(tokens)


def corpus_pair_matrix(examples: list[ExampleBundle],
                       category_count: int | None = None) -> PairRelevanceMatrix:
    """Pair relevance from the categories detected across a corpus's images."""
    from .features import build_pair_matrix

    sets = [set(int(c) for c in ex.regions.categories) for ex in examples]
    if category_count is None:
        category_count = max(max(s) for s in sets if s) + 1
    return build_pair_matrix(sets, category_count)


def parse_example(example: ExampleBundle, params: dict[str, Tensor],
                  cfg: RunConfig, vocab_index: dict[str, int] | None,
                  pair_matrix: PairRelevanceMatrix | None,
                  with_scores: bool = False):
    """Decode one example's best tree from a fresh (eval-mode) inside chart.

    Returns the tree, or (tree, chart dump) when `with_scores` is set; the
    dump additionally runs the outside pass for the span marginals.
    """
    ctx = build_context(example, params, cfg, vocab_index, pair_matrix)
    if ctx.n == 1:
        if with_scores:
            return 1, {"n": 1, "s_in": {"1,1": 0.0}, "s_out": {}, "q": {}, "argmax_k": {}}
        return 1
    chart = inside_pass(ctx, params, cfg, training=False)
    splits, spans = chart.split_tables()
    tree, _ = cky_decode(splits, spans, ctx.n)
    if with_scores:
        outside_pass(chart, ctx, params, cfg, training=False)
        return tree, chart_dump(chart)
    return tree


def parse_corpus(examples: list[ExampleBundle], params: dict[str, Tensor],
                 cfg: RunConfig, vocab: list[str] | None,
                 pair_matrix: PairRelevanceMatrix | None,
                 baseline: str | None = None, seed: int = 0) -> list[Tree]:
    if baseline is not None:
        return [baseline_tree(ex.n, baseline, seed=seed + idx)
                for idx, ex in enumerate(examples)]
    vocab_index = {t: i for i, t in enumerate(vocab)} if vocab else None
    return [parse_example(ex, params, cfg, vocab_index, pair_matrix)
            for ex in examples]


def heldout_sent_f1(examples: list[ExampleBundle], params: dict[str, Tensor],
                    cfg: RunConfig, vocab: list[str] | None,
                    pair_matrix: PairRelevanceMatrix | None) -> float | None:
    scored = [ex for ex in examples if ex.gold_brackets is not None and ex.n >= 2]
    if not scored:
        return None
    preds = parse_corpus(scored, params, cfg, vocab, pair_matrix)
    golds = [ex.gold_tree() for ex in scored]
    return bracketing_f1(preds, golds, mode="sentence")


def ground_span(chart, ctx, i: int, j: int) -> int:
    """Region index a span grounds to: argmax of region/span similarity."""
    from .metrics import grounding_argmax

    return grounding_argmax(chart.h_in[(i, j)].data, ctx.v_proj.data)


def check_dims(cfg: RunConfig, examples: list[ExampleBundle]) -> None:
    """Fail fast when a checkpoint's dims cannot consume a corpus's features."""
    for ex in examples[:1]:
        d_s = ex.speech.clip_features.shape[1]
        d_v = ex.regions.features.shape[1]
        if d_s != cfg.d_s:
            raise CheckpointError(
                f"checkpoint expects clip features of dim {cfg.d_s}, corpus has {d_s}"
            )
        if d_v != cfg.d_v:
            raise CheckpointError(
                f"checkpoint expects region features of dim {cfg.d_v}, corpus has {d_v}"
            )
