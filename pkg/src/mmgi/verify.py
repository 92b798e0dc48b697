"""Gradient verification suite: named finite-difference checks, CLI-facing."""

from __future__ import annotations

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .chart import run_chart
from .config import RunConfig
from .gradcheck import grad_check
from .inference import build_vocab, corpus_pair_matrix
from .losses import batch_loss
from .nn import lstm_forward, mlp_compose
from .params import build_params
from .synth import SynthConfig, generate_synthetic

__all__ = ["three_token_grammar", "end_to_end_fixture", "verification_suite"]

TOLERANCE = 1e-4


def three_token_grammar() -> dict:
    """Deterministic 3-word yield: determiner, adjective, noun."""
    return {"S": [("Det", "NBAR", 1.0)], "NBAR": [("Adj", "Noun", 1.0)]}


def end_to_end_fixture(seed: int = 0, batch_size: int = 2):
    """A tiny batch plus a closure computing the full training loss.

    Every fusion path is active (visual span features, pair scores, pitch,
    voice activity) and all three loss terms contribute. The negative-sample
    rng is re-seeded inside the closure so repeated evaluations (as in
    finite differencing) see identical sampling.
    """
    scfg = SynthConfig(
        sentence_count=batch_size, seed=seed, vocab_size=12, d_s=6, d_v=10,
        grammar=three_token_grammar(), scene_count=2, distractor_count=1,
        companion_prob=1.0, pause_depth=1, pause_seconds=0.1,
    )
    examples = generate_synthetic(scfg)
    cfg = RunConfig(d=6, d_w=6, d_v=10, d_s=6, d_a=5, batch=batch_size,
                    dropout=0.0, seed=seed, mode="full").resolved()
    vocab = build_vocab(examples)
    vocab_index = {t: i for i, t in enumerate(vocab)}
    pair = corpus_pair_matrix(examples)
    params = build_params(cfg, len(vocab), np.random.default_rng([seed, 7]))

    def loss_fn() -> Tensor:
        batch = [run_chart(ex, params, cfg, vocab_index, pair, training=False)
                 for ex in examples]
        total, _ = batch_loss(batch, params, cfg, np.random.default_rng([seed, 11]))
        return total

    return loss_fn, params, examples, cfg


def verification_suite(seed: int = 0, probes_per_tensor: int = 4) -> dict[str, float]:
    """Max relative FD error per named check; all should fall below 1e-4."""
    rng = np.random.default_rng(seed)
    results: dict[str, float] = {}

    const = {"x": Tensor(rng.normal(size=(4,)), requires_grad=True)}
    results["constant"] = grad_check(
        lambda: ad.tensor_sum(const["x"] * 0.0) + 3.5, const, probes_per_tensor=4)

    slope = ad.constant(rng.normal(size=(4,)))
    lin = {"x": Tensor(rng.normal(size=(4,)), requires_grad=True)}
    results["linear"] = grad_check(
        lambda: ad.tensor_sum(slope * lin["x"]), lin, probes_per_tensor=4)

    sm = {"v": Tensor(rng.normal(size=(6,)), requires_grad=True)}
    direction = ad.constant(rng.normal(size=(6,)))
    results["softmax"] = grad_check(
        lambda: ad.tensor_sum(ad.softmax(sm["v"]) * direction), sm,
        probes_per_tensor=6)

    d = 5
    mlp = {
        "w1": Tensor(rng.normal(size=(2 * d, d)) * 0.4, requires_grad=True),
        "b1": Tensor(rng.normal(size=(d,)) * 0.4, requires_grad=True),
        "w2": Tensor(rng.normal(size=(d, d)) * 0.4, requires_grad=True),
        "b2": Tensor(rng.normal(size=(d,)) * 0.4, requires_grad=True),
        "left": Tensor(rng.normal(size=(d,)), requires_grad=True),
        "right": Tensor(rng.normal(size=(d,)), requires_grad=True),
    }
    probe = ad.constant(rng.normal(size=(d,)))
    results["mlp_compose"] = grad_check(
        lambda: ad.tensor_sum(mlp_compose(
            mlp["left"], mlp["right"], mlp["w1"], mlp["b1"], mlp["w2"], mlp["b2"],
        ) * probe), mlp, probes_per_tensor=6)

    lstm = {
        "wx": Tensor(rng.normal(size=(3, 12)) * 0.4, requires_grad=True),
        "wh": Tensor(rng.normal(size=(3, 12)) * 0.4, requires_grad=True),
        "b": Tensor(rng.normal(size=(12,)) * 0.4, requires_grad=True),
        "x": Tensor(rng.normal(size=(4, 3)), requires_grad=True),
    }
    weights = ad.constant(rng.normal(size=(4, 3)))
    results["lstm"] = grad_check(
        lambda: ad.tensor_sum(lstm_forward(lstm["x"], lstm["wx"], lstm["wh"],
                                           lstm["b"]) * weights),
        lstm, probes_per_tensor=8)

    loss_fn, params, _, _ = end_to_end_fixture(seed=seed)
    results["end_to_end_total_loss"] = grad_check(
        loss_fn, params, probes_per_tensor=probes_per_tensor,
        rng=np.random.default_rng([seed, 13]))
    return results
