"""Model parameters: construction, counting, and checkpoint round-trips."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .autodiff import Tensor
from .config import RunConfig, config_hash
from .errors import CheckpointError
from .nn import glorot_uniform
from .optim import Adam

__all__ = [
    "PITCH_VOCAB",
    "build_params",
    "parameter_count",
    "save_checkpoint",
    "load_checkpoint",
]

# 451 voiced pitch bins (50..500 Hz inclusive) plus one reserved unvoiced row.
PITCH_VOCAB = 452


def _shapes(cfg: RunConfig, vocab_size: int) -> list[tuple[str, tuple[int, ...], tuple[int, int]]]:
    """(name, shape, (fan_in, fan_out)) for every learnable tensor, in a fixed order."""
    d, d_w, d_v, d_s, d_a = cfg.d, cfg.d_w, cfg.d_v, cfg.d_s, cfg.d_a
    d_p = cfg.d_p if cfg.d_p is not None else d
    return [
        ("word_embeddings", (vocab_size, d_w), (vocab_size, d_w)),
        ("word_projection", (d_w, d), (d_w, d)),
        ("clip_projection", (d_s, d), (d_s, d)),
        ("vision_projection", (d_v, d), (d_v, d)),
        ("attn_q", (d, d), (d, d)),
        ("attn_k", (d, d), (d, d)),
        ("attn_v", (d, d), (d, d)),
        ("compose_in_w1", (2 * d, d), (2 * d, d)),
        ("compose_in_b1", (d,), (2 * d, d)),
        ("compose_in_w2", (d, d), (d, d)),
        ("compose_in_b2", (d,), (d, d)),
        ("compose_out_w1", (2 * d, d), (2 * d, d)),
        ("compose_out_b1", (d,), (2 * d, d)),
        ("compose_out_w2", (d, d), (d, d)),
        ("compose_out_b2", (d,), (d, d)),
        ("bilinear_inside", (d, d), (d, d)),
        ("bilinear_outside", (d, d), (d, d)),
        ("pitch_embedding", (PITCH_VOCAB, d_p), (PITCH_VOCAB, d_p)),
        ("pitch_lstm_wx", (d_p, 4 * d_p), (d_p, 4 * d_p)),
        ("pitch_lstm_wh", (d_p, 4 * d_p), (d_p, 4 * d_p)),
        ("pitch_lstm_b", (4 * d_p,), (d_p, 4 * d_p)),
        ("bbox_embed_w", (4, d), (4, d)),
        ("bbox_embed_b", (d,), (4, d)),
        ("root_outside_bias", (d,), (d, d)),
        ("align_proj_speech", (d_s, d_a), (d_s, d_a)),
        ("align_proj_vision", (d_v, d_a), (d_v, d_a)),
        ("align_proj_text", (d_w, d_a), (d_w, d_a)),
    ]


def build_params(cfg: RunConfig, vocab_size: int, rng: np.random.Generator) -> dict[str, Tensor]:
    """Seeded glorot-uniform init for matrices; biases start at zero except the
    root outside bias, which needs symmetry breaking."""
    params: dict[str, Tensor] = {}
    for name, shape, (fi, fo) in _shapes(cfg, vocab_size):
        if len(shape) == 1 and name != "root_outside_bias":
            data = np.zeros(shape)
        else:
            data = glorot_uniform(rng, shape, fan_in=fi, fan_out=fo)
        params[name] = Tensor(data, requires_grad=True)
    return params


def parameter_count(cfg: RunConfig, vocab_size: int) -> int:
    return sum(int(np.prod(shape)) for _, shape, _ in _shapes(cfg, vocab_size))


def save_checkpoint(path: str | Path, params: dict[str, Tensor],
                    cfg: RunConfig, vocab: list[str] | None,
                    optimizer: Adam | None = None,
                    pair_matrix: np.ndarray | None = None) -> None:
    """Single-file .npz: config hash + snapshot, step count, tensors, moments."""
    arrays: dict[str, np.ndarray] = {}
    for name, p in params.items():
        arrays[f"param/{name}"] = p.data
    step = 0
    if optimizer is not None:
        step = optimizer.step_count
        for name in params:
            arrays[f"adam_m/{name}"] = optimizer.m[name]
            arrays[f"adam_v/{name}"] = optimizer.v[name]
    if pair_matrix is not None:
        arrays["pair_matrix"] = np.asarray(pair_matrix, dtype=np.float64)
    meta = {
        "config": cfg.to_dict(),
        "config_hash": config_hash(cfg, {"vocab_size": len(vocab) if vocab else 0}),
        "vocab": vocab,
        "step": step,
    }
    arrays["__meta__"] = np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8)
    np.savez(path, **arrays)


def load_checkpoint(path: str | Path):
    """Returns (params, cfg, vocab, step, adam_state|None, pair_matrix|None)."""
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"checkpoint not found: {path}")
    with np.load(path, allow_pickle=False) as archive:
        if "__meta__" not in archive:
            raise CheckpointError(f"{path} is not a checkpoint (missing metadata)")
        meta = json.loads(bytes(archive["__meta__"]).decode())
        cfg = RunConfig(**meta["config"])
        params = {}
        adam_m, adam_v = {}, {}
        pair_matrix = None
        for key in archive.files:
            if key.startswith("param/"):
                params[key[6:]] = Tensor(archive[key].copy(), requires_grad=True)
            elif key.startswith("adam_m/"):
                adam_m[key[7:]] = archive[key].copy()
            elif key.startswith("adam_v/"):
                adam_v[key[7:]] = archive[key].copy()
            elif key == "pair_matrix":
                pair_matrix = archive[key].copy()
    expected = {name for name, _, _ in _shapes(cfg, len(meta["vocab"] or []) or 1)}
    if meta["vocab"]:
        missing = expected - set(params)
        if missing:
            raise CheckpointError(f"{path}: missing tensors {sorted(missing)}")
    adam_state = None
    if adam_m:
        adam_state = {"step": meta["step"], "m": adam_m, "v": adam_v}
    return params, cfg, meta["vocab"], meta["step"], adam_state, pair_matrix
