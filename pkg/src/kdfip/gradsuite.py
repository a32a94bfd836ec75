"""Finite-difference verification suite over every primitive and the
end-to-end stage losses, on deliberately tiny models so the full sweep runs
in seconds."""

from __future__ import annotations

import numpy as np

from .config import StageConfig
from .engine import Tensor, finite_diff_gradcheck, ops
from .model import ModelConfig, forward_frames, init_adapters, init_backbone, make_batch
from .rng import stream
from .simdata import build_text_pool, build_vocab, gen_corpus, sample_speaker_profile
from .training import ce_frame_loss, hybrid_loss, kl_frame_loss

TINY = ModelConfig(blocks=2, hidden=8, bottleneck=3, vocab_size=4, feature_dim=5)


def _scalarize(x) -> Tensor:
    out = x
    while out.ndim > 0:
        out = ops.mean_axis(out, 0)
    return out


def _primitive_cases(seed: int):
    g = stream(seed, "gradsuite", "primitives")
    a = g.standard_normal((4, 3))
    b = g.standard_normal((3, 5))
    c = g.standard_normal((4, 3))
    # keep relu inputs away from the kink so central differences are valid
    r = g.standard_normal((4, 6))
    r = np.where(np.abs(r) < 0.2, r + np.sign(r) * 0.3, r)
    idx = np.array([0, 2, 2, 3, 1])
    cases = {
        "matmul": ({"a": a, "b": b}, lambda p: _scalarize(ops.matmul(p["a"], p["b"]))),
        "add": ({"a": a, "c": c}, lambda p: _scalarize(ops.add(p["a"], p["c"]))),
        "mul": ({"a": a, "c": c}, lambda p: _scalarize(ops.mul(p["a"], p["c"]))),
        "relu": ({"r": r}, lambda p: _scalarize(ops.relu(p["r"]))),
        "tanh": ({"a": a}, lambda p: _scalarize(ops.tanh(p["a"]))),
        "layer_norm": (
            {"r": r},
            lambda p: _scalarize(ops.mul(ops.layer_norm(p["r"]), Tensor(np.cos(r)))),
        ),
        "softmax": (
            {"a": a},
            lambda p: _scalarize(ops.mul(ops.softmax(p["a"]), Tensor(np.sin(a) + 2.0))),
        ),
        "log_softmax": (
            {"a": a},
            lambda p: _scalarize(ops.mul(ops.log_softmax(p["a"]), Tensor(np.cos(a) + 2.0))),
        ),
        "row_gather": ({"a": a}, lambda p: _scalarize(ops.row_gather(p["a"], idx))),
        "mean_axis": ({"a": a}, lambda p: _scalarize(ops.mean_axis(p["a"], 1))),
        "concat": (
            {"a": a, "c": c},
            lambda p: _scalarize(ops.mul(ops.concat([p["a"], p["c"]], axis=1), Tensor(np.tanh(np.concatenate([a, c], axis=1)) + 1.5))),
        ),
        "scale": ({"a": a}, lambda p: _scalarize(ops.scale(p["a"], -2.5))),
    }
    return cases


def _tiny_fixtures(seed: int):
    vocab = build_vocab(seed, TINY.vocab_size, TINY.feature_dim)
    pool = build_text_pool(seed, vocab, 10, 2, 4)
    profile = sample_speaker_profile(seed, "probe", 0.5, TINY.feature_dim)
    corpus = gen_corpus(
        role="personal",
        split="train",
        size=3,
        vocab=vocab,
        profiles=[profile],
        sigma_obs=0.1,
        text_pool=pool,
        master_seed=seed,
        tag="gradsuite",
    )
    return make_batch(corpus.utterances, TINY)


def _end_to_end_cases(seed: int):
    batch = _tiny_fixtures(seed)
    backbone = init_backbone(TINY, seed)
    adapters = init_adapters(TINY, seed)
    # zero-init adapter outputs hide the up-projection from finite differences;
    # perturb them so every parameter carries signal
    g = stream(seed, "gradsuite", "warm")
    adapters = {
        k: v + 0.3 * g.standard_normal(v.shape) for k, v in adapters.items()
    }
    teacher_lp = forward_frames(backbone, batch, TINY, adapters=adapters).data
    gate_values = np.asarray([0.3, 0.8, 0.6])

    def stage1_loss(p):
        lp = forward_frames(p, batch, TINY)
        return ce_frame_loss(lp, batch.labels)

    def stage3_loss(p):
        lp = forward_frames(backbone, batch, TINY, adapters=p)
        ce = ce_frame_loss(lp, batch.labels)
        kl = kl_frame_loss(teacher_lp * 0.9, lp)
        total, _ = hybrid_loss(ce, kl, 0.01)
        return total

    def stage4_loss(p):
        lp = forward_frames(p, batch, TINY, adapters=adapters, gate_values=gate_values)
        ce = ce_frame_loss(lp, batch.labels)
        kl = kl_frame_loss(teacher_lp, lp)
        total, _ = hybrid_loss(ce, kl, 0.01)
        return total

    return {
        "stage1_ce": (backbone, stage1_loss),
        "stage3_hybrid": (adapters, stage3_loss),
        "stage4_gated_hybrid": (backbone, stage4_loss),
    }


def gradcheck_suite(h: float = 1e-5, seed: int = 20240) -> dict[str, float]:
    """Max relative autodiff-vs-central-difference error per case."""
    results: dict[str, float] = {}
    for name, (params, closure) in _primitive_cases(seed).items():
        results[name] = finite_diff_gradcheck(closure, params, h)
    for name, (params, closure) in _end_to_end_cases(seed).items():
        results[name] = finite_diff_gradcheck(closure, params, h)
    return results
