"""Experiment grid and ablations, reported as directional trend studies.

The grid runs the unadapted base, full fine-tuning, multi-source adapter,
gated retraining, single-module invariant-path training, and the staged
pipeline, on personal-only and personal+synthetic data, over several master
seeds; medians damp toy-scale noise. CER is micro-averaged (total edit
distance over total reference length) everywhere.
"""

from __future__ import annotations

import io
import json
import statistics
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..config import RunConfig, StageConfig
from ..ioutil import atomic_write_text, canonical_json
from ..model import ModelBundle, forward_frames, make_batch
from ..model.params import ParamDict
from ..pipeline import (
    DataBundle,
    build_data,
    calibrate_gate_for,
    make_synthetic_corpus,
    pretrain_backbone,
    run_kdfip_stages,
)
from ..simdata import Corpus
from ..training import (
    MethodSpec,
    ce_frame_loss,
    kl_frame_loss,
    train_baseline,
    train_stage2,
    train_stage3,
)
from .cer import evaluate

_EVAL_CHUNK = 32


def mean_kl_drift(
    model_cfg,
    backbone: ParamDict,
    teacher_adapters: ParamDict,
    student_adapters: ParamDict,
    corpus: Corpus,
) -> float:
    """Frame-mean KL between teacher and student adapter models on a corpus."""
    total, frames = 0.0, 0
    for start in range(0, len(corpus.utterances), _EVAL_CHUNK):
        chunk = corpus.utterances[start : start + _EVAL_CHUNK]
        batch = make_batch(chunk, model_cfg)
        t_lp = forward_frames(backbone, batch, model_cfg, adapters=teacher_adapters).data
        s_lp = forward_frames(backbone, batch, model_cfg, adapters=student_adapters).data
        total += float(kl_frame_loss(t_lp, s_lp).data) * batch.n_frames
        frames += batch.n_frames
    return total / frames


def mean_corpus_ce(model_cfg, backbone: ParamDict, adapters: ParamDict | None, corpus: Corpus) -> float:
    """Frame-mean CE of a model over a corpus."""
    total, frames = 0.0, 0
    for start in range(0, len(corpus.utterances), _EVAL_CHUNK):
        chunk = corpus.utterances[start : start + _EVAL_CHUNK]
        batch = make_batch(chunk, model_cfg)
        lp = forward_frames(backbone, batch, model_cfg, adapters=adapters)
        total += float(ce_frame_loss(lp, batch.labels).data) * batch.n_frames
        frames += batch.n_frames
    return total / frames


@dataclass
class GridCell:
    seed: int
    generic_cer: float
    personal_cer: float
    steps: int


@dataclass
class GridRow:
    method: str
    data_flags: str
    generic_cer: float  # median over seeds
    personal_cer: float
    steps: int
    cells: list[GridCell] = field(default_factory=list)


@dataclass
class ExperimentGrid:
    run_id: str
    master_seed: int
    config_hash: str
    rows: list[GridRow]

    def row(self, method: str, data_flags: str) -> GridRow:
        for r in self.rows:
            if r.method == method and r.data_flags == data_flags:
                return r
        raise KeyError(f"no grid row ({method!r}, {data_flags!r})")


ROW_ORDER = [
    ("Base", "none"),
    ("FT", "per"),
    ("Adapter", "per"),
    ("PGA", "per"),
    ("FT", "per+syn"),
    ("Adapter", "per+syn"),
    ("PGA", "per+syn"),
    ("FIP", "per+syn"),
    ("Adapter-FIP", "per+syn"),
    ("KDFIP", "per+syn"),
]


def _backbone_stage_cfg(cfg: RunConfig, label: str, beta: float = 0.0) -> StageConfig:
    return cfg.baseline_backbone_stage(label, beta)


def _adapter_stage_cfg(cfg: RunConfig, label: str) -> StageConfig:
    return cfg.baseline_adapter_stage(label)


def _seed_grid_cells(cfg: RunConfig, log) -> dict[tuple[str, str], tuple[float, float, int]]:
    """One full grid pass under cfg.master_seed: (method, flags) -> metrics."""
    model_cfg = cfg.model
    data = build_data(cfg)
    backbone_star, rep1 = pretrain_backbone(cfg, data)
    vocab = data.vocab

    def gen_cer(bundle: ModelBundle, gated=False) -> float:
        return evaluate(bundle, data.generic_test, vocab, gated=gated).cer

    def per_cer(bundle: ModelBundle, spk: str, gated=False) -> float:
        return evaluate(bundle, data.personal_test[spk], vocab, gated=gated).cer

    base = ModelBundle(config=model_cfg, backbone=backbone_star)
    cells: dict[tuple[str, str], tuple[float, float, int]] = {}
    base_personal = float(np.mean([per_cer(base, s) for s in cfg.experiment.target_speakers]))
    cells[("Base", "none")] = (gen_cer(base), base_personal, 0)

    acc: dict[tuple[str, str], list[tuple[float, float, int]]] = {key: [] for key in ROW_ORDER[1:]}
    for spk in cfg.experiment.target_speakers:
        log(f"  speaker {spk}")
        per_tr = data.personal_train[spk]
        per_syn = data.synthetic[spk]
        gate = calibrate_gate_for(data, spk)

        art = run_kdfip_stages(cfg, data, backbone_star, spk)
        b_stage2 = ModelBundle(config=model_cfg, backbone=backbone_star, adapters=art.stage2_adapters)
        b_stage3 = ModelBundle(config=model_cfg, backbone=backbone_star, adapters=art.stage3_adapters)
        b_stage4 = ModelBundle(
            config=model_cfg, backbone=art.stage4_backbone, adapters=art.stage3_adapters, gate=art.gate
        )
        s2_steps = art.stage2_report.n_steps
        s3_steps = s2_steps + art.stage3_report.n_steps
        s4_steps = s3_steps + art.stage4_report.n_steps
        acc[("Adapter", "per")].append((gen_cer(b_stage2), per_cer(b_stage2, spk), s2_steps))
        acc[("Adapter-FIP", "per+syn")].append((gen_cer(b_stage3), per_cer(b_stage3, spk), s3_steps))
        acc[("KDFIP", "per+syn")].append(
            (gen_cer(b_stage4, gated=True), per_cer(b_stage4, spk, gated=True), s4_steps)
        )

        ft_p, rep = train_baseline(
            MethodSpec("FT"),
            model_cfg,
            _backbone_stage_cfg(cfg, "ft"),
            backbone=backbone_star,
            personal=per_tr,
        )
        b_ft = ModelBundle(config=model_cfg, backbone=ft_p)
        acc[("FT", "per")].append((gen_cer(b_ft), per_cer(b_ft, spk), rep.n_steps))

        ft_ps, rep = train_baseline(
            MethodSpec("FT", use_synthetic=True),
            model_cfg,
            _backbone_stage_cfg(cfg, "ft"),
            backbone=backbone_star,
            personal=per_tr,
            synthetic=per_syn,
        )
        b_fts = ModelBundle(config=model_cfg, backbone=ft_ps)
        acc[("FT", "per+syn")].append((gen_cer(b_fts), per_cer(b_fts, spk), rep.n_steps))

        ad_ps, rep_adps = train_baseline(
            MethodSpec("Adapter", use_synthetic=True),
            model_cfg,
            _adapter_stage_cfg(cfg, "adapter"),
            backbone=backbone_star,
            personal=per_tr,
            synthetic=per_syn,
        )
        b_adps = ModelBundle(config=model_cfg, backbone=backbone_star, adapters=ad_ps)
        acc[("Adapter", "per+syn")].append((gen_cer(b_adps), per_cer(b_adps, spk), rep_adps.n_steps))

        pga_p, rep = train_baseline(
            MethodSpec("PGA", use_generic=True),
            model_cfg,
            _backbone_stage_cfg(cfg, "pga"),
            backbone=backbone_star,
            generic=data.generic_train,
            personal=per_tr,
            adapters=art.stage2_adapters,
            gate=gate,
        )
        b_pga = ModelBundle(
            config=model_cfg, backbone=pga_p, adapters=art.stage2_adapters, gate=gate
        )
        acc[("PGA", "per")].append(
            (gen_cer(b_pga, gated=True), per_cer(b_pga, spk, gated=True), s2_steps + rep.n_steps)
        )

        pga_ps, rep = train_baseline(
            MethodSpec("PGA", use_synthetic=True, use_generic=True),
            model_cfg,
            _backbone_stage_cfg(cfg, "pga"),
            backbone=backbone_star,
            generic=data.generic_train,
            personal=per_tr,
            synthetic=per_syn,
            adapters=ad_ps,
            gate=gate,
        )
        b_pgas = ModelBundle(config=model_cfg, backbone=pga_ps, adapters=ad_ps, gate=gate)
        acc[("PGA", "per+syn")].append(
            (
                gen_cer(b_pgas, gated=True),
                per_cer(b_pgas, spk, gated=True),
                rep_adps.n_steps + rep.n_steps,
            )
        )

        fip_p, rep = train_baseline(
            MethodSpec("FIP", use_synthetic=True, use_generic=True),
            model_cfg,
            _backbone_stage_cfg(cfg, "fip", beta=cfg.baselines.beta),
            backbone=backbone_star,
            personal=per_tr,
            synthetic=per_syn,
            generic=data.generic_train,
        )
        b_fip = ModelBundle(config=model_cfg, backbone=fip_p)
        acc[("FIP", "per+syn")].append((gen_cer(b_fip), per_cer(b_fip, spk), rep.n_steps))

    for key, triples in acc.items():
        cells[key] = (
            float(np.mean([t[0] for t in triples])),
            float(np.mean([t[1] for t in triples])),
            int(triples[0][2]),
        )
    return cells


def run_table1(cfg: RunConfig, out_dir: str | Path | None = None, log=None) -> ExperimentGrid:
    """The full comparison grid over the configured seeds (medians per row)."""
    log = log or (lambda *_: None)
    per_seed: list[dict[tuple[str, str], tuple[float, float, int]]] = []
    seeds = [cfg.master_seed + off for off in cfg.experiment.seeds]
    for seed in seeds:
        log(f"grid pass, master seed {seed}")
        per_seed.append(_seed_grid_cells(cfg.with_master_seed(seed), log))

    rows = []
    for method, flags in ROW_ORDER:
        cells = [
            GridCell(
                seed=seed,
                generic_cer=metrics[(method, flags)][0],
                personal_cer=metrics[(method, flags)][1],
                steps=metrics[(method, flags)][2],
            )
            for seed, metrics in zip(seeds, per_seed)
        ]
        rows.append(
            GridRow(
                method=method,
                data_flags=flags,
                generic_cer=float(statistics.median(c.generic_cer for c in cells)),
                personal_cer=float(statistics.median(c.personal_cer for c in cells)),
                steps=cells[0].steps,
                cells=cells,
            )
        )
    grid = ExperimentGrid(
        run_id=cfg.config_hash[:16],
        master_seed=cfg.master_seed,
        config_hash=cfg.config_hash,
        rows=rows,
    )
    if out_dir is not None:
        write_grid(grid, out_dir)
    return grid


def grid_results_json(grid: ExperimentGrid) -> str:
    doc = {
        "run_id": grid.run_id,
        "master_seed": grid.master_seed,
        "rows": [
            {
                "method": r.method,
                "data_flags": r.data_flags,
                "generic_cer": r.generic_cer,
                "personal_cer": r.personal_cer,
                "steps": r.steps,
            }
            for r in grid.rows
        ],
        "config_hash": grid.config_hash,
    }
    return canonical_json(doc)


def grid_markdown(grid: ExperimentGrid) -> str:
    buf = io.StringIO()
    buf.write("| Method | Adaptation data | Generic CER | Personal CER | Steps |\n")
    buf.write("|---|---|---|---|---|\n")
    for r in grid.rows:
        buf.write(
            f"| {r.method} | {r.data_flags} | {r.generic_cer:.4f} "
            f"| {r.personal_cer:.4f} | {r.steps} |\n"
        )
    buf.write(
        f"\nMedians over master seeds; CER micro-averaged. run_id {grid.run_id}, "
        f"config {grid.config_hash[:12]}.\n"
    )
    return buf.getvalue()


def write_grid(grid: ExperimentGrid, out_dir: str | Path) -> None:
    out = Path(out_dir)
    atomic_write_text(out / "results.json", grid_results_json(grid))
    atomic_write_text(out / "table1.md", grid_markdown(grid))


ABLATION_KINDS = ("beta", "duration", "cross_speaker")


def run_ablation(kind: str, cfg: RunConfig, out_dir: str | Path | None = None, log=None) -> list[dict]:
    """Single-knob studies on the first target speaker.

    beta         stage-3/4 sweep: CERs, held-out personal KL drift,
                 synthetic-train CE per beta
    duration     synthetic corpus size multipliers (0 evaluates the stage-2
                 model directly)
    cross_speaker stage 3 fed synthetic speech from the target, from each
                 non-target profile, and nothing (medians over seeds)
    """
    log = log or (lambda *_: None)
    if kind not in ABLATION_KINDS:
        raise ValueError(f"unknown ablation kind {kind!r}; expected one of {ABLATION_KINDS}")
    rows = (
        _ablate_beta(cfg, log)
        if kind == "beta"
        else _ablate_duration(cfg, log)
        if kind == "duration"
        else _ablate_cross_speaker(cfg, log)
    )
    if out_dir is not None:
        out = Path(out_dir)
        cols = list(rows[0].keys())
        buf = io.StringIO()
        buf.write(",".join(cols) + "\n")
        for r in rows:
            buf.write(",".join(json.dumps(r[c]) for c in cols) + "\n")
        atomic_write_text(out / f"ablation_{kind}.csv", buf.getvalue())
    return rows


def _first_speaker_setup(cfg: RunConfig):
    import dataclasses as _dc

    data = build_data(cfg)
    backbone, _ = pretrain_backbone(cfg, data)
    spk = cfg.experiment.target_speakers[0]
    adapters2, _ = train_stage2(cfg.model, cfg.stage("stage2"), backbone, data.personal_train[spk])
    return _dc, data, backbone, spk, adapters2


def _ablate_beta(cfg: RunConfig, log) -> list[dict]:
    from ..training import train_stage4

    dc, data, backbone, spk, adapters2 = _first_speaker_setup(cfg)
    model_cfg, vocab = cfg.model, data.vocab
    gate = calibrate_gate_for(data, spk)
    rows = []
    for beta in cfg.experiment.beta_sweep:
        log(f"beta {beta}")
        s3_cfg = dc.replace(cfg.stage("stage3"), beta=beta)
        adapters3, _ = train_stage3(
            model_cfg, s3_cfg, backbone, adapters2, data.synthetic[spk], data.personal_train[spk]
        )
        s4_cfg = dc.replace(cfg.stage("stage4"), beta=beta)
        backbone4, _ = train_stage4(
            model_cfg, s4_cfg, backbone, adapters3, gate, data.generic_train, data.personal_train[spk]
        )
        b3 = ModelBundle(config=model_cfg, backbone=backbone, adapters=adapters3)
        b4 = ModelBundle(config=model_cfg, backbone=backbone4, adapters=adapters3, gate=gate)
        rows.append(
            {
                "beta": beta,
                "stage3_generic_cer": evaluate(b3, data.generic_test, vocab).cer,
                "stage3_personal_cer": evaluate(b3, data.personal_test[spk], vocab).cer,
                "stage4_generic_cer": evaluate(b4, data.generic_test, vocab, gated=True).cer,
                "stage4_personal_cer": evaluate(b4, data.personal_test[spk], vocab, gated=True).cer,
                "kl_drift": mean_kl_drift(
                    model_cfg, backbone, adapters2, adapters3, data.personal_test[spk]
                ),
                "syn_train_ce": mean_corpus_ce(model_cfg, backbone, adapters3, data.synthetic[spk]),
            }
        )
    return rows


def _ablate_duration(cfg: RunConfig, log) -> list[dict]:
    dc, data, backbone, spk, adapters2 = _first_speaker_setup(cfg)
    model_cfg, vocab = cfg.model, data.vocab
    rows = []
    for mult in cfg.experiment.duration_multipliers:
        log(f"duration multiplier {mult}")
        if mult == 0:
            bundle = ModelBundle(config=model_cfg, backbone=backbone, adapters=adapters2)
            size, steps = 0, 0
        else:
            size = max(1, round(mult * cfg.sim.synthetic_size))
            syn = make_synthetic_corpus(cfg, data, spk, size=size)
            adapters3, rep = train_stage3(
                model_cfg, cfg.stage("stage3"), backbone, adapters2, syn, data.personal_train[spk]
            )
            bundle = ModelBundle(config=model_cfg, backbone=backbone, adapters=adapters3)
            steps = rep.n_steps
        rows.append(
            {
                "multiplier": mult,
                "synthetic_size": size,
                "generic_cer": evaluate(bundle, data.generic_test, vocab).cer,
                "personal_cer": evaluate(bundle, data.personal_test[spk], vocab).cer,
                "steps": steps,
            }
        )
    return rows


def _ablate_cross_speaker(cfg: RunConfig, log) -> list[dict]:
    variants = ["none", "target"] + list(cfg.experiment.nontarget_speakers)
    per_variant: dict[str, list[float]] = {v: [] for v in variants}
    for off in cfg.experiment.seeds:
        scfg = cfg.with_master_seed(cfg.master_seed + off)
        log(f"cross-speaker pass, master seed {scfg.master_seed}")
        data = build_data(scfg)
        backbone, _ = pretrain_backbone(scfg, data)
        spk = scfg.experiment.target_speakers[0]
        model_cfg, vocab = scfg.model, data.vocab
        adapters2, _ = train_stage2(
            model_cfg, scfg.stage("stage2"), backbone, data.personal_train[spk]
        )
        for variant in variants:
            if variant == "none":
                bundle = ModelBundle(config=model_cfg, backbone=backbone, adapters=adapters2)
            else:
                render = spk if variant == "target" else variant
                syn = make_synthetic_corpus(scfg, data, render, text_tag_speaker=spk)
                adapters3, _ = train_stage3(
                    model_cfg,
                    scfg.stage("stage3"),
                    backbone,
                    adapters2,
                    syn,
                    data.personal_train[spk],
                )
                bundle = ModelBundle(config=model_cfg, backbone=backbone, adapters=adapters3)
            per_variant[variant].append(evaluate(bundle, data.personal_test[spk], vocab).cer)
    return [
        {
            "synthetic_source": v,
            "personal_cer": float(statistics.median(per_variant[v])),
            "per_seed": per_variant[v],
        }
        for v in variants
    ]
