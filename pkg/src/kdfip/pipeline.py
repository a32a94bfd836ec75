"""Data assembly and staged-pipeline orchestration on top of a RunConfig."""

from __future__ import annotations

from dataclasses import dataclass, field

from .config import RunConfig, StageConfig
from .model import GatingParams, ModelBundle, calibrate_gate, copy_params
from .model.params import ParamDict
from .simdata import (
    Corpus,
    CorruptionSpec,
    SpeakerProfile,
    VocabSpec,
    build_text_pool,
    build_vocab,
    gen_corpus,
    sample_speaker_profile,
    utterance_embedding,
)
from .training import TrainReport, train_stage1, train_stage2, train_stage3, train_stage4


@dataclass
class DataBundle:
    vocab: VocabSpec
    text_pool: list[str]
    profiles: dict[str, SpeakerProfile]
    generic_train: Corpus
    generic_test: Corpus
    generic_cal: Corpus  # held-out sample used only for gate calibration
    personal_train: dict[str, Corpus] = field(default_factory=dict)
    personal_test: dict[str, Corpus] = field(default_factory=dict)
    synthetic: dict[str, Corpus] = field(default_factory=dict)


def corruption_spec(cfg: RunConfig) -> CorruptionSpec:
    return CorruptionSpec(p_sub=cfg.sim.p_sub, eta=cfg.sim.warp_jitter)


def make_synthetic_corpus(
    cfg: RunConfig,
    data: DataBundle,
    render_speaker: str,
    *,
    text_tag_speaker: str | None = None,
    size: int | None = None,
) -> Corpus:
    """Synthetic corpus rendered with ``render_speaker``'s voice.

    ``text_tag_speaker`` pins the per-utterance seed tag (and therefore the
    transcripts and timing draws) to another speaker's synthetic corpus, so
    cross-speaker ablations vary only the voice.
    """
    tag_speaker = text_tag_speaker or render_speaker
    return gen_corpus(
        role="synthetic",
        split="train",
        size=size if size is not None else cfg.sim.synthetic_size,
        vocab=data.vocab,
        profiles=[data.profiles[render_speaker]],
        sigma_obs=cfg.sim.obs_noise,
        text_pool=data.text_pool,
        master_seed=cfg.master_seed,
        corruption=corruption_spec(cfg),
        tag=f"synthetic:{tag_speaker}",
    )


def build_data(cfg: RunConfig, *, with_synthetic: bool = True) -> DataBundle:
    sim = cfg.sim
    seed = cfg.master_seed
    vocab = build_vocab(seed, sim.vocab_size, sim.feature_dim)
    pool = build_text_pool(seed, vocab, sim.text_pool_size, sim.transcript_min, sim.transcript_max)

    profiles: dict[str, SpeakerProfile] = {}
    generic_profiles = []
    for i in range(sim.generic_speakers):
        p = sample_speaker_profile(seed, f"gen-{i:02d}", sim.warp_strength, sim.feature_dim)
        profiles[p.speaker_id] = p
        generic_profiles.append(p)
    for spk in cfg.experiment.target_speakers + cfg.experiment.nontarget_speakers:
        profiles[spk] = sample_speaker_profile(
            seed, spk, sim.target_warp_strength, sim.feature_dim
        )

    def generic(split: str, size: int, tag: str) -> Corpus:
        return gen_corpus(
            role="generic",
            split=split,
            size=size,
            vocab=vocab,
            profiles=generic_profiles,
            sigma_obs=sim.obs_noise,
            text_pool=pool,
            master_seed=seed,
            tag=tag,
        )

    data = DataBundle(
        vocab=vocab,
        text_pool=pool,
        profiles=profiles,
        generic_train=generic("train", sim.generic_train, "generic-train"),
        generic_test=generic("test", sim.generic_test, "generic-test"),
        generic_cal=generic("cal", sim.generic_cal, "generic-cal"),
    )
    for spk in cfg.experiment.target_speakers:
        data.personal_train[spk] = gen_corpus(
            role="personal",
            split="train",
            size=sim.personal_train,
            vocab=vocab,
            profiles=[profiles[spk]],
            sigma_obs=sim.obs_noise,
            text_pool=pool,
            master_seed=seed,
            tag=f"personal-train:{spk}",
        )
        data.personal_test[spk] = gen_corpus(
            role="personal",
            split="test",
            size=sim.personal_test,
            vocab=vocab,
            profiles=[profiles[spk]],
            sigma_obs=sim.obs_noise,
            text_pool=pool,
            master_seed=seed,
            tag=f"personal-test:{spk}",
        )
        if with_synthetic:
            data.synthetic[spk] = make_synthetic_corpus(cfg, data, spk)
    return data


def calibrate_gate_for(data: DataBundle, speaker: str) -> GatingParams:
    """Gate from real adaptation embeddings vs the held-out generic sample."""
    target = [utterance_embedding(u) for u in data.personal_train[speaker].utterances]
    nontarget = [utterance_embedding(u) for u in data.generic_cal.utterances]
    return calibrate_gate(target, nontarget)


@dataclass
class SpeakerArtifacts:
    speaker: str
    stage2_adapters: ParamDict
    stage2_report: TrainReport
    stage3_adapters: ParamDict
    stage3_report: TrainReport
    gate: GatingParams
    stage4_backbone: ParamDict
    stage4_report: TrainReport


def run_kdfip_stages(
    cfg: RunConfig,
    data: DataBundle,
    backbone_star: ParamDict,
    speaker: str,
    *,
    stage3_cfg: StageConfig | None = None,
    stage4_cfg: StageConfig | None = None,
    synthetic: Corpus | None = None,
) -> SpeakerArtifacts:
    """Stages 2-4 for one target speaker on a pretrained backbone."""
    model_cfg = cfg.model
    syn = synthetic if synthetic is not None else data.synthetic[speaker]
    adapters_star, rep2 = train_stage2(
        model_cfg, cfg.stage("stage2"), backbone_star, data.personal_train[speaker]
    )
    adapters_bar, rep3 = train_stage3(
        model_cfg,
        stage3_cfg or cfg.stage("stage3"),
        backbone_star,
        adapters_star,
        syn,
        data.personal_train[speaker],
    )
    gate = calibrate_gate_for(data, speaker)
    backbone_bar, rep4 = train_stage4(
        model_cfg,
        stage4_cfg or cfg.stage("stage4"),
        backbone_star,
        adapters_bar,
        gate,
        data.generic_train,
        data.personal_train[speaker],
    )
    return SpeakerArtifacts(
        speaker=speaker,
        stage2_adapters=adapters_star,
        stage2_report=rep2,
        stage3_adapters=adapters_bar,
        stage3_report=rep3,
        gate=gate,
        stage4_backbone=backbone_bar,
        stage4_report=rep4,
    )


def pretrain_backbone(cfg: RunConfig, data: DataBundle) -> tuple[ParamDict, TrainReport]:
    return train_stage1(cfg.model, cfg.stage("stage1"), data.generic_train)


def base_bundle(cfg: RunConfig, backbone: ParamDict) -> ModelBundle:
    return ModelBundle(config=cfg.model, backbone=copy_params(backbone), stage="stage1")
