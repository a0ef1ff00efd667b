"""End-to-end jobs behind the CLI subcommands.

Every job is a function of a RunConfig; artifacts land under the work
directory in a fixed layout, so deleting the work dir and re-running from
config reproduces everything (no hidden state):

    data/{train,valid,test}.tsv + data/features/<split>/*.feat
    vocab.txt
    checkpoints/first_pass.tpck(.json), checkpoints/las_<enc>.tpck(.json)
    nbest/first_pass_<split>.jsonl, nbest/scored_<enc>_<split>.jsonl,
    nbest/rescored_<enc>_<split>.jsonl, nbest/standalone_<enc>_<split>.jsonl
    lambdas_<enc>.txt
    metrics/*.json, reports/results.{txt,csv}
"""

from __future__ import annotations

import json
import time
import zlib
from dataclasses import dataclass, replace as dc_replace
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np

from . import ctc_first_pass as ctc
from . import eval_bench
from . import tensor_core as tc
from . import las_decoder as las
from . import nn
from . import rescoring_fusion as rf
from . import tokenizer as tok
from .config import RunConfig
from .data import Manifest, SyntheticGrammar, generate_synthetic_corpus
from .encoders import (EncoderConfig, desk_config, encoder_param_count,
                       las_param_count, make_encoder, paper_config)
from .errors import CheckpointError, DataError
from .frontend import (FeatureSequence, SpecAugmentPolicy, load_features,
                       spec_augment, stack_frames)
from .hypotheses import NBestList, load_nbest, save_nbest
from .tensor_core import load_tensors, save_tensors

ENCODER_CHOICES = {
    "bilstm": "bilstm_pyramidal",
    "transformer": "transformer",
    "vgg_transformer": "vgg_transformer",
    "conformer": "conformer",
    "shared": "shared_frozen",
}

CHECKPOINT_META_VERSION = 1


# ---------------------------------------------------------------------------
# Work-dir layout
# ---------------------------------------------------------------------------


def manifest_path(cfg: RunConfig, split: str) -> Path:
    return cfg.workdir / "data" / f"{split}.tsv"


def vocab_path(cfg: RunConfig) -> Path:
    return cfg.workdir / "vocab.txt"


def checkpoint_path(cfg: RunConfig, name: str) -> Path:
    return cfg.workdir / "checkpoints" / f"{name}.tpck"


def nbest_path(cfg: RunConfig, stem: str) -> Path:
    return cfg.workdir / "nbest" / f"{stem}.jsonl"


def lambdas_path(cfg: RunConfig, encoder: str) -> Path:
    return cfg.workdir / f"lambdas_{encoder}.txt"


def metrics_path(cfg: RunConfig, name: str) -> Path:
    return cfg.workdir / "metrics" / f"{name}.json"


def write_metrics(cfg: RunConfig, name: str, payload: dict) -> None:
    path = metrics_path(cfg, name)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def read_metrics(cfg: RunConfig, name: str) -> Optional[dict]:
    path = metrics_path(cfg, name)
    return json.loads(path.read_text()) if path.exists() else None


# ---------------------------------------------------------------------------
# Checkpoints: tensors + JSON sidecar recording the architecture
# ---------------------------------------------------------------------------


def save_checkpoint(path: Path, model: nn.Module, kind: str, config: dict) -> None:
    save_tensors(path, model.state_dict())
    meta = {"checkpoint_meta_version": CHECKPOINT_META_VERSION, "kind": kind,
            "config": config}
    Path(str(path) + ".json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def load_checkpoint(path: Path, expected_kind: Optional[str] = None) -> Tuple[dict, dict]:
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"checkpoint not found: {path}")
    tensors = load_tensors(path)
    meta_path = Path(str(path) + ".json")
    if not meta_path.exists():
        raise CheckpointError(f"checkpoint sidecar not found: {meta_path}")
    meta = json.loads(meta_path.read_text())
    if expected_kind is not None and meta.get("kind") != expected_kind:
        raise CheckpointError(
            f"{path} holds a {meta.get('kind')!r} model, expected {expected_kind!r}"
        )
    return tensors, meta


# ---------------------------------------------------------------------------
# Data
# ---------------------------------------------------------------------------


def build_grammar(cfg: RunConfig) -> SyntheticGrammar:
    return SyntheticGrammar(
        num_words=cfg.getint("data", "num_words"),
        dim=cfg.getint("data", "feature_dim"),
        min_frames=cfg.getint("data", "min_word_frames"),
        max_frames=cfg.getint("data", "max_word_frames"),
        noise_sigma=cfg.getfloat("data", "noise_sigma"),
        min_words=cfg.getint("data", "min_words"),
        max_words=cfg.getint("data", "max_words"),
        seed=cfg.seed,
    )


def gen_data(cfg: RunConfig, workers: Optional[int] = None) -> Dict[str, int]:
    grammar = build_grammar(cfg)
    workers = workers or cfg.getint("run", "workers")
    out = cfg.workdir / "data"
    sizes = {}
    for split in ("train", "valid", "test"):
        n = cfg.getint("data", f"num_{split}")
        manifest = generate_synthetic_corpus(grammar, n, out, split=split, workers=workers)
        sizes[split] = len(manifest)
    return sizes


@dataclass
class Dataset:
    utt_ids: List[str]
    features: List[np.ndarray]  # per-utterance (T, D), already stacked if asked
    texts: List[str]
    token_ids: List[List[int]]


def load_vocab(cfg: RunConfig) -> tok.Vocabulary:
    path = vocab_path(cfg)
    if not path.exists():
        raise DataError(f"vocabulary not found: {path} (run train-tokenizer first)")
    return tok.Vocabulary.load(path)


def load_dataset(cfg: RunConfig, split: str, stacked: bool = True,
                 vocab: Optional[tok.Vocabulary] = None,
                 training: bool = False) -> Dataset:
    manifest = Manifest.load(manifest_path(cfg, split), split=split)
    vocab = vocab or load_vocab(cfg)
    k = cfg.getint("frontend", "stack_frames")
    augment = training and cfg.getbool("frontend", "apply_specaugment")
    if augment:
        policy = SpecAugmentPolicy(
            num_freq_masks=cfg.getint("frontend", "specaug_freq_masks"),
            max_freq_width=cfg.getint("frontend", "specaug_freq_width"),
            num_time_masks=cfg.getint("frontend", "specaug_time_masks"),
            max_time_width=cfg.getint("frontend", "specaug_time_width"),
        )
        rng = np.random.default_rng([cfg.seed, 0x5A, zlib.crc32(split.encode())])
    offset = cfg.getfloat("frontend", "input_offset")
    scale = cfg.getfloat("frontend", "input_scale")
    feats, texts, ids, utt_ids = [], [], [], []
    for row in manifest.rows:
        f = load_features(row.feature_path)
        if augment:
            f = spec_augment(f, policy, rng)
        if stacked:
            f = stack_frames(f, k)
        frames = f.frames
        if offset != 0.0 or scale != 1.0:
            frames = (frames + np.float32(offset)) * np.float32(scale)
        feats.append(frames)
        texts.append(row.text)
        ids.append(tok.encode(vocab, row.text).ids)
        utt_ids.append(row.utt_id)
    return Dataset(utt_ids, feats, texts, ids)


def train_tokenizer_job(cfg: RunConfig) -> tok.Vocabulary:
    manifest = Manifest.load(manifest_path(cfg, "train"), split="train")
    vocab = tok.train_unigram(
        manifest.texts(),
        target_size=cfg.getint("tokenizer", "vocab_size"),
        seed_cap=cfg.getint("tokenizer", "seed_cap"),
    )
    vocab.save(vocab_path(cfg))
    return vocab


# ---------------------------------------------------------------------------
# First pass
# ---------------------------------------------------------------------------


def _stacked_dim(cfg: RunConfig) -> int:
    return cfg.getint("data", "feature_dim") * cfg.getint("frontend", "stack_frames")


def build_first_pass_model(cfg: RunConfig, vocab_size: int,
                           rng: np.random.Generator) -> ctc.CtcModel:
    return ctc.CtcModel(
        input_dim=_stacked_dim(cfg),
        vocab_size=vocab_size,
        num_layers=cfg.getint("first_pass", "num_layers"),
        hidden_dim=cfg.getint("first_pass", "hidden_dim"),
        rng=rng,
    )


def train_first_pass_job(cfg: RunConfig, log_every: int = 1) -> dict:
    vocab = load_vocab(cfg)
    train = load_dataset(cfg, "train", vocab=vocab, training=True)
    rng = np.random.default_rng([cfg.seed, 0xF1])
    model = build_first_pass_model(cfg, vocab.size, rng)
    t0 = time.perf_counter()
    stats = ctc.train_first_pass(
        model, list(zip(train.features, train.token_ids)),
        epochs=cfg.getint("first_pass", "epochs"),
        batch_size=cfg.getint("first_pass", "batch_size"),
        lr=cfg.getfloat("first_pass", "lr"),
        rng=rng, log_every=log_every,
    )
    elapsed = time.perf_counter() - t0
    config = {
        "input_dim": model.input_dim, "vocab_size": vocab.size,
        "num_layers": cfg.getint("first_pass", "num_layers"),
        "hidden_dim": cfg.getint("first_pass", "hidden_dim"),
    }
    save_checkpoint(checkpoint_path(cfg, "first_pass"), model, "ctc_first_pass", config)
    payload = {"final_loss": stats.epoch_losses[-1], "epoch_losses": stats.epoch_losses,
               "skipped_unreachable": stats.skipped_unreachable, "train_seconds": elapsed}
    write_metrics(cfg, "train_first_pass", payload)
    return payload


def load_first_pass_model(cfg: RunConfig) -> Tuple[ctc.CtcModel, dict]:
    tensors, meta = load_checkpoint(checkpoint_path(cfg, "first_pass"), "ctc_first_pass")
    c = meta["config"]
    model = ctc.CtcModel(c["input_dim"], c["vocab_size"], c["num_layers"],
                         c["hidden_dim"], np.random.default_rng(0))
    try:
        model.load_state_dict(tensors)
    except Exception as exc:
        raise CheckpointError(f"first-pass checkpoint mismatch: {exc}") from exc
    model.eval()
    return model, c


def first_pass_decode_job(cfg: RunConfig, split: str, mode: str = "nbest") -> dict:
    """Greedy or n-best decoding of one split with the first-pass model."""
    vocab = load_vocab(cfg)
    data = load_dataset(cfg, split, vocab=vocab)
    model, _ = load_first_pass_model(cfg)
    hyp_texts: List[str] = []
    lists: List[NBestList] = []
    n_best = cfg.getint("decode", "nbest")
    beam_width = cfg.getint("decode", "beam_width")
    prune = cfg.getfloat("decode", "prune_log_prob")
    for utt_id, feats, text in zip(data.utt_ids, data.features, data.texts):
        with tc.no_grad():
            log_probs = model(feats[None, :, :]).data[0]
        if mode == "greedy":
            ids = ctc.greedy_decode(log_probs, model.blank)
            hyp_texts.append(tok.decode(vocab, ids))
        else:
            hyps = ctc.prefix_beam_search(log_probs, beam_width=beam_width,
                                          n_best=n_best, blank=model.blank,
                                          prune_log_prob=prune)
            for h in hyps:
                h.text = tok.decode(vocab, h.ids)
            hyp_texts.append(hyps[0].text if hyps else "")
            lists.append(NBestList(utt_id=utt_id, hypotheses=hyps, source="first_pass"))
    refs = [eval_bench.normalize_text(t) for t in data.texts]
    hyps_norm = [eval_bench.normalize_text(t) for t in hyp_texts]
    report = eval_bench.corpus_wer(refs, hyps_norm)
    payload = {"split": split, "mode": mode, "wer": report.wer,
               "errors": report.errors, "ref_words": report.ref_words}
    if mode == "nbest":
        save_nbest(nbest_path(cfg, f"first_pass_{split}"), lists)
        payload["nbest_file"] = str(nbest_path(cfg, f"first_pass_{split}"))
    write_metrics(cfg, f"first_pass_{mode}_{split}", payload)
    return payload


# ---------------------------------------------------------------------------
# LAS variants
# ---------------------------------------------------------------------------


def encoder_config_from_run(cfg: RunConfig, kind: str, addon: str = "bilstm") -> EncoderConfig:
    scale = cfg.get("run", "scale")
    input_dim = cfg.getint("data", "feature_dim") if kind == "vgg_transformer" else _stacked_dim(cfg)
    if scale == "paper":
        return paper_config(kind, addon=addon)
    base = desk_config(kind, addon=addon, input_dim=input_dim)
    return dc_replace(
        base,
        input_dim=cfg.getint("data", "feature_dim") if kind == "vgg_transformer" else input_dim,
        model_dim=cfg.getint("las", "model_dim"),
        ff_dim=cfg.getint("las", "ff_dim"),
        num_layers=5 if kind == "bilstm_pyramidal" else cfg.getint("las", "num_blocks"),
        num_heads=cfg.getint("las", "num_heads"),
        lstm_hidden=cfg.getint("las", "lstm_hidden"),
        conv_kernel=cfg.getint("las", "conv_kernel"),
        vgg_channels=cfg.get_int_pair("las", "vgg_channels"),
        dropout=cfg.getfloat("las", "dropout"),
        frozen_layers=cfg.getint("first_pass", "num_layers"),
        frozen_hidden=cfg.getint("first_pass", "hidden_dim"),
    ).validate()


def decoder_config_from_run(cfg: RunConfig) -> las.DecoderConfig:
    return las.DecoderConfig(
        num_blocks=cfg.getint("las", "decoder_blocks"),
        model_dim=cfg.getint("las", "model_dim"),
        num_heads=cfg.getint("las", "num_heads"),
        ff_dim=cfg.getint("las", "ff_dim"),
        label_smoothing_eps=cfg.getfloat("las", "label_smoothing"),
        scheduled_sampling_rate=cfg.getfloat("las", "scheduled_sampling"),
        dropout=cfg.getfloat("las", "dropout"),
    ).validate()


def _frozen_weights_for_shared(cfg: RunConfig) -> Dict[str, np.ndarray]:
    path = checkpoint_path(cfg, "first_pass")
    if not path.exists():
        raise CheckpointError(
            "train-las --encoder shared needs the first-pass checkpoint "
            f"(missing {path}); run train-first-pass first"
        )
    tensors, meta = load_checkpoint(path, "ctc_first_pass")
    return tensors


def build_las_model(cfg: RunConfig, encoder: str, vocab_size: int,
                    rng: np.random.Generator, addon: str = "bilstm") -> las.LasModel:
    kind = ENCODER_CHOICES[encoder]
    enc_cfg = encoder_config_from_run(cfg, kind, addon=addon)
    frozen = _frozen_weights_for_shared(cfg) if kind == "shared_frozen" else None
    enc = make_encoder(enc_cfg, rng, frozen_weights=frozen)
    return las.LasModel(enc, decoder_config_from_run(cfg), vocab_size, rng)


def _las_checkpoint_name(encoder: str, addon: str) -> str:
    return f"las_{encoder}_{addon}" if encoder == "shared" else f"las_{encoder}"


def train_las_job(cfg: RunConfig, encoder: str, addon: str = "bilstm",
                  log_every: int = 1) -> dict:
    vocab = load_vocab(cfg)
    stacked = ENCODER_CHOICES[encoder] != "vgg_transformer"
    train = load_dataset(cfg, "train", stacked=stacked, vocab=vocab, training=True)
    rng = np.random.default_rng([cfg.seed, 0x1A5, _encoder_tag(encoder, addon)])
    model = build_las_model(cfg, encoder, vocab.size, rng, addon=addon)
    t0 = time.perf_counter()
    losses = las.train_las(
        model, list(zip(train.features, train.token_ids)),
        epochs=cfg.getint("las", "epochs"),
        batch_size=cfg.getint("las", "batch_size"),
        lr=cfg.getfloat("las", "lr"),
        rng=rng, log_every=log_every,
    )
    elapsed = time.perf_counter() - t0
    name = _las_checkpoint_name(encoder, addon)
    config = {
        "encoder": encoder, "addon": addon, "vocab_size": vocab.size,
        "stacked": stacked,
    }
    save_checkpoint(checkpoint_path(cfg, name), model, "las", config)
    total, trainable = model.num_params()
    payload = {"encoder": encoder, "addon": addon, "final_loss": losses[-1],
               "epoch_losses": losses, "train_seconds": elapsed,
               "total_params": total, "trainable_params": trainable}
    write_metrics(cfg, f"train_{name}", payload)
    return payload


def load_las_model(cfg: RunConfig, encoder: str, addon: str = "bilstm") -> las.LasModel:
    name = _las_checkpoint_name(encoder, addon)
    tensors, meta = load_checkpoint(checkpoint_path(cfg, name), "las")
    c = meta["config"]
    if c["encoder"] != encoder:
        raise CheckpointError(f"{name}: checkpoint encoder {c['encoder']} != {encoder}")
    model = build_las_model(cfg, encoder, c["vocab_size"],
                            np.random.default_rng(0), addon=c.get("addon", "bilstm"))
    try:
        model.load_state_dict(tensors)
    except Exception as exc:
        raise CheckpointError(f"LAS checkpoint mismatch for {name}: {exc}") from exc
    model.eval()
    return model


def _encoder_tag(encoder: str, addon: str) -> int:
    names = list(ENCODER_CHOICES)
    return names.index(encoder) * 4 + (0 if addon == "bilstm" else 1)


def standalone_decode_job(cfg: RunConfig, encoder: str, split: str,
                          addon: str = "bilstm") -> dict:
    vocab = load_vocab(cfg)
    stacked = ENCODER_CHOICES[encoder] != "vgg_transformer"
    data = load_dataset(cfg, split, stacked=stacked, vocab=vocab)
    model = load_las_model(cfg, encoder, addon=addon)
    beam_size = cfg.getint("decode", "beam_size")
    include_eos = cfg.getbool("decode", "include_eos")
    lists, hyp_texts = [], []
    for utt_id, feats in zip(data.utt_ids, data.features):
        enc = model.encode(feats[None, :, :])
        nbest = las.beam_search_decode(model, enc, beam_size=beam_size,
                                       include_eos=include_eos, utt_id=utt_id)
        for h in nbest.hypotheses:
            h.text = tok.decode(vocab, h.ids)
        lists.append(nbest)
        hyp_texts.append(nbest.hypotheses[0].text if nbest.hypotheses else "")
    refs = [eval_bench.normalize_text(t) for t in data.texts]
    report = eval_bench.corpus_wer(refs, [eval_bench.normalize_text(t) for t in hyp_texts])
    name = _las_checkpoint_name(encoder, addon)
    save_nbest(nbest_path(cfg, f"standalone_{name}_{split}"), lists)
    payload = {"encoder": encoder, "addon": addon, "split": split, "wer": report.wer,
               "errors": report.errors, "ref_words": report.ref_words}
    write_metrics(cfg, f"standalone_{name}_{split}", payload)
    return payload


# ---------------------------------------------------------------------------
# Second pass
# ---------------------------------------------------------------------------


def train_lm(cfg: RunConfig, vocab: tok.Vocabulary) -> rf.NgramLm:
    train = Manifest.load(manifest_path(cfg, "train"), split="train")
    sequences = [tok.encode(vocab, text).ids for text in train.texts()]
    return rf.train_ngram(sequences, n=cfg.getint("fusion", "lm_order"),
                          smoothing_k=cfg.getfloat("fusion", "smoothing_k"),
                          vocab_size=vocab.size)


def score_nbest_job(cfg: RunConfig, encoder: str, split: str,
                    addon: str = "bilstm") -> Path:
    """Attach LAS and LM scores to the first-pass n-best lists of a split."""
    vocab = load_vocab(cfg)
    stacked = ENCODER_CHOICES[encoder] != "vgg_transformer"
    data = load_dataset(cfg, split, stacked=stacked, vocab=vocab)
    source = nbest_path(cfg, f"first_pass_{split}")
    if not source.exists():
        raise DataError(f"first-pass n-best missing: {source} (run decode --mode nbest)")
    lists = load_nbest(source)
    by_id = {nb.utt_id: nb for nb in lists}
    model = load_las_model(cfg, encoder, addon=addon)
    lm = train_lm(cfg, vocab)
    include_eos = cfg.getbool("decode", "include_eos")
    neutral = rf.FusionWeights(1.0, 0.0, 0.0, 0.0)
    scored = []
    for utt_id, feats in zip(data.utt_ids, data.features):
        nbest = by_id.get(utt_id)
        if nbest is None:
            raise DataError(f"utterance {utt_id} missing from {source}")
        enc = model.encode(feats[None, :, :])
        # neutral weights keep first-pass order; this pass only adds scores
        scored.append(rf.rescore_nbest(nbest, model, enc, lm, neutral,
                                       include_eos=include_eos))
    name = _las_checkpoint_name(encoder, addon)
    out = nbest_path(cfg, f"scored_{name}_{split}")
    save_nbest(out, scored)
    return out


def tune_lambdas_job(cfg: RunConfig, encoder: str, addon: str = "bilstm") -> rf.FusionWeights:
    name = _las_checkpoint_name(encoder, addon)
    scored_path = nbest_path(cfg, f"scored_{name}_valid")
    if not scored_path.exists():
        score_nbest_job(cfg, encoder, "valid", addon=addon)
    lists = load_nbest(scored_path)
    manifest = Manifest.load(manifest_path(cfg, "valid"), split="valid")
    refs = {r.utt_id: r.text for r in manifest.rows}
    validation = [(nb, refs[nb.utt_id]) for nb in lists]
    weights = rf.grid_search_lambdas(validation)
    weights.save(lambdas_path(cfg, name))
    write_metrics(cfg, f"lambdas_{name}", {
        "lambda1": weights.lambda1, "lambda2": weights.lambda2,
        "lambda3": weights.lambda3, "lambda4": weights.lambda4,
        "validation_wer": weights.validation_wer,
    })
    return weights


def rescore_job(cfg: RunConfig, encoder: str, split: str,
                addon: str = "bilstm") -> dict:
    """Re-rank the scored lists of ``split`` with the tuned fusion weights."""
    name = _las_checkpoint_name(encoder, addon)
    scored_path = nbest_path(cfg, f"scored_{name}_{split}")
    if not scored_path.exists():
        score_nbest_job(cfg, encoder, split, addon=addon)
    lists = load_nbest(scored_path)
    lam_path = lambdas_path(cfg, name)
    weights = rf.FusionWeights.load(lam_path) if lam_path.exists() else rf.FusionWeights(1.0, 1.0, 0.0, 0.0)
    manifest = Manifest.load(manifest_path(cfg, split), split=split)
    refs = {r.utt_id: r.text for r in manifest.rows}
    rescored = []
    first_pass_errors = oracle_best = 0
    total_words = 0
    hyp_errors = 0
    for nb in lists:
        ref = refs[nb.utt_id]
        order = sorted(range(len(nb.hypotheses)),
                       key=lambda i: (-rf.fuse_scores(nb.hypotheses[i], weights).final_score, i))
        reranked = NBestList(utt_id=nb.utt_id,
                             hypotheses=[nb.hypotheses[i] for i in order],
                             source="rescored")
        rescored.append(reranked)
        ref_norm = eval_bench.normalize_text(ref)
        first = eval_bench.wer(ref_norm, eval_bench.normalize_text(nb.hypotheses[0].text or ""))
        picked = eval_bench.wer(ref_norm, eval_bench.normalize_text(reranked.hypotheses[0].text or ""))
        best, words = rf.oracle_errors(nb, ref)
        first_pass_errors += first.errors
        hyp_errors += picked.errors
        oracle_best += best
        total_words += words
    out = nbest_path(cfg, f"rescored_{name}_{split}")
    save_nbest(out, rescored)
    payload = {
        "encoder": encoder, "addon": addon, "split": split,
        "first_pass_wer": first_pass_errors / total_words,
        "rescored_wer": hyp_errors / total_words,
        "oracle_wer": oracle_best / total_words,
        "relative_improvement": eval_bench.relative_improvement(
            first_pass_errors / total_words, hyp_errors / total_words)
        if first_pass_errors else 0.0,
        "lambdas": list(weights.as_array()),
    }
    write_metrics(cfg, f"rescored_{name}_{split}", payload)
    return payload


# ---------------------------------------------------------------------------
# Benchmark and report
# ---------------------------------------------------------------------------


def benchmark_job(cfg: RunConfig) -> List[eval_bench.LatencyReport]:
    rng = np.random.default_rng(cfg.seed)
    frames = cfg.getint("bench", "frames")
    num_runs = cfg.getint("bench", "num_runs")
    warmup = cfg.getint("bench", "warmup")
    reports = []
    rows = []
    vocab_exists = vocab_path(cfg).exists()
    vocab_size = load_vocab(cfg).size if vocab_exists else cfg.getint("tokenizer", "vocab_size")
    first_pass_ckpt = checkpoint_path(cfg, "first_pass")
    frozen = load_checkpoint(first_pass_ckpt, "ctc_first_pass")[0] if first_pass_ckpt.exists() else None
    for encoder, kind in ENCODER_CHOICES.items():
        if kind == "shared_frozen" and frozen is None:
            continue
        enc_cfg = encoder_config_from_run(cfg, kind)
        dim = enc_cfg.input_dim
        t = frames * 4 if kind in ("bilstm_pyramidal", "vgg_transformer") else frames
        enc = make_encoder(enc_cfg, rng, frozen_weights=frozen)
        report = eval_bench.benchmark_encoder(enc, (t, dim), model=encoder,
                                              num_runs=num_runs, warmup=warmup, rng=rng)
        reports.append(report)
        rows.append({"model": encoder, "mean_ms": report.mean_ms,
                     "median_ms": report.median_ms, "p95_ms": report.p95_ms,
                     "input_shape": list(report.input_shape),
                     "total_params": report.total_params,
                     "trainable_params": report.trainable_params})
    write_metrics(cfg, "benchmark", {"frames": frames, "rows": rows})
    return reports


def report_job(cfg: RunConfig) -> Tuple[str, str]:
    """Assemble the results table from saved metrics; reference values from
    the production-scale evaluation are appended for context."""
    bench = read_metrics(cfg, "benchmark") or {"rows": []}
    latency = {r["model"]: r["mean_ms"] for r in bench["rows"]}
    params = {r["model"]: r["trainable_params"] for r in bench["rows"]}
    rows = []
    first = read_metrics(cfg, "first_pass_nbest_test") or read_metrics(cfg, "first_pass_greedy_test")
    if first:
        rows.append(eval_bench.ResultRow("first_pass_ctc_lstm",
                                         standalone_wer=round(100 * first["wer"], 2)))
    for encoder in ENCODER_CHOICES:
        for addon in (("bilstm", "transformer") if encoder == "shared" else ("bilstm",)):
            name = _las_checkpoint_name(encoder, addon)
            standalone = read_metrics(cfg, f"standalone_{name}_test")
            rescored = read_metrics(cfg, f"rescored_{name}_test")
            trained = read_metrics(cfg, f"train_{name}")
            if not (standalone or rescored or trained):
                continue
            rows.append(eval_bench.ResultRow(
                name.replace("las_", ""),
                standalone_wer=round(100 * standalone["wer"], 2) if standalone else None,
                rescoring_wer=round(100 * rescored["rescored_wer"], 2) if rescored else None,
                latency_ms=round(latency[encoder], 3) if encoder in latency else None,
                params_m=round((trained["trainable_params"] if trained else params.get(encoder, 0)) / 1e6, 3)
                if (trained or encoder in params) else None,
            ))
    text, csv = eval_bench.emit_results_table(rows)
    ref_text, _ = eval_bench.emit_results_table(eval_bench.reference_rows())
    full = (
        "Desk-scale results (synthetic corpus; latency on this host)\n\n" + text +
        "\nProduction-scale reference values (documentation only)\n\n" + ref_text
    )
    reports = cfg.workdir / "reports"
    reports.mkdir(parents=True, exist_ok=True)
    (reports / "results.txt").write_text(full)
    (reports / "results.csv").write_text(csv)
    return full, csv
