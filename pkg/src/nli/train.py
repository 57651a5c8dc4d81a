"""Training loop: temperature schedules, optimization, metrics, checkpoints.

All randomness is derived from (seed, batch index, stream name), so a resumed
run continues the exact noise and data streams of an uninterrupted one, and
the checkpointed "rng state" is just the batch counter plus the base seed.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import pickle
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np
import torch
import yaml

from .data import SplitTensors, load_split_tensors
from .model import (
    DLPNModel,
    InContextModel,
    LPNModel,
    ModelConfig,
    NLIModel,
    ProgramEncoder,
    build_model,
    prog_combined_loss,
    total_loss,
)
from .model.losses import LossBreakdown
from .tasks import SPLIT_TRAIN, DatasetHeader

CHECKPOINT_VERSION = 1

ABLATION_FLAGS = (
    "no_recurrence",
    "no_skip",
    "no_inductor_gumbel",
    "no_interpreter_gumbel",
    "no_encoder_loss",
)


class TrainingDiverged(RuntimeError):
    def __init__(self, batch_idx: int, tau_e: float, tau_d: float, task_ids):
        self.batch_idx = batch_idx
        super().__init__(
            f"non-finite loss at batch {batch_idx} "
            f"(tau_e={tau_e:.4g}, tau_d={tau_d:.4g}, tasks={list(task_ids)[:8]})"
        )


class CheckpointError(RuntimeError):
    pass


@dataclass(frozen=True)
class AnnealSchedule:
    """Temperature decay from start to end over a horizon of batches, then
    held constant at the end value."""

    start: float
    end: float
    horizon: int
    strategy: str = "exponential"

    def __post_init__(self):
        if not (self.start >= self.end > 0):
            raise ValueError("schedule requires start >= end > 0")
        if self.horizon < 1:
            raise ValueError("horizon must be at least 1")
        if self.strategy not in ("exponential", "linear"):
            raise ValueError(f"unknown decay strategy {self.strategy!r}")

    def value(self, t: int) -> float:
        frac = min(max(t, 0) / self.horizon, 1.0)
        if self.strategy == "exponential":
            return self.start * (self.end / self.start) ** frac
        return self.start + (self.end - self.start) * frac


@dataclass(frozen=True)
class GumbelSchedule:
    use: bool = True
    start_temperature: float = 8.0
    end_temperature: float = 0.5
    annealing_batches: int = 20_000
    decay_strategy: str = "exponential"
    straight_through: bool = False

    def schedule(self) -> AnnealSchedule:
        return AnnealSchedule(
            self.start_temperature,
            self.end_temperature,
            self.annealing_batches,
            self.decay_strategy,
        )


@dataclass(frozen=True)
class TrainConfig:
    """Run hyperparameters; field names mirror the model hyperparameter table."""

    model: str = "nli"
    model_dim: int = 128
    num_heads: int = 8
    ff_dim: int = 512
    encoder_layers: int = 2
    decoder_layers: int = 2
    gradient_clip_norm: float = 2.0
    vocab_size: int = 512  # program token vocabulary (codebook entries)
    program_length: int = 10
    learning_rate: float = 2e-4
    num_batches: int = 100_000
    batch_size: int = 512
    inductor_gumbel: GumbelSchedule = field(default_factory=GumbelSchedule)
    interpreter_gumbel: GumbelSchedule = field(
        default_factory=lambda: GumbelSchedule(start_temperature=2.0)
    )
    encoder_loss_coefficient: float = 1e-5
    vae_beta: float = 1e-3  # LPN only
    latent_dim: int = 128  # LPN only
    with_program_encoder: bool = False
    lambda_prog: float = 1.0
    positionwise_executor: bool = False
    log_interval: int = 50
    checkpoint_interval: int = 0  # 0: only final
    ablations: tuple[str, ...] = ()

    def __post_init__(self):
        for flag in self.ablations:
            if flag not in ABLATION_FLAGS:
                raise ValueError(f"unknown ablation flag {flag!r}")

    def ablated(self, *flags: str) -> "TrainConfig":
        return replace(self, ablations=tuple(dict.fromkeys(self.ablations + flags)))

    def model_config(self, header: DatasetHeader) -> ModelConfig:
        ab = set(self.ablations)
        return ModelConfig(
            l_max=header.l_max,
            v_io=header.v_io,
            d_model=self.model_dim,
            num_heads=self.num_heads,
            ff_dim=self.ff_dim,
            encoder_layers=self.encoder_layers,
            decoder_layers=self.decoder_layers,
            codebook_size=self.vocab_size,
            program_length=self.program_length,
            recurrent="no_recurrence" not in ab,
            use_skip="no_skip" not in ab,
            inductor_gumbel=self.inductor_gumbel.use and "no_inductor_gumbel" not in ab,
            interpreter_gumbel=self.interpreter_gumbel.use
            and "no_interpreter_gumbel" not in ab,
            positionwise_executor=self.positionwise_executor,
            latent_dim=self.latent_dim,
        )

    def lambda_reg(self) -> float:
        if "no_encoder_loss" in self.ablations:
            return 0.0
        return self.encoder_loss_coefficient

    def to_dict(self) -> dict:
        d = asdict(self)
        d["ablations"] = list(self.ablations)
        return d

    @staticmethod
    def from_dict(obj: dict) -> "TrainConfig":
        obj = dict(obj)
        for key in ("inductor_gumbel", "interpreter_gumbel"):
            if key in obj and isinstance(obj[key], dict):
                obj[key] = GumbelSchedule(**obj[key])
        if "ablations" in obj:
            obj["ablations"] = tuple(obj["ablations"])
        return TrainConfig(**obj)

    @staticmethod
    def from_yaml(path) -> "TrainConfig":
        with open(path) as fh:
            obj = yaml.safe_load(fh) or {}
        return TrainConfig.from_dict(obj)


def config_fingerprint(train_cfg: TrainConfig, header: DatasetHeader) -> str:
    payload = json.dumps(
        {
            "train": train_cfg.to_dict(),
            "header": {"l_max": header.l_max, "v_io": header.v_io, "alphabet": header.alphabet},
        },
        sort_keys=True,
    )
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def derive_seed(*parts) -> int:
    h = hashlib.blake2b(repr(parts).encode(), digest_size=8).digest()
    return int.from_bytes(h, "little") & 0x7FFF_FFFF_FFFF_FFFF


def make_generator(*parts) -> torch.Generator:
    gen = torch.Generator()
    gen.manual_seed(derive_seed(*parts))
    return gen


# ---------------------------------------------------------------------------
# checkpoint serialization: a pickled dict of numpy arrays, byte-stable


def _to_numpy_tree(obj):
    if isinstance(obj, torch.Tensor):
        return obj.detach().cpu().numpy()
    if isinstance(obj, dict):
        return {k: _to_numpy_tree(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return type(obj)(_to_numpy_tree(v) for v in obj)
    return obj


def _to_torch_tree(obj):
    if isinstance(obj, np.ndarray):
        return torch.from_numpy(obj.copy())
    if isinstance(obj, dict):
        return {k: _to_torch_tree(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return type(obj)(_to_torch_tree(v) for v in obj)
    return obj


def save_checkpoint(path, payload: dict) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    data = pickle.dumps(payload, protocol=4)
    with open(tmp, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)


def load_checkpoint(path) -> dict:
    with open(path, "rb") as fh:
        payload = pickle.load(fh)
    version = payload.get("version")
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(
            f"checkpoint version {version} unsupported (expected {CHECKPOINT_VERSION})"
        )
    return payload


def export_for_eval(src_path, dst_path) -> None:
    """Copy a checkpoint without program-encoder parameters."""
    payload = load_checkpoint(src_path)
    payload = dict(payload)
    payload["prog_params"] = None
    payload["optimizer"] = None
    save_checkpoint(dst_path, payload)


# ---------------------------------------------------------------------------


class TrainerState:
    def __init__(
        self,
        cfg: TrainConfig,
        header: DatasetHeader,
        train_data: SplitTensors,
        seed: int,
        prog_tokens: torch.Tensor | None = None,
    ):
        self.cfg = cfg
        self.header = header
        self.data = train_data
        self.seed = seed
        self.batch_idx = 0
        self.model_cfg = cfg.model_config(header)
        torch.manual_seed(derive_seed(seed, "init"))
        self.model = build_model(cfg.model, self.model_cfg)
        self.prog_tokens = prog_tokens
        self.prog_encoder = None
        if cfg.with_program_encoder:
            if prog_tokens is None:
                raise ValueError(
                    "program-encoder training requires datasets with program text"
                )
            from .deepcoder.tokens import VOCAB_SIZE

            self.prog_encoder = ProgramEncoder(
                self.model_cfg,
                self.model.executor.codebook,
                prog_vocab=VOCAB_SIZE,
                max_prog_len=prog_tokens.shape[1],
            )
        params = list(self.model.parameters())
        if self.prog_encoder is not None:
            seen = {id(p) for p in params}
            params += [p for p in self.prog_encoder.parameters() if id(p) not in seen]
        self.optimizer = torch.optim.Adam(params, lr=cfg.learning_rate)
        self.tau_e_sched = cfg.inductor_gumbel.schedule()
        self.tau_d_sched = cfg.interpreter_gumbel.schedule()
        self.fingerprint = config_fingerprint(cfg, header)

    def temperatures(self) -> tuple[float, float]:
        return (
            self.tau_e_sched.value(self.batch_idx),
            self.tau_d_sched.value(self.batch_idx),
        )

    def sample_batch(self) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
        gen = make_generator(self.seed, "data", self.batch_idx)
        idx = torch.randint(0, self.data.count, (self.cfg.batch_size,), generator=gen)
        m = self.data.spec_size
        return self.data.x[idx, :m], self.data.y[idx, :m], idx

    def train_step(self) -> dict:
        cfg = self.cfg
        x, y, idx = self.sample_batch()
        tau_e, tau_d = self.temperatures()
        gen = make_generator(self.seed, "noise", self.batch_idx)
        self.optimizer.zero_grad(set_to_none=True)

        if cfg.model == "nli" or cfg.model == "dlpn":
            lam = cfg.lambda_reg() if cfg.model == "nli" else 0.0
            if self.prog_encoder is not None:
                prog = self.prog_tokens[idx]
                loss, breakdown = prog_combined_loss(
                    self.model, self.prog_encoder, x, y, prog,
                    tau_e, tau_d, lam, cfg.lambda_prog, generator=gen,
                )
            else:
                loss, breakdown = total_loss(self.model, x, y, tau_e, tau_d, lam, generator=gen)
        elif cfg.model == "incontext":
            loss = self.model.loo_loss(x, y, generator=gen)
            breakdown = LossBreakdown(
                recon=float(loss.detach()), reg=0.0, total=float(loss.detach()), lambda_reg=0.0
            )
        elif cfg.model == "lpn":
            loss, nll, kl = self.model.loo_loss(x, y, cfg.vae_beta, generator=gen)
            breakdown = LossBreakdown(
                recon=nll, reg=kl, total=float(loss.detach()), lambda_reg=cfg.vae_beta
            )
        else:
            raise ValueError(f"unknown model kind {cfg.model!r}")

        if not torch.isfinite(loss):
            ids = [self.data.task_ids[i] for i in idx[:8].tolist()]
            raise TrainingDiverged(self.batch_idx, tau_e, tau_d, ids)
        loss.backward()
        grad_norm = torch.nn.utils.clip_grad_norm_(
            [p for g in self.optimizer.param_groups for p in g["params"]],
            cfg.gradient_clip_norm,
        )
        self.optimizer.step()
        record = {
            "batch": self.batch_idx,
            "recon": breakdown.recon,
            "reg": breakdown.reg,
            "total": breakdown.total,
            "tau_e": tau_e,
            "tau_d": tau_d,
            "grad_norm": float(grad_norm),
        }
        if breakdown.prog_recon is not None:
            record["prog_recon"] = breakdown.prog_recon
        self.batch_idx += 1
        return record

    # --- checkpointing ----------------------------------------------------
    def checkpoint_payload(self) -> dict:
        return {
            "version": CHECKPOINT_VERSION,
            "kind": self.cfg.model,
            "train_config": self.cfg.to_dict(),
            "model_config": self.model_cfg.to_dict(),
            "data_header": {
                "l_max": self.header.l_max,
                "v_io": self.header.v_io,
                "alphabet": self.header.alphabet,
            },
            "fingerprint": self.fingerprint,
            "seed": self.seed,
            "batch_idx": self.batch_idx,
            "params": _to_numpy_tree(self.model.state_dict()),
            "prog_params": _to_numpy_tree(self.prog_encoder.state_dict())
            if self.prog_encoder is not None
            else None,
            "optimizer": _to_numpy_tree(self.optimizer.state_dict()),
        }

    def save(self, path) -> None:
        save_checkpoint(path, self.checkpoint_payload())

    def restore(self, payload: dict) -> None:
        if payload["fingerprint"] != self.fingerprint:
            raise CheckpointError(
                "config fingerprint mismatch: checkpoint "
                f"{payload['fingerprint']} vs current {self.fingerprint}"
            )
        self.model.load_state_dict(_to_torch_tree(payload["params"]))
        if self.prog_encoder is not None and payload.get("prog_params") is not None:
            self.prog_encoder.load_state_dict(_to_torch_tree(payload["prog_params"]))
        if payload.get("optimizer") is not None:
            self.optimizer.load_state_dict(_to_torch_tree(payload["optimizer"]))
        self.batch_idx = payload["batch_idx"]
        self.seed = payload["seed"]


def load_model_from_checkpoint(path) -> tuple[torch.nn.Module, dict]:
    """Rebuild a model (eval mode) from a checkpoint file."""
    payload = load_checkpoint(path)
    cfg = ModelConfig.from_dict(payload["model_config"])
    model = build_model(payload["kind"], cfg)
    model.load_state_dict(_to_torch_tree(payload["params"]))
    model.eval()
    return model, payload


def run_training(
    cfg: TrainConfig,
    data_path,
    out_dir,
    seed: int,
    metrics_name: str = "metrics.jsonl",
    quiet: bool = False,
) -> Path:
    """Train per config on a dataset's train split; returns checkpoint path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    header, splits = load_split_tensors(data_path)
    if SPLIT_TRAIN not in splits:
        raise ValueError(f"{data_path} has no train split")
    train_data = splits[SPLIT_TRAIN]

    prog_tokens = None
    if cfg.with_program_encoder:
        prog_tokens = encode_program_column(train_data.programs)

    state = TrainerState(cfg, header, train_data, seed, prog_tokens=prog_tokens)
    metrics_path = out_dir / metrics_name
    ckpt_path = out_dir / "checkpoint.pt"
    with open(metrics_path, "w") as metrics:
        while state.batch_idx < cfg.num_batches:
            record = state.train_step()
            if record["batch"] % cfg.log_interval == 0 or record["batch"] == cfg.num_batches - 1:
                metrics.write(json.dumps(record) + "\n")
                metrics.flush()
                if not quiet:
                    print(
                        f"[{cfg.model}] batch {record['batch']} "
                        f"recon {record['recon']:.4f} reg {record['reg']:.2f} "
                        f"tau_e {record['tau_e']:.3f} tau_d {record['tau_d']:.3f}"
                    )
            if (
                cfg.checkpoint_interval
                and state.batch_idx % cfg.checkpoint_interval == 0
            ):
                state.save(ckpt_path)
    state.save(ckpt_path)
    return ckpt_path


def encode_program_column(programs: list[str | None]) -> torch.Tensor:
    """Tokenize the program column, padded to the longest program."""
    from .deepcoder.tokens import PAD_ID, tokenize

    if any(p is None for p in programs):
        raise ValueError("dataset records lack program text")
    token_lists = [tokenize(p) for p in programs]
    width = max(len(t) for t in token_lists)
    return torch.tensor(
        [t + [PAD_ID] * (width - len(t)) for t in token_lists], dtype=torch.long
    )
