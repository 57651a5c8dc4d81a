import json
import math

import pytest
import torch

from nli.benchgen import GenerationConfig, dataset_header, generate_dataset
from nli.tasks import write_dataset
from nli.train import (
    AnnealSchedule,
    CheckpointError,
    GumbelSchedule,
    TrainConfig,
    TrainerState,
    TrainingDiverged,
    config_fingerprint,
    load_checkpoint,
    run_training,
    save_checkpoint,
)
from nli.data import load_split_tensors


def small_cfg(**overrides):
    base = dict(
        model="nli",
        model_dim=16,
        num_heads=2,
        ff_dim=32,
        encoder_layers=1,
        decoder_layers=1,
        vocab_size=8,
        program_length=3,
        batch_size=4,
        num_batches=3,
        learning_rate=1e-3,
        log_interval=1,
        inductor_gumbel=GumbelSchedule(annealing_batches=2),
        interpreter_gumbel=GumbelSchedule(start_temperature=2.0, annealing_batches=2),
    )
    base.update(overrides)
    return TrainConfig(**base)


@pytest.fixture(scope="module")
def tiny_dataset(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "shift.jsonl"
    cfg = GenerationConfig(train_count=24, test_count=6, seq_len=6, spec_size=3,
                           train_shifts=(1, 2), ood_shifts=(3,))
    write_dataset(path, dataset_header(cfg), generate_dataset("shift_l", cfg, seed=0))
    return path


class TestAnnealSchedule:
    def test_published_endpoints(self):
        sched = AnnealSchedule(8.0, 0.5, horizon=20_000)
        assert sched.value(0) == 8.0
        assert sched.value(20_000) == pytest.approx(0.5)
        assert sched.value(99_999) == pytest.approx(0.5)

    def test_geometric_midpoint(self):
        sched = AnnealSchedule(8.0, 0.5, horizon=1000)
        assert sched.value(500) == pytest.approx(math.sqrt(8.0 * 0.5))

    def test_linear(self):
        sched = AnnealSchedule(2.0, 0.5, horizon=100, strategy="linear")
        assert sched.value(50) == pytest.approx(1.25)
        assert sched.value(100) == pytest.approx(0.5)

    def test_monotone_nonincreasing(self):
        for strategy in ("exponential", "linear"):
            sched = AnnealSchedule(8.0, 0.5, horizon=77, strategy=strategy)
            vals = [sched.value(t) for t in range(0, 200, 3)]
            assert all(a >= b - 1e-12 for a, b in zip(vals, vals[1:]))

    def test_validation(self):
        with pytest.raises(ValueError):
            AnnealSchedule(0.5, 8.0, horizon=10)
        with pytest.raises(ValueError):
            AnnealSchedule(8.0, 0.5, horizon=0)
        with pytest.raises(ValueError):
            AnnealSchedule(8.0, 0.5, horizon=10, strategy="cosine")


class TestTrainStep:
    def test_first_step_bitwise_deterministic(self, tiny_dataset):
        header, splits = load_split_tensors(tiny_dataset)
        losses = []
        for _ in range(2):
            state = TrainerState(small_cfg(), header, splits["train"], seed=7)
            rec = state.train_step()
            losses.append(rec["total"])
        assert losses[0] == losses[1]

    def test_loss_finite_and_metrics_shape(self, tiny_dataset):
        header, splits = load_split_tensors(tiny_dataset)
        state = TrainerState(small_cfg(), header, splits["train"], seed=0)
        rec = state.train_step()
        assert set(rec) >= {"batch", "recon", "reg", "total", "tau_e", "tau_d", "grad_norm"}
        assert math.isfinite(rec["total"])

    def test_ablation_flags_map_to_model(self, tiny_dataset):
        header, splits = load_split_tensors(tiny_dataset)
        cfg = small_cfg().ablated("no_recurrence", "no_skip", "no_inductor_gumbel",
                                  "no_interpreter_gumbel", "no_encoder_loss")
        state = TrainerState(cfg, header, splits["train"], seed=0)
        mc = state.model.cfg
        assert not mc.recurrent and not mc.use_skip
        assert not mc.inductor_gumbel and not mc.interpreter_gumbel
        assert cfg.lambda_reg() == 0.0
        state.train_step()

    def test_unknown_ablation_rejected(self):
        with pytest.raises(ValueError, match="unknown ablation"):
            small_cfg(ablations=("no_gravity",))

    def test_no_inductor_gumbel_is_noise_free(self, tiny_dataset):
        # with the flag, repeated steps from identical state give identical z
        # even though the noise stream advances; verified via loss equality
        # between a run with the flag and a run with the flag plus a different
        # noise seed (the inductor path consumes no noise)
        header, splits = load_split_tensors(tiny_dataset)
        cfg = small_cfg().ablated("no_inductor_gumbel", "no_interpreter_gumbel")
        s1 = TrainerState(cfg, header, splits["train"], seed=3)
        s2 = TrainerState(cfg, header, splits["train"], seed=3)
        s2_noise_probe = s2.train_step()
        s1_noise_probe = s1.train_step()
        assert s1_noise_probe["total"] == s2_noise_probe["total"]

    def test_divergence_aborts_with_diagnostics(self, tiny_dataset):
        header, splits = load_split_tensors(tiny_dataset)
        state = TrainerState(small_cfg(), header, splits["train"], seed=0)
        with torch.no_grad():
            for p in state.model.parameters():
                p.mul_(float("nan"))
        with pytest.raises(TrainingDiverged, match="batch 0"):
            state.train_step()


class TestCheckpoint:
    def test_save_load_save_byte_stable(self, tiny_dataset, tmp_path):
        header, splits = load_split_tensors(tiny_dataset)
        state = TrainerState(small_cfg(), header, splits["train"], seed=1)
        state.train_step()
        p1 = tmp_path / "a.ckpt"
        p2 = tmp_path / "b.ckpt"
        state.save(p1)
        state2 = TrainerState(small_cfg(), header, splits["train"], seed=1)
        state2.restore(load_checkpoint(p1))
        state2.save(p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_resume_matches_uninterrupted(self, tiny_dataset, tmp_path):
        header, splits = load_split_tensors(tiny_dataset)
        cfg = small_cfg(num_batches=12)
        straight = TrainerState(cfg, header, splits["train"], seed=2)
        trace_straight = [straight.train_step()["total"] for _ in range(12)]

        resumed = TrainerState(cfg, header, splits["train"], seed=2)
        for _ in range(5):
            resumed.train_step()
        ckpt = tmp_path / "mid.ckpt"
        resumed.save(ckpt)
        fresh = TrainerState(cfg, header, splits["train"], seed=2)
        fresh.restore(load_checkpoint(ckpt))
        trace_resumed = [fresh.train_step()["total"] for _ in range(7)]
        assert trace_straight[5:] == trace_resumed

    def test_next_step_loss_identical_after_roundtrip(self, tiny_dataset, tmp_path):
        header, splits = load_split_tensors(tiny_dataset)
        a = TrainerState(small_cfg(), header, splits["train"], seed=4)
        a.train_step()
        path = tmp_path / "c.ckpt"
        a.save(path)
        b = TrainerState(small_cfg(), header, splits["train"], seed=4)
        b.restore(load_checkpoint(path))
        assert a.train_step()["total"] == b.train_step()["total"]

    def test_fingerprint_mismatch_refused(self, tiny_dataset, tmp_path):
        header, splits = load_split_tensors(tiny_dataset)
        a = TrainerState(small_cfg(), header, splits["train"], seed=0)
        path = tmp_path / "d.ckpt"
        a.save(path)
        b = TrainerState(small_cfg(learning_rate=5e-4), header, splits["train"], seed=0)
        with pytest.raises(CheckpointError, match="fingerprint"):
            b.restore(load_checkpoint(path))

    def test_version_mismatch_refused(self, tmp_path):
        path = tmp_path / "v.ckpt"
        save_checkpoint(path, {"version": 99})
        with pytest.raises(CheckpointError, match="version"):
            load_checkpoint(path)

    def test_fingerprint_sensitive_to_config_and_header(self, tiny_dataset):
        header, _ = load_split_tensors(tiny_dataset)
        f1 = config_fingerprint(small_cfg(), header)
        f2 = config_fingerprint(small_cfg(learning_rate=9e-9), header)
        assert f1 != f2


class TestRunTraining:
    def test_end_to_end_writes_metrics_and_checkpoint(self, tiny_dataset, tmp_path):
        out = tmp_path / "run"
        ckpt = run_training(small_cfg(), tiny_dataset, out, seed=0, quiet=True)
        assert ckpt.exists()
        lines = [json.loads(l) for l in (out / "metrics.jsonl").read_text().splitlines()]
        assert len(lines) == 3
        assert lines[0]["batch"] == 0


class TestConfigSerialization:
    def test_yaml_roundtrip(self, tmp_path):
        import yaml

        cfg = small_cfg(ablations=("no_skip",))
        path = tmp_path / "cfg.yaml"
        path.write_text(yaml.safe_dump(cfg.to_dict()))
        back = TrainConfig.from_yaml(path)
        assert back == cfg
