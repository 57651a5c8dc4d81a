import pytest
import torch

from nli.deepcoder.tokens import PAD_ID, VOCAB_SIZE, tokenize
from nli.model import GumbelConfig, NLIModel, ProgramEncoder, prog_combined_loss, total_loss

from conftest import random_specs, tiny_config


def padded_tokens(texts, width=24):
    rows = []
    for t in texts:
        ids = tokenize(t)
        rows.append(ids + [PAD_ID] * (width - len(ids)))
    return torch.tensor(rows, dtype=torch.long)


@pytest.fixture
def bundle():
    torch.manual_seed(0)
    cfg = tiny_config()
    model = NLIModel(cfg)
    enc = ProgramEncoder(cfg, model.executor.codebook, prog_vocab=VOCAB_SIZE, max_prog_len=24)
    return model, enc


class TestEncodeProgram:
    def test_output_is_simplex_rows(self, bundle):
        model, enc = bundle
        toks = padded_tokens(["x0 = INPUT | x1 = Sort x0"])
        z = enc.induce(toks, GumbelConfig(1.0, use_noise=False))
        assert z.shape == (1, 3, 8)
        assert torch.allclose(z.sum(-1), torch.ones(1, 3), atol=1e-5)

    def test_whitespace_normalized_programs_agree(self, bundle):
        model, enc = bundle
        toks = padded_tokens(["x0 = INPUT | x1 = Sort x0", "x0  =  INPUT |  x1 = Sort   x0"])
        gen = torch.Generator().manual_seed(0)
        z = enc.induce(toks, GumbelConfig(1.0, use_noise=False), gen)
        assert torch.equal(z[0], z[1])

    def test_codebook_shared_physically(self, bundle):
        # perturbing one codebook entry changes both encoders' outputs
        model, enc = bundle
        x, y = random_specs(1, 3, 6, 8, seed=1)
        toks = padded_tokens(["x0 = INPUT | x1 = Sort x0"])
        with torch.no_grad():
            z_io_1 = model.induce(x[0], y[0], GumbelConfig(1.0, use_noise=False))
            z_pr_1 = enc.induce(toks, GumbelConfig(1.0, use_noise=False))
            model.executor.codebook.weight[3] += 0.5
            z_io_2 = model.induce(x[0], y[0], GumbelConfig(1.0, use_noise=False))
            z_pr_2 = enc.induce(toks, GumbelConfig(1.0, use_noise=False))
        assert not torch.allclose(z_io_1, z_io_2)
        assert not torch.allclose(z_pr_1, z_pr_2)

    def test_parameter_block_is_same_object(self, bundle):
        model, enc = bundle
        assert enc.codebook.weight is model.executor.codebook.weight
        assert enc.codebook.weight is model.inductor.codebook.weight


class TestCombinedLoss:
    def test_degenerate_config_equals_total_loss(self, bundle):
        model, enc = bundle
        x, y = random_specs(2, 3, 6, 8, seed=2)
        toks = padded_tokens(["x0 = INPUT | x1 = Sort x0"] * 2)
        gen1 = torch.Generator().manual_seed(5)
        gen2 = torch.Generator().manual_seed(5)
        plain, _ = total_loss(model, x, y, 1.0, 1.0, 1e-4, generator=gen1)
        combined, bd = prog_combined_loss(
            model, enc, x, y, toks, 1.0, 1.0, 1e-4,
            lambda_prog=0.0, generator=gen2, route_gradients=False,
        )
        assert float(plain.detach()) == pytest.approx(float(combined.detach()), rel=1e-6)
        assert bd.prog_recon is None

    def test_io_branch_gradients_blocked_from_executor(self, bundle):
        model, enc = bundle
        x, y = random_specs(2, 3, 6, 8, seed=3)
        toks = padded_tokens(["x0 = INPUT | x1 = Sort x0"] * 2)
        # lambda_prog = 0 isolates the I/O branch; executor must get no grads
        loss, _ = prog_combined_loss(
            model, enc, x, y, toks, 1.0, 1.0, 1e-4,
            lambda_prog=0.0, generator=torch.Generator().manual_seed(0),
            route_gradients=True,
        )
        loss.backward()
        for name, p in model.executor.named_parameters():
            assert p.grad is None or float(p.grad.abs().sum()) == 0.0, name
        got_encoder_grad = any(
            p.grad is not None and float(p.grad.abs().sum()) > 0
            for p in model.inductor.pair_encoder.parameters()
        )
        assert got_encoder_grad

    def test_program_branch_updates_executor(self, bundle):
        model, enc = bundle
        x, y = random_specs(2, 3, 6, 8, seed=4)
        toks = padded_tokens(["x0 = INPUT | x1 = Sort x0"] * 2)
        loss, bd = prog_combined_loss(
            model, enc, x, y, toks, 1.0, 1.0, 0.0,
            lambda_prog=1.0, generator=torch.Generator().manual_seed(0),
        )
        loss.backward()
        assert bd.prog_recon is not None
        exec_grads = sum(
            float(p.grad.abs().sum())
            for p in model.executor.parameters()
            if p.grad is not None
        )
        assert exec_grads > 0
        prog_grads = sum(
            float(p.grad.abs().sum())
            for p in enc.parameters()
            if p.grad is not None
        )
        assert prog_grads > 0

    def test_breakdown_identity(self, bundle):
        model, enc = bundle
        x, y = random_specs(1, 2, 6, 8, seed=5)
        toks = padded_tokens(["x0 = INPUT | x1 = Sort x0"])
        _, bd = prog_combined_loss(
            model, enc, x, y, toks, 1.0, 1.0, 1e-4, lambda_prog=1.0,
            generator=torch.Generator().manual_seed(1),
        )
        assert bd.total == pytest.approx(
            bd.recon + bd.lambda_reg * bd.reg + bd.lambda_prog * bd.prog_recon, rel=1e-5
        )
