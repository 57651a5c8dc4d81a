import math

import pytest
import torch

from nli.model import NLIModel, recon_loss, reg_loss, total_loss

from conftest import random_specs, tiny_config


def bernoulli_monte_carlo_distinct(q: torch.Tensor, samples: int, seed: int) -> float:
    """Independent-Bernoulli oracle: draw every (row, position, token) use as
    its own coin and average the number of tokens used at least once."""
    gen = torch.Generator().manual_seed(seed)
    r, n, k = q.shape
    total = 0.0
    chunk = 50_000
    done = 0
    while done < samples:
        b = min(chunk, samples - done)
        draws = torch.rand(b, r, n, k, generator=gen) < q
        used = draws.any(dim=(1)).any(dim=1)  # (b, k): token used anywhere
        total += float(used.sum(dtype=torch.float64))
        done += b
    return total / samples


class TestReconLoss:
    def test_perfect_prediction_is_zero(self):
        y = torch.tensor([[0, 2, 1]])
        pi = torch.nn.functional.one_hot(y, 3).float()
        nll, clamps = recon_loss(pi, y)
        assert float(nll) == 0.0
        assert clamps == 0

    def test_uniform_closed_form(self):
        l, v = 7, 11
        pi = torch.full((1, l, v), 1 / v)
        y = torch.randint(0, v, (1, l))
        nll, _ = recon_loss(pi, y)
        assert abs(float(nll) - l * math.log(v)) < 1e-5

    def test_hand_computed_toy(self):
        pi = torch.tensor([[[0.7, 0.2, 0.1], [0.1, 0.3, 0.6]]], dtype=torch.float64)
        y = torch.tensor([[0, 2]])
        nll, _ = recon_loss(pi, y)
        expected = -(math.log(0.7) + math.log(0.6))
        assert abs(float(nll) - expected) < 1e-12

    def test_zero_probability_clamped_and_counted(self):
        pi = torch.tensor([[[1.0, 0.0], [1.0, 0.0]]])
        y = torch.tensor([[1, 0]])
        nll, clamps = recon_loss(pi, y)
        assert clamps == 1
        assert math.isfinite(float(nll))


class TestRegLoss:
    def test_one_hot_single_use(self):
        q = torch.zeros(1, 1, 8)
        q[0, 0, 3] = 1.0
        assert abs(float(reg_loss(q)) - 1.0) < 1e-6

    def test_reuse_counted_once(self):
        q = torch.zeros(1, 2, 8)
        q[0, :, 3] = 1.0
        assert abs(float(reg_loss(q)) - 1.0) < 1e-6

    def test_half_half(self):
        q = torch.tensor([[[0.5, 0.5]]])
        assert abs(float(reg_loss(q)) - 1.0) < 1e-6

    def test_one_hot_counts_distinct_tokens(self):
        gen = torch.Generator().manual_seed(0)
        for _ in range(20):
            idx = torch.randint(0, 6, (3, 4), generator=gen)
            q = torch.nn.functional.one_hot(idx, 6).float().unsqueeze(0).reshape(3, 4, 6)
            assert abs(float(reg_loss(q)) - len(set(idx.flatten().tolist()))) < 1e-5

    def test_bounds(self):
        gen = torch.Generator().manual_seed(1)
        for _ in range(50):
            q = torch.softmax(torch.randn(4, 3, 5, generator=gen), -1)
            val = float(reg_loss(q))
            assert 0.0 <= val <= 5.0

    def test_monte_carlo_oracle(self):
        gen = torch.Generator().manual_seed(2)
        for trial in range(8):
            q = torch.softmax(torch.randn(3, 2, 4, generator=gen) * 1.5, -1)
            mc = bernoulli_monte_carlo_distinct(q, samples=400_000, seed=trial)
            assert abs(float(reg_loss(q)) - mc) < 1e-2


class TestTotalLoss:
    def test_m2_structure(self):
        torch.manual_seed(0)
        model = NLIModel(tiny_config())
        x, y = random_specs(1, 2, 6, 8, seed=1)
        _, bd = total_loss(model, x, y, 1.0, 1.0, 0.0, generator=None)
        # recon is the mean of exactly two leave-one-out terms
        pooled = model.inductor.leave_one_out_pooled(x, y)
        from nli.model import GumbelConfig, gumbel_softmax

        logits = model.inductor.logits_from_pooled(pooled)
        z = torch.softmax(logits / 1.0, -1)
        terms = []
        with torch.no_grad():
            for i in range(2):
                pi = model.executor(x[:, i], z[:, i], tau=1.0, check=False)
                nll, _ = recon_loss(pi, y[:, i])
                terms.append(float(nll))
        assert abs(bd.recon - sum(terms) / 2) < 1e-4

    def test_lambda_zero_reduces_to_recon(self):
        torch.manual_seed(0)
        model = NLIModel(tiny_config())
        x, y = random_specs(2, 3, 6, 8, seed=2)
        total, bd = total_loss(model, x, y, 1.0, 1.0, 0.0, generator=None)
        assert float(total) == pytest.approx(bd.recon, abs=1e-6)

    def test_breakdown_identity(self):
        torch.manual_seed(0)
        model = NLIModel(tiny_config())
        x, y = random_specs(2, 3, 6, 8, seed=3)
        _, bd = total_loss(model, x, y, 1.2, 0.9, 1e-3,
                           generator=torch.Generator().manual_seed(0))
        assert bd.total == pytest.approx(bd.recon + bd.lambda_reg * bd.reg, rel=1e-6)

    def test_m1_rejected(self):
        torch.manual_seed(0)
        model = NLIModel(tiny_config())
        x, y = random_specs(2, 1, 6, 8)
        with pytest.raises(ValueError):
            total_loss(model, x, y, 1.0, 1.0, 0.0)

    def test_gradient_matches_finite_differences(self):
        # ten random parameters of a tiny float64 model, frozen noise
        torch.manual_seed(4)
        cfg = tiny_config(l_max=4, v_io=5, codebook_size=6, program_length=2,
                          d_model=12, num_heads=2, ff_dim=24)
        model = NLIModel(cfg).double()
        x, y = random_specs(1, 2, 4, 5, seed=5)

        def loss_value():
            gen = torch.Generator().manual_seed(123)
            loss, _ = total_loss(model, x, y, 1.3, 0.9, 1e-3, generator=gen)
            return loss

        loss = loss_value()
        params = [p for p in model.parameters() if p.requires_grad]
        grads = torch.autograd.grad(loss, params)
        flat = [(p, g) for p, g in zip(params, grads)]
        rng = torch.Generator().manual_seed(6)
        checked = 0
        eps = 1e-6
        while checked < 10:
            pi = int(torch.randint(0, len(flat), (1,), generator=rng))
            p, g = flat[pi]
            idx = tuple(
                int(torch.randint(0, s, (1,), generator=rng)) for s in p.shape
            )
            with torch.no_grad():
                orig = float(p[idx])
                p[idx] = orig + eps
                up = float(loss_value())
                p[idx] = orig - eps
                down = float(loss_value())
                p[idx] = orig
            fd = (up - down) / (2 * eps)
            if abs(fd) < 1e-7:
                continue
            rel = abs(float(g[idx]) - fd) / max(abs(fd), 1e-9)
            assert rel < 1e-3, (pi, idx, rel, float(g[idx]), fd)
            checked += 1
