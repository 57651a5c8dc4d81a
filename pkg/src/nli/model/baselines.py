"""Comparison systems: in-context conditioning, test-time training on the
spec's self-supervised loss, and latent-program models with a continuous
(LPN) or discrete but non-recurrent (D-LPN) latent."""

from __future__ import annotations

import torch
import torch.nn as nn
import torch.nn.functional as F

from .config import ModelConfig
from .core import NLIModel
from .executor import Executor
from .gumbel import sinusoidal_positions
from .inductor import PairEncoder, make_encoder_stack


class InContextModel(nn.Module):
    """Conditional sequence model over concatenated example pairs and a query.

    No latent program is constructed; all adaptation happens in the forward
    pass. Output tokens are read at the query positions.
    """

    kind = "incontext"

    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.cfg = cfg
        d = cfg.d_model
        self.tok_embed = nn.Embedding(cfg.v_io, d)
        self.mark_x = nn.Parameter(torch.randn(d) * 0.02)
        self.mark_y = nn.Parameter(torch.randn(d) * 0.02)
        self.mark_q = nn.Parameter(torch.randn(d) * 0.02)
        layers = cfg.encoder_layers + cfg.decoder_layers
        self.encoder = make_encoder_stack(d, cfg.num_heads, cfg.ff_dim, layers)
        self.head = nn.Linear(d, cfg.v_io)
        self.max_pairs = 16
        self.register_buffer(
            "positions",
            sinusoidal_positions(self.max_pairs * (2 * cfg.l_max + 2) + cfg.l_max + 1, d),
            persistent=False,
        )

    def forward(self, ctx_x: torch.Tensor, ctx_y: torch.Tensor, query_x: torch.Tensor) -> torch.Tensor:
        """ctx: (B, n, L); query: (B, L) -> logits (B, L, v_io)."""
        b, n, l = ctx_x.shape
        d = self.cfg.d_model
        dtype = self.mark_x.dtype
        parts = []
        for i in range(n):
            parts.append(self.mark_x.view(1, 1, d).expand(b, 1, d))
            parts.append(self.tok_embed(ctx_x[:, i]))
            parts.append(self.mark_y.view(1, 1, d).expand(b, 1, d))
            parts.append(self.tok_embed(ctx_y[:, i]))
        parts.append(self.mark_q.view(1, 1, d).expand(b, 1, d))
        parts.append(self.tok_embed(query_x))
        seq = torch.cat(parts, dim=1)
        if seq.shape[1] > self.positions.shape[0]:
            raise ValueError(
                f"context of {n} pairs exceeds the model's window "
                f"({seq.shape[1]} > {self.positions.shape[0]} tokens)"
            )
        seq = seq + self.positions[: seq.shape[1]].to(dtype)
        out = self.encoder(seq)
        return self.head(out[:, -l:, :])

    def predict(self, ctx_x, ctx_y, query_x) -> torch.Tensor:
        with torch.no_grad():
            logits = self.forward(
                ctx_x.unsqueeze(0), ctx_y.unsqueeze(0), query_x.unsqueeze(0)
            )
        return logits.argmax(dim=-1).squeeze(0)

    def loo_loss(self, x, y, generator=None) -> torch.Tensor:
        """Leave-one-out conditional NLL over a batch of specs (B, m, L).

        Context pair order is shuffled per view when a generator is given.
        """
        b, m, l = x.shape
        ctx_x, ctx_y, q_x, q_y = [], [], [], []
        for i in range(m):
            keep = [j for j in range(m) if j != i]
            if generator is not None:
                perm = torch.randperm(m - 1, generator=generator)
                keep = [keep[int(p)] for p in perm]
            idx = torch.tensor(keep, device=x.device)
            ctx_x.append(x[:, idx]); ctx_y.append(y[:, idx])
            q_x.append(x[:, i]); q_y.append(y[:, i])
        ctx_x = torch.cat(ctx_x, 0); ctx_y = torch.cat(ctx_y, 0)
        q_x = torch.cat(q_x, 0); q_y = torch.cat(q_y, 0)
        logits = self.forward(ctx_x, ctx_y, q_x)
        return F.cross_entropy(logits.reshape(-1, self.cfg.v_io), q_y.reshape(-1))


def ttt_adapt_predict(
    model: InContextModel,
    spec_x: torch.Tensor,
    spec_y: torch.Tensor,
    query_x: torch.Tensor,
    steps: int = 20,
    step_size: float = 1e-4,
    divergence_factor: float = 10.0,
) -> tuple[torch.Tensor, dict]:
    """Clone the model, fine-tune on the spec's leave-one-out loss, predict.

    Falls back to the unadapted prediction when the adapted loss diverges
    beyond ``divergence_factor`` times the initial loss.
    """
    import copy

    info = {"steps": steps, "diverged": False, "loss_before": None, "loss_after": None}
    if steps <= 0:
        return model.predict(spec_x, spec_y, query_x), info
    adapted = copy.deepcopy(model)
    adapted.train()
    opt = torch.optim.Adam(adapted.parameters(), lr=step_size)
    x = spec_x.unsqueeze(0)
    y = spec_y.unsqueeze(0)
    initial = None
    last = None
    for _ in range(steps):
        opt.zero_grad()
        loss = adapted.loo_loss(x, y)
        if initial is None:
            initial = float(loss.detach())
        loss.backward()
        opt.step()
        last = float(loss.detach())
    info["loss_before"] = initial
    info["loss_after"] = last
    if last is not None and initial is not None and last > divergence_factor * initial:
        info["diverged"] = True
        return model.predict(spec_x, spec_y, query_x), info
    return adapted.predict(spec_x, spec_y, query_x), info


class LPNModel(nn.Module):
    """Continuous-latent encoder/decoder with a Gaussian bottleneck."""

    kind = "lpn"

    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.cfg = cfg
        d = cfg.d_model
        pair_cfg = ModelConfig(**{**cfg.to_dict(), "program_length": 1})
        self.pair_encoder = PairEncoder(pair_cfg)
        self.mu_head = nn.Linear(d, cfg.latent_dim)
        self.logvar_head = nn.Linear(d, cfg.latent_dim)
        self.latent_proj = nn.Linear(cfg.latent_dim, d)
        self.io_embed = nn.Embedding(cfg.v_io, d)
        self.decoder = make_encoder_stack(d, cfg.num_heads, cfg.ff_dim, cfg.decoder_layers)
        self.head = nn.Linear(d, cfg.v_io)
        self.register_buffer("positions", sinusoidal_positions(cfg.l_max, d), persistent=False)

    def encode_pairs(self, x, y):
        return self.pair_encoder(x, y)[:, 0, :]  # (N, d)

    def posterior(self, pooled: torch.Tensor):
        return self.mu_head(pooled), self.logvar_head(pooled)

    def decode_logits(self, x: torch.Tensor, latent: torch.Tensor) -> torch.Tensor:
        """x: (B, L), latent: (B, latent_dim) -> logits (B, L, v_io)."""
        dtype = latent.dtype
        s = self.io_embed(x) + self.latent_proj(latent).unsqueeze(1)
        s = s + self.positions[: x.shape[1]].to(dtype)
        return self.head(self.decoder(s))

    def loo_loss(self, x, y, beta: float, generator=None):
        """Reconstruction plus beta-weighted KL, leave-one-out over pairs."""
        b, m, l = x.shape
        emb = self.encode_pairs(x.reshape(b * m, l), y.reshape(b * m, l)).reshape(b, m, -1)
        total = emb.sum(1, keepdim=True)
        pooled = (total - emb) / (m - 1)  # (B, m, d)
        mu, logvar = self.posterior(pooled)
        if generator is not None:
            eps = torch.randn(mu.shape, generator=generator, dtype=mu.dtype, device=mu.device)
        else:
            eps = torch.zeros_like(mu)
        latent = mu + torch.exp(0.5 * logvar) * eps
        logits = self.decode_logits(
            x.reshape(b * m, l), latent.reshape(b * m, -1)
        )
        nll = F.cross_entropy(
            logits.reshape(-1, self.cfg.v_io), y.reshape(-1), reduction="none"
        ).reshape(b * m, l).sum(-1).mean()
        kl = 0.5 * (mu.pow(2) + logvar.exp() - 1.0 - logvar).sum(-1).mean()
        return nll + beta * kl, float(nll.detach()), float(kl.detach())

    # --- latent search interface ------------------------------------------
    def pooled_latent(self, spec_x, spec_y) -> torch.Tensor:
        emb = self.encode_pairs(spec_x, spec_y)
        pooled = torch.sort(emb, dim=0).values.sum(0) / emb.shape[0]
        mu, _ = self.posterior(pooled)
        return mu

    def spec_log_likelihood_latent(self, latent, spec_x, spec_y) -> torch.Tensor:
        """latent: (S, latent_dim) -> (S,) summed log-likelihood of the spec."""
        s, m = latent.shape[0], spec_x.shape[0]
        x_rep = spec_x.unsqueeze(0).expand(s, -1, -1).reshape(s * m, -1)
        y_rep = spec_y.unsqueeze(0).expand(s, -1, -1).reshape(s * m, -1)
        z_rep = latent.unsqueeze(1).expand(-1, m, -1).reshape(s * m, -1)
        logits = self.decode_logits(x_rep, z_rep)
        logp = F.log_softmax(logits, dim=-1)
        tok = torch.gather(logp, 2, y_rep.unsqueeze(-1)).squeeze(-1)
        return tok.sum(-1).reshape(s, m).sum(-1)

    def predict_from_latent(self, latent: torch.Tensor, x: torch.Tensor) -> torch.Tensor:
        with torch.no_grad():
            logits = self.decode_logits(x, latent.unsqueeze(0) if latent.dim() == 1 else latent)
        return logits.argmax(-1)


class DLPNModel(NLIModel):
    """Discrete token latent without recurrent execution.

    Identical to the full model except the decoder conditions once on the
    whole token sequence (tokens prepended to its input) and no skip gating
    is applied.
    """

    kind = "dlpn"

    def __init__(self, cfg: ModelConfig):
        forced = ModelConfig(**{**cfg.to_dict(), "recurrent": False, "use_skip": False})
        super().__init__(forced)

    @staticmethod
    def config_diff(cfg: ModelConfig) -> dict:
        """Fields in which this baseline differs from the given full-model
        configuration; used by reports to assert the ablation isolates
        conditioning and skip gating only."""
        base = cfg.to_dict()
        forced = {**base, "recurrent": False, "use_skip": False}
        return {k: (base[k], forced[k]) for k in base if base[k] != forced[k]}
