"""Neural executor: runs a token-distribution program on a query sequence.

Execution keeps a per-position output distribution. Starting from the one-hot
encoding of the input, each step embeds the current token via the codebook,
conditions a shared execution network on it, and proposes a candidate
distribution; the token's skip mass gates between keeping the previous
distribution and adopting the candidate. The updated distribution is projected
back through the symbol embedder to form the next state, so the number of
steps is free to differ from training.
"""

from __future__ import annotations

import torch
import torch.nn as nn
import torch.nn.functional as F

from .config import ModelConfig
from .gumbel import sample_gumbel, sinusoidal_positions

SIMPLEX_ATOL = 1e-4


class SimplexViolation(ValueError):
    pass


class PositionwiseStep(nn.Module):
    """Attention-free execution network variant: per-position MLP only."""

    def __init__(self, d_model: int, ff_dim: int, layers: int):
        super().__init__()
        blocks = []
        for _ in range(layers):
            blocks += [nn.LayerNorm(d_model), nn.Linear(d_model, ff_dim), nn.GELU(),
                       nn.Linear(ff_dim, d_model)]
        self.net = nn.Sequential(*blocks, nn.LayerNorm(d_model))

    def forward(self, s: torch.Tensor) -> torch.Tensor:
        return self.net(s)


class Executor(nn.Module):
    """Owns the codebook (token embeddings) and the symbol embedder."""

    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.cfg = cfg
        d = cfg.d_model
        self.codebook = nn.Embedding(cfg.codebook_size, d)
        self.io_embed = nn.Embedding(cfg.v_io, d)
        if cfg.positionwise_executor:
            self.step_net: nn.Module = PositionwiseStep(d, cfg.ff_dim, cfg.decoder_layers)
        else:
            layer = nn.TransformerEncoderLayer(
                d_model=d,
                nhead=cfg.num_heads,
                dim_feedforward=cfg.ff_dim,
                dropout=0.0,
                activation="gelu",
                batch_first=True,
                norm_first=True,
            )
            self.step_net = nn.TransformerEncoder(
                layer, num_layers=cfg.decoder_layers, norm=nn.LayerNorm(d),
                enable_nested_tensor=False,
            )
        self.head = nn.Linear(d, cfg.v_io)
        self.register_buffer(
            "positions",
            sinusoidal_positions(cfg.program_length + cfg.l_max, d),
            persistent=False,
        )

    def _check_simplex(self, z: torch.Tensor) -> None:
        sums = z.sum(dim=-1)
        if not torch.all((sums - 1.0).abs() <= SIMPLEX_ATOL):
            worst = float((sums - 1.0).abs().max())
            raise SimplexViolation(
                f"program rows must lie on the simplex (max |sum-1| = {worst:.2e})"
            )
        if float(z.min()) < -SIMPLEX_ATOL:
            raise SimplexViolation("program rows must be nonnegative")

    def forward(
        self,
        x: torch.Tensor,
        z: torch.Tensor,
        tau: float,
        noise_generator: torch.Generator | None = None,
        check: bool = True,
        return_trajectory: bool = False,
    ) -> torch.Tensor | tuple[torch.Tensor, list[torch.Tensor]]:
        """Execute programs z (B, T, K) on inputs x (B, L); returns the final
        per-position output distributions (B, L, v_io)."""
        if check:
            self._check_simplex(z)
        cfg = self.cfg
        dtype = self.codebook.weight.dtype
        b, l = x.shape
        t_steps = z.shape[1]
        pe = self.positions.to(dtype)

        pi = F.one_hot(x, num_classes=cfg.v_io).to(dtype)
        if not cfg.recurrent:
            return self._monolithic(x, z, tau, noise_generator, pi, pe)

        s = self.io_embed(x)
        trajectory = [pi]
        for t in range(t_steps):
            token = z[:, t, :] @ self.codebook.weight  # (B, d)
            inp = s + token.unsqueeze(1) + pe[:l]
            logits = self.head(self.step_net(inp))
            if noise_generator is not None:
                logits = logits + sample_gumbel(
                    logits.shape, noise_generator, dtype, logits.device
                )
            candidate = torch.softmax(logits / tau, dim=-1)
            if cfg.use_skip:
                gate = z[:, t, cfg.skip_index].view(b, 1, 1)
                pi = gate * pi + (1.0 - gate) * candidate
            else:
                pi = candidate
            s = pi @ self.io_embed.weight
            if return_trajectory:
                trajectory.append(pi)
        if return_trajectory:
            return pi, trajectory
        return pi

    def _monolithic(self, x, z, tau, noise_generator, pi0, pe):
        """Ablation: one conditioning pass on the whole token sequence."""
        b, l = x.shape
        t_steps = z.shape[1]
        dtype = self.codebook.weight.dtype
        prefix = z @ self.codebook.weight
        s = self.io_embed(x)
        if t_steps + l > pe.shape[0]:
            pe = sinusoidal_positions(t_steps + l, pe.shape[1], dtype, pe.device)
        seq = torch.cat([prefix, s], dim=1) + pe[: t_steps + l]
        out = self.step_net(seq)
        logits = self.head(out[:, t_steps:, :])
        if noise_generator is not None:
            logits = logits + sample_gumbel(logits.shape, noise_generator, dtype, logits.device)
        return torch.softmax(logits / tau, dim=-1)

    def predict(self, x: torch.Tensor, z: torch.Tensor, tau: float) -> torch.Tensor:
        """Noise-free execution followed by per-position argmax. Ties resolve
        to the lowest token id (torch.argmax picks the first maximum)."""
        with torch.no_grad():
            pi = self.forward(x, z, tau, noise_generator=None)
        return pi.argmax(dim=-1)
