"""Encoder from ground-truth program text to the shared codebook latent.

Used only during training on datasets that carry program text; inference and
search never load it. Mirrors the specification encoder's architecture, with
the program token vocabulary as input and the same codebook as output space.
"""

from __future__ import annotations

import torch
import torch.nn as nn

from .config import ModelConfig
from .gumbel import GumbelConfig, gumbel_softmax, sinusoidal_positions
from .inductor import make_encoder_stack


class ProgramEncoder(nn.Module):
    def __init__(self, cfg: ModelConfig, codebook: nn.Embedding, prog_vocab: int, max_prog_len: int = 64):
        super().__init__()
        d = cfg.d_model
        self.cfg = cfg
        self.num_slots = cfg.program_length
        self.max_prog_len = max_prog_len
        self.tok_embed = nn.Embedding(prog_vocab, d)
        self.slot_embed = nn.Parameter(torch.randn(cfg.program_length, d) * 0.02)
        self.encoder = make_encoder_stack(d, cfg.num_heads, cfg.ff_dim, cfg.encoder_layers)
        self.proj = nn.Sequential(nn.Linear(d, d), nn.GELU(), nn.Linear(d, d))
        self.codebook = codebook
        self.logit_scale = cfg.d_model**-0.5
        self.register_buffer(
            "positions",
            sinusoidal_positions(cfg.program_length + max_prog_len, d),
            persistent=False,
        )

    def encode(self, prog_tokens: torch.Tensor) -> torch.Tensor:
        """(B, P) padded program token ids -> (B, T, d) slot embeddings."""
        bsz = prog_tokens.shape[0]
        dtype = self.slot_embed.dtype
        slots = self.slot_embed.unsqueeze(0).expand(bsz, -1, -1)
        seq = torch.cat([slots, self.tok_embed(prog_tokens)], dim=1)
        seq = seq + self.positions[: seq.shape[1]].to(dtype)
        return self.encoder(seq)[:, : self.num_slots, :]

    def logits(self, pooled: torch.Tensor) -> torch.Tensor:
        return self.proj(pooled) @ self.codebook.weight.t() * self.logit_scale

    def induce(
        self,
        prog_tokens: torch.Tensor,
        gumbel: GumbelConfig,
        generator: torch.Generator | None = None,
    ) -> torch.Tensor:
        """(B, P) program token ids -> (B, T, K) program distributions."""
        return gumbel_softmax(self.logits(self.encode(prog_tokens)), gumbel, generator)
