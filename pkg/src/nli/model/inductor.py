"""Specification encoder: per-pair transformer, permutation-invariant pooling,
and projection onto the codebook followed by the Gumbel-Softmax relaxation.

Each pair is read as [slot_1..slot_T, SEP_X, x tokens, SEP_Y, y tokens] with
sinusoidal positions; the transformer outputs at the T slot positions are the
pair's token embeddings. Pooling averages slot embeddings across pairs, so the
encoding is invariant to pair order. A feed-forward head maps each pooled slot
to a point in embedding space whose dot products with the codebook entries are
the token logits.
"""

from __future__ import annotations

import math

import torch
import torch.nn as nn

from .config import ModelConfig
from .gumbel import GumbelConfig, gumbel_softmax, sinusoidal_positions


def make_encoder_stack(d_model: int, num_heads: int, ff_dim: int, layers: int) -> nn.Module:
    layer = nn.TransformerEncoderLayer(
        d_model=d_model,
        nhead=num_heads,
        dim_feedforward=ff_dim,
        dropout=0.0,
        activation="gelu",
        batch_first=True,
        norm_first=True,
    )
    return nn.TransformerEncoder(
        layer, num_layers=layers, norm=nn.LayerNorm(d_model), enable_nested_tensor=False
    )


class PairEncoder(nn.Module):
    """Transformer applied independently to each (x, y) pair."""

    def __init__(self, cfg: ModelConfig):
        super().__init__()
        d = cfg.d_model
        self.num_slots = cfg.program_length
        self.tok_embed = nn.Embedding(cfg.v_io, d)
        self.slot_embed = nn.Parameter(torch.randn(cfg.program_length, d) * 0.02)
        self.sep_x = nn.Parameter(torch.randn(d) * 0.02)
        self.sep_y = nn.Parameter(torch.randn(d) * 0.02)
        self.encoder = make_encoder_stack(d, cfg.num_heads, cfg.ff_dim, cfg.encoder_layers)
        seq_len = cfg.program_length + 2 + 2 * cfg.l_max
        self.register_buffer(
            "positions", sinusoidal_positions(seq_len, d), persistent=False
        )

    def forward(self, x: torch.Tensor, y: torch.Tensor) -> torch.Tensor:
        """(N, L) token pairs -> (N, T, d) slot embeddings."""
        n = x.shape[0]
        dtype = self.slot_embed.dtype
        slots = self.slot_embed.unsqueeze(0).expand(n, -1, -1)
        sep_x = self.sep_x.view(1, 1, -1).expand(n, 1, -1)
        sep_y = self.sep_y.view(1, 1, -1).expand(n, 1, -1)
        seq = torch.cat(
            [slots, sep_x, self.tok_embed(x), sep_y, self.tok_embed(y)], dim=1
        )
        seq = seq + self.positions[: seq.shape[1]].to(dtype)
        out = self.encoder(seq)
        return out[:, : self.num_slots, :]


class Inductor(nn.Module):
    """Maps a specification to a sequence of codebook token distributions.

    The codebook module is owned by the executor and shared here so that the
    latent language and its execution semantics live in one parameter block.
    """

    def __init__(self, cfg: ModelConfig, codebook: nn.Embedding):
        super().__init__()
        self.cfg = cfg
        self.pair_encoder = PairEncoder(cfg)
        d = cfg.d_model
        self.proj = nn.Sequential(nn.Linear(d, d), nn.GELU(), nn.Linear(d, d))
        self.codebook = codebook
        self.logit_scale = 1.0 / math.sqrt(d)

    def encode_pairs(self, x: torch.Tensor, y: torch.Tensor) -> torch.Tensor:
        return self.pair_encoder(x, y)

    def pool(self, pair_embeddings: torch.Tensor) -> torch.Tensor:
        """Mean over the pair axis, made bitwise order-independent.

        Sorting each coordinate before summation canonicalizes the reduction
        order, so any permutation of pairs yields the identical float result.
        """
        canon = torch.sort(pair_embeddings, dim=0).values
        return canon.sum(dim=0) / pair_embeddings.shape[0]

    def logits_from_pooled(self, pooled: torch.Tensor) -> torch.Tensor:
        """(..., T, d) pooled embeddings -> (..., T, K) codebook logits."""
        h = self.proj(pooled)
        return h @ self.codebook.weight.t() * self.logit_scale

    def induce(
        self,
        spec_x: torch.Tensor,
        spec_y: torch.Tensor,
        gumbel: GumbelConfig,
        generator: torch.Generator | None = None,
    ) -> torch.Tensor:
        """(m, L) spec pairs -> (T, K) program distribution."""
        if spec_x.shape[0] == 0:
            raise ValueError("cannot induce from an empty specification")
        pooled = self.pool(self.encode_pairs(spec_x, spec_y))
        logits = self.logits_from_pooled(pooled)
        return gumbel_softmax(logits, gumbel, generator)

    def leave_one_out_pooled(self, x: torch.Tensor, y: torch.Tensor) -> torch.Tensor:
        """(B, m, L) pairs -> (B, m, T, d) pooled contexts, context i omitting
        pair i. Pair embeddings are computed once and shared across views."""
        b, m, l = x.shape
        if m < 2:
            raise ValueError("leave-one-out needs at least 2 pairs")
        emb = self.encode_pairs(x.reshape(b * m, l), y.reshape(b * m, l))
        emb = emb.reshape(b, m, self.cfg.program_length, -1)
        total = emb.sum(dim=1, keepdim=True)
        return (total - emb) / (m - 1)
