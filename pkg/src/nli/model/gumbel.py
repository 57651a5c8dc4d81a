"""Gumbel-Softmax relaxation of categorical sampling."""

from __future__ import annotations

import math
from dataclasses import dataclass

import torch

GUMBEL_EPS = 1e-20


@dataclass(frozen=True)
class GumbelConfig:
    """Relaxation knobs: temperature, noise toggle, straight-through toggle."""

    temperature: float
    use_noise: bool = True
    straight_through: bool = False

    def __post_init__(self):
        if not self.temperature > 0:
            raise ValueError(f"temperature must be positive, got {self.temperature}")


def sample_gumbel(
    shape: tuple[int, ...],
    generator: torch.Generator | None = None,
    dtype: torch.dtype = torch.float32,
    device=None,
) -> torch.Tensor:
    u = torch.rand(shape, generator=generator, dtype=dtype, device=device)
    return -torch.log(-torch.log(u + GUMBEL_EPS) + GUMBEL_EPS)


def gumbel_softmax(
    logits: torch.Tensor,
    cfg: GumbelConfig,
    generator: torch.Generator | None = None,
) -> torch.Tensor:
    """Relaxed categorical sample on the simplex, differentiable in logits.

    With noise disabled this is a plain tempered softmax; as temperature
    approaches zero the output approaches the one-hot argmax of logits+noise.
    """
    if cfg.use_noise:
        g = sample_gumbel(logits.shape, generator, logits.dtype, logits.device)
        y = torch.softmax((logits + g) / cfg.temperature, dim=-1)
    else:
        y = torch.softmax(logits / cfg.temperature, dim=-1)
    if cfg.straight_through:
        index = y.argmax(dim=-1, keepdim=True)
        hard = torch.zeros_like(y).scatter_(-1, index, 1.0)
        y = hard - y.detach() + y
    return y


def sinusoidal_positions(
    length: int, dim: int, dtype: torch.dtype = torch.float32, device=None
) -> torch.Tensor:
    """Fixed sinusoidal position table of shape (length, dim)."""
    pos = torch.arange(length, dtype=dtype, device=device).unsqueeze(1)
    half = (dim + 1) // 2
    freq = torch.exp(
        torch.arange(half, dtype=dtype, device=device) * (-math.log(10000.0) / max(half - 1, 1))
    )
    angles = pos * freq
    table = torch.zeros(length, dim, dtype=dtype, device=device)
    table[:, 0::2] = torch.sin(angles)[:, : table[:, 0::2].shape[1]]
    table[:, 1::2] = torch.cos(angles)[:, : table[:, 1::2].shape[1]]
    return table
