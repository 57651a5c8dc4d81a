"""Bundled encoder/executor model with the shared codebook, plus the latent
interface consumed by test-time search."""

from __future__ import annotations

import torch
import torch.nn as nn

from .config import ModelConfig
from .executor import Executor
from .gumbel import GumbelConfig, gumbel_softmax
from .inductor import Inductor


class NLIModel(nn.Module):
    """Program inductor + neural executor over one codebook."""

    kind = "nli"

    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.cfg = cfg
        self.executor = Executor(cfg)
        self.inductor = Inductor(cfg, self.executor.codebook)

    # --- base inference -------------------------------------------------
    def induce(self, spec_x, spec_y, gumbel: GumbelConfig, generator=None):
        return self.inductor.induce(spec_x, spec_y, gumbel, generator)

    def predict(self, x, z, tau_d: float):
        return self.executor.predict(x, z, tau_d)

    # --- latent search interface -----------------------------------------
    def pooled_latent(self, spec_x, spec_y) -> torch.Tensor:
        """Encoder's pooled pre-logit embeddings for the full spec: (T, d)."""
        return self.inductor.pool(self.inductor.encode_pairs(spec_x, spec_y))

    def latent_to_program(
        self, e: torch.Tensor, gumbel: GumbelConfig, generator=None
    ) -> torch.Tensor:
        """(..., T, d) candidate embeddings -> (..., T, K) program rows,
        through the same projection and relaxation as base inference."""
        logits = self.inductor.logits_from_pooled(e)
        return gumbel_softmax(logits, gumbel, generator)

    def spec_log_likelihood(
        self,
        z: torch.Tensor,
        spec_x: torch.Tensor,
        spec_y: torch.Tensor,
        tau_d: float,
        noise_generator=None,
    ) -> torch.Tensor:
        """Sum over spec pairs of log p(y | x, z) for a batch of programs.

        z: (S, T, K), spec: (m, L). Returns (S,).
        """
        s, m = z.shape[0], spec_x.shape[0]
        x_rep = spec_x.unsqueeze(0).expand(s, -1, -1).reshape(s * m, -1)
        y_rep = spec_y.unsqueeze(0).expand(s, -1, -1).reshape(s * m, -1)
        z_rep = z.unsqueeze(1).expand(-1, m, -1, -1).reshape(s * m, *z.shape[1:])
        pi = self.executor(x_rep, z_rep, tau_d, noise_generator=noise_generator, check=False)
        logp = torch.log(pi.clamp_min(1e-9))
        token_logp = torch.gather(logp, 2, y_rep.unsqueeze(-1)).squeeze(-1)
        return token_logp.sum(dim=-1).reshape(s, m).sum(dim=-1)

    def predict_from_latent(
        self, e: torch.Tensor, x: torch.Tensor, tau_e: float, tau_d: float
    ) -> torch.Tensor:
        """Noise-free prediction from candidate embeddings (soft program)."""
        z = self.latent_to_program(e, GumbelConfig(tau_e, use_noise=False))
        return self.executor.predict(x, z.unsqueeze(0) if z.dim() == 2 else z, tau_d)


def build_model(kind: str, cfg: ModelConfig) -> nn.Module:
    from .baselines import DLPNModel, InContextModel, LPNModel

    kinds = {
        "nli": NLIModel,
        "incontext": InContextModel,
        "lpn": LPNModel,
        "dlpn": DLPNModel,
    }
    if kind not in kinds:
        raise ValueError(f"unknown model kind {kind!r}, expected one of {sorted(kinds)}")
    return kinds[kind](cfg)
