"""Training objectives: leave-one-out reconstruction, the token-reuse
regularizer, and the joint objective with the program-text encoder."""

from __future__ import annotations

from dataclasses import dataclass, field

import torch
from torch.func import functional_call

from .core import NLIModel
from .gumbel import GumbelConfig

LOG_EPS = 1e-9


@dataclass
class LossBreakdown:
    recon: float
    reg: float
    total: float
    lambda_reg: float
    lambda_prog: float = 0.0
    prog_recon: float | None = None
    clamp_count: int = 0


def recon_loss(pi: torch.Tensor, y: torch.Tensor) -> tuple[torch.Tensor, int]:
    """Negative log-likelihood of targets under per-position distributions.

    pi: (..., L, V), y: (..., L). Returns per-instance sums over positions
    (shape (...,)) and the count of probabilities clamped at the floor.
    """
    gathered = torch.gather(pi, -1, y.unsqueeze(-1)).squeeze(-1)
    clamp_count = int((gathered < LOG_EPS).sum())
    nll = -torch.log(gathered.clamp_min(LOG_EPS))
    return nll.sum(dim=-1), clamp_count


def reg_loss(q: torch.Tensor) -> torch.Tensor:
    """Differentiable expected number of distinct codebook tokens used.

    q: (R, N, K) simplex rows over all program positions in the batch. Each
    (row, position, token) use is treated as an independent Bernoulli event;
    the never-used probability per token is accumulated in log space.

    Accumulation runs in float64: the 1-1e-9 clamp is not representable in
    float32, where saturated rows would make the backward pass non-finite.
    """
    q64 = q.double()
    log_not_used = torch.log1p(-q64.clamp(max=1.0 - LOG_EPS)).sum(dim=(0, 1))
    return (1.0 - torch.exp(log_not_used)).sum().to(q.dtype)


def total_loss(
    model: NLIModel,
    x: torch.Tensor,
    y: torch.Tensor,
    tau_e: float,
    tau_d: float,
    lambda_reg: float,
    generator: torch.Generator | None = None,
) -> tuple[torch.Tensor, LossBreakdown]:
    """Leave-one-out objective over a batch of specifications.

    x, y: (B, m, L). For every spec and every pair i, a program is induced
    from the other m-1 pairs and scored on pair i; the regularizer is computed
    once over all induced program distributions in the batch.
    """
    b, m, l = x.shape
    if m < 2:
        raise ValueError("training specs need at least 2 pairs")
    cfg = model.cfg
    pooled = model.inductor.leave_one_out_pooled(x, y)  # (B, m, T, d)
    logits = model.inductor.logits_from_pooled(pooled)
    enc_gumbel = GumbelConfig(tau_e, use_noise=cfg.inductor_gumbel and generator is not None)
    z = gumbel_from_logits(logits, enc_gumbel, generator)

    z_flat = z.reshape(b * m, cfg.program_length, cfg.codebook_size)
    pi = model.executor(
        x.reshape(b * m, l),
        z_flat,
        tau_d,
        noise_generator=generator if cfg.interpreter_gumbel else None,
        check=False,
    )
    nll, clamp_count = recon_loss(pi, y.reshape(b * m, l))
    recon = nll.mean()
    reg = reg_loss(z_flat)
    total = recon + lambda_reg * reg
    breakdown = LossBreakdown(
        recon=float(recon.detach()),
        reg=float(reg.detach()),
        total=float(total.detach()),
        lambda_reg=lambda_reg,
        clamp_count=clamp_count,
    )
    return total, breakdown


def gumbel_from_logits(logits, gcfg: GumbelConfig, generator):
    from .gumbel import gumbel_softmax

    return gumbel_softmax(logits, gcfg, generator)


def prog_combined_loss(
    model: NLIModel,
    program_encoder,
    x: torch.Tensor,
    y: torch.Tensor,
    prog_tokens: torch.Tensor,
    tau_e: float,
    tau_d: float,
    lambda_reg: float,
    lambda_prog: float = 1.0,
    generator: torch.Generator | None = None,
    route_gradients: bool = True,
) -> tuple[torch.Tensor, LossBreakdown]:
    """Joint objective when ground-truth program text is available.

    The program branch induces a latent from tokenized program text through
    the shared codebook and executes it; its gradients update the program
    encoder and the executor. The I/O branch's gradients are blocked from the
    executor (codebook included), forcing the specification encoder to align
    with the program encoder's latents. With ``route_gradients=False`` and
    ``lambda_prog=0`` this reduces exactly to ``total_loss``.
    """
    b, m, l = x.shape
    cfg = model.cfg

    if route_gradients:
        exec_params = {
            name: p.detach() for name, p in model.executor.named_parameters()
        }

        def run_executor(xs, zs):
            return functional_call(
                model.executor,
                exec_params,
                (xs, zs),
                {"tau": tau_d,
                 "noise_generator": generator if cfg.interpreter_gumbel else None,
                 "check": False},
            )

        def project(pooled):
            h = model.inductor.proj(pooled)
            return h @ model.executor.codebook.weight.detach().t() * model.inductor.logit_scale
    else:
        def run_executor(xs, zs):
            return model.executor(
                xs, zs, tau_d,
                noise_generator=generator if cfg.interpreter_gumbel else None,
                check=False,
            )

        def project(pooled):
            return model.inductor.logits_from_pooled(pooled)

    # I/O branch: leave-one-out, executor gradients stopped when routing
    pooled = model.inductor.leave_one_out_pooled(x, y)
    logits = project(pooled)
    enc_gumbel = GumbelConfig(tau_e, use_noise=cfg.inductor_gumbel and generator is not None)
    z_io = gumbel_from_logits(logits, enc_gumbel, generator)
    z_io_flat = z_io.reshape(b * m, cfg.program_length, cfg.codebook_size)
    pi_io = run_executor(x.reshape(b * m, l), z_io_flat)
    nll_io, clamp_io = recon_loss(pi_io, y.reshape(b * m, l))
    recon_io = nll_io.mean()
    reg = reg_loss(z_io_flat)

    # program branch: full gradients, one latent per task executed on every pair
    prog_loss = x.new_zeros((), dtype=pooled.dtype)
    clamp_prog = 0
    if lambda_prog != 0.0:
        z_prog = program_encoder.induce(prog_tokens, enc_gumbel, generator)  # (B, T, K)
        z_rep = (
            z_prog.unsqueeze(1)
            .expand(-1, m, -1, -1)
            .reshape(b * m, cfg.program_length, cfg.codebook_size)
        )
        pi_prog = model.executor(
            x.reshape(b * m, l),
            z_rep,
            tau_d,
            noise_generator=generator if cfg.interpreter_gumbel else None,
            check=False,
        )
        nll_prog, clamp_prog = recon_loss(pi_prog, y.reshape(b * m, l))
        prog_loss = nll_prog.mean()

    total = recon_io + lambda_reg * reg + lambda_prog * prog_loss
    breakdown = LossBreakdown(
        recon=float(recon_io.detach()),
        reg=float(reg.detach()),
        total=float(total.detach()),
        lambda_reg=lambda_reg,
        lambda_prog=lambda_prog,
        prog_recon=float(prog_loss.detach()) if lambda_prog != 0.0 else None,
        clamp_count=clamp_io + clamp_prog,
    )
    return total, breakdown
