"""Test-time program refinement: multi-start gradient ascent on the encoder's
pooled embeddings through the differentiable projection and executor, plus the
cheaper prior-sampling search.

The unmodified encoder guess is always kept in the final scoring pool, so the
returned program never explains the specification worse than base inference.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import torch

from .model import GumbelConfig
from .train import make_generator


@dataclass(frozen=True)
class SearchConfig:
    num_starts: int = 1024
    grad_steps: int = 100
    init_std: float = 7.5
    step_size: float = 0.5
    noise_samples: int = 2
    tau_e_start: float = 2.0
    tau_e_end: float = 0.5
    tau_d_start: float = 1.0
    tau_d_end: float = 0.5
    program_length: int | None = None  # override the trained slot count

    def __post_init__(self):
        if self.num_starts < 1 or self.grad_steps < 0 or self.init_std < 0:
            raise ValueError("invalid search configuration")
        if self.noise_samples < 1:
            raise ValueError("need at least one noise sample per step")

    def step_temperatures(self, step: int) -> tuple[float, float]:
        """Geometric annealing across the gradient steps."""
        if self.grad_steps <= 1:
            return self.tau_e_end, self.tau_d_end
        frac = step / (self.grad_steps - 1)
        tau_e = self.tau_e_start * (self.tau_e_end / self.tau_e_start) ** frac
        tau_d = self.tau_d_start * (self.tau_d_end / self.tau_d_start) ** frac
        return tau_e, tau_d


@dataclass
class SearchResult:
    best_embedding: torch.Tensor  # (T, d)
    best_program: torch.Tensor  # (T, K) soft program at final temperatures
    best_score: float  # spec log-likelihood of the returned candidate
    base_score: float  # spec log-likelihood of the unmodified encoder guess
    candidate_index: int  # s marks the preserved encoder guess


def init_starts(
    pooled: torch.Tensor, cfg: SearchConfig, generator: torch.Generator
) -> torch.Tensor:
    """Candidate embeddings: the encoder guess plus Gaussian perturbations.

    Candidate 0 is exactly the pooled encoder embedding; the rest add
    independent per-coordinate noise with the configured standard deviation.
    """
    starts = pooled.unsqueeze(0).repeat(cfg.num_starts, *(1 for _ in pooled.shape))
    if cfg.num_starts > 1 and cfg.init_std > 0:
        noise = torch.randn(
            starts[1:].shape, generator=generator, dtype=pooled.dtype, device=pooled.device
        )
        starts[1:] = starts[1:] + cfg.init_std * noise
    return starts


def _extend_program_length(pooled: torch.Tensor, target: int) -> torch.Tensor:
    t, d = pooled.shape
    if target <= t:
        return pooled[:target]
    pad = torch.zeros(target - t, d, dtype=pooled.dtype, device=pooled.device)
    return torch.cat([pooled, pad], dim=0)


def gradient_search(
    model,
    spec_x: torch.Tensor,
    spec_y: torch.Tensor,
    cfg: SearchConfig,
    seed: int = 0,
) -> SearchResult:
    """Multi-start ascent on the expected spec log-likelihood.

    Each step draws fresh relaxation noise for the encoder projection and the
    executor, averages the objective over the configured number of draws, and
    moves every candidate along its normalized gradient. Candidates are scored
    noise-free at the final temperatures; the best of the optimized candidates
    and the unmodified encoder guess is returned.
    """
    for p in model.parameters():
        p.requires_grad_(False)
    with torch.no_grad():
        pooled = model.pooled_latent(spec_x, spec_y)
        if cfg.program_length is not None:
            pooled = _extend_program_length(pooled, cfg.program_length)
    init_gen = make_generator(seed, "search-init")
    e = init_starts(pooled, cfg, init_gen).requires_grad_(True)

    noisy_inductor = model.cfg.inductor_gumbel
    noisy_interp = model.cfg.interpreter_gumbel
    for step in range(cfg.grad_steps):
        tau_e, tau_d = cfg.step_temperatures(step)
        gen = make_generator(seed, "search-noise", step)
        objective = e.new_zeros(e.shape[0])
        for _ in range(cfg.noise_samples):
            z = model.latent_to_program(
                e, GumbelConfig(tau_e, use_noise=noisy_inductor), generator=gen
            )
            objective = objective + model.spec_log_likelihood(
                z, spec_x, spec_y, tau_d,
                noise_generator=gen if noisy_interp else None,
            )
        objective = objective / cfg.noise_samples
        (grad,) = torch.autograd.grad(objective.sum(), e)
        with torch.no_grad():
            norms = grad.flatten(1).norm(dim=1).clamp_min(1e-12)
            e += cfg.step_size * grad / norms.view(-1, *(1 for _ in e.shape[1:]))

    with torch.no_grad():
        pool = torch.cat([e.detach(), pooled.unsqueeze(0)], dim=0)
        z_pool = model.latent_to_program(
            pool, GumbelConfig(cfg.tau_e_end, use_noise=False)
        )
        scores = model.spec_log_likelihood(z_pool, spec_x, spec_y, cfg.tau_d_end)
        best = int(scores.argmax())
        base_score = float(scores[-1])
    return SearchResult(
        best_embedding=pool[best].detach(),
        best_program=z_pool[best].detach(),
        best_score=float(scores[best]),
        base_score=base_score,
        candidate_index=best,
    )


def prior_search(
    model,
    spec_x: torch.Tensor,
    spec_y: torch.Tensor,
    cfg: SearchConfig,
    seed: int = 0,
) -> SearchResult:
    """Best of s relaxation samples from the encoder on the full spec.

    Draw 0 is noise-free (the base-inference program); draws are generated
    sequentially from one stream, so enlarging s only extends the pool.
    """
    with torch.no_grad():
        pooled = model.pooled_latent(spec_x, spec_y)
        if cfg.program_length is not None:
            pooled = _extend_program_length(pooled, cfg.program_length)
        gen = make_generator(seed, "prior-search")
        candidates = [
            model.latent_to_program(pooled, GumbelConfig(cfg.tau_e_end, use_noise=False))
        ]
        for _ in range(cfg.num_starts - 1):
            candidates.append(
                model.latent_to_program(
                    pooled, GumbelConfig(cfg.tau_e_end, use_noise=True), generator=gen
                )
            )
        z_pool = torch.stack(candidates, dim=0)
        scores = model.spec_log_likelihood(z_pool, spec_x, spec_y, cfg.tau_d_end)
        best = int(scores.argmax())
    return SearchResult(
        best_embedding=pooled,
        best_program=z_pool[best],
        best_score=float(scores[best]),
        base_score=float(scores[0]),
        candidate_index=best,
    )


def lpn_gradient_search(
    model,
    spec_x: torch.Tensor,
    spec_y: torch.Tensor,
    cfg: SearchConfig,
    seed: int = 0,
):
    """Continuous-latent counterpart: ascent directly on the decoder latent."""
    for p in model.parameters():
        p.requires_grad_(False)
    with torch.no_grad():
        mu = model.pooled_latent(spec_x, spec_y)
    init_gen = make_generator(seed, "search-init")
    e = init_starts(mu, cfg, init_gen).requires_grad_(True)
    for _ in range(cfg.grad_steps):
        objective = model.spec_log_likelihood_latent(e, spec_x, spec_y)
        (grad,) = torch.autograd.grad(objective.sum(), e)
        with torch.no_grad():
            norms = grad.norm(dim=1).clamp_min(1e-12)
            e += cfg.step_size * grad / norms.unsqueeze(1)
    with torch.no_grad():
        pool = torch.cat([e.detach(), mu.unsqueeze(0)], dim=0)
        scores = model.spec_log_likelihood_latent(pool, spec_x, spec_y)
        best = int(scores.argmax())
    return pool[best], float(scores[best]), float(scores[-1])
