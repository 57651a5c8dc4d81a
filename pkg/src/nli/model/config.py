"""Model architecture configuration shared across the encoder and executor."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field


@dataclass(frozen=True)
class ModelConfig:
    l_max: int
    v_io: int
    d_model: int = 128
    num_heads: int = 8
    ff_dim: int = 512
    encoder_layers: int = 2
    decoder_layers: int = 2
    codebook_size: int = 512
    program_length: int = 10
    skip_index: int = 0
    # ablation switches; all on for the full model
    recurrent: bool = True
    use_skip: bool = True
    inductor_gumbel: bool = True
    interpreter_gumbel: bool = True
    # executor step network: attention block (default) or per-position MLP
    positionwise_executor: bool = False
    # baseline-specific width (continuous latent)
    latent_dim: int = 128

    def __post_init__(self):
        if self.codebook_size < 2:
            raise ValueError("codebook needs at least 2 entries")
        if not (0 <= self.skip_index < self.codebook_size):
            raise ValueError("skip index outside codebook")
        for name in ("l_max", "v_io", "d_model", "num_heads", "ff_dim",
                     "encoder_layers", "decoder_layers", "program_length"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    def to_dict(self) -> dict:
        return asdict(self)

    @staticmethod
    def from_dict(obj: dict) -> "ModelConfig":
        return ModelConfig(**obj)
