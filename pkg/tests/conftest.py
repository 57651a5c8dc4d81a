import pytest
import torch

from nli.model import ModelConfig, NLIModel


def tiny_config(**overrides) -> ModelConfig:
    base = dict(
        l_max=6,
        v_io=8,
        d_model=16,
        num_heads=2,
        ff_dim=32,
        encoder_layers=1,
        decoder_layers=1,
        codebook_size=8,
        program_length=3,
        latent_dim=8,
    )
    base.update(overrides)
    return ModelConfig(**base)


@pytest.fixture
def tiny_model():
    torch.manual_seed(0)
    return NLIModel(tiny_config())


@pytest.fixture
def tiny_model_f64():
    torch.manual_seed(0)
    return NLIModel(tiny_config()).double()


def random_specs(b, m, l, v, seed=0):
    gen = torch.Generator().manual_seed(seed)
    x = torch.randint(0, v, (b, m, l), generator=gen)
    y = torch.randint(0, v, (b, m, l), generator=gen)
    return x, y
