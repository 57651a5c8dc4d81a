from .baselines import DLPNModel, InContextModel, LPNModel, ttt_adapt_predict
from .config import ModelConfig
from .core import NLIModel, build_model
from .executor import Executor, SimplexViolation
from .gumbel import GumbelConfig, gumbel_softmax, sample_gumbel, sinusoidal_positions
from .inductor import Inductor, PairEncoder
from .losses import LossBreakdown, prog_combined_loss, recon_loss, reg_loss, total_loss
from .progencoder import ProgramEncoder

__all__ = [
    "DLPNModel",
    "InContextModel",
    "LPNModel",
    "ttt_adapt_predict",
    "ModelConfig",
    "NLIModel",
    "build_model",
    "Executor",
    "SimplexViolation",
    "GumbelConfig",
    "gumbel_softmax",
    "sample_gumbel",
    "sinusoidal_positions",
    "Inductor",
    "PairEncoder",
    "LossBreakdown",
    "prog_combined_loss",
    "recon_loss",
    "reg_loss",
    "total_loss",
    "ProgramEncoder",
]
