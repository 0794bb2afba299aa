"""Neural forecasters with hand-written backward passes."""

from .core import Mlp, MlpConfig, TrainingTrace, train
from .recurrent import RecurrentNet, RnnConfig
from .tcn import TcnConfig, TcnNet

__all__ = ["Mlp", "MlpConfig", "TrainingTrace", "train", "RecurrentNet", "RnnConfig", "TcnConfig", "TcnNet"]
