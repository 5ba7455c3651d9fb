from dataclasses import dataclass

from config import TrainConfig
from models.ModelParams import ModelParams

CHECKPOINT_MAGIC = b'SKF1'
CHECKPOINT_VERSION = 1


@dataclass
class Checkpoint:
    params: ModelParams
    config: TrainConfig
    epoch: int
    best_loss: float
    epoch_losses: list[float]
    version: int = CHECKPOINT_VERSION

    def __repr__(self):
        return f"<Checkpoint epoch:{self.epoch} best_loss:{self.best_loss:.6g} n_bins:{self.params.n_bins}>"
