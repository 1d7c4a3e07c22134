from .layers import (
    Layer,
    Conv2dCausal,
    LayerNorm,
    Elu,
    Linear,
    Dropout,
    Sigmoid,
    Softmax,
    SubbandTimeLstm,
)
from .s4d import S4DBlock, POLE_LIMIT
from .model import Model
from .losses import bce_with_logits, doa_loss, compress, ri_mag_loss
from .optim import Adam, PlateauSchedule, ScheduleDecision
from .checkpoint import FORMAT as CHECKPOINT_FORMAT, save_checkpoint, load_checkpoint
from .complexity import count_params, count_macs, complexity_report
from .gradcheck import numeric_gradient, relative_error, check_layer
from .trainer import TrainingTask, TrainConfig, EpochRecord, Trainer
