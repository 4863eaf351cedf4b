"""Differentiable building blocks: layers, the LSTM cell, losses, optimizers, checkpoints."""

from .checkpoint import ModelCheckpoint, params_digest
from .functional import cross_entropy, sigmoid, softmax, tanh_act
from .gradcheck import GradCheckReport, grad_check
from .layers import LayerSpec, Network
from .lstm import Lstm, LstmState, lstm_step
from .models import ArchConfig, CnnModel, LrcnModel, from_checkpoint, to_checkpoint, vgg16_arch
from .optim import Adam, Sgd, adam_update, lr_schedule, sgd_update

__all__ = [
    "Adam", "ArchConfig", "CnnModel", "GradCheckReport", "LayerSpec", "LrcnModel", "Lstm",
    "LstmState", "ModelCheckpoint", "Network", "Sgd", "adam_update", "cross_entropy",
    "from_checkpoint", "grad_check", "lr_schedule", "lstm_step", "params_digest", "sgd_update",
    "sigmoid", "softmax", "tanh_act", "to_checkpoint", "vgg16_arch",
]
