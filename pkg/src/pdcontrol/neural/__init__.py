"""DeepONet surrogates: random-field data, training and solver plumbing."""
from .adam import AdamState, adam_step
from .grf import grf_mode_std, sample_grf
from .io import load_net, net_from_dict, net_to_dict, save_net
from .net import MLP, OperatorNet, TrainingSet, forward, grad, loss, loss_and_grad, predict
from .surrogate import (FidelityReport, NetEvaluator, as_solution_operator, fidelity_gate,
                        surrogate_parabolic_march, surrogate_parabolic_operator)
from .training import NetConfig, generate_dataset, init_net, pad_boundary, train, train_surrogate

__all__ = [
    "AdamState", "adam_step", "grf_mode_std", "sample_grf", "load_net", "save_net",
    "net_from_dict", "net_to_dict", "MLP", "OperatorNet", "TrainingSet", "forward", "grad",
    "loss", "loss_and_grad", "predict", "FidelityReport", "NetEvaluator",
    "as_solution_operator", "fidelity_gate", "surrogate_parabolic_march",
    "surrogate_parabolic_operator", "NetConfig", "generate_dataset", "init_net",
    "pad_boundary", "train", "train_surrogate",
]
