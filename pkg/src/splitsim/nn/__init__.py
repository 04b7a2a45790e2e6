from .layers import BatchNorm2D, Conv2D, Dense, Flatten, Layer, MaxPool2D, ReLU, layer_from_dict
from .losses import SIGMOID_BCE, SOFTMAX_CE, loss_and_grad, predict_scores
from .model import (ForwardCache, ModelSpec, Parameters, backward, count_params, estimate_flops,
                    forward, init_params)
from .optim import OptimizerState, adam_step
from .presets import image_conv, mlp_2808

__all__ = [
    "BatchNorm2D", "Conv2D", "Dense", "Flatten", "Layer", "MaxPool2D", "ReLU", "layer_from_dict",
    "SIGMOID_BCE", "SOFTMAX_CE", "loss_and_grad", "predict_scores",
    "ForwardCache", "ModelSpec", "Parameters", "backward", "count_params", "estimate_flops",
    "forward", "init_params", "OptimizerState", "adam_step", "image_conv", "mlp_2808",
]
