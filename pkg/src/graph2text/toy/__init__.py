"""Desk-scale encoder-decoder used for the order-vs-shuffle ablation."""

from .decode import beam_search, greedy_decode
from .model import ModelConfig, ModelParams, forward, init_params
from .train import TrainConfig, TrainResult, generate, train
from .vocab import Vocab
