"""From-scratch LSTM and transformer gaze-target classifiers."""
from .common import Adam, Classifier, rank_labels, softmax
from .io import build_model, expected_param_count, load_model, save_model
from .lstm import LSTMClassifier, lstm_param_count
from .training import History, TrainConfig, early_stopping_epoch, evaluate, predict_dataset, predict_topk, train
from .transformer import TransformerClassifier, transformer_param_count


def param_count(model) -> int:
    return model.param_count()


__all__ = [
    "Adam", "Classifier", "History", "LSTMClassifier", "TrainConfig", "TransformerClassifier",
    "build_model", "early_stopping_epoch", "evaluate", "expected_param_count", "load_model",
    "lstm_param_count", "param_count", "predict_dataset", "predict_topk", "rank_labels",
    "save_model", "softmax", "train", "transformer_param_count",
]
