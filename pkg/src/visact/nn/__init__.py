"""From-scratch trainable networks: text LSTM, video LSTM, multimodal fusion."""

from .core import (
    LstmParams,
    MlpParams,
    bce_loss,
    embedding_backward,
    embedding_forward,
    glorot_uniform,
    lstm_backward,
    lstm_forward,
    mlp_backward,
    mlp_forward,
    rmsprop_step,
    sigmoid,
)
from .models import (
    EXTRAS_ORDER,
    FusionSample,
    MultimodalModel,
    Prediction,
    TextModel,
    TrainConfig,
    VideoModel,
    config_grid,
    load_checkpoint,
    predict_visibility,
    save_checkpoint,
    train_multimodal,
    train_text_model,
    train_video_model,
)

__all__ = [
    "LstmParams", "MlpParams", "bce_loss", "embedding_backward",
    "embedding_forward", "glorot_uniform", "lstm_backward", "lstm_forward",
    "mlp_backward", "mlp_forward", "rmsprop_step", "sigmoid",
    "EXTRAS_ORDER", "FusionSample", "MultimodalModel", "Prediction",
    "TextModel", "TrainConfig", "VideoModel", "config_grid",
    "load_checkpoint", "predict_visibility", "save_checkpoint",
    "train_multimodal", "train_text_model", "train_video_model",
]
