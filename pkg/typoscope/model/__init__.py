from .predictor import ModelFactory, ModelReader, ModelWriter, Prediction
from .training import TrainConfig, train
