from .hand import FeatureConfig, HandFeaturizer, featurize_hand
from .neural import GruParams, NeuralFeaturizer, PoolingSpec, featurize_neural
