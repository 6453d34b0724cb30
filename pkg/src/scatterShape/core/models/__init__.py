from .aae import AaeModel, LATENT_DIM, encode, generate, reconstruct, reconstruct_binary, train_aae
from .fnn import FnnModel, Standardizer, FNN_WIDTHS, predict, predict_set, train_fnn
from .inn import InnModel, INN_WIDTHS, invert, sample_diversity, train_inn, validation_mae
from .masking import (
    angular_mask, frequency_block_select, frequency_variant_widths, halfplane_widths, kept_angles,
)
from .frozen import FrozenModels, freeze

MODEL_KINDS = {cls.kind: cls for cls in (AaeModel, FnnModel, InnModel)}
