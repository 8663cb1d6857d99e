"""protoseq: interpretable and steerable prototype-based sequence classifiers."""

from .data import Dataset, MotifSpec, Sequence, generate_synthetic, load_dataset
from .encoder import Encoder, EncoderConfig
from .explainer import Explanation, explain, neighbors, prune, render_explanation
from .model import PrototypeModel
from .objective import Hyperparams, total_loss
from .refinement import RefinementEdit, apply_edit, finetune
from .simplifier import simplify_model, simplify_prototype
from .trainer import TrainState, project_prototypes, train

__all__ = [
    "Dataset",
    "Encoder",
    "EncoderConfig",
    "Explanation",
    "Hyperparams",
    "MotifSpec",
    "PrototypeModel",
    "RefinementEdit",
    "Sequence",
    "TrainState",
    "apply_edit",
    "explain",
    "finetune",
    "generate_synthetic",
    "load_dataset",
    "neighbors",
    "project_prototypes",
    "prune",
    "render_explanation",
    "simplify_model",
    "simplify_prototype",
    "total_loss",
    "train",
]

__version__ = "0.1.0"
