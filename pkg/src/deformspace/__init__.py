"""Synchronized linear deformation spaces for point-cloud shape families."""

from .errors import (
    DeformSpaceError,
    InputError,
    NumericalError,
    ShapeError,
    UsageError,
)
from .geometry import ChamferResult, PartBox, PointCloud, chamfer, chamfer_grad, mirror, sample_boxes
from .handles import EditRequest, Handle, HandleSpace, build_handle_space, precompute_edit_operators, project_edit, project_to_handles
from .nets import TrainedModel, deform, encode, init_model, latent_delta_concat, load_checkpoint, parallelogram_gap, predict_circular, predict_dictionary, save_checkpoint, transfer, two_way_error
from .nonlinear import CircularDictionary, circular_offset, deform_circular
from .spaces import Dictionary, LatentCode, LatentDelta, apply, latent_delta
from .training import LossBreakdown, TrainConfig, train

__version__ = "0.1.0"

__all__ = [
    "ChamferResult",
    "CircularDictionary",
    "DeformSpaceError",
    "Dictionary",
    "EditRequest",
    "Handle",
    "HandleSpace",
    "InputError",
    "LatentCode",
    "LatentDelta",
    "LossBreakdown",
    "NumericalError",
    "PartBox",
    "PointCloud",
    "ShapeError",
    "TrainConfig",
    "TrainedModel",
    "UsageError",
    "apply",
    "build_handle_space",
    "chamfer",
    "chamfer_grad",
    "circular_offset",
    "deform",
    "deform_circular",
    "encode",
    "init_model",
    "latent_delta",
    "latent_delta_concat",
    "load_checkpoint",
    "mirror",
    "parallelogram_gap",
    "precompute_edit_operators",
    "predict_circular",
    "predict_dictionary",
    "project_edit",
    "project_to_handles",
    "sample_boxes",
    "save_checkpoint",
    "train",
    "transfer",
    "two_way_error",
]
