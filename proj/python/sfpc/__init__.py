"""Serially correlated functional PCA on triangulated 2-D domains."""

from ._core import (
    ArgumentError,
    Mesh,
    Model,
    SfpcError,
    eval_grid,
    fit,
    load_model,
    miae,
    principal_angle,
    simulate,
    split_seed,
    square_hole_mesh,
    truth_pcs,
)

__all__ = [
    "ArgumentError",
    "Mesh",
    "Model",
    "SfpcError",
    "eval_grid",
    "fit",
    "load_model",
    "miae",
    "principal_angle",
    "simulate",
    "split_seed",
    "square_hole_mesh",
    "truth_pcs",
]
