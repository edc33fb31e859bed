from ._aquifer import (
    ConfigError,
    FormatError,
    IoError,
    Model,
    TrainingDivergedError,
    ValidationError,
    assemble_features,
    compute_hog,
    expand_frame_features,
    expected_areas,
    generate_scene,
    load_image,
    load_mask,
    load_model,
    metrics,
    optimal_threshold,
    rasterize,
    roc_auc,
    save_image,
    save_mask,
    train_mlp,
    train_rf,
    train_sgd,
    water_consumption,
)

__all__ = [
    "ConfigError",
    "FormatError",
    "IoError",
    "Model",
    "TrainingDivergedError",
    "ValidationError",
    "assemble_features",
    "compute_hog",
    "expand_frame_features",
    "expected_areas",
    "generate_scene",
    "load_image",
    "load_mask",
    "load_model",
    "metrics",
    "optimal_threshold",
    "rasterize",
    "roc_auc",
    "save_image",
    "save_mask",
    "train_mlp",
    "train_rf",
    "train_sgd",
    "water_consumption",
]
