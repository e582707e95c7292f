"""Dataset CSVs and model files."""

from core.storage.dataset import (
    batch_to_frame,
    column_names,
    cosine_frame,
    dataset_filename,
    frame_to_batch,
    read_batch,
    read_frame,
    write_batch,
    write_dataset,
    write_frame,
)
from core.storage.model_file import ModelBundle, ModelHeader, load_model, save_model

__all__ = [
    "ModelBundle",
    "ModelHeader",
    "batch_to_frame",
    "column_names",
    "cosine_frame",
    "dataset_filename",
    "frame_to_batch",
    "load_model",
    "read_batch",
    "read_frame",
    "save_model",
    "write_batch",
    "write_dataset",
    "write_frame",
]
