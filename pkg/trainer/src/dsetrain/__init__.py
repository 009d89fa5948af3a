"""Training side of the patch-meshing toolkit: fits the geodesic classifier
and chart projector on gen-data patch datasets and exports weight files."""

from .datasets import concatenate_datasets, load_datasets
from .export import export_weights, reference_forward
from .formats import PatchRecords, read_patch_dataset, read_weights, write_weights
from .train import TrainConfig, train_classifier, train_projector

__version__ = "0.1.0"
