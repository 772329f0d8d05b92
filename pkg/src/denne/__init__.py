"""Denoising network embedding: joint estimation of node embeddings and edge noise."""

from .graph import EdgeDelta, Graph, LabelTable, degree, edge_diff, load_edge_list, load_labels
from .model import ModelConfig, init_model
from .objective import total_loss, train
from .sampling import WalkConfig

__version__ = "0.1.0"
