"""Training-free test-time adaptation over precomputed embeddings."""

from .adaptation import (
    AdaptState,
    ClassPrototype,
    SampleResult,
    StreamRecord,
    StreamSummary,
    TataEngine,
    bootstrap,
    fuse,
    process_stream,
    pseudo_label,
    soft_vote,
    vl_inference,
    vv_inference,
)
from .bdc import bdc_matrix, dcov2, double_center, pairwise_distance_matrix, reshape_to_observations
from .clustering import ClusterModel, assign, kmeans, update_centroid
from .config import RunConfig, load_config
from .embfile import read_embedding_file, write_embedding_file
from .encoders import FixtureCacheEncoder, RemoteEncoder, open_encoder
from .errors import TataError
from .estimator import TataClassifier, check_embedding_matrix
from .numerics import cosine_sim, l2_normalize, softmax_temp
from .predictions import write_predictions
from .textspace import (
    AttributeBank,
    NounBank,
    TextBank,
    TextSpace,
    assign_nouns,
    compose_prompt,
    select_attributes,
    textual_analog,
)

__version__ = "0.1.0"

__all__ = [
    "AdaptState",
    "AttributeBank",
    "ClassPrototype",
    "ClusterModel",
    "FixtureCacheEncoder",
    "NounBank",
    "RemoteEncoder",
    "RunConfig",
    "SampleResult",
    "StreamRecord",
    "StreamSummary",
    "TataClassifier",
    "TataEngine",
    "TataError",
    "TextBank",
    "TextSpace",
    "assign",
    "assign_nouns",
    "bdc_matrix",
    "bootstrap",
    "check_embedding_matrix",
    "compose_prompt",
    "cosine_sim",
    "dcov2",
    "double_center",
    "fuse",
    "kmeans",
    "l2_normalize",
    "load_config",
    "open_encoder",
    "pairwise_distance_matrix",
    "process_stream",
    "pseudo_label",
    "read_embedding_file",
    "reshape_to_observations",
    "select_attributes",
    "soft_vote",
    "softmax_temp",
    "textual_analog",
    "update_centroid",
    "vl_inference",
    "vv_inference",
    "write_embedding_file",
    "write_predictions",
]
