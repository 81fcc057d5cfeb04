"""
Model Components Package

Parameterised pieces of the pipeline: backbone encoder, explainer, link head,
regularizers and the assembled model.
"""

from dyexplainer.modules.backbone import Backbone, encode_snapshot, gnn_layer, gru_update
from dyexplainer.modules.explainer import Explainer, Explanation
from dyexplainer.modules.head import LinkHead
from dyexplainer.modules.model import DyExplainerModel, ForwardResult

__all__ = [
    "Backbone",
    "encode_snapshot",
    "gnn_layer",
    "gru_update",
    "Explainer",
    "Explanation",
    "LinkHead",
    "DyExplainerModel",
    "ForwardResult",
]
