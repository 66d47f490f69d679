__version__ = "0.3.0"

from .attacks import BudgetSpec, EdgeOp, PerturbationPlan  # noqa: E402
from .bayes import BayesMode, classify_bayes, semantic_flip_count  # noqa: E402
from .config import ExperimentConfig, load_config  # noqa: E402
from .graph import GenModel, Graph  # noqa: E402
from .graphgen import extend_graph, sample_graph  # noqa: E402
from .harness import (  # noqa: E402
    bayes_accuracy_table,
    degree_robustness_profile,
    graph_property_table,
    over_robustness_sweep,
    semantic_violation_table,
)
from .metrics import MetricsSummary, RobustnessRecord, aggregate, robustness_trace  # noqa: E402
from .report import ResultBundle, emit_results  # noqa: E402

__all__ = [
    "__version__",
    "BayesMode",
    "BudgetSpec",
    "EdgeOp",
    "ExperimentConfig",
    "GenModel",
    "Graph",
    "MetricsSummary",
    "PerturbationPlan",
    "ResultBundle",
    "RobustnessRecord",
    "aggregate",
    "bayes_accuracy_table",
    "classify_bayes",
    "degree_robustness_profile",
    "emit_results",
    "extend_graph",
    "graph_property_table",
    "load_config",
    "over_robustness_sweep",
    "robustness_trace",
    "sample_graph",
    "semantic_flip_count",
    "semantic_violation_table",
]
