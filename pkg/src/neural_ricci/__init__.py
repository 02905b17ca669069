"""Data-dependent Ricci curvature for feedforward networks."""

from .errors import (
    InfeasibleTransportError,
    InvalidInputError,
    ModelChecksumError,
    ModelFormatError,
    ModelVersionError,
    NeuralRicciError,
    NumericOverflowError,
    TrainingError,
    UsageError,
)
from .nn import (
    ActivationTrace,
    GradientSet,
    LayerSpec,
    ModelSpec,
    TrainConfig,
    TrainResult,
    accuracy,
    build_lenet,
    build_mlp,
    forward,
    forward_batch,
    grad_loss,
    train_sgd,
    unroll_conv,
    unroll_pool,
)
from .model_io import load_model, save_model
from .graph import (
    CostMatrixStack,
    NeuralGraph,
    build_graph,
    cost_matrices,
    dump_edges,
    layered_shortest_paths,
)
from .ot import Distribution, solve_transport, wasserstein
from .curvature import (
    CurvatureValue,
    CurvatureWorkspace,
    GraphCurvature,
    activation_masses,
    neural_curvature,
    neural_edge_cost,
    neural_neighbor_distribution,
    orc_generic,
    prop1_asymptotics,
    prop1_closed_forms,
    ricci_limit_generic,
)
from .ranking import CurvatureTable, RankedEdgeSet, rank_parameters, split_by_sign
from .pruning import (
    PruneMask,
    ScoreSet,
    SparsityCurve,
    apply_mask,
    curvature_orders,
    default_fraction_grid,
    run_ablation,
    score_magnitude,
    score_snip,
    score_synflow,
    sweep,
)
from .data import (
    DatasetHandle,
    generate_synthetic_digits,
    ingest_mnist,
    load_dataset,
    read_idx_images,
    read_idx_labels,
    select_calibration,
    write_idx_images,
    write_idx_labels,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
