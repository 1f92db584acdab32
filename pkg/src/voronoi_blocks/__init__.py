"""Voronoi tessellation and Bayesian cell coalescence for point data."""

from .clusters import (
    Cluster,
    ClusterReport,
    DensityGrid,
    block_densities,
    density_at,
    density_grid,
    estimate_background,
    extract_clusters,
)
from .coalesce import (
    Block,
    CoalesceConfig,
    IterationHistory,
    MergeStep,
    Partition,
    best_model,
    init_partition,
    merge_blocks,
    run_coalescence,
)
from .estimator import VoronoiBlocks
from .exceptions import (
    DomainError,
    DuplicatePoints,
    EmptyInput,
    InputError,
    InvalidMerge,
    InvalidSpec,
    OutOfBounds,
    QuantizationError,
    TooLarge,
    VoronoiBlocksError,
)
from .geometry import (
    Cell,
    CellComplex,
    PointSet,
    ValidationReport,
    build_tessellation,
    build_tessellation_1d,
    build_tessellation_2d,
    make_point_set,
    validate_quantization,
)
from .oracle import exact_log_phi, exact_phi, exhaustive_optimum
from .posterior import BlockStats, block_term, log_merge_factor, log_phi, total_log_posterior
from .synthetic import Hotspot, SyntheticSpec, default_spec, generate_synthetic

__version__ = "0.1.0"

__all__ = [
    "Block", "BlockStats", "Cell", "CellComplex", "Cluster", "ClusterReport",
    "CoalesceConfig", "DensityGrid", "DomainError", "DuplicatePoints", "EmptyInput",
    "Hotspot", "InputError", "InvalidMerge", "InvalidSpec", "IterationHistory",
    "MergeStep", "OutOfBounds", "Partition", "PointSet", "QuantizationError",
    "SyntheticSpec", "TooLarge", "ValidationReport", "VoronoiBlocks",
    "VoronoiBlocksError", "best_model", "block_densities", "block_term",
    "build_tessellation", "build_tessellation_1d", "build_tessellation_2d",
    "default_spec", "density_at", "density_grid", "estimate_background",
    "exact_log_phi", "exact_phi", "exhaustive_optimum", "extract_clusters",
    "generate_synthetic", "init_partition", "log_merge_factor", "log_phi",
    "make_point_set", "merge_blocks", "run_coalescence", "total_log_posterior",
    "validate_quantization",
]
