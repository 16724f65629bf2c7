"""Gabor-jet coding of facial expression images, with rank-correlation and
non-metric MDS tools for comparing the code against human rating data."""

from .gabor import (
    DEFAULT_ORIENTATIONS,
    DEFAULT_SIGMA,
    DEFAULT_WAVENUMBERS,
    FilterBank,
    FilterSpec,
    ImageRaster,
    JetVector,
    amplitude,
    build_filter_bank,
    compute_jet,
    evaluate_kernel,
    filter_response,
    read_pgm,
    write_pgm,
)
from .grid import (
    GridPlacement,
    ShapeVector,
    geometry_vector,
    load_grid,
    rescale_placement,
)
from .nmds import (
    Configuration,
    Disparities,
    classical_init,
    embed,
    isotonic_fit,
    procrustes_align,
    scan_dimensions,
    stress1,
)
from .rank_stats import (
    CorrelationResult,
    PairedSeries,
    average_ranks,
    correlate_model_with_ratings,
    significance,
    spearman_rho,
)
from .ratings import RatingVector, load_ratings, semantic_dissimilarity
from .similarity import (
    CodedImage,
    PairMatrix,
    gabor_image_similarity,
    geometry_dissimilarity,
    jet_similarity,
    pairwise_matrix,
)

__version__ = "0.1.0"
