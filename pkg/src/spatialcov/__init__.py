"""Coverage-driven selection of scenes and languages for spatial categorization data."""

__version__ = "0.1.0"

from ._backend import BACKEND
from .coverage import (
    CoverageReport,
    RankedCandidates,
    bootstrap_coverage_ci,
    coverage,
    greedy_extend,
    novelty_ranking,
    rank_languages,
)
from .embed import Embedding, classical_mds, stress, stress_profile
from .labels import (
    LabelMatrix,
    LabelTable,
    SceneManifest,
    build_matrix,
    modal_label,
    normalize_label,
    parse_label_table,
    validate_manifest,
)
from .simdist import (
    Partition,
    SymmetricMatrix,
    language_distance_matrix,
    language_partition,
    language_similarity_matrix,
    scene_similarity,
    scene_similarity_matrix,
    to_dissimilarity,
    variation_of_information,
)
