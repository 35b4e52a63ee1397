"""Uncertainty quantification over sampling trees of token sequences.

The pipeline: a vocabulary and token sequences (seq_core), a next-token
model (lm_backend), its lazily expanded probability tree (sampling_tree),
filters selecting which sequences matter (filter_algebra), objectives
smoothing probabilities across equivalent sequences (objective_engine),
and entropy measures plus recipes and a brute-force reference
(uncertainty_metrics).  cli_io adds file formats and the ``uqtree`` CLI.
"""

from .seq_core import (
    Segmentation,
    SequenceStructureError,
    TokenSeq,
    Vocabulary,
    VocabularyError,
    is_absorbed,
    segment,
    subseq,
)
from .lm_backend import (
    DistributionError,
    NextTokenDist,
    NgramModel,
    OffTraceError,
    SeqModel,
    TabularModel,
    TraceConflictError,
    TraceRecord,
    TraceReplayModel,
    load_trace_model,
    sample,
    seq_prob,
)
from .sampling_tree import (
    EnumerationBudget,
    EnumerationResult,
    SamplingTree,
    TreeNode,
    dump_snapshot,
    enumerate_filtered,
    expand,
    subtree_mass,
)
from .filter_algebra import (
    CompositeFilter,
    EosYFilter,
    EosZFilter,
    Filter,
    FixedLengthFilter,
    MonteCarloDraw,
    MonteCarloFilter,
    PrefixFilter,
    ProbMassFilter,
    PromptSetFilter,
    SingleTokenFilter,
    SuffixFilter,
    TopKFilter,
    TrivialFilter,
    composite,
    eval_filter,
    make_mc_filter,
    make_prob_mass_filter,
    make_topk_filter,
)
from .objective_engine import (
    DegenerateWeightingError,
    EstimatorStarvationError,
    HardClusterObjective,
    Objective,
    SoftClusterObjective,
    SyntacticObjective,
    WeightedDist,
    cluster_mass,
    estimated_weighted_prob,
    generic_weighted_seq_prob,
    hard_cluster_paircount_prob,
    jaccard_similarity,
    lcs_ratio,
    similarity_from_matrix,
    weighted_prob,
)
from .uncertainty_metrics import (
    EntropyReport,
    InsufficientCoverageError,
    OracleScaleError,
    RecipeResult,
    oracle_exact,
    path_entropy,
    recipe_prompt_sensitivity,
    recipe_self_consistency,
    recipe_semantic_entropy,
    recipe_sequence_probability,
    recipe_similarity_entropy,
    subtree_entropy,
    token_entropy,
    weighted_entropy,
)
from .fixtures import UniformModel, coin_model, fixture, foobar_model

__version__ = "0.1.0"
