"""Maps of stable matching instances: generation, distances, solvers, drawing."""

from .attraction import (MAPair, mad_distance, mad_distance_sm, max_mad,
                         mutual_attraction_matrix, mutual_attraction_pair,
                         mutuality, normalized_mad, pearson_correlation,
                         positionwise_distance, rank_distortion,
                         spearman_distance, swap_distance)
from .cultures import CultureSpec, build_dataset, generate, generate_sm
from .extremes import (closed_form_extreme_distance, extreme_matrix,
                       normalized_extreme_distance, realize_extreme,
                       realize_sm_extreme, sm_extreme_pair)
from .instances import (InstanceError, InstanceParseError, Matching,
                        SMInstance, SRInstance, check_isomorphic,
                        parse_instance, relabel, serialize_instance)
from .solvers import (blocking_pairs, enumerate_stable_matchings, gale_shapley,
                      irving_stable_matching, min_blocking_pairs_matching,
                      min_weight_perfect_matching, optimal_stable_matching)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
