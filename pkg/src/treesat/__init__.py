"""Exact desk-scale engine for embedding tree posets in the Boolean lattice."""

__version__ = "0.1.0"

from .lattice import (  # noqa: E402
    CapExceeded,
    Family,
    LevelWindow,
    comp_closure,
    compare,
    forbidden_down,
    forbidden_up,
    is_in_tilde,
    is_l_gapped,
    lubell_weight,
    middle_levels,
)
from .posets import Poset, RankFunction, hasse, height, is_induced_copy, is_tree_poset, rank_functions  # noqa: E402
from .chains import (  # noqa: E402
    FullChain,
    MarkedChainFamily,
    QMarkedView,
    build_strong_T,
    count_q_marked,
    full_chains,
    hit_probability,
    power_view,
)
from .cleaning import clean, clean_pipeline, find_witness, is_delta_robust, paper_constants  # noqa: E402
from .embedding import BoundedForbidden, candidate_set, check_bounded, embed_enumerate  # noqa: E402
from .supersat import CopyCollection, build_balanced, count_induced_copies, mstar, rank_upper_bound, z_set  # noqa: E402
from .experiments import enumerate_p_free, la_star_exact, random_turan_trials, sample_plattice  # noqa: E402

__all__ = [
    "__version__",
    "CapExceeded",
    "Family",
    "LevelWindow",
    "comp_closure",
    "compare",
    "forbidden_down",
    "forbidden_up",
    "is_in_tilde",
    "is_l_gapped",
    "lubell_weight",
    "middle_levels",
    "FullChain",
    "MarkedChainFamily",
    "QMarkedView",
    "build_strong_T",
    "count_q_marked",
    "full_chains",
    "hit_probability",
    "power_view",
    "Poset",
    "RankFunction",
    "hasse",
    "height",
    "is_induced_copy",
    "is_tree_poset",
    "rank_functions",
    "clean",
    "clean_pipeline",
    "find_witness",
    "is_delta_robust",
    "paper_constants",
    "BoundedForbidden",
    "candidate_set",
    "check_bounded",
    "embed_enumerate",
    "CopyCollection",
    "build_balanced",
    "count_induced_copies",
    "mstar",
    "rank_upper_bound",
    "z_set",
    "enumerate_p_free",
    "la_star_exact",
    "random_turan_trials",
    "sample_plattice",
]
