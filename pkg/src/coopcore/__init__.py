"""Exact-arithmetic toolkit for cores of transferable-utility games.

Minimal balanced collection generation, Bondareva-Shapley nonemptiness tests
(also for general basic polyhedra), coalition properties, core stability via
nested balancedness, and exact projections onto core faces.
"""

__version__ = "0.1.0"

from .model import (
    Game,
    additive_game,
    coalition,
    excess,
    flip_worth,
    format_coalition,
    full_coalition,
    game_from_dict,
    game_to_dict,
    load_game,
    members,
    min_of_additive,
    payment,
    permutohedron_game,
    random_game,
    save_game,
    subgame,
    vector,
)
from .mbc import (
    MbcLibrary,
    MbcStore,
    WeightedCollection,
    add_new_player,
    depth,
    generate,
    is_balanced_collection,
    restrict,
)
from .balancedness import (
    AssociatedGame,
    BasicPolyhedron,
    associated_game,
    core_polyhedron,
    domination_polyhedron,
    effective_coalitions,
    is_balanced,
    is_nonempty,
    is_totally_balanced,
    lower_envelope,
    totally_balanced_cover,
)
from .polyhedra import (
    LinearProgram,
    LpOutcome,
    core_vertices,
    lp_is_balanced,
    max_uniform_slack,
    solve,
)
from .properties import (
    FeasibleCollectionReport,
    is_exact,
    is_extendable,
    is_feasible,
    is_strictly_vital_exact,
    is_unbalanced,
    is_vital,
    maximal_unbalanced,
    vital_exact_set,
)
from .stability import (
    StabilityVerdict,
    is_blind_spot,
    is_core_stable,
    outvote_value,
    ve_core_describing,
)
from .geometry import (
    GramContext,
    MarketFailure,
    chi,
    dual_basis,
    eta,
    eta_dot,
    market_failure,
    project_multi,
    project_single,
    reaching_collections,
    update_gramian,
)
from .combinatorics import (
    Hypergraph,
    count_uniform_hypergraphs,
    dual,
    hypergraph,
    regular_to_weighted,
    uniform_to_mbc_check,
)
