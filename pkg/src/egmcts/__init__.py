"""Experience-guided Monte Carlo tree search for decomposition route planning.

The engine searches an AND-OR tree for a route decomposing a target item into
stock items, learns a guidance network from its own search experience, and
benchmarks against non-learning baselines.
"""

from .baselines import (DfsParams, RolloutParams, plan_eg_mcts_0,
                        plan_greedy_dfs, plan_mcts_rollout)
from .errors import EgmctsError, OracleUnavailable
from .experience import ExperienceSet, collect_experience, merge_experience
from .fingerprints import make_egn_input, tanimoto, text_fingerprint
from .items import ExpansionOracle, Item, OracleConfig, Stock, StockSet, TemplateAction
from .network import (EgnWeights, NetworkScorer, TrainConfig, TrainReport,
                      forward, grad_check, init_weights, load_weights,
                      save_weights, train)
from .phase1 import Phase1Params, ValidationRecord, run_phase1, should_continue
from .routes import (MatchReport, Reaction, Route, brute_force_solve,
                     extract_route, matching_degree, validate_route)
from .search import (ConstantScorer, PlanOutcome, SearchParams, plan,
                     puct_score, select)
from .synthetic import Rule, SyntheticDomain, generate_instances, random_domain
from .tree import MoleculeNode, ReactionNode, SearchTree, Status, propagate_status

__version__ = "0.1.0"
