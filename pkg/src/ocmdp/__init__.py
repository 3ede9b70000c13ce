"""Decision procedures and strategy synthesis for one-counter Markov
decision processes: qualitative cover-negative and mean-payoff
objectives, qualitative termination with and without selected final
states, and qualitative bankruptcy for solvency games, all in exact
rational arithmetic."""

from .model import (AAutomaton, CmdStrategy, Config, CounterRegularStrategy,
                    FdStrategy, FiniteMdp, MdStrategy, ModelError, OcMdp,
                    ParseError, Rational, SolvencyGame, normalize_finals,
                    parse_mdp, parse_ocmdp, parse_solvency, serialize_mdp,
                    serialize_ocmdp, serialize_solvency,
                    to_boundaryless_reward_mdp, truncated_unfolding)
from .chain import (Bscc, MarkovChain, bsccs, cn_holds_in_bscc,
                    expected_return_reward, has_negative_return_cycle,
                    induced_chain, mean_reward_of_bscc,
                    reach_probability_in_chain, stationary_distribution)
from .finmdp import (almost_sure_reach_set, expected_mean, max_reach,
                     min_mean_md)
from .qualmp import md_from_edges, qual_mp
from .cn import (cn_value_one_states, decreasing_expand, fd_to_md, ocmdp_cn,
                 qual_cn, qual_cn_via_expansion, solve_cn)
from .termination import (Coloring, NtAnswer, StRectangles, bounded_reach_zero,
                          build_periodic_ocmdp, check_color, nt_membership,
                          nt_value_one, st_optimal_strategy, st_optvalone)
from .solvency import drift, qual_bankruptcy, solvency_to_ocmdp
from .oracle import (SimReport, brute_force_qual_mp, cmd_cn_value,
                     enumerate_cmd, simulate,
                     truncated_termination_lower_bound)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
