"""Informational vulnerability of influence-maximization seeding under the
Independent Cascade Model, and a two-objective GA for fairer seed sets."""

__version__ = "0.1.0"

from .cascade import (CascadeTrace, Ensemble, SimulationConfig, batch_simulate,
                      batch_simulate_random, estimate_critical_p, molloy_reed_threshold,
                      run_cascade)
from .fairmax import (GAConfig, ParetoCandidate, ParetoFront, crossover, evaluate_fitness,
                      evaluate_front_numerically, mutate_random, mutate_tabu, non_dominated_sort,
                      optimize)
from .generators import GeneratorConfig, generate
from .graph import Graph, bfs_distances, core_decomposition, degree, load_edge_list
from .metrics import (EffectiveStats, NodeInformationStats, compute_effective, compute_stats,
                      cumulative_distribution, fair_count, worse_off_in_n)
from .seeds import (SeedMethod, SeedSet, budget_size, seed_dispersion, select, select_chd,
                    select_dd, select_hd, select_kc, select_random)
